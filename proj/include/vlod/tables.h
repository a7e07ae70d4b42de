// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

#include "vlod/sggx.h"
#include "vlod/vecmath.h"

namespace vlod {

// One axis of a regular table grid; nodes either linear or log spaced.
struct TableAxis {
    float lo = 0, hi = 1;
    int n = 2;
    bool log_spaced = false;

    float node(int i) const {
        float t = n > 1 ? float(i) / float(n - 1) : 0.0f;
        if (log_spaced) return std::exp(lerp(std::log(lo), std::log(hi), t));
        return lerp(lo, hi, t);
    }
    // value -> fractional node index, input clamped into [lo, hi]
    float coord(float x) const {
        x = clamp(x, lo, hi);
        float t = log_spaced ? (std::log(x) - std::log(lo)) / (std::log(hi) - std::log(lo))
                             : (x - lo) / (hi - lo);
        return t * float(n - 1);
    }
};

// Dense grid of up to three axes with multilinear interpolation.
struct TableGrid {
    std::string name;
    int ndim = 0;
    std::array<TableAxis, 3> axes;
    int channels = 1;
    std::vector<float> data;  // axis 0 fastest; per node `channels` floats

    size_t node_count() const {
        size_t c = 1;
        for (int d = 0; d < ndim; ++d) c *= size_t(axes[d].n);
        return c;
    }
    void allocate() { data.assign(node_count() * channels, 0.0f); }

    float *node_ptr(int i0, int i1 = 0, int i2 = 0) {
        size_t idx = size_t(i0);
        if (ndim > 1) idx += size_t(axes[0].n) * i1;
        if (ndim > 2) idx += size_t(axes[0].n) * axes[1].n * i2;
        return &data[idx * channels];
    }
    const float *node_ptr(int i0, int i1 = 0, int i2 = 0) const {
        return const_cast<TableGrid *>(this)->node_ptr(i0, i1, i2);
    }

    // multilinear query; x has ndim entries, out has `channels` entries
    void query(const float *x, float *out) const;
};

struct FitReportEntry {
    std::string table;
    float median_rel_l2 = 0;
    float max_rel_l2 = 0;
    uint32_t flagged = 0;  // nodes above max(10%, 2x median)
    uint32_t nodes = 0;
};

// Beta distribution parameters recovered from roughness moments.
struct BetaParams {
    float a = 1, b = 1;
};

// mean/variance -> shape parameters, clamped into [0.1, 100]
BetaParams beta_from_moments(float mean, float variance);
double beta_pdf(double x, double a, double b);

// Gauss quadrature for the beta weight itself: interior nodes in (0, 1) and
// positive weights that sum to one, so sum_i w[i] f(x[i]) ~ E[f(X)] with
// X ~ Beta(a, b). Robust for singular shapes (a < 1 or b < 1) because the
// endpoints are never evaluated.
void beta_quadrature(double a, double b, int n, std::vector<double> *x, std::vector<double> *w);

struct TableFitConfig {
    int m1_res[3] = {20, 20, 20};  // (alpha_x, alpha_y, kappa)
    int m2_res[2] = {64, 64};      // (a, b)
    int m3_res[3] = {50, 50, 50};  // (alpha_x, alpha_y, kernel alpha)
    int m4_res = 256;              // alpha
    int m5_res = 256;              // alpha
    int mc_samples = 100000;       // per-node budget for convolution targets
    int fit_dirs = 96;             // evaluation directions per node
    uint64_t seed = 1;

    static TableFitConfig fast() {
        TableFitConfig c;
        c.m1_res[0] = c.m1_res[1] = 12;
        c.m1_res[2] = 10;
        c.m2_res[0] = c.m2_res[1] = 32;
        c.m3_res[0] = c.m3_res[1] = 16;
        c.m3_res[2] = 12;
        c.m4_res = c.m5_res = 128;
        c.mc_samples = 16000;
        c.fit_dirs = 64;
        return c;
    }
};

// The five precomputed tables.
//   sg_conv    (ax, ay, kappa)  -> (dax, day)   SGGX x spherical-gaussian kernel
//   beta_lobes (a, b)           -> (m1, a1, a2) beta roughness -> two GGX lobes
//   ggx_conv   (ax, ay, alpha)  -> (dax, day)   SGGX x GGX kernel
//   ltc_inv    (alpha)          -> diag of the inverse LTC transform (3 entries)
//   ggx_norm   (alpha)          -> hemisphere integral of the GGX density
struct PrecompTables {
    TableGrid sg_conv, beta_lobes, ggx_conv, ltc_inv, ggx_norm;
    std::vector<FitReportEntry> report;

    bool complete() const {
        return !sg_conv.data.empty() && !beta_lobes.data.empty() && !ggx_conv.data.empty() &&
               !ltc_inv.data.empty() && !ggx_norm.data.empty();
    }
};

PrecompTables fit_all_tables(const TableFitConfig &cfg, bool verbose = false);

// individual fits (exposed for tests)
TableGrid fit_sg_conv_table(const TableFitConfig &cfg, FitReportEntry *report);
TableGrid fit_beta_lobes_table(const TableFitConfig &cfg, FitReportEntry *report);
TableGrid fit_ggx_conv_table(const TableFitConfig &cfg, FitReportEntry *report);
TableGrid fit_ltc_table(const TableFitConfig &cfg, FitReportEntry *report);
TableGrid fit_ggx_norm_table(const TableFitConfig &cfg);

// typed queries (inputs clamped to axis ranges)
Vec2f query_sg_conv(const PrecompTables &t, Vec2f alpha, float kappa);
Vec2f query_ggx_conv(const PrecompTables &t, Vec2f alpha, float kernel_alpha);
void query_beta_lobes(const PrecompTables &t, const BetaParams &p, float *m1, float *a1,
                      float *a2);
Vec3f query_ltc_inv_diag(const PrecompTables &t, float alpha);
float query_ggx_norm(const PrecompTables &t, float alpha);

// "ABT1" table file (little-endian, CRC32 trailer)
void save_tables(const std::string &path, const PrecompTables &t);
PrecompTables load_tables(const std::string &path);

// --- oracle helpers shared with the test suite ---

// normalized convolution kernel around an axis; either a spherical gaussian
// (is_sg) or an isotropic double-sided GGX density
struct ConvKernel {
    bool is_sg = true;
    float kappa = 1.0f;   // sg sharpness
    float alpha = 0.1f;   // ggx roughness
    double mass = 1.0;    // unnormalized solid-angle mass

    static ConvKernel sg(float kappa);
    static ConvKernel ggx(float alpha);

    double pdf(double cos_theta) const;  // normalized solid-angle density
    Vec3f sample(const Vec3f &axis, Pcg32 &rng) const;

  private:
    std::vector<float> inv_cdf_;  // ggx |cos| inverse CDF
};

// MC estimate of the spherical convolution integral of kernel x normalized
// SGGX density, evaluated at direction w (mixture importance sampling)
double conv_truth(const SggxLobe &lobe, const ConvKernel &kernel, const Vec3f &w, int samples,
                  Pcg32 &rng);

// relative L2 between the table-predicted convolved lobe and a fresh MC
// estimate, measured over directions drawn from the true convolution;
// conv_l2_parts exposes the numerator/denominator so errors can be pooled
// across many query points before taking the square root
void conv_l2_parts(const SggxLobe &lobe, const ConvKernel &kernel, Vec2f alpha_out, int dirs,
                   int samples_per_dir, uint64_t seed, double *num, double *den);
double conv_rel_l2(const SggxLobe &lobe, const ConvKernel &kernel, Vec2f alpha_out, int dirs,
                   int samples_per_dir, uint64_t seed);

}  // namespace vlod
