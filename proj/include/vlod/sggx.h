// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "vlod/frame.h"
#include "vlod/rng.h"
#include "vlod/vecmath.h"

namespace vlod {

constexpr float kAlphaMin = 1e-3f;  // roughness floor shared by all fits and tables

// Symmetric positive semi-definite 3x3, the quadric form of an SGGX
// distribution. Stored as the six unique entries.
struct SggxMatrix {
    float xx = 1, yy = 1, zz = 1, xy = 0, xz = 0, yz = 0;

    Mat3 to_mat3() const {
        return Mat3({xx, xy, xz}, {xy, yy, yz}, {xz, yz, zz});
    }
    static SggxMatrix from_mat3(const Mat3 &m) {
        return {m(0, 0), m(1, 1), m(2, 2), m(0, 1), m(0, 2), m(1, 2)};
    }
};

// projected area sqrt(w^T S w)
inline float sggx_sigma(const SggxMatrix &s, const Vec3f &w) {
    float q = s.xx * w.x * w.x + s.yy * w.y * w.y + s.zz * w.z * w.z +
              2.0f * (s.xy * w.x * w.y + s.xz * w.x * w.z + s.yz * w.y * w.z);
    return safe_sqrt(q);
}

// Eigen re-parameterization of an SGGX matrix: rotation R whose third column
// is the dominant axis, plus roughness (alpha_x, alpha_y) = (sigma_1, sigma_2)
// / sigma_3 with sigma_3 the largest projected extent. alpha clamped to
// [kAlphaMin, 1].
struct SggxLobe {
    Frame frame;
    Vec2f alpha{1, 1};

    // raw density at direction w (world); double sided, unnormalized:
    // integral over the sphere is sggx_sphere_norm(alpha)
    float eval(const Vec3f &w) const {
        Vec3f l = frame.to_local(w);
        float q = sqr(l.x / alpha.x) + sqr(l.y / alpha.y) + sqr(l.z);
        return 1.0f / (kPi * alpha.x * alpha.y * q * q);
    }

    float sigma(const Vec3f &w) const {
        Vec3f l = frame.to_local(w);
        return std::sqrt(sqr(alpha.x * l.x) + sqr(alpha.y * l.y) + sqr(l.z));
    }

    SggxMatrix to_matrix() const;
};

// Jacobi eigendecomposition of a symmetric 3x3. Eigenvalues ascending;
// eigenvectors form a right-handed frame, each with its largest-magnitude
// component positive (sign convention keeps results reproducible).
void eigen_symmetric_3x3(const Mat3 &m, Vec3f *eigenvalues, Mat3 *eigenvectors);

SggxLobe eigen_param(const SggxMatrix &s);

// hemisphere integral of the isotropic GGX density (closed form), in [1, 2]
double ggx_norm_hemisphere(double alpha);

// full-sphere integral of the (anisotropic) SGGX density; equals
// 2 * ggx_norm_hemisphere(alpha) when alpha_x == alpha_y. Cached on a grid.
float sggx_sphere_norm(float ax, float ay);
double sggx_sphere_norm_exact(double ax, double ay);  // direct quadrature

// normalized density: eval / sphere norm, integrates to 1 over the sphere
inline float sggx_eval_normalized(const SggxLobe &lobe, const Vec3f &w) {
    return lobe.eval(w) / sggx_sphere_norm(lobe.alpha.x, lobe.alpha.y);
}

// Draw a direction with density proportional to the raw SGGX density
// (rejection, acceptance >= 1/2). pdf of the result = sggx_eval_normalized.
Vec3f sggx_sample(const SggxLobe &lobe, Pcg32 &rng);

// Visible-normal sampling (Heitz et al.): density D(w) <w, wi> / sigma(wi)
// over the hemisphere facing wi.
Vec3f sggx_sample_visible(const SggxLobe &lobe, const Vec3f &wi, Pcg32 &rng);
float sggx_pdf_visible(const SggxLobe &lobe, const Vec3f &wi, const Vec3f &w);

// Mixture of up to four SGGX lobes; weights sum to one.
struct NdfMixture {
    struct Entry {
        float weight = 1;
        SggxLobe lobe;
    };
    std::vector<Entry> lobes;

    // normalized mixture density; integrates to 1 over the sphere
    float eval(const Vec3f &w) const {
        float d = 0;
        for (const Entry &e : lobes) d += e.weight * sggx_eval_normalized(e.lobe, w);
        return d;
    }
    // mean projected area under the normalized mixture:
    // integral of max(dot(n,w),0) * eval(n) dn
    float mean_projected_area(const Vec3f &w) const {
        float s = 0;
        for (const Entry &e : lobes)
            s += e.weight * e.lobe.sigma(w) / sggx_sphere_norm(e.lobe.alpha.x, e.lobe.alpha.y);
        return s;
    }
    Vec3f sample(Pcg32 &rng) const;
    float pdf(const Vec3f &w) const { return eval(w); }
};

// Fit a mixture to sampled surface normals (antipodally symmetric k-means on
// normal axes, per-cluster SGGX moment fit, model selection over k by total
// log density).
NdfMixture fit_ndf(const std::vector<Vec3f> &normals, int k_max, uint64_t seed);

// --- isotropic GGX helpers shared with the surface BRDF ---

// D(wh) for isotropic GGX, wh in a frame where +z is the normal; the formula
// is even in wh.z (double sided)
inline float ggx_d_iso(float alpha, float cos_theta) {
    float a2 = alpha * alpha;
    float t = cos_theta * cos_theta * (a2 - 1.0f) + 1.0f;
    return a2 / (kPi * t * t);
}

inline float ggx_lambda(float alpha, const Vec3f &w) {
    float z2 = w.z * w.z;
    if (z2 >= 1.0f) return 0.0f;
    if (z2 <= 0.0f) return 1e8f;
    float t2 = alpha * alpha * (1.0f - z2) / z2;
    return 0.5f * (-1.0f + std::sqrt(1.0f + t2));
}

inline float ggx_lambda_aniso(const Vec2f &alpha, const Vec3f &w) {
    float z2 = w.z * w.z;
    if (z2 >= 1.0f) return 0.0f;
    if (z2 <= 0.0f) return 1e8f;
    float t2 = (sqr(alpha.x * w.x) + sqr(alpha.y * w.y)) / z2;
    return 0.5f * (-1.0f + std::sqrt(1.0f + t2));
}

// Smith height-correlated masking-shadowing; directions in the lobe frame,
// evaluated double sided
inline float smith_g2_aniso(const Vec2f &alpha, const Vec3f &wi, const Vec3f &wo) {
    return 1.0f / (1.0f + ggx_lambda_aniso(alpha, wi) + ggx_lambda_aniso(alpha, wo));
}

inline float smith_g1(float alpha, const Vec3f &w) {
    return 1.0f / (1.0f + ggx_lambda(alpha, w));
}

inline float smith_g2(float alpha, const Vec3f &wi, const Vec3f &wo) {
    return 1.0f / (1.0f + ggx_lambda(alpha, wi) + ggx_lambda(alpha, wo));
}

}  // namespace vlod
