// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>

#include "vlod/quadrature.h"
#include "vlod/serialization.h"
#include "vlod/tables.h"

using namespace vlod;

namespace {

// one shared reduced-resolution fit; the full resolutions follow the same code
// path and are exercised by the acceptance runner
const PrecompTables &fast_tables() {
    static PrecompTables t = fit_all_tables(TableFitConfig::fast(), false);
    return t;
}

// hemisphere-cos quadrature with refinement toward t = 1
void sharp_grid(std::vector<double> *n, std::vector<double> *w) {
    n->clear();
    w->clear();
    const double cuts[5] = {0.0, 0.9, 0.999, 0.99999, 1.0};
    for (int s = 0; s < 4; ++s) {
        std::vector<double> nn, ww;
        gauss_legendre(64, cuts[s], cuts[s + 1], &nn, &ww);
        n->insert(n->end(), nn.begin(), nn.end());
        w->insert(w->end(), ww.begin(), ww.end());
    }
}

// tanh-sinh quadrature over (0, 1). The double-exponential node spacing
// absorbs endpoint singularities; f receives x and 1-x separately so both
// endpoints keep full precision.
template <class F>
double de_integral_01(F &&f) {
    const double h = 0.02;
    double s = 0;
    for (int k = -265; k <= 265; ++k) {
        double t = h * k;
        double u = 0.5 * kPi * std::sinh(t);
        double x = 1.0 / (1.0 + std::exp(-2.0 * u));
        double omx = 1.0 / (1.0 + std::exp(2.0 * u));
        if (x <= 0.0 || omx <= 0.0) continue;
        double dx = 0.25 * kPi * std::cosh(t) / sqr(std::cosh(u));
        double term = h * dx * f(x, omx);
        if (std::isfinite(term)) s += term;
    }
    return s;
}

// E[f(X)] for X ~ Beta(a, b), valid for any positive shape
template <class F>
double beta_expect(double a, double b, F &&f) {
    double inv_beta = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b));
    return inv_beta * de_integral_01([&](double x, double omx) {
        return std::pow(x, a - 1.0) * std::pow(omx, b - 1.0) * f(x);
    });
}

// beta-mixed GGX target at cos values tq, via the independent oracle
std::vector<double> beta_mix_target(double a, double b, const std::vector<double> &tq) {
    std::vector<double> target(tq.size());
    for (size_t t = 0; t < tq.size(); ++t)
        target[t] = beta_expect(a, b, [&](double al) {
            return double(ggx_d_iso(clamp(float(al), kAlphaMin, 1.0f), float(tq[t])));
        });
    return target;
}

double weighted_l2(const std::vector<double> &f, const std::vector<double> &g,
                   const std::vector<double> &w) {
    double num = 0, den = 0;
    for (size_t i = 0; i < f.size(); ++i) {
        num += w[i] * sqr(f[i] - g[i]);
        den += w[i] * g[i] * g[i];
    }
    return std::sqrt(num / std::max(den, 1e-30));
}

}  // namespace

TEST_SUITE("tables") {

TEST_CASE("grid interpolation reproduces multilinear data") {
    TableGrid g;
    g.name = "test";
    g.ndim = 3;
    g.channels = 2;
    g.axes[0] = {0.0f, 2.0f, 5, false};
    g.axes[1] = {-1.0f, 3.0f, 4, false};
    g.axes[2] = {1.0f, 8.0f, 6, true};  // log axis: linear in log(x)
    g.allocate();
    auto f0 = [](float x, float y, float lz) { return 2.0f * x + 3.0f * y - lz + 1.0f; };
    auto f1 = [](float x, float y, float lz) { return -x + 0.5f * y + 2.0f * lz; };
    for (int k = 0; k < 6; ++k)
        for (int j = 0; j < 4; ++j)
            for (int i = 0; i < 5; ++i) {
                float x = g.axes[0].node(i), y = g.axes[1].node(j);
                float lz = std::log(g.axes[2].node(k));
                g.node_ptr(i, j, k)[0] = f0(x, y, lz);
                g.node_ptr(i, j, k)[1] = f1(x, y, lz);
            }
    Pcg32 rng(3);
    for (int it = 0; it < 100; ++it) {
        float x = 2.0f * rng.next_float();
        float y = -1.0f + 4.0f * rng.next_float();
        float z = std::exp(std::log(8.0f) * rng.next_float());
        float in[3] = {x, y, z}, out[2];
        g.query(in, out);
        CHECK(out[0] == doctest::Approx(f0(x, y, std::log(z))).epsilon(2e-4).scale(1.0));
        CHECK(out[1] == doctest::Approx(f1(x, y, std::log(z))).epsilon(2e-4).scale(1.0));
    }
    // exactly at a node returns the stored value
    float in[3] = {g.axes[0].node(2), g.axes[1].node(1), g.axes[2].node(3)}, out[2];
    g.query(in, out);
    CHECK(out[0] == doctest::Approx(g.node_ptr(2, 1, 3)[0]).epsilon(1e-5));
}

TEST_CASE("beta moments") {
    // uniform distribution: mean 1/2, variance 1/12
    BetaParams u = beta_from_moments(0.5f, 1.0f / 12.0f);
    CHECK(u.a == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(u.b == doctest::Approx(1.0).epsilon(1e-4));
    // round trip through the analytic moments
    Pcg32 rng(5);
    for (int it = 0; it < 50; ++it) {
        double a = std::exp(std::log(0.2) + std::log(250.0) * rng.next_double());
        double b = std::exp(std::log(0.2) + std::log(250.0) * rng.next_double());
        a = clamp(a, 0.2, 50.0);
        b = clamp(b, 0.2, 50.0);
        double mu = a / (a + b);
        double var = a * b / ((a + b) * (a + b) * (a + b + 1.0));
        BetaParams p = beta_from_moments(float(mu), float(var));
        CHECK(p.a == doctest::Approx(a).epsilon(2e-3));
        CHECK(p.b == doctest::Approx(b).epsilon(2e-3));
    }
    // variance at (or beyond) the theoretical cap still yields valid shapes
    BetaParams c = beta_from_moments(0.3f, 0.3f * 0.7f * 1.5f);
    CHECK(c.a >= 0.1f);
    CHECK(c.b >= 0.1f);
}

TEST_CASE("beta quadrature matches analytic moments") {
    struct Case {
        double a, b;
    };
    for (const Case &c : {Case{2, 5}, Case{1, 1}, Case{10, 10}, Case{0.1, 0.1}, Case{0.1, 100},
                          Case{100, 0.1}, Case{0.5, 3}, Case{30, 60}}) {
        std::vector<double> x, w;
        beta_quadrature(c.a, c.b, 64, &x, &w);
        REQUIRE(x.size() == 64);
        double s0 = 0, s1 = 0, s2 = 0;
        for (size_t i = 0; i < x.size(); ++i) {
            CHECK(x[i] > 0.0);
            CHECK(x[i] < 1.0);
            CHECK(w[i] > 0.0);
            s0 += w[i];
            s1 += w[i] * x[i];
            s2 += w[i] * x[i] * x[i];
        }
        double mean = c.a / (c.a + c.b);
        double m2 = c.a * (c.a + 1.0) / ((c.a + c.b) * (c.a + c.b + 1.0));
        CHECK(s0 == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(s1 == doctest::Approx(mean).epsilon(1e-9));
        CHECK(s2 == doctest::Approx(m2).epsilon(1e-9));
    }
}

TEST_CASE("beta pdf normalizes") {
    // integrates the pdf itself, so shapes singular at the upper end are
    // excluded: there 1-x matters below double resolution of the x argument
    struct Case {
        double a, b;
    };
    for (const Case &c : {Case{2, 5}, Case{1, 1}, Case{10, 10}, Case{0.1, 2}, Case{0.5, 1.5}}) {
        double mass = de_integral_01([&](double x, double) { return beta_pdf(x, c.a, c.b); });
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("beta quadrature agrees with an independent oracle") {
    struct Case {
        double a, b;
    };
    for (const Case &c : {Case{0.1, 0.1}, Case{0.1, 100}, Case{3, 0.2}, Case{2, 5},
                          Case{0.5, 0.25}, Case{40, 40}}) {
        double want = beta_expect(c.a, c.b, [](double x) { return std::cos(3.0 * x) + x * x; });
        std::vector<double> x, w;
        beta_quadrature(c.a, c.b, 64, &x, &w);
        double got = 0;
        for (size_t i = 0; i < x.size(); ++i) got += w[i] * (std::cos(3.0 * x[i]) + x[i] * x[i]);
        CHECK(got == doctest::Approx(want).epsilon(1e-7));
    }
}

TEST_CASE("convolution kernels normalize and sample correctly") {
    std::vector<double> tn, tw;
    gauss_legendre(512, -1.0, 1.0, &tn, &tw);
    for (const ConvKernel &k : {ConvKernel::sg(0.5f), ConvKernel::sg(10.0f),
                                ConvKernel::ggx(0.08f), ConvKernel::ggx(0.6f)}) {
        double mass = 0;
        for (size_t i = 0; i < tn.size(); ++i) mass += tw[i] * k.pdf(tn[i]);
        mass *= kTwoPi;
        CHECK(mass == doctest::Approx(1.0).epsilon(k.is_sg ? 1e-6 : 2e-3));

        // histogram of cos(angle to axis) against per-bin quadrature
        Pcg32 rng(k.is_sg ? 11 : 13);
        Vec3f axis = normalize(Vec3f(0.4f, -0.2f, 0.7f));
        const int nb = 16, ns = 200000;
        int bins[nb] = {};
        for (int s = 0; s < ns; ++s) {
            float c = clamp(dot(axis, k.sample(axis, rng)), -1.0f, 0.999999f);
            bins[int((c * 0.5f + 0.5f) * nb)]++;
        }
        for (int b = 0; b < nb; ++b) {
            double lo = -1.0 + 2.0 * b / nb, hi = lo + 2.0 / nb;
            std::vector<double> bn, bw;
            gauss_legendre(32, lo, hi, &bn, &bw);
            double p = 0;
            for (size_t i = 0; i < bn.size(); ++i) p += bw[i] * k.pdf(bn[i]);
            p *= kTwoPi;
            double expect = p * ns;
            if (expect < 500) continue;  // skip statistically weak bins
            double tol = std::max(0.02, 4.0 / std::sqrt(expect));
            CHECK(bins[b] == doctest::Approx(expect).epsilon(tol));
        }
    }
}

TEST_CASE("convolution oracle recovers the unconvolved lobe for a delta kernel") {
    SggxLobe lobe;
    lobe.alpha = {0.4f, 0.8f};
    ConvKernel delta = ConvKernel::sg(5e4f);
    Pcg32 rng(17);
    double norm = sggx_sphere_norm(lobe.alpha.x, lobe.alpha.y);
    for (int it = 0; it < 5; ++it) {
        Vec3f w = sggx_sample(lobe, rng);
        double truth = conv_truth(lobe, delta, w, 20000, rng);
        double dbar = lobe.eval(w) / norm;
        CHECK(truth == doctest::Approx(dbar).epsilon(0.05));
    }
}

TEST_CASE("ggx norm table matches the closed form; value at alpha=1 is exact") {
    const PrecompTables &t = fast_tables();
    CHECK(query_ggx_norm(t, 1.0f) == 2.0f);
    Pcg32 rng(19);
    for (int it = 0; it < 40; ++it) {
        float alpha = std::exp(std::log(1e-3f) * rng.next_float());
        CHECK(query_ggx_norm(t, alpha) ==
              doctest::Approx(ggx_norm_hemisphere(alpha)).epsilon(2e-3));
    }
}

TEST_CASE("ltc fit quality and trend") {
    const PrecompTables &t = fast_tables();
    // sharper input distributions need sharper transformed cosines: the stored
    // inverse diagonal 1/a decreases as alpha grows
    float inv_sharp = query_ltc_inv_diag(t, 0.005f).x;
    float inv_rough = query_ltc_inv_diag(t, 0.9f).x;
    CHECK(inv_sharp > inv_rough);
    CHECK(query_ltc_inv_diag(t, 0.4f).z == doctest::Approx(1.0));

    // shape residual at alpha = 0.3 stays below 5%: the best scale is divided
    // out because downstream only the normalized distribution is used
    std::vector<double> tq, tws;
    sharp_grid(&tq, &tws);
    float alpha = 0.3f;
    Vec3f inv = query_ltc_inv_diag(t, alpha);
    double a = 1.0 / inv.x;
    double norm = ggx_norm_hemisphere(alpha);
    double ff = 0, fg = 0, gg = 0;
    for (size_t i = 0; i < tq.size(); ++i) {
        double s2 = 1.0 - tq[i] * tq[i];
        double q = s2 + a * a * tq[i] * tq[i];
        double f = a * a * tq[i] / (kPi * q * q);
        double g = ggx_d_iso(alpha, float(tq[i])) / norm;
        ff += tws[i] * f * f;
        fg += tws[i] * f * g;
        gg += tws[i] * g * g;
    }
    double c = fg / ff;
    double resid = std::sqrt(std::max(gg - 2.0 * c * fg + c * c * ff, 0.0) / gg);
    CHECK(resid <= 0.05);
}

TEST_CASE("convolution tables: invariants on the stored offsets") {
    const PrecompTables &t = fast_tables();
    for (const TableGrid *g : {&t.sg_conv, &t.ggx_conv}) {
        bool sg = g == &t.sg_conv;
        for (int j = 0; j < g->axes[1].n; ++j)
            for (int i = 0; i < g->axes[0].n; ++i)
                for (int k = 0; k < g->axes[2].n; ++k) {
                    const float *p = g->node_ptr(i, j, k);
                    CHECK(p[0] >= -1e-6f);  // widening never sharpens
                    CHECK(p[1] >= -1e-6f);
                    // mirrored node swaps the two channels
                    const float *q = g->node_ptr(j, i, k);
                    CHECK(p[0] == doctest::Approx(q[1]).epsilon(1e-6));
                    if (k > 0) {  // offsets monotone in kernel width
                        const float *prev = g->node_ptr(i, j, k - 1);
                        if (sg) {
                            CHECK(p[0] <= prev[0] + 1e-6f);
                            CHECK(p[1] <= prev[1] + 1e-6f);
                        } else {
                            CHECK(p[0] >= prev[0] - 1e-6f);
                            CHECK(p[1] >= prev[1] - 1e-6f);
                        }
                    }
                }
    }
    // near-delta ggx kernel leaves the lobe essentially unchanged
    Vec2f out = query_ggx_conv(t, {0.3f, 0.3f}, kAlphaMin);
    CHECK(out.x == doctest::Approx(0.3).epsilon(0.05));
    CHECK(out.y == doctest::Approx(0.3).epsilon(0.05));
    // isotropic input stays isotropic
    Vec2f iso = query_sg_conv(t, {0.2f, 0.2f}, 2.0f);
    CHECK(iso.x == doctest::Approx(iso.y).epsilon(0.05));
    // wider kernels widen more
    CHECK(query_sg_conv(t, {0.1f, 0.1f}, 0.6f).x >= query_sg_conv(t, {0.1f, 0.1f}, 9.0f).x);
    CHECK(query_ggx_conv(t, {0.1f, 0.1f}, 0.7f).x >= query_ggx_conv(t, {0.1f, 0.1f}, 0.01f).x);
}

TEST_CASE("convolution tables: off-grid oracle accuracy (reduced build)") {
    const PrecompTables &t = fast_tables();
    struct Point {
        Vec2f alpha;
        float kernel;
    };
    const Point sg_pts[6] = {{{0.07f, 0.07f}, 1.7f}, {{0.31f, 0.12f}, 3.3f},
                             {{0.55f, 0.55f}, 0.8f}, {{0.02f, 0.45f}, 6.1f},
                             {{0.83f, 0.21f}, 2.4f}, {{0.13f, 0.13f}, 8.7f}};
    const Point ggx_pts[6] = {{{0.07f, 0.07f}, 0.11f}, {{0.31f, 0.12f}, 0.33f},
                              {{0.55f, 0.55f}, 0.045f}, {{0.02f, 0.45f}, 0.24f},
                              {{0.83f, 0.21f}, 0.6f},  {{0.13f, 0.13f}, 0.02f}};
    double num = 0, den = 0;
    for (int i = 0; i < 6; ++i) {
        SggxLobe lobe;
        lobe.alpha = sg_pts[i].alpha;
        ConvKernel k = ConvKernel::sg(sg_pts[i].kernel);
        conv_l2_parts(lobe, k, query_sg_conv(t, lobe.alpha, sg_pts[i].kernel), 32, 2000,
                      900 + i, &num, &den);
    }
    CHECK(std::sqrt(num / den) <= 0.12);
    num = den = 0;
    for (int i = 0; i < 6; ++i) {
        SggxLobe lobe;
        lobe.alpha = ggx_pts[i].alpha;
        ConvKernel k = ConvKernel::ggx(ggx_pts[i].kernel);
        conv_l2_parts(lobe, k, query_ggx_conv(t, lobe.alpha, ggx_pts[i].kernel), 32, 2000,
                      1900 + i, &num, &den);
    }
    CHECK(std::sqrt(num / den) <= 0.12);
}

TEST_CASE("beta lobe table: bracketing, weights, and the one-lobe baseline") {
    const PrecompTables &t = fast_tables();
    std::vector<double> tq, tws;
    sharp_grid(&tq, &tws);
    Pcg32 rng(23);
    for (int it = 0; it < 8; ++it) {
        int i = int(rng.next_u32(uint32_t(t.beta_lobes.axes[0].n)));
        int j = int(rng.next_u32(uint32_t(t.beta_lobes.axes[1].n)));
        double a = t.beta_lobes.axes[0].node(i), b = t.beta_lobes.axes[1].node(j);
        float m1, a1, a2;
        query_beta_lobes(t, {float(a), float(b)}, &m1, &a1, &a2);
        CHECK(m1 >= 0.0f);
        CHECK(m1 <= 1.0f);
        CHECK(a1 <= a2 + 1e-6f);

        std::vector<double> target = beta_mix_target(a, b, tq);
        std::vector<double> two(tq.size()), one(tq.size());
        double mu = clamp(a / (a + b), double(kAlphaMin), 1.0);
        for (size_t q = 0; q < tq.size(); ++q) {
            two[q] = double(m1) * ggx_d_iso(a1, float(tq[q])) +
                     (1.0 - double(m1)) * ggx_d_iso(a2, float(tq[q]));
            one[q] = ggx_d_iso(float(mu), float(tq[q]));
        }
        double err_two = weighted_l2(two, target, tws);
        double err_one = weighted_l2(one, target, tws);
        CHECK(err_two <= err_one * 1.05 + 1e-4);
    }
    // symmetric beta: fitted lobes bracket the mean
    float m1, a1, a2;
    query_beta_lobes(t, {4.0f, 4.0f}, &m1, &a1, &a2);
    CHECK(a1 <= 0.5f + 1e-3f);
    CHECK(a2 >= 0.5f - 1e-3f);
}

TEST_CASE("table file round trip and corruption detection") {
    const PrecompTables &t = fast_tables();
    std::string path =
        (std::filesystem::temp_directory_path() / "vlod_test_tables.abt").string();
    save_tables(path, t);
    PrecompTables back = load_tables(path);
    REQUIRE(back.sg_conv.data.size() == t.sg_conv.data.size());
    CHECK(std::memcmp(back.sg_conv.data.data(), t.sg_conv.data.data(),
                      t.sg_conv.data.size() * 4) == 0);
    CHECK(std::memcmp(back.beta_lobes.data.data(), t.beta_lobes.data.data(),
                      t.beta_lobes.data.size() * 4) == 0);
    CHECK(std::memcmp(back.ggx_conv.data.data(), t.ggx_conv.data.data(),
                      t.ggx_conv.data.size() * 4) == 0);
    CHECK(back.ltc_inv.axes[0].n == t.ltc_inv.axes[0].n);
    CHECK(back.report.size() == t.report.size());

    // flip one payload byte: CRC must catch it
    {
        std::vector<uint8_t> bytes = read_file_bytes(path);
        bytes[bytes.size() / 2] ^= 0x40;
        write_file_bytes(path, bytes);
        CHECK_THROWS_WITH_AS(load_tables(path), doctest::Contains("CRC"), std::runtime_error);
    }
    // wrong magic
    {
        save_tables(path, t);
        std::vector<uint8_t> bytes = read_file_bytes(path);
        bytes[0] = 'X';
        // keep the CRC consistent so the magic check itself fires
        uint32_t crc = crc32_bytes(bytes.data(), bytes.size() - 4);
        std::memcpy(bytes.data() + bytes.size() - 4, &crc, 4);
        write_file_bytes(path, bytes);
        CHECK_THROWS_WITH_AS(load_tables(path), doctest::Contains("magic"), std::runtime_error);
    }
    // truncation
    {
        save_tables(path, t);
        std::vector<uint8_t> bytes = read_file_bytes(path);
        bytes.resize(bytes.size() / 3);
        write_file_bytes(path, bytes);
        CHECK_THROWS_AS(load_tables(path), std::runtime_error);
    }
    std::remove(path.c_str());
}

TEST_CASE("table build is deterministic") {
    TableFitConfig cfg = TableFitConfig::fast();
    cfg.m1_res[0] = cfg.m1_res[1] = 4;
    cfg.m1_res[2] = 3;
    cfg.fit_dirs = 24;
    cfg.mc_samples = 3000;
    FitReportEntry r1, r2;
    TableGrid a = fit_sg_conv_table(cfg, &r1);
    TableGrid b = fit_sg_conv_table(cfg, &r2);
    REQUIRE(a.data.size() == b.data.size());
    CHECK(std::memcmp(a.data.data(), b.data.data(), a.data.size() * 4) == 0);
    CHECK(r1.median_rel_l2 == r2.median_rel_l2);
}

TEST_CASE("fit report flags outliers") {
    const PrecompTables &t = fast_tables();
    REQUIRE(t.report.size() >= 4);
    for (const FitReportEntry &e : t.report) {
        CHECK(e.nodes > 0);
        CHECK(e.median_rel_l2 >= 0.0f);
        CHECK(e.max_rel_l2 >= e.median_rel_l2);
        // flags cover every node beyond the threshold by construction; here we
        // just confirm the counter stays within range
        CHECK(e.flagged <= e.nodes);
    }
}

}  // TEST_SUITE
