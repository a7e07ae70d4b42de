// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "vlod/frame.h"
#include "vlod/mappings.h"
#include "vlod/primitive.h"

using namespace vlod;

TEST_SUITE_BEGIN("primitive");

namespace {

float quadric(const TruncEllipsoid &e, const Vec3f &p) { return quad_form(e.m, p - e.center); }

// first-order distance from p to the ellipsoid surface, zero when inside;
// raw quadric values are ill conditioned for pancake-thin fits
float boundary_distance(const TruncEllipsoid &e, const Vec3f &p) {
    float q = quadric(e, p);
    if (q <= 1.0f) return 0.0f;
    Vec3f grad = (e.m * (p - e.center)) * 2.0f;
    return (q - 1.0f) / std::max(length(grad), 1e-20f);
}

TruncEllipsoid make_sphere(const Vec3f &c, float r, const Bounds3 &box) {
    TruncEllipsoid e;
    e.center = c;
    e.m = Mat3::diag(1.0f / (r * r), 1.0f / (r * r), 1.0f / (r * r));
    e.m_inv = Mat3::diag(r * r, r * r, r * r);
    e.box = box;
    return e;
}

// ellipsoid from orthonormal axes (columns of rot) and semi-axis lengths
TruncEllipsoid make_ellipsoid(const Vec3f &c, const Mat3 &rot, const Vec3f &semi,
                              const Bounds3 &box) {
    TruncEllipsoid e;
    e.center = c;
    Mat3 d = Mat3::diag(1.0f / (semi.x * semi.x), 1.0f / (semi.y * semi.y),
                        1.0f / (semi.z * semi.z));
    Mat3 di = Mat3::diag(semi.x * semi.x, semi.y * semi.y, semi.z * semi.z);
    e.m = rot * d * rot.transposed();
    e.m_inv = rot * di * rot.transposed();
    e.box = box;
    return e;
}

// random rotation by Gram-Schmidt on random vectors
Mat3 random_rotation(Pcg32 &rng) {
    Vec3f a = normalize(sample_uniform_sphere(rng.next_vec2()));
    Vec3f h = sample_uniform_sphere(rng.next_vec2());
    Vec3f b = normalize(h - a * dot(a, h));
    return Mat3(a, b, cross(a, b));
}

// double-precision line-vs-box and line-vs-ellipsoid for the oracle
bool d_line_box(const Vec3f &o, const Vec3f &d, const Bounds3 &box, double *lo, double *hi) {
    double tlo = -1e300, thi = 1e300;
    for (int a = 0; a < 3; ++a) {
        if (std::fabs(double(d[a])) < 1e-30) {
            if (o[a] < box.lo[a] || o[a] > box.hi[a]) return false;
            continue;
        }
        double tn = (double(box.lo[a]) - o[a]) / d[a];
        double tf = (double(box.hi[a]) - o[a]) / d[a];
        if (tn > tf) std::swap(tn, tf);
        tlo = std::max(tlo, tn);
        thi = std::min(thi, tf);
    }
    *lo = tlo;
    *hi = thi;
    return tlo <= thi;
}

bool d_line_ellipsoid(const TruncEllipsoid &e, const Vec3f &o, const Vec3f &d, double *lo,
                      double *hi) {
    Vec3f ec = o - e.center;
    double a = 0, b = 0, c = -1;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double mij = e.m(i, j);
            a += mij * d[i] * d[j];
            b += 2.0 * mij * d[i] * ec[j];
            c += mij * ec[i] * ec[j];
        }
    double disc = b * b - 4 * a * c;
    if (disc < 0 || a <= 0) return false;
    double sq = std::sqrt(disc);
    *lo = (-b - sq) / (2 * a);
    *hi = (-b + sq) / (2 * a);
    return true;
}

bool line_hits_body(const TruncEllipsoid &e, const Vec3f &o, const Vec3f &d) {
    double bl, bh, el, eh;
    if (!d_line_box(o, d, e.box, &bl, &bh)) return false;
    if (!d_line_ellipsoid(e, o, d, &el, &eh)) return false;
    return std::max(bl, el) <= std::min(bh, eh);
}

// independent projected-area estimate: uniform points over the bounding
// rectangle of the projected ellipse, each carrying a full line along w
double oracle_projected_area(const TruncEllipsoid &e, const Vec3f &w, int n, Pcg32 &rng) {
    Frame f = build_frame(w);
    double hu = std::sqrt(double(dot(f.t, e.m_inv * f.t)));
    double hv = std::sqrt(double(dot(f.b, e.m_inv * f.b)));
    int m = 0;
    for (int i = 0; i < n; ++i) {
        float u = (2.0f * rng.next_float() - 1.0f) * float(hu);
        float v = (2.0f * rng.next_float() - 1.0f) * float(hv);
        Vec3f o = e.center + f.t * u + f.b * v;
        if (line_hits_body(e, o, w)) ++m;
    }
    return 4.0 * hu * hv * double(m) / double(n);
}

double box_area_along(const Bounds3 &box, const Vec3f &w) {
    Vec3f ext = box.extent();
    return std::fabs(w.x) * ext.y * ext.z + std::fabs(w.y) * ext.x * ext.z +
           std::fabs(w.z) * ext.x * ext.y;
}

// largest eigenvalue of a symmetric matrix by power iteration
float lambda_max(const Mat3 &m) {
    Vec3f v = normalize(Vec3f(1, 1, 1));
    for (int i = 0; i < 50; ++i) v = normalize(m * v);
    return dot(v, m * v);
}

}  // namespace

TEST_CASE("points filling the box turn the primitive into the box") {
    Bounds3 box({0, 0, 0}, {2, 1, 1});
    std::vector<Vec3f> pts;
    for (int corner = 0; corner < 8; ++corner)
        pts.push_back({corner & 1 ? box.hi.x : box.lo.x, corner & 2 ? box.hi.y : box.lo.y,
                       corner & 4 ? box.hi.z : box.lo.z});
    Pcg32 rng(3);
    for (int i = 0; i < 500; ++i)
        pts.push_back({2.0f * rng.next_float(), rng.next_float(), rng.next_float()});
    TruncEllipsoid e = fit_primitive(pts, box);

    for (const Vec3f &p : pts) CHECK(boundary_distance(e, p) <= 1e-4f);
    // box corners inside the ellipsoid means the whole box is
    for (int corner = 0; corner < 8; ++corner) CHECK(quadric(e, pts[corner]) <= 1.0f + 1e-4f);

    // the intersection body is the box itself: exact projection, no sampling
    Pcg32 mc(7);
    for (int i = 0; i < 20; ++i) {
        Vec3f w = sample_uniform_sphere(mc.next_vec2());
        float area = projected_area(e, w, 16, mc);
        CHECK(area == doctest::Approx(box_area_along(box, w)).epsilon(1e-5));
        float area_neg = projected_area(e, -w, 16, mc);
        CHECK(area_neg == doctest::Approx(area).epsilon(1e-6));
    }

    // rays are clipped exactly to the box interval
    for (int i = 0; i < 200; ++i) {
        Vec3f o = Vec3f(mc.next_float(), mc.next_float(), mc.next_float()) * 6.0f - Vec3f(2.0f);
        Vec3f d = sample_uniform_sphere(mc.next_vec2());
        double bl, bh;
        bool box_hit = d_line_box(o, d, box, &bl, &bh) && bh >= 0;
        float t0, t1;
        bool prim_hit = intersect(e, o, d, 0.0f, kInf, &t0, &t1);
        REQUIRE(prim_hit == box_hit);
        if (prim_hit) {
            CHECK(t0 == doctest::Approx(std::max(bl, 0.0)).epsilon(1e-3));
            CHECK(t1 == doctest::Approx(bh).epsilon(1e-3));
        }
    }
}

TEST_CASE("coplanar points give a flat ellipsoid with the right axis") {
    Bounds3 box({0, 0, 0}, {1, 1, 1});
    Pcg32 rng(11);
    std::vector<Vec3f> pts;
    for (int i = 0; i < 400; ++i) pts.push_back({rng.next_float(), rng.next_float(), 0.4f});
    TruncEllipsoid e = fit_primitive(pts, box);

    for (const Vec3f &p : pts) CHECK(boundary_distance(e, p) <= 1e-4f);
    // support width along the plane normal is the thickness
    float thickness = 2.0f * safe_sqrt(e.m_inv(2, 2));
    float size = length(box.extent());
    CHECK(thickness <= 0.1f * size);
    // in-plane support is of order the point spread, far above the thickness
    CHECK(safe_sqrt(e.m_inv(0, 0)) > 10.0f * safe_sqrt(e.m_inv(2, 2)));
    CHECK(safe_sqrt(e.m_inv(1, 1)) > 10.0f * safe_sqrt(e.m_inv(2, 2)));
}

TEST_CASE("a single point degenerates to a tiny sphere") {
    Bounds3 box({-1, -1, -1}, {1, 1, 1});
    Vec3f p(0.3f, -0.2f, 0.9f);
    TruncEllipsoid e = fit_primitive({p}, box);
    float r = 1e-3f * length(box.extent());
    CHECK(e.center.x == doctest::Approx(p.x));
    CHECK(e.center.z == doctest::Approx(p.z));
    for (int a = 0; a < 3; ++a) CHECK(safe_sqrt(e.m_inv(a, a)) == doctest::Approx(r).epsilon(1e-3));
    CHECK(quadric(e, p) <= 1e-6f);
    CHECK_THROWS_AS(fit_primitive({}, box), std::invalid_argument);
}

TEST_CASE("fitted ellipsoids contain their samples and stay bounded") {
    Pcg32 rng(23);
    for (int config = 0; config < 20; ++config) {
        Bounds3 box({0, 0, 0}, {1, 1, 1});
        std::vector<Vec3f> pts;
        int kind = config % 4;
        int count = 30 + int(rng.next_float() * 200);
        Vec3f base(rng.next_float(), rng.next_float(), rng.next_float());
        Vec3f dir = sample_uniform_sphere(rng.next_vec2());
        for (int i = 0; i < count; ++i) {
            Vec3f p;
            if (kind == 0) {  // uniform fill
                p = {rng.next_float(), rng.next_float(), rng.next_float()};
            } else if (kind == 1) {  // tight cluster
                p = base + sample_uniform_sphere(rng.next_vec2()) * (0.05f * rng.next_float());
            } else if (kind == 2) {  // line segment
                p = base + dir * (0.6f * (rng.next_float() - 0.5f));
            } else {  // spherical shell
                p = Vec3f(0.5f) + sample_uniform_sphere(rng.next_vec2()) * 0.35f;
            }
            pts.push_back(min(max(p, Vec3f(0)), Vec3f(1)));
        }
        TruncEllipsoid e = fit_primitive(pts, box);
        for (const Vec3f &p : pts) CHECK(boundary_distance(e, p) <= 1e-4f);
        // the clamp rule: no semi-axis beyond 1.05 box diagonals
        float semi_max = safe_sqrt(lambda_max(e.m_inv));
        CHECK(semi_max <= 1.05f * length(box.extent()) + 1e-5f);
    }
}

TEST_CASE("intersect returns the interval inside both shapes") {
    Bounds3 box({0, 0, 0}, {1, 1, 1});
    TruncEllipsoid e = make_sphere({0.5f, 0.5f, 0.5f}, 0.3f, box);

    float t0, t1;
    // straight through the middle: the sphere chord
    REQUIRE(intersect(e, {-2, 0.5f, 0.5f}, {1, 0, 0}, 0, kInf, &t0, &t1));
    CHECK(t0 == doctest::Approx(2.2).epsilon(1e-5));
    CHECK(t1 == doctest::Approx(2.8).epsilon(1e-5));
    // through the box corner region that the sphere does not reach
    CHECK_FALSE(intersect(e, {-2, 0.95f, 0.95f}, {1, 0, 0}, 0, kInf, &t0, &t1));
    // tangent ray: empty or zero length, never NaN
    if (intersect(e, {-2, 0.8f, 0.5f}, {1, 0, 0}, 0, kInf, &t0, &t1)) {
        CHECK(std::isfinite(t0));
        CHECK(std::isfinite(t1));
        CHECK(t1 - t0 <= 1e-3f);
    }

    // random rays against an independent interval oracle
    Pcg32 rot_rng(5);
    TruncEllipsoid g = make_ellipsoid({0.4f, 0.6f, 0.5f}, random_rotation(rot_rng),
                                      {0.55f, 0.3f, 0.2f}, box);
    Pcg32 rng(9);
    for (int i = 0; i < 500; ++i) {
        Vec3f o = Vec3f(rng.next_float(), rng.next_float(), rng.next_float()) * 4.0f - Vec3f(1.5f);
        Vec3f d = sample_uniform_sphere(rng.next_vec2());
        double bl, bh, el, eh;
        bool ref = d_line_box(o, d, box, &bl, &bh) && d_line_ellipsoid(g, o, d, &el, &eh) &&
                   std::max({bl, el, 0.0}) <= std::min(bh, eh);
        bool got = intersect(g, o, d, 0.0f, kInf, &t0, &t1);
        REQUIRE(got == ref);
        if (got) {
            CHECK(t0 == doctest::Approx(std::max({bl, el, 0.0})).epsilon(1e-3));
            CHECK(t1 == doctest::Approx(std::min(bh, eh)).epsilon(1e-3));
            // the interval is inside both shape intervals
            CHECK(t0 >= bl - 1e-4);
            CHECK(t1 <= bh + 1e-4);
            CHECK(t0 >= el - 1e-4);
            CHECK(t1 <= eh + 1e-4);
        }
    }
}

TEST_CASE("projected area uses exact values when one shape contains the other") {
    Bounds3 box({0, 0, 0}, {1, 1, 1});
    TruncEllipsoid inner = make_sphere({0.5f, 0.5f, 0.5f}, 0.3f, box);
    TruncEllipsoid outer = make_sphere({0.5f, 0.5f, 0.5f}, 10.0f, box);
    Pcg32 rng(13);
    for (int i = 0; i < 30; ++i) {
        Vec3f w = sample_uniform_sphere(rng.next_vec2());
        CHECK(projected_area(inner, w, 16, rng) ==
              doctest::Approx(kPi * 0.3 * 0.3).epsilon(1e-5));
        CHECK(projected_area(outer, w, 16, rng) ==
              doctest::Approx(box_area_along(box, w)).epsilon(1e-5));
    }
    // axis-aligned directions give the face areas exactly
    CHECK(projected_area(outer, {1, 0, 0}, 16, rng) == doctest::Approx(1.0));
    CHECK(projected_area(outer, {0, 0, 1}, 16, rng) == doctest::Approx(1.0));
}

TEST_CASE("projected area estimator agrees with a brute force oracle") {
    Bounds3 box({0, 0, 0}, {1, 1, 1});
    Pcg32 gen(41);
    TruncEllipsoid e = make_ellipsoid({0.35f, 0.55f, 0.6f}, random_rotation(gen),
                                      {0.7f, 0.45f, 0.25f}, box);
    Vec3f w = normalize(Vec3f(0.3f, -0.5f, 0.8f));

    Pcg32 orc(101);
    double ref = oracle_projected_area(e, w, 10000000, orc);

    Pcg32 rng(57);
    double mean = 0;
    const int kRuns = 100000;
    for (int i = 0; i < kRuns; ++i) mean += projected_area(e, w, 16, rng);
    mean /= kRuns;
    CHECK(mean == doctest::Approx(ref).epsilon(0.01));

    // same estimate again with the same seed: deterministic
    Pcg32 rng_a(3), rng_b(3);
    CHECK(projected_area(e, w, 16, rng_a) == projected_area(e, w, 16, rng_b));
}

TEST_CASE("projected area estimator is unbiased across configurations") {
    Bounds3 box({0, 0, 0}, {1, 1, 1});
    Pcg32 gen(71);
    for (int config = 0; config < 20; ++config) {
        Vec3f c(0.25f + 0.5f * gen.next_float(), 0.25f + 0.5f * gen.next_float(),
                0.25f + 0.5f * gen.next_float());
        Vec3f semi(0.15f + gen.next_float(), 0.15f + gen.next_float(),
                   0.15f + gen.next_float());
        TruncEllipsoid e = make_ellipsoid(c, random_rotation(gen), semi, box);
        Vec3f w = sample_uniform_sphere(gen.next_vec2());

        Pcg32 orc(900 + config);
        double ref = oracle_projected_area(e, w, 500000, orc);
        Pcg32 rng(1700 + config);
        double mean_pos = 0, mean_neg = 0;
        const int kRuns = 2000;
        for (int i = 0; i < kRuns; ++i) {
            mean_pos += projected_area(e, w, 16, rng);
            mean_neg += projected_area(e, -w, 16, rng);
        }
        mean_pos /= kRuns;
        mean_neg /= kRuns;
        CHECK(mean_pos == doctest::Approx(ref).epsilon(0.02));
        CHECK(mean_neg == doctest::Approx(mean_pos).epsilon(0.02));
    }
}

TEST_SUITE_END();
