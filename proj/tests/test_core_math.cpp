// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "vlod/frame.h"
#include "vlod/image.h"
#include "vlod/mappings.h"
#include "vlod/quadrature.h"
#include "vlod/rng.h"
#include "vlod/serialization.h"
#include "vlod/sg.h"
#include "vlod/vecmath.h"

using namespace vlod;

namespace {

std::string temp_path(const char *name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_SUITE("core-math") {

TEST_CASE("mat3 inverse and determinant") {
    CHECK(Mat3::diag(2, 3, 4).det() == doctest::Approx(24.0));
    Pcg32 rng(7);
    for (int it = 0; it < 50; ++it) {
        auto rv = [&] { return Vec3f(rng.next_float(), rng.next_float(), rng.next_float()); };
        Mat3 m = Mat3(rv(), rv(), rv()) + Mat3::diag(2, 2, 2);  // keep it well conditioned
        Mat3 p = m * m.inverse();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                CHECK(p(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-4).scale(1.0));
    }
}

TEST_CASE("orthonormal frame construction") {
    Pcg32 rng(11);
    std::vector<Vec3f> dirs = {{0, 0, 1}, {0, 0, -1}, {1, 0, 0}, {0, -1, 0}};
    for (int it = 0; it < 100; ++it)
        dirs.push_back(sample_uniform_sphere(rng.next_vec2()));
    for (const Vec3f &n : dirs) {
        Frame f = build_frame(n);
        CHECK(length(f.t) == doctest::Approx(1.0).epsilon(1e-5));
        CHECK(length(f.b) == doctest::Approx(1.0).epsilon(1e-5));
        CHECK(std::fabs(dot(f.t, f.b)) < 1e-5f);
        CHECK(std::fabs(dot(f.t, f.n)) < 1e-5f);
        CHECK(std::fabs(dot(cross(f.t, f.b) - f.n, f.n)) < 1e-5f);
        Vec3f w = sample_uniform_sphere(rng.next_vec2());
        Vec3f back = f.to_world(f.to_local(w));
        CHECK(length(back - w) < 1e-5f);
    }
}

TEST_CASE("equal-area sphere mapping round trips") {
    CHECK(length(square_to_sphere({0.5f, 0.5f}) - Vec3f(0, 0, 1)) < 1e-6f);
    Pcg32 rng(13);
    for (int it = 0; it < 500; ++it) {
        Vec3f w = sample_uniform_sphere(rng.next_vec2());
        Vec3f back = square_to_sphere(sphere_to_square(w));
        CHECK(length(back - w) < 2e-5f);
    }
    for (int it = 0; it < 500; ++it) {
        Vec2f uv{0.02f + 0.96f * rng.next_float(), 0.02f + 0.96f * rng.next_float()};
        Vec2f back = sphere_to_square(square_to_sphere(uv));
        CHECK(std::fabs(back.x - uv.x) < 2e-5f);
        CHECK(std::fabs(back.y - uv.y) < 2e-5f);
    }
}

TEST_CASE("equal-area sphere mapping preserves area") {
    // area preservation means uniform uv gives uniform z and phi marginals
    Pcg32 rng(17);
    const int n = 100000, zb = 10, pb = 8;
    int zbin[zb] = {}, pbin[pb] = {};
    for (int it = 0; it < n; ++it) {
        Vec3f w = square_to_sphere(rng.next_vec2());
        CHECK(length(w) == doctest::Approx(1.0).epsilon(1e-4));
        zbin[std::min(int((w.z * 0.5f + 0.5f) * zb), zb - 1)]++;
        float phi = std::atan2(w.y, w.x) * kInvPi * 0.5f + 0.5f;
        pbin[std::min(int(phi * pb), pb - 1)]++;
    }
    for (int b = 0; b < zb; ++b) CHECK(zbin[b] == doctest::Approx(n / zb).epsilon(0.03));
    for (int b = 0; b < pb; ++b) CHECK(pbin[b] == doctest::Approx(n / pb).epsilon(0.03));
}

TEST_CASE("concentric hemisphere mapping") {
    CHECK(length(square_to_hemisphere({0.5f, 0.5f}) - Vec3f(0, 0, 1)) < 1e-6f);
    Pcg32 rng(19);
    for (int it = 0; it < 500; ++it) {
        Vec2f uv = rng.next_vec2();
        Vec3f w = square_to_hemisphere(uv);
        CHECK(length(w) == doctest::Approx(1.0).epsilon(1e-4));
        CHECK(w.z >= -1e-6f);
        Vec2f back = hemisphere_to_square(w);
        CHECK(std::fabs(back.x - uv.x) < 1e-4f);
        CHECK(std::fabs(back.y - uv.y) < 1e-4f);
    }
    // area preservation: z marginal uniform on [0,1]
    const int n = 100000, zb = 10;
    int zbin[zb] = {};
    for (int it = 0; it < n; ++it) {
        Vec3f w = square_to_hemisphere(rng.next_vec2());
        zbin[std::min(int(w.z * zb), zb - 1)]++;
    }
    for (int b = 0; b < zb; ++b) CHECK(zbin[b] == doctest::Approx(n / zb).epsilon(0.03));
}

TEST_CASE("concentric disk mapping round trips") {
    Pcg32 rng(23);
    for (int it = 0; it < 500; ++it) {
        Vec2f uv = rng.next_vec2();
        Vec2f d = square_to_disk(uv);
        CHECK(d.x * d.x + d.y * d.y <= 1.0f + 1e-6f);
        Vec2f back = disk_to_square(d);
        CHECK(std::fabs(back.x - uv.x) < 1e-4f);
        CHECK(std::fabs(back.y - uv.y) < 1e-4f);
    }
}

TEST_CASE("pcg32 reference sequence") {
    // published demo outputs for seed 42, stream 54
    Pcg32 rng(42, 54);
    const uint32_t expected[5] = {0xa15c02b7u, 0x7b47f409u, 0xba1d3330u, 0x83d2f293u, 0xbfa4784bu};
    for (uint32_t e : expected) CHECK(rng.next_u32() == e);
    // determinism across instances
    Pcg32 a(123, 7), b(123, 7);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u32() == b.next_u32());
    // floats stay inside [0, 1)
    for (int i = 0; i < 1000; ++i) {
        float f = a.next_float();
        CHECK(f >= 0.0f);
        CHECK(f < 1.0f);
    }
}

TEST_CASE("radical inverse") {
    CHECK(radical_inverse(1, 2) == doctest::Approx(0.5));
    CHECK(radical_inverse(2, 2) == doctest::Approx(0.25));
    CHECK(radical_inverse(3, 2) == doctest::Approx(0.75));
    CHECK(radical_inverse(4, 2) == doctest::Approx(0.125));
    CHECK(radical_inverse(1, 3) == doctest::Approx(1.0 / 3.0));
    CHECK(radical_inverse(2, 3) == doctest::Approx(2.0 / 3.0));
    CHECK(radical_inverse(3, 3) == doctest::Approx(1.0 / 9.0));
    CHECK(radical_inverse(4, 3) == doctest::Approx(4.0 / 9.0));
}

TEST_CASE("gauss-legendre quadrature") {
    std::vector<double> x, w;
    gauss_legendre(4, 0.0, 1.0, &x, &w);
    double s = 0;
    for (size_t i = 0; i < x.size(); ++i) s += w[i] * x[i] * x[i];
    CHECK(s == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    gauss_legendre(24, 0.0, kPi, &x, &w);
    s = 0;
    for (size_t i = 0; i < x.size(); ++i) s += w[i] * std::sin(x[i]);
    CHECK(s == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("spherical gaussian product and integral") {
    Pcg32 rng(29);
    for (int it = 0; it < 50; ++it) {
        SgLobe a{sample_uniform_sphere(rng.next_vec2()), 0.5f + 20.0f * rng.next_float(),
                 0.2f + rng.next_float()};
        SgLobe b{sample_uniform_sphere(rng.next_vec2()), 0.5f + 20.0f * rng.next_float(),
                 0.2f + rng.next_float()};
        SgLobe p = sg_product(a, b);
        for (int k = 0; k < 10; ++k) {
            Vec3f w = sample_uniform_sphere(rng.next_vec2());
            float lhs = sg_eval(a, w) * sg_eval(b, w);
            float rhs = sg_eval(p, w);
            CHECK(rhs == doctest::Approx(lhs).epsilon(2e-3).scale(1e-6));
        }
    }
    // closed-form integral vs quadrature
    std::vector<double> x, w;
    gauss_legendre(256, -1.0, 1.0, &x, &w);
    for (float kappa : {0.01f, 0.5f, 2.13f, 10.0f, 100.0f}) {
        double q = 0;
        for (size_t i = 0; i < x.size(); ++i)
            q += w[i] * std::exp(double(kappa) * (x[i] - 1.0));
        q *= kTwoPi;
        CHECK(sg_integral(kappa) == doctest::Approx(q).epsilon(1e-6));
    }
}

TEST_CASE("clamped cosine single-lobe fit") {
    SgLobe fit = fit_clamped_cosine_sg();
    CHECK(fit.kappa > 1.9f);
    CHECK(fit.kappa < 2.4f);
    CHECK(fit.amplitude > 1.0f);
    CHECK(fit.amplitude < 1.4f);
    // the best single lobe sits near kappa 2.13 at about 18% relative L2
    // over the sphere; nothing tighter exists in this family
    double res = clamped_cosine_sg_residual(fit);
    CHECK(res > 0.16);
    CHECK(res <= 0.19);
    // the reported residual agrees with a Monte Carlo estimate
    Pcg32 rng(2026);
    double num = 0, den = 0;
    for (int i = 0; i < 200000; ++i) {
        Vec3f w = sample_uniform_sphere(rng.next_vec2());
        double f = sg_eval(fit, w);
        double g = std::max(0.0, double(w.z));
        num += sqr(f - g);
        den += sqr(g);
    }
    CHECK(std::sqrt(num / den) == doctest::Approx(res).epsilon(0.02));
    // peak lands within the residual of the true value, back side nearly dark
    CHECK(sg_eval(fit, Vec3f(0, 0, 1)) == doctest::Approx(1.0).epsilon(res + 0.02));
    CHECK(sg_eval(fit, Vec3f(0, 0, -1)) <= 0.05f);
}

TEST_CASE("bounds intersection") {
    Bounds3 b(Vec3f(0), Vec3f(1));
    float t0, t1;
    Vec3f o(-1, 0.5f, 0.5f);
    Vec3f inv_d(1.0f, 1e9f, 1e9f);
    REQUIRE(b.intersect(o, inv_d, kInf, &t0, &t1));
    CHECK(t0 == doctest::Approx(1.0));
    CHECK(t1 == doctest::Approx(2.0));
    Vec3f o2(-1, 2.0f, 0.5f);
    CHECK_FALSE(b.intersect(o2, inv_d, kInf, &t0, &t1));
}

TEST_CASE("srgb transfer round trip") {
    CHECK(srgb_encode(0.0f) == doctest::Approx(0.0));
    CHECK(srgb_encode(1.0f) == doctest::Approx(1.0));
    for (int i = 0; i <= 64; ++i) {
        float x = float(i) / 64.0f;
        CHECK(srgb_decode(srgb_encode(x)) == doctest::Approx(x).epsilon(1e-4).scale(1.0));
    }
}

TEST_CASE("image metrics") {
    ImageBuffer a(8, 4, Vec3f(0.25f)), b(8, 4, Vec3f(0.75f));
    CHECK(image_rmse(a, b) == doctest::Approx(0.5));
    CHECK(psnr_from_rmse(0.5) == doctest::Approx(20.0 * std::log10(2.0)));
    CHECK(std::isinf(psnr_from_rmse(image_rmse(a, a))));
}

TEST_CASE("pfm round trip is bit exact") {
    ImageBuffer img(13, 7);
    Pcg32 rng(31);
    for (Vec3f &p : img.pixels)
        p = Vec3f(rng.next_float() * 4.0f, rng.next_float(), rng.next_float() * 0.01f);
    std::string path = temp_path("vlod_test_roundtrip.pfm");
    write_pfm(path, img);
    ImageBuffer back = read_pfm(path);
    REQUIRE(back.width == img.width);
    REQUIRE(back.height == img.height);
    for (size_t i = 0; i < img.pixels.size(); ++i) {
        CHECK(std::memcmp(&back.pixels[i], &img.pixels[i], sizeof(Vec3f)) == 0);
    }
    std::remove(path.c_str());
}

TEST_CASE("png round trip within quantization error") {
    ImageBuffer img(16, 9);
    Pcg32 rng(37);
    for (Vec3f &p : img.pixels) p = Vec3f(rng.next_float(), rng.next_float(), rng.next_float());
    std::string path = temp_path("vlod_test_roundtrip.png");
    write_png(path, img);
    ImageBuffer back = read_png(path);
    REQUIRE(back.width == img.width);
    REQUIRE(back.height == img.height);
    for (size_t i = 0; i < img.pixels.size(); ++i) {
        // one 8-bit step in sRGB space maps to at most ~0.4% linear error
        CHECK(std::fabs(srgb_encode(back.pixels[i].x) - srgb_encode(img.pixels[i].x)) < 0.003f);
        CHECK(std::fabs(srgb_encode(back.pixels[i].y) - srgb_encode(img.pixels[i].y)) < 0.003f);
        CHECK(std::fabs(srgb_encode(back.pixels[i].z) - srgb_encode(img.pixels[i].z)) < 0.003f);
    }
    std::remove(path.c_str());
}

TEST_CASE("stream writer reader round trip") {
    StreamWriter w;
    w.u8(0xab);
    w.u16(0x1234);
    w.u32(0xdeadbeefu);
    w.u64(0x0123456789abcdefull);
    w.f32(3.25f);
    w.f64(-1.5);
    w.str("hello");
    float arr[3] = {1, 2, 3};
    w.f32_array(arr, 3);

    StreamReader r(w.data().data(), w.size());
    CHECK(r.u8() == 0xab);
    CHECK(r.u16() == 0x1234);
    CHECK(r.u32() == 0xdeadbeefu);
    CHECK(r.u64() == 0x0123456789abcdefull);
    CHECK(r.f32() == 3.25f);
    CHECK(r.f64() == -1.5);
    CHECK(r.str() == "hello");
    float back[3];
    r.f32_array(back, 3);
    CHECK(back[2] == 3.0f);
    CHECK(r.remaining() == 0);
    CHECK_THROWS(r.u8());
}

TEST_CASE("crc32 known value") {
    const char *s = "123456789";
    CHECK(crc32_bytes(s, 9) == 0xCBF43926u);
}

TEST_CASE("reflection") {
    Vec3f n(0, 0, 1), w = normalize(Vec3f(1, 2, 3));
    Vec3f r = reflect(w, n);
    CHECK(r.x == doctest::Approx(-w.x));
    CHECK(r.y == doctest::Approx(-w.y));
    CHECK(r.z == doctest::Approx(w.z));
    CHECK(length(r) == doctest::Approx(1.0));
}

}  // TEST_SUITE
