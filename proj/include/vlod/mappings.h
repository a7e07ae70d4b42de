// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vlod/vecmath.h"

namespace vlod {

// Equal-area octahedral mapping between [0,1]^2 and the unit sphere.
// The square center (0.5, 0.5) maps to +z; the four corners map to -z.
// Area preserving: a uv-region of area a covers solid angle 4*pi*a.
inline Vec3f square_to_sphere(const Vec2f &uv) {
    float u = 2.0f * uv.x - 1.0f, v = 2.0f * uv.y - 1.0f;
    float up = std::fabs(u), vp = std::fabs(v);
    float sd = 1.0f - (up + vp);  // signed distance to the hemisphere diagonal
    float d = std::fabs(sd);
    float r = 1.0f - d;
    float phi = (r == 0.0f ? 1.0f : (vp - up) / r + 1.0f) * (kPi / 4.0f);
    float z = std::copysign(1.0f - r * r, sd);
    float cos_phi = std::copysign(std::cos(phi), u);
    float sin_phi = std::copysign(std::sin(phi), v);
    float s = r * safe_sqrt(2.0f - r * r);
    return {cos_phi * s, sin_phi * s, z};
}

inline Vec2f sphere_to_square(const Vec3f &w) {
    float x = std::fabs(w.x), y = std::fabs(w.y), z = std::fabs(w.z);
    float r = safe_sqrt(1.0f - z);
    float a = std::max(x, y), b = std::min(x, y);
    b = a == 0.0f ? 0.0f : b / a;
    float phi = std::atan(b) * (2.0f / kPi);  // in [0, 0.5]
    if (x < y) phi = 1.0f - phi;
    float v = phi * r;
    float u = r - v;
    if (w.z < 0.0f) {
        float tu = u;
        u = 1.0f - v;
        v = 1.0f - tu;
    }
    u = std::copysign(u, w.x);
    v = std::copysign(v, w.y);
    return {(u + 1.0f) * 0.5f, (v + 1.0f) * 0.5f};
}

// Shirley-Chiu concentric mapping between [0,1]^2 and the unit disk.
inline Vec2f square_to_disk(const Vec2f &uv) {
    float a = 2.0f * uv.x - 1.0f, b = 2.0f * uv.y - 1.0f;
    if (a == 0.0f && b == 0.0f) return {0.0f, 0.0f};
    float r, phi;
    if (std::fabs(a) > std::fabs(b)) {
        r = a;
        phi = (kPi / 4.0f) * (b / a);
    } else {
        r = b;
        phi = kPi / 2.0f - (kPi / 4.0f) * (a / b);
    }
    return {r * std::cos(phi), r * std::sin(phi)};
}

inline Vec2f disk_to_square(const Vec2f &p) {
    float r = std::sqrt(p.x * p.x + p.y * p.y);
    float phi = std::atan2(p.y, p.x);
    if (phi < -kPi / 4.0f) phi += 2.0f * kPi;
    float a, b;
    if (phi < kPi / 4.0f) {
        a = r;
        b = phi * r / (kPi / 4.0f);
    } else if (phi < 3.0f * kPi / 4.0f) {
        b = r;
        a = -(phi - kPi / 2.0f) * r / (kPi / 4.0f);
    } else if (phi < 5.0f * kPi / 4.0f) {
        a = -r;
        b = -(phi - kPi) * r / (kPi / 4.0f);
    } else {
        b = -r;
        a = (phi - 3.0f * kPi / 2.0f) * r / (kPi / 4.0f);
    }
    return {(a + 1.0f) * 0.5f, (b + 1.0f) * 0.5f};
}

// Area-preserving concentric square -> upper hemisphere (+z). The square
// center maps to +z, the boundary to the equator. Composed of the concentric
// disk map with the Lambert equal-area lift z = 1 - r^2.
inline Vec3f square_to_hemisphere(const Vec2f &uv) {
    Vec2f d = square_to_disk(uv);
    float r2 = d.x * d.x + d.y * d.y;
    float s = safe_sqrt(2.0f - r2);
    return {d.x * s, d.y * s, 1.0f - r2};
}

inline Vec2f hemisphere_to_square(const Vec3f &w) {
    float z = clamp(w.z, 0.0f, 1.0f);
    float s = safe_sqrt(1.0f + z);
    Vec2f d = s > 0.0f ? Vec2f{w.x / s, w.y / s} : Vec2f{0.0f, 0.0f};
    return disk_to_square(d);
}

// Uniform direction from two uniforms (Archimedes)
inline Vec3f sample_uniform_sphere(const Vec2f &u) {
    float z = 1.0f - 2.0f * u.x;
    float r = safe_sqrt(1.0f - z * z);
    float phi = kTwoPi * u.y;
    return {r * std::cos(phi), r * std::sin(phi), z};
}

inline Vec3f sample_cosine_hemisphere(const Vec2f &u) {
    Vec2f d = square_to_disk(u);
    float z = safe_sqrt(1.0f - d.x * d.x - d.y * d.y);
    return {d.x, d.y, z};
}

}  // namespace vlod
