// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>

namespace vlod {

using std::fabs;
using std::sqrt;

constexpr float kPi = 3.14159265358979323846f;
constexpr float kTwoPi = 6.28318530717958647692f;
constexpr float kFourPi = 12.5663706143591729539f;
constexpr float kInvPi = 0.31830988618379067154f;
constexpr float kInf = std::numeric_limits<float>::infinity();

template <typename T>
inline T clamp(T x, T lo, T hi) {
    return x < lo ? lo : (x > hi ? hi : x);
}

inline float saturate(float x) { return clamp(x, 0.0f, 1.0f); }
inline float sqr(float x) { return x * x; }
inline double sqr(double x) { return x * x; }
inline float safe_sqrt(float x) { return std::sqrt(std::max(0.0f, x)); }
inline double safe_sqrt(double x) { return std::sqrt(std::max(0.0, x)); }
inline float safe_acos(float x) { return std::acos(clamp(x, -1.0f, 1.0f)); }
inline float lerp(float a, float b, float t) { return a + (b - a) * t; }

template <typename T>
struct TVec2 {
    T x = 0, y = 0;
    TVec2() = default;
    TVec2(T v) : x(v), y(v) {}
    TVec2(T x, T y) : x(x), y(y) {}
    T operator[](int i) const { return i == 0 ? x : y; }
    T &operator[](int i) { return i == 0 ? x : y; }
    TVec2 operator+(const TVec2 &o) const { return {x + o.x, y + o.y}; }
    TVec2 operator-(const TVec2 &o) const { return {x - o.x, y - o.y}; }
    TVec2 operator*(T s) const { return {x * s, y * s}; }
    TVec2 operator/(T s) const { return {x / s, y / s}; }
};

template <typename T>
struct TVec3 {
    T x = 0, y = 0, z = 0;
    TVec3() = default;
    TVec3(T v) : x(v), y(v), z(v) {}
    TVec3(T x, T y, T z) : x(x), y(y), z(z) {}
    template <typename U>
    explicit TVec3(const TVec3<U> &o) : x(T(o.x)), y(T(o.y)), z(T(o.z)) {}

    T operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    T &operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

    TVec3 operator-() const { return {-x, -y, -z}; }
    TVec3 operator+(const TVec3 &o) const { return {x + o.x, y + o.y, z + o.z}; }
    TVec3 operator-(const TVec3 &o) const { return {x - o.x, y - o.y, z - o.z}; }
    TVec3 operator*(const TVec3 &o) const { return {x * o.x, y * o.y, z * o.z}; }
    TVec3 operator/(const TVec3 &o) const { return {x / o.x, y / o.y, z / o.z}; }
    TVec3 operator*(T s) const { return {x * s, y * s, z * s}; }
    TVec3 operator/(T s) const { return {x / s, y / s, z / s}; }
    TVec3 &operator+=(const TVec3 &o) { x += o.x; y += o.y; z += o.z; return *this; }
    TVec3 &operator-=(const TVec3 &o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    TVec3 &operator*=(T s) { x *= s; y *= s; z *= s; return *this; }
    TVec3 &operator/=(T s) { x /= s; y /= s; z /= s; return *this; }
    bool operator==(const TVec3 &o) const { return x == o.x && y == o.y && z == o.z; }
};

template <typename T>
inline TVec3<T> operator*(T s, const TVec3<T> &v) { return v * s; }

template <typename T>
inline T dot(const TVec3<T> &a, const TVec3<T> &b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

template <typename T>
inline TVec3<T> cross(const TVec3<T> &a, const TVec3<T> &b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

template <typename T>
inline T length_squared(const TVec3<T> &v) { return dot(v, v); }

template <typename T>
inline T length(const TVec3<T> &v) { return std::sqrt(dot(v, v)); }

template <typename T>
inline TVec3<T> normalize(const TVec3<T> &v) { return v / length(v); }

template <typename T>
inline TVec3<T> min(const TVec3<T> &a, const TVec3<T> &b) {
    return {std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)};
}

template <typename T>
inline TVec3<T> max(const TVec3<T> &a, const TVec3<T> &b) {
    return {std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)};
}

template <typename T>
inline TVec3<T> abs(const TVec3<T> &v) { return {std::fabs(v.x), std::fabs(v.y), std::fabs(v.z)}; }

template <typename T>
inline T max_component(const TVec3<T> &v) { return std::max(v.x, std::max(v.y, v.z)); }

template <typename T>
inline T average(const TVec3<T> &v) { return (v.x + v.y + v.z) / T(3); }

template <typename T>
inline std::ostream &operator<<(std::ostream &os, const TVec3<T> &v) {
    return os << "[" << v.x << ", " << v.y << ", " << v.z << "]";
}

using Vec2f = TVec2<float>;
using Vec2d = TVec2<double>;
using Vec2i = TVec2<int>;
using Vec3f = TVec3<float>;
using Vec3d = TVec3<double>;
using Vec3i = TVec3<int>;

// ωi = 2(ω·n)n - ω, both unit, ω pointing away from the surface
inline Vec3f reflect(const Vec3f &w, const Vec3f &n) { return n * (2.0f * dot(w, n)) - w; }

// Column-major 3x3 matrix. cols[i] is the i-th column.
struct Mat3 {
    Vec3f c0, c1, c2;
    Mat3() : c0(1, 0, 0), c1(0, 1, 0), c2(0, 0, 1) {}
    Mat3(const Vec3f &a, const Vec3f &b, const Vec3f &c) : c0(a), c1(b), c2(c) {}

    static Mat3 identity() { return Mat3(); }
    static Mat3 diag(float a, float b, float c) {
        return Mat3({a, 0, 0}, {0, b, 0}, {0, 0, c});
    }
    static Mat3 outer(const Vec3f &a, const Vec3f &b) {
        return Mat3(a * b.x, a * b.y, a * b.z);
    }

    Vec3f col(int i) const { return i == 0 ? c0 : (i == 1 ? c1 : c2); }
    float operator()(int r, int c) const { return col(c)[r]; }
    float &operator()(int r, int c) {
        Vec3f *cols[3] = {&c0, &c1, &c2};
        return (*cols[c])[r];
    }

    Vec3f operator*(const Vec3f &v) const { return c0 * v.x + c1 * v.y + c2 * v.z; }
    Mat3 operator*(const Mat3 &m) const { return Mat3(*this * m.c0, *this * m.c1, *this * m.c2); }
    Mat3 operator*(float s) const { return Mat3(c0 * s, c1 * s, c2 * s); }
    Mat3 operator+(const Mat3 &m) const { return Mat3(c0 + m.c0, c1 + m.c1, c2 + m.c2); }

    Mat3 transposed() const {
        return Mat3({c0.x, c1.x, c2.x}, {c0.y, c1.y, c2.y}, {c0.z, c1.z, c2.z});
    }
    float det() const { return dot(c0, cross(c1, c2)); }
    Mat3 inverse() const {
        Vec3f r0 = cross(c1, c2), r1 = cross(c2, c0), r2 = cross(c0, c1);
        float inv_det = 1.0f / det();
        // rows of the inverse are the scaled cross products
        return Mat3({r0.x * inv_det, r1.x * inv_det, r2.x * inv_det},
                    {r0.y * inv_det, r1.y * inv_det, r2.y * inv_det},
                    {r0.z * inv_det, r1.z * inv_det, r2.z * inv_det});
    }
};

// quadratic form v^T M v for symmetric use
inline float quad_form(const Mat3 &m, const Vec3f &v) { return dot(v, m * v); }

struct Bounds3 {
    Vec3f lo = Vec3f(kInf);
    Vec3f hi = Vec3f(-kInf);

    Bounds3() = default;
    Bounds3(const Vec3f &lo, const Vec3f &hi) : lo(lo), hi(hi) {}

    bool valid() const { return lo.x <= hi.x && lo.y <= hi.y && lo.z <= hi.z; }
    Vec3f center() const { return (lo + hi) * 0.5f; }
    Vec3f extent() const { return hi - lo; }
    float surface_area() const {
        Vec3f e = extent();
        return 2.0f * (e.x * e.y + e.y * e.z + e.z * e.x);
    }
    void expand(const Vec3f &p) { lo = min(lo, p); hi = max(hi, p); }
    void expand(const Bounds3 &b) { lo = min(lo, b.lo); hi = max(hi, b.hi); }
    bool contains(const Vec3f &p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z &&
               p.z <= hi.z;
    }

    // slab test; returns false if [t0,t1] misses
    bool intersect(const Vec3f &o, const Vec3f &inv_d, float tmax, float *t0, float *t1) const {
        float tlo = 0.0f, thi = tmax;
        for (int a = 0; a < 3; ++a) {
            float tn = (lo[a] - o[a]) * inv_d[a];
            float tf = (hi[a] - o[a]) * inv_d[a];
            if (tn > tf) std::swap(tn, tf);
            tlo = tn > tlo ? tn : tlo;
            thi = tf < thi ? tf : thi;
            if (tlo > thi) return false;
        }
        if (t0) *t0 = tlo;
        if (t1) *t1 = thi;
        return true;
    }
};

}  // namespace vlod
