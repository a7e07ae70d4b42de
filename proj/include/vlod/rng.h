// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "vlod/vecmath.h"

namespace vlod {

// splitmix64; used to derive independent stream ids from (seed, tag, index...)
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline uint64_t hash_combine(uint64_t a, uint64_t b) { return mix64(a ^ mix64(b)); }

inline uint64_t hash_combine(uint64_t a, uint64_t b, uint64_t c) {
    return hash_combine(hash_combine(a, b), c);
}

inline uint64_t hash_combine(uint64_t a, uint64_t b, uint64_t c, uint64_t d) {
    return hash_combine(hash_combine(a, b, c), d);
}

// PCG32 (O'Neill); deterministic across platforms, unlike std distributions
struct Pcg32 {
    uint64_t state = 0x853c49e6748fea9bull;
    uint64_t inc = 0xda3e39cb94b95bdbull;

    Pcg32() = default;
    explicit Pcg32(uint64_t seed, uint64_t stream = 1) { reseed(seed, stream); }

    void reseed(uint64_t seed, uint64_t stream = 1) {
        state = 0;
        inc = (stream << 1u) | 1u;
        next_u32();
        state += seed;
        next_u32();
    }

    uint32_t next_u32() {
        uint64_t old = state;
        state = old * 6364136223846793005ull + inc;
        uint32_t xorshifted = uint32_t(((old >> 18u) ^ old) >> 27u);
        uint32_t rot = uint32_t(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((~rot + 1u) & 31));
    }

    uint32_t next_u32(uint32_t bound) {  // unbiased bounded
        uint32_t threshold = (~bound + 1u) % bound;
        for (;;) {
            uint32_t r = next_u32();
            if (r >= threshold) return r % bound;
        }
    }

    // uniform in [0,1)
    float next_float() { return std::min(float(next_u32()) * 0x1p-32f, 0x1.fffffep-1f); }
    double next_double() {
        uint64_t u = (uint64_t(next_u32()) << 32) | next_u32();
        return std::min(double(u) * 0x1p-64, 0x1.fffffffffffffp-1);
    }
    Vec2f next_vec2() {
        float a = next_float();
        float b = next_float();
        return {a, b};
    }
};

inline Pcg32 make_rng(uint64_t seed, uint64_t tag, uint64_t a = 0, uint64_t b = 0) {
    return Pcg32(hash_combine(seed, tag, a, b), hash_combine(tag, a, b) | 1u);
}

// radical inverse in base b (van der Corput); bases 2/3 give a 2D Halton set
inline double radical_inverse(uint32_t i, uint32_t base) {
    if (base == 2) {
        uint32_t v = i;
        v = (v << 16) | (v >> 16);
        v = ((v & 0x00ff00ff) << 8) | ((v & 0xff00ff00) >> 8);
        v = ((v & 0x0f0f0f0f) << 4) | ((v & 0xf0f0f0f0) >> 4);
        v = ((v & 0x33333333) << 2) | ((v & 0xcccccccc) >> 2);
        v = ((v & 0x55555555) << 1) | ((v & 0xaaaaaaaa) >> 1);
        return std::min(double(v) * 0x1p-32, 0x1.fffffffffffffp-1);
    }
    double inv_base = 1.0 / base, f = inv_base, r = 0.0;
    while (i > 0) {
        r += f * (i % base);
        i /= base;
        f *= inv_base;
    }
    return std::min(r, 0x1.fffffffffffffp-1);
}

// Cranley-Patterson rotation turns one LD sequence into decorrelated streams
inline Vec2f ld_point(uint32_t i, const Vec2f &shift) {
    float u = float(radical_inverse(i, 2)) + shift.x;
    float v = float(radical_inverse(i, 3)) + shift.y;
    if (u >= 1.0f) u -= 1.0f;
    if (v >= 1.0f) v -= 1.0f;
    return {u, v};
}

}  // namespace vlod
