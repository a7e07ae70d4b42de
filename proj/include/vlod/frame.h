// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vlod/vecmath.h"

namespace vlod {

// Right-handed orthonormal basis around n (branchless construction after
// Duff et al. 2017). cross(t, b) == n up to float rounding.
struct Frame {
    Vec3f t{1, 0, 0}, b{0, 1, 0}, n{0, 0, 1};

    Frame() = default;
    Frame(const Vec3f &t, const Vec3f &b, const Vec3f &n) : t(t), b(b), n(n) {}

    Vec3f to_local(const Vec3f &v) const { return {dot(v, t), dot(v, b), dot(v, n)}; }
    Vec3f to_world(const Vec3f &v) const { return t * v.x + b * v.y + n * v.z; }
};

inline Frame build_frame(const Vec3f &n) {
    float s = std::copysign(1.0f, n.z);
    float a = -1.0f / (s + n.z);
    float b = n.x * n.y * a;
    Vec3f t(1.0f + s * n.x * n.x * a, s * b, -s * n.x);
    Vec3f bt(b, s + n.y * n.y * a, -n.y);
    return Frame(t, bt, n);
}

}  // namespace vlod
