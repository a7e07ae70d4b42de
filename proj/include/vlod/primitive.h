// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "vlod/rng.h"
#include "vlod/vecmath.h"

namespace vlod {

// Truncated ellipsoid bounding primitive: the intersection of a voxel box and
// an ellipsoid (x - c)^T M (x - c) <= 1 fitted around the geometry samples.
// The intersection body is never materialized; queries combine the two shapes
// on the fly.
struct TruncEllipsoid {
    Vec3f center;
    Mat3 m;      // SPD ellipsoid matrix
    Mat3 m_inv;  // cached inverse, kept consistent with m
    Bounds3 box;
};

// Approximate minimum bounding ellipsoid: PCA on the positions, scale the
// principal frame to a unit cube, wrap a Ritter bounding sphere there, and map
// the sphere back to world space. Every input ends up inside the ellipsoid
// (with 1e-4 slack); coincident inputs degenerate to a sphere of radius
// 1e-3 times the voxel size. Throws std::invalid_argument on empty input.
TruncEllipsoid fit_primitive(const std::vector<Vec3f> &positions, const Bounds3 &box);

// Parameter interval of o + t*d inside box AND ellipsoid, clipped to
// [t_min, t_max]; false when the intersection is empty.
bool intersect(const TruncEllipsoid &prim, const Vec3f &o, const Vec3f &d, float t_min,
               float t_max, float *t_enter, float *t_exit);

// Projected area of box-intersect-ellipsoid along unit w, by counting lines
// through the projected ellipse that cross both shapes (n samples). Exact
// closed forms when one shape contains the other. Symmetric in w -> -w.
float projected_area(const TruncEllipsoid &prim, const Vec3f &w, int n, Pcg32 &rng);

}  // namespace vlod
