// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vlod/bvh.h"
#include "vlod/image.h"
#include "vlod/rng.h"
#include "vlod/scene.h"

namespace vlod {

// Direct illumination at a hit point: next-event estimation over the lights
// plus a BRDF sample toward the environment, combined with the balance
// heuristic. Delta lights (directional, point) are sampled exactly.
Vec3f shade_direct(const TriangleScene &scene, const Bvh &bvh, const Hit &hit, const Vec3f &wo,
                   Pcg32 &rng);

// Path-traced reference under direct illumination: pinhole camera, box pixel
// filter, one light + one BRDF sample per camera ray. Deterministic for a
// given seed regardless of thread count.
ImageBuffer render_reference(const TriangleScene &scene, const Bvh &bvh, int spp,
                             uint64_t seed = 1);

}  // namespace vlod
