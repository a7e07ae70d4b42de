// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "vlod/scene.h"

namespace vlod {

struct Ray {
    Vec3f o;
    Vec3f d;  // unit length
    float t_min = 1e-4f;
    float t_max = kInf;
};

struct Hit {
    float t = kInf;
    int tri = -1;
    float bu = 0, bv = 0;  // barycentrics of vertices 1 and 2
    Vec3f position;
    Vec3f ng;      // geometric normal (unit, faces the ray origin side)
    Frame frame;   // shading frame, n from interpolated normals
    Vec2f uv;      // interpolated texture coordinates
    int material = 0;
};

// Binned SAH BVH over the scene's triangles with a watertight triangle test.
// Degenerate (zero area) triangles are skipped at build time.
class Bvh {
  public:
    void build(const TriangleScene &scene);

    bool intersect(const Ray &ray, Hit *hit) const;
    bool occluded(const Ray &ray) const;

    int node_count() const { return int(nodes_.size()); }
    int skipped_degenerate() const { return skipped_; }

  private:
    struct Node {
        Bounds3 bounds;
        int offset = 0;  // right child for inner nodes, first prim for leaves
        uint16_t count = 0;  // 0 -> inner
        uint8_t axis = 0;
    };

    bool intersect_leaf(const Node &node, const Ray &ray, float *t_best, int *tri_best,
                        float *bu, float *bv) const;

    const TriangleScene *scene_ = nullptr;
    std::vector<Node> nodes_;
    std::vector<int> prims_;  // triangle indices, leaf-ordered
    int skipped_ = 0;
};

// Watertight ray/triangle test (Woop et al. 2013). Returns the distance and
// barycentrics of vertices 1 and 2; hits outside (t_min, t_max) fail.
bool intersect_triangle(const Vec3f &o, const Vec3f &d, float t_min, float t_max,
                        const Vec3f &p0, const Vec3f &p1, const Vec3f &p2, float *t, float *bu,
                        float *bv);

}  // namespace vlod
