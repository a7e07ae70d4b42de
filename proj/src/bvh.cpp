// SPDX-License-Identifier: Apache-2.0
#include "vlod/bvh.h"

#include <algorithm>
#include <cstdio>

namespace vlod {

// ------------------------------------------------- watertight triangle test

bool intersect_triangle(const Vec3f &o, const Vec3f &d, float t_min, float t_max, const Vec3f &p0,
                        const Vec3f &p1, const Vec3f &p2, float *t, float *bu, float *bv) {
    // permute so the largest direction component is z, then shear the other
    // axes so the ray points down +z (Woop et al. 2013)
    int kz = 0;
    if (std::fabs(d.y) > std::fabs(d[kz])) kz = 1;
    if (std::fabs(d.z) > std::fabs(d[kz])) kz = 2;
    int kx = (kz + 1) % 3, ky = (kz + 2) % 3;
    if (d[kz] < 0.0f) std::swap(kx, ky);
    float sx = d[kx] / d[kz], sy = d[ky] / d[kz], sz = 1.0f / d[kz];

    Vec3f a = p0 - o, b = p1 - o, c = p2 - o;
    float ax = a[kx] - sx * a[kz], ay = a[ky] - sy * a[kz];
    float bx = b[kx] - sx * b[kz], by = b[ky] - sy * b[kz];
    float cx = c[kx] - sx * c[kz], cy = c[ky] - sy * c[kz];

    float u = cx * by - cy * bx;
    float v = ax * cy - ay * cx;
    float w = bx * ay - by * ax;
    if (u == 0.0f || v == 0.0f || w == 0.0f) {
        // edge cases re-evaluated in double to stay watertight
        u = float(double(cx) * double(by) - double(cy) * double(bx));
        v = float(double(ax) * double(cy) - double(ay) * double(cx));
        w = float(double(bx) * double(ay) - double(by) * double(ax));
    }
    if ((u < 0 || v < 0 || w < 0) && (u > 0 || v > 0 || w > 0)) return false;
    float det = u + v + w;
    if (det == 0.0f) return false;

    float az = sz * a[kz], bz = sz * b[kz], cz = sz * c[kz];
    float t_scaled = u * az + v * bz + w * cz;
    // reject hits outside the range before the division, sign-aware
    if (det < 0 ? (t_scaled >= t_min * det || t_scaled < t_max * det)
                : (t_scaled <= t_min * det || t_scaled > t_max * det))
        return false;

    float inv_det = 1.0f / det;
    *t = t_scaled * inv_det;
    *bu = v * inv_det;  // barycentric of p1
    *bv = w * inv_det;  // barycentric of p2
    return true;
}

// -------------------------------------------------------------------- build

namespace {

struct PrimInfo {
    int index;
    Bounds3 bounds;
    Vec3f centroid;
};

constexpr int kNumBins = 16;
constexpr int kMaxLeaf = 4;

}  // namespace

void Bvh::build(const TriangleScene &scene) {
    scene_ = &scene;
    nodes_.clear();
    prims_.clear();
    skipped_ = 0;

    std::vector<PrimInfo> info;
    info.reserve(scene.triangles.size());
    for (int i = 0; i < int(scene.triangles.size()); ++i) {
        Vec3f p[3];
        scene.triangle_points(i, p);
        if (length(cross(p[1] - p[0], p[2] - p[0])) <= 0.0f) {
            ++skipped_;
            continue;
        }
        Bounds3 b;
        b.expand(p[0]);
        b.expand(p[1]);
        b.expand(p[2]);
        info.push_back({i, b, b.center()});
    }
    if (skipped_ > 0)
        std::fprintf(stderr, "bvh: skipped %d degenerate triangle%s\n", skipped_,
                     skipped_ == 1 ? "" : "s");
    if (info.empty()) {
        nodes_.push_back(Node{});
        return;
    }

    struct StackItem {
        int node, begin, end;
    };
    nodes_.reserve(info.size() * 2);
    nodes_.push_back(Node{});
    std::vector<StackItem> stack{{0, 0, int(info.size())}};

    while (!stack.empty()) {
        StackItem item = stack.back();
        stack.pop_back();
        Bounds3 bounds, cbounds;
        for (int i = item.begin; i < item.end; ++i) {
            bounds.expand(info[i].bounds);
            cbounds.expand(info[i].centroid);
        }
        Node &node = nodes_[item.node];
        node.bounds = bounds;
        int count = item.end - item.begin;

        Vec3f cext = cbounds.extent();
        int axis = 0;
        if (cext.y > cext[axis]) axis = 1;
        if (cext.z > cext[axis]) axis = 2;

        auto make_leaf = [&]() {
            node.offset = int(prims_.size());
            node.count = uint16_t(count);
            for (int i = item.begin; i < item.end; ++i) prims_.push_back(info[i].index);
        };
        if (count <= kMaxLeaf || cext[axis] <= 1e-12f) {
            make_leaf();
            continue;
        }

        // binned SAH over the widest centroid axis
        Bounds3 bin_bounds[kNumBins];
        int bin_count[kNumBins] = {0};
        float k0 = cbounds.lo[axis], k1 = float(kNumBins) / cext[axis];
        auto bin_of = [&](const PrimInfo &pi) {
            return std::min(int((pi.centroid[axis] - k0) * k1), kNumBins - 1);
        };
        for (int i = item.begin; i < item.end; ++i) {
            int bi = bin_of(info[i]);
            ++bin_count[bi];
            bin_bounds[bi].expand(info[i].bounds);
        }
        float right_area[kNumBins];
        Bounds3 acc;
        int acc_n = 0;
        for (int b = kNumBins - 1; b >= 1; --b) {
            acc.expand(bin_bounds[b]);
            right_area[b] = acc.valid() ? acc.surface_area() : 0.0f;
        }
        float best_cost = kInf;
        int best_split = -1;
        acc = Bounds3();
        acc_n = 0;
        for (int b = 0; b < kNumBins - 1; ++b) {
            acc.expand(bin_bounds[b]);
            acc_n += bin_count[b];
            if (acc_n == 0 || acc_n == count) continue;
            float cost = acc.surface_area() * float(acc_n) + right_area[b + 1] * float(count - acc_n);
            if (cost < best_cost) {
                best_cost = cost;
                best_split = b;
            }
        }
        float leaf_cost = bounds.surface_area() * float(count);
        if (best_split < 0 || (count <= 2 * kMaxLeaf && best_cost >= leaf_cost)) {
            make_leaf();
            continue;
        }

        auto mid_it = std::partition(info.begin() + item.begin, info.begin() + item.end,
                                     [&](const PrimInfo &pi) { return bin_of(pi) <= best_split; });
        int mid = int(mid_it - info.begin());
        if (mid == item.begin || mid == item.end) mid = (item.begin + item.end) / 2;

        int left = int(nodes_.size());
        nodes_.push_back(Node{});
        nodes_.push_back(Node{});
        node.count = 0;
        node.offset = left + 1;  // right child; left child is adjacent
        node.axis = uint8_t(axis);
        // push right first so the left span is processed next (depth-first)
        stack.push_back({left + 1, mid, item.end});
        stack.push_back({left, item.begin, mid});
    }
}

// ---------------------------------------------------------------- traversal

bool Bvh::intersect_leaf(const Node &node, const Ray &ray, float *t_best, int *tri_best, float *bu,
                         float *bv) const {
    bool found = false;
    for (int i = 0; i < node.count; ++i) {
        int tri = prims_[node.offset + i];
        Vec3f p[3];
        scene_->triangle_points(tri, p);
        float t, u, v;
        if (intersect_triangle(ray.o, ray.d, ray.t_min, *t_best, p[0], p[1], p[2], &t, &u, &v)) {
            *t_best = t;
            *tri_best = tri;
            *bu = u;
            *bv = v;
            found = true;
        }
    }
    return found;
}

bool Bvh::intersect(const Ray &ray, Hit *hit) const {
    if (nodes_.empty() || !nodes_[0].bounds.valid()) return false;
    Vec3f inv_d(1.0f / ray.d.x, 1.0f / ray.d.y, 1.0f / ray.d.z);
    float t_best = ray.t_max;
    int tri_best = -1;
    float bu = 0, bv = 0;

    int stack[64];
    int sp = 0;
    stack[sp++] = 0;
    while (sp > 0) {
        const Node &node = nodes_[stack[--sp]];
        float t0, t1;
        if (!node.bounds.intersect(ray.o, inv_d, t_best, &t0, &t1) || t1 < ray.t_min) continue;
        if (node.count > 0) {
            intersect_leaf(node, ray, &t_best, &tri_best, &bu, &bv);
        } else {
            // near child first based on the split-axis direction sign
            int left = node.offset - 1, right = node.offset;
            bool swap_order = ray.d[node.axis] < 0;
            stack[sp++] = swap_order ? left : right;
            stack[sp++] = swap_order ? right : left;
        }
    }
    if (tri_best < 0) return false;

    hit->t = t_best;
    hit->tri = tri_best;
    hit->bu = bu;
    hit->bv = bv;
    hit->position = ray.o + ray.d * t_best;
    Vec3f p[3];
    scene_->triangle_points(tri_best, p);
    Vec3f ng = normalize(cross(p[1] - p[0], p[2] - p[0]));
    if (dot(ng, ray.d) > 0) ng = -ng;
    hit->ng = ng;
    hit->frame = build_frame(scene_->shading_normal(tri_best, bu, bv));
    hit->uv = scene_->uv_at(tri_best, bu, bv);
    hit->material = scene_->triangles[tri_best].material;
    return true;
}

bool Bvh::occluded(const Ray &ray) const {
    if (nodes_.empty() || !nodes_[0].bounds.valid()) return false;
    Vec3f inv_d(1.0f / ray.d.x, 1.0f / ray.d.y, 1.0f / ray.d.z);
    int stack[64];
    int sp = 0;
    stack[sp++] = 0;
    while (sp > 0) {
        const Node &node = nodes_[stack[--sp]];
        float t0, t1;
        if (!node.bounds.intersect(ray.o, inv_d, ray.t_max, &t0, &t1) || t1 < ray.t_min) continue;
        if (node.count > 0) {
            for (int i = 0; i < node.count; ++i) {
                int tri = prims_[node.offset + i];
                Vec3f p[3];
                scene_->triangle_points(tri, p);
                float t, u, v;
                if (intersect_triangle(ray.o, ray.d, ray.t_min, ray.t_max, p[0], p[1], p[2], &t, &u,
                                       &v))
                    return true;
            }
        } else {
            stack[sp++] = node.offset;
            stack[sp++] = node.offset - 1;
        }
    }
    return false;
}

}  // namespace vlod
