// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "vlod/scene.h"
#include "vlod/sggx.h"
#include "vlod/tables.h"

namespace vlod {

// Area-weighted material moments over the surface samples of a voxel.
// basecolor-valued moments are spectral, the rest are scalars.
struct MomentSet {
    Vec3f e_bc{0.5f, 0.5f, 0.5f};  // E[basecolor]
    Vec3f e_m_bc{0, 0, 0};         // E[metallic * basecolor]
    float e_sp = 0.5f;             // E[specular]
    float e_m_sp = 0;              // E[metallic * specular]
    float e_alpha = 0.5f;          // E[alpha]
    float e_alpha2 = 0.25f;        // E[alpha^2]
};

// The orientation-dependent slice of the moments (the color-like quantities
// that multiply the Fresnel and diffuse terms; roughness stays global).
struct ColorMoments {
    Vec3f e_bc{0, 0, 0};
    Vec3f e_m_bc{0, 0, 0};
    float e_sp = 0;
    float e_m_sp = 0;
};

enum class MomentKernel { specular, diffuse };

// Color moments resolved over normal orientation: a 3x3 grid of cells over
// the equal-area octahedral square (full sphere), one grid per kernel family.
// Each surface sample splats into every cell, weighted by a directional
// kernel centered on the cell direction: a single-sided isotropic microfacet
// density (using the sample's own roughness) for the specular family and a
// single-sided spherical gaussian for the diffuse family. Cells keep raw
// weighted sums plus the accumulated kernel mass; queries normalize on the
// fly and fall back to the global moments when a cell is empty. Keeping the
// kernels single-sided is what lets a two-sided sheet with different
// materials on each face resolve per side.
struct DirectionalMomentGrid {
    static constexpr int kRes = 3;

    struct Cell {
        Vec3f bc{0, 0, 0};
        Vec3f m_bc{0, 0, 0};
        float sp = 0;
        float m_sp = 0;
        float mass = 0;
    };

    std::array<Cell, kRes * kRes> spec{};
    std::array<Cell, kRes * kRes> diff{};

    // accumulate one surface sample with the given area weight
    void splat(const Vec3f &n, const MaterialSample &mat, float weight);
};

// moments at the cell containing wh, or `global` when the cell has no mass
ColorMoments query_dir_moments(const DirectionalMomentGrid &grid, const Vec3f &wh,
                               MomentKernel kernel, const MomentSet &global);

// Factored aggregate BSDF of one voxel: an SGGX normal mixture, a beta
// distribution of roughness, global and orientation-resolved material
// moments, and the total sample area. eval/sample/pdf require the derived
// caches, which absdf_prepare() fills from the precomputed tables.
struct FactoredAbsdf {
    NdfMixture ndf;
    BetaParams beta{10, 10};
    MomentSet moments;
    DirectionalMomentGrid dir_moments;
    float area = 0;

    // derived, per normal lobe (absdf_prepare)
    struct LobeDerived {
        Mat3 q = Mat3::identity();  // world-space second moment of the lobe density
        float nu = 1;               // residual isotropy in [0,1]; scales the wide-lobe tail
        Vec2f alpha_diff{1, 1};     // roughness after the fixed-sharpness cosine convolution
        std::array<Vec2f, 2> alpha_spec{};  // after convolving with each roughness lobe
    };
    std::vector<LobeDerived> derived;
    std::array<float, 2> mix_w{1, 0};          // roughness two-lobe mixture weights
    std::array<float, 2> mix_alpha{0.5f, 0.5f};
    std::array<float, 2> mix_norm{1, 1};       // hemisphere GGX mass per roughness lobe
    bool prepared = false;
};

// fill the derived caches (roughness mixture, convolved lobe roughnesses,
// per-lobe second-moment matrices)
void absdf_prepare(FactoredAbsdf *f, const PrecompTables &tables);

// Fraction of the unit-mass normal density with roughness alpha that falls
// inside the region where a normal reflects wo toward wi (front side of both
// directions, taken over both sides of the two-sided domain). Symmetric in
// (wi, wo), in [0,1], 1 when wi == wo and 0 when wi == -wo.
float shape_term(const Vec3f &wi, const Vec3f &wo, float alpha, const PrecompTables &tables);

// Aggregate BSDF value times the total projected area along wo; divide by
// projected_sample_area(set, wo) (or area * ndf.mean_projected_area(wo)) for
// the normalized form. Symmetric in (wi, wo) by construction.
Vec3f eval_unnormalized(const FactoredAbsdf &f, const Vec3f &wi, const Vec3f &wo,
                        const PrecompTables &tables);

struct AbsdfSample {
    Vec3f wi{0, 0, 1};
    float pdf = 0;          // solid-angle density of wi
    Vec3f value{0, 0, 0};   // eval_unnormalized at (wi, wo); zero on failure
};

// importance-sample an incident direction for the given outgoing direction
AbsdfSample absdf_sample(const FactoredAbsdf &f, const Vec3f &wo, Pcg32 &rng,
                         const PrecompTables &tables);

// solid-angle density matching absdf_sample
float absdf_pdf(const FactoredAbsdf &f, const Vec3f &wi, const Vec3f &wo,
                const PrecompTables &tables);

// One-sided surface sample: a point with an outward normal, the material
// there, and the sample's area share. A two-sided sheet contributes two
// items per point (one per face), so the set's total area counts both faces.
struct SurfaceSample {
    Vec3f p{0, 0, 0};
    Vec3f n{0, 0, 1};
    MaterialSample mat;
    float area = 0;
};

struct SurfaceSampleSet {
    std::vector<SurfaceSample> items;
    // optional visibility oracle: fraction of unblocked transport from
    // items[index] along the (world) direction; 1 everywhere when absent
    std::function<float(size_t index, const Vec3f &dir)> visibility;
};

// total projected area of the set along w: sum of area * max(dot(n, w), 0)
double projected_sample_area(const SurfaceSampleSet &set, const Vec3f &w);

// Ground-truth aggregate: sum over the sample set of
//   f(wi, wo) <n.wi> <n.wo> V(wi) V(wo) * area,
// the reference that eval_unnormalized approximates. Visibility factors are
// applied only when with_visibility is set and the set provides an oracle.
// When proj_area_o is non-null it receives projected_sample_area(set, wo);
// a zero projected area means the normalized form is undefined there.
Vec3f brute_force_absdf(const SurfaceSampleSet &set, const Vec3f &wi, const Vec3f &wo,
                        bool with_visibility = false, double *proj_area_o = nullptr);

// Fit the factored model to a sample set: area-weighted moments, a beta fit
// of the roughness spread, an SGGX mixture fit of at most k_max lobes over
// the item normals (items should carry comparable areas, since the normal
// fit weighs them equally), and the directional moment grids. The result is
// prepared against the given tables.
FactoredAbsdf build_absdf(const SurfaceSampleSet &set, const PrecompTables &tables,
                          int k_max = 4, uint64_t seed = 1);

}  // namespace vlod
