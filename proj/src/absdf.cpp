// SPDX-License-Identifier: Apache-2.0
#include "vlod/absdf.h"

#include <cassert>
#include <cmath>
#include <stdexcept>

#include "vlod/disney.h"
#include "vlod/frame.h"
#include "vlod/mappings.h"
#include "vlod/quadrature.h"
#include "vlod/sg.h"

namespace vlod {

namespace {

// sharpness of the spherical gaussian that stands in for the clamped cosine;
// used both for the diffuse directional-moment kernel and for widening the
// normal lobes when sampling the diffuse component
float diffuse_kernel_kappa() {
    static const float kappa = fit_clamped_cosine_sg().kappa;
    return kappa;
}

// Second moment of the normalized lobe density in the lobe frame. With
// A = diag(ax, ay, 1) the density is the pushforward of the uniform sphere
// through y -> Ay/|Ay| with weight |Ay|, so the diagonal entries reduce to
//   q_k = int (a_k y_k)^2 / |Ay| dy  /  int |Ay| dy
// over the unit sphere in y. The integrand peaks near the equator at scale
// min(alpha), hence the graded panels in z.
Vec3f sggx_second_moment_diag(const Vec2f &alpha) {
    struct Nodes {
        std::vector<double> z, wz, phi, wphi;
    };
    static const Nodes nodes = [] {
        Nodes n;
        const double panels[] = {0.0, 1e-3, 1e-2, 1e-1, 1.0};
        for (int p = 0; p + 1 < 5; ++p) {
            std::vector<double> x, w;
            gauss_legendre(16, panels[p], panels[p + 1], &x, &w);
            n.z.insert(n.z.end(), x.begin(), x.end());
            n.wz.insert(n.wz.end(), w.begin(), w.end());
        }
        gauss_legendre(16, 0.0, 0.5 * kPi, &n.phi, &n.wphi);
        return n;
    }();

    const double ax = alpha.x, ay = alpha.y;
    double num[3] = {0, 0, 0}, den = 0;
    for (size_t iz = 0; iz < nodes.z.size(); ++iz) {
        const double z = nodes.z[iz];
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        for (size_t ip = 0; ip < nodes.phi.size(); ++ip) {
            const double sx = ax * r * std::cos(nodes.phi[ip]);
            const double sy = ay * r * std::sin(nodes.phi[ip]);
            const double len = std::sqrt(sx * sx + sy * sy + z * z);
            const double w = nodes.wz[iz] * nodes.wphi[ip];
            den += w * len;
            num[0] += w * sx * sx / len;
            num[1] += w * sy * sy / len;
            num[2] += w * z * z / len;
        }
    }
    return Vec3f(float(num[0] / den), float(num[1] / den), float(num[2] / den));
}

// Mass of the uniform sphere density falling where the signs of n.wi and
// n.wo disagree, weighted by the (positive) magnitude of their product:
//   int over that lune of |n.wi| |n.wo| / (4 pi) dn = (sin p - p cos p) / (3 pi)
// with p the angle between wi and wo. Zero at p = 0, 1/3 at p = pi.
float cross_lune_mass(float cos_psi) {
    float psi = safe_acos(cos_psi);
    return (std::sin(psi) - psi * cos_psi) / (3.0f * kPi);
}

// Integral of the clamped cosine <v.z> over a spherical polygon (the classic
// point-to-polygon form factor), positive for counterclockwise winding seen
// from +z. Vertices must be unit length.
double polygon_cosine_integral(const Vec3f *v, int n) {
    double sum = 0;
    for (int k = 0; k < n; ++k) {
        const Vec3f &a = v[k];
        const Vec3f &b = v[(k + 1) % n];
        Vec3f cr = cross(a, b);
        float len = length(cr);
        if (len < 1e-9f) continue;
        sum += std::atan2(double(len), double(dot(a, b))) * double(cr.z) / double(len);
    }
    return sum / (2.0 * kPi);
}

// product of the two clamped cosines against the normalized lobe density:
//   int <n.wi> <n.wo> D(n) dn,
// computed in closed form from the lobe's second moment. The unclamped
// product is a quadratic form, exact for narrow lobes; the clamping error of
// wide lobes is restored by the uniform-density term scaled with nu, the
// lobe's residual isotropy. Exact in both the narrow and uniform limits.
float lobe_cosine_product(const Mat3 &q, float nu, const Vec3f &wi, const Vec3f &wo) {
    Vec3f s = wi + wo, d = wi - wo;
    float cos_psi = clamp(dot(wi, wo), -1.0f, 1.0f);
    float k = 0.25f * (quad_form(q, s) - quad_form(q, d)) + nu * cross_lune_mass(cos_psi);
    // the antipodally symmetric density splits its mass across both sides, so
    // only half of it faces any given direction pair
    return 0.5f * std::max(k, 0.0f);
}

int grid_cell(const Vec3f &w) {
    Vec2f uv = sphere_to_square(w);
    int ix = clamp(int(uv.x * DirectionalMomentGrid::kRes), 0, DirectionalMomentGrid::kRes - 1);
    int iy = clamp(int(uv.y * DirectionalMomentGrid::kRes), 0, DirectionalMomentGrid::kRes - 1);
    return iy * DirectionalMomentGrid::kRes + ix;
}

Vec3f cell_direction(int cell) {
    const float inv = 1.0f / DirectionalMomentGrid::kRes;
    int iy = cell / DirectionalMomentGrid::kRes, ix = cell % DirectionalMomentGrid::kRes;
    return square_to_sphere({(ix + 0.5f) * inv, (iy + 0.5f) * inv});
}

float pow5(float x) { return sqr(sqr(x)) * x; }

}  // namespace

void DirectionalMomentGrid::splat(const Vec3f &n, const MaterialSample &mat, float weight) {
    const float kappa = diffuse_kernel_kappa();
    for (int c = 0; c < kRes * kRes; ++c) {
        Vec3f wc = cell_direction(c);
        float d = dot(n, wc);
        // one-sided kernels so the two faces of a sheet stay separable: a
        // microfacet density at the sample's own roughness for the specular
        // family, a spherical gaussian for the diffuse one (its far-side
        // bleed of exp(-2 kappa) is ~1% and keeps the estimate smooth)
        float ks = d > 0 ? ggx_d_iso(std::max(mat.alpha, kAlphaMin), d) * weight : 0.0f;
        float kd = std::exp(kappa * (d - 1.0f)) * weight;
        if (ks > 0) {
            Cell &s = spec[c];
            s.bc = s.bc + mat.basecolor * ks;
            s.m_bc = s.m_bc + mat.basecolor * (mat.metallic * ks);
            s.sp += mat.specular * ks;
            s.m_sp += mat.metallic * mat.specular * ks;
            s.mass += ks;
        }
        Cell &f = diff[c];
        f.bc = f.bc + mat.basecolor * kd;
        f.m_bc = f.m_bc + mat.basecolor * (mat.metallic * kd);
        f.sp += mat.specular * kd;
        f.m_sp += mat.metallic * mat.specular * kd;
        f.mass += kd;
    }
}

ColorMoments query_dir_moments(const DirectionalMomentGrid &grid, const Vec3f &wh,
                               MomentKernel kernel, const MomentSet &global) {
    const DirectionalMomentGrid::Cell &c =
        (kernel == MomentKernel::specular ? grid.spec : grid.diff)[grid_cell(wh)];
    ColorMoments m;
    if (c.mass <= 1e-12f) {
        m.e_bc = global.e_bc;
        m.e_m_bc = global.e_m_bc;
        m.e_sp = global.e_sp;
        m.e_m_sp = global.e_m_sp;
        return m;
    }
    float inv = 1.0f / c.mass;
    m.e_bc = c.bc * inv;
    m.e_m_bc = c.m_bc * inv;
    m.e_sp = c.sp * inv;
    m.e_m_sp = c.m_sp * inv;
    return m;
}

void absdf_prepare(FactoredAbsdf *f, const PrecompTables &tables) {
    float m1 = 1, a1 = 0.5f, a2 = 0.5f;
    query_beta_lobes(tables, f->beta, &m1, &a1, &a2);
    f->mix_w = {m1, 1.0f - m1};
    f->mix_alpha = {a1, a2};
    f->mix_norm = {query_ggx_norm(tables, a1), query_ggx_norm(tables, a2)};

    const float kappa = diffuse_kernel_kappa();
    f->derived.clear();
    f->derived.reserve(f->ndf.lobes.size());
    for (const NdfMixture::Entry &e : f->ndf.lobes) {
        FactoredAbsdf::LobeDerived d;
        d.alpha_diff = query_sg_conv(tables, e.lobe.alpha, kappa);
        d.alpha_spec = {query_ggx_conv(tables, e.lobe.alpha, a1),
                        query_ggx_conv(tables, e.lobe.alpha, a2)};
        Vec3f ql = sggx_second_moment_diag(e.lobe.alpha);
        Mat3 basis(e.lobe.frame.t, e.lobe.frame.b, e.lobe.frame.n);
        d.q = basis * Mat3::diag(ql.x, ql.y, ql.z) * basis.transposed();
        d.nu = saturate(27.0f * ql.x * ql.y * ql.z);
        f->derived.push_back(d);
    }
    f->prepared = true;
}

float shape_term(const Vec3f &wi, const Vec3f &wo, float alpha, const PrecompTables &tables) {
    Vec3f s = wi + wo;
    float slen = length(s);
    if (slen < 1e-4f) return 0.0f;  // opposing directions: no normal reflects one to the other
    Vec3f cr = cross(wi, wo);
    float crlen = length(cr);
    float c = dot(wi, wo);
    if (crlen < 1e-6f) return c > 0 ? 1.0f : 0.0f;  // parallel: full lune or its complement

    // the region where a normal faces both directions is the lune bounded by
    // the planes orthogonal to wi and wo; its four corners are the rotation
    // axis and the in-plane tangents, ordered counterclockwise around the
    // half vector (which the lune always contains)
    Vec3f u = cr / crlen;
    Vec3f pi_t = normalize(wo - wi * c);
    Vec3f po_t = normalize(wi - wo * c);
    Vec3f corners[4] = {u, po_t, -u, pi_t};

    // measure the roughness lobe's mass inside the lune with its cosine-space
    // proxy: map the corners into the half-vector frame, apply the inverse
    // fit transform, and take the polygon's form factor. Every corner stays
    // on or above the half-vector horizon, so no clipping is needed.
    Frame hf = build_frame(s / slen);
    Vec3f inv_diag = query_ltc_inv_diag(tables, alpha);
    Vec3f v[4];
    for (int k = 0; k < 4; ++k) {
        Vec3f l = hf.to_local(corners[k]);
        v[k] = normalize(Vec3f(l.x * inv_diag.x, l.y * inv_diag.y, l.z));
    }
    return saturate(float(polygon_cosine_integral(v, 4)));
}

Vec3f eval_unnormalized(const FactoredAbsdf &f, const Vec3f &wi, const Vec3f &wo,
                        const PrecompTables &tables) {
    assert(f.prepared && f.derived.size() == f.ndf.lobes.size());
    Vec3f s = wi + wo;
    float slen = length(s);
    bool degenerate = slen < 1e-4f;
    Vec3f wh = degenerate ? Vec3f(0, 0, 1) : s / slen;

    // diffuse: closed-form clamped-cosine product per normal lobe
    float j_total = 0;
    for (size_t i = 0; i < f.derived.size(); ++i)
        j_total += f.ndf.lobes[i].weight *
                   lobe_cosine_product(f.derived[i].q, f.derived[i].nu, wi, wo);
    ColorMoments dm;
    if (degenerate) {  // no half vector to resolve against: use the global moments
        dm.e_bc = f.moments.e_bc;
        dm.e_m_bc = f.moments.e_m_bc;
    } else {
        dm = query_dir_moments(f.dir_moments, wh, MomentKernel::diffuse, f.moments);
    }
    Vec3f diff_albedo(std::max(dm.e_bc.x - dm.e_m_bc.x, 0.0f),
                      std::max(dm.e_bc.y - dm.e_m_bc.y, 0.0f),
                      std::max(dm.e_bc.z - dm.e_m_bc.z, 0.0f));
    Vec3f out = diff_albedo * (j_total * kInvPi);
    if (degenerate) return out * f.area;  // the half vector (and any specular) vanishes

    // specular: per (normal lobe, roughness lobe) pair, the convolved lobe
    // density at the half vector, masked and restricted to the reflecting lune
    float cos_hd = 0.5f * slen;  // dot(wh, wo) = dot(wh, wi)
    float fc = pow5(1.0f - cos_hd);
    double shape = 0;
    for (int j = 0; j < 2; ++j) {
        if (f.mix_w[j] < 1e-6f) continue;
        float sj = shape_term(wi, wo, f.mix_alpha[j], tables);
        if (sj <= 0) continue;
        float scale = f.mix_w[j] * f.mix_norm[j] * sj;
        for (size_t i = 0; i < f.derived.size(); ++i) {
            const Frame &fr = f.ndf.lobes[i].lobe.frame;
            SggxLobe conv{fr, f.derived[i].alpha_spec[j]};
            float dh = sggx_eval_normalized(conv, wh);
            float g = smith_g2_aniso(conv.alpha, fr.to_local(wi), fr.to_local(wo));
            shape += double(f.ndf.lobes[i].weight) * scale * dh * g;
        }
    }
    if (shape > 0) {
        ColorMoments sm = query_dir_moments(f.dir_moments, wh, MomentKernel::specular, f.moments);
        float dielec = std::max(sm.e_sp - sm.e_m_sp, 0.0f);
        Vec3f r0(std::max(sm.e_m_bc.x, 0.0f) + dielec, std::max(sm.e_m_bc.y, 0.0f) + dielec,
                 std::max(sm.e_m_bc.z, 0.0f) + dielec);
        Vec3f fres = r0 * (1.0f - fc) + Vec3f(fc);
        out = out + fres * float(0.25 * shape);
    }
    return out * f.area;
}

float absdf_pdf(const FactoredAbsdf &f, const Vec3f &wi, const Vec3f &wo,
                const PrecompTables &tables) {
    (void)tables;
    assert(f.prepared && f.derived.size() == f.ndf.lobes.size());
    Vec3f s = wi + wo;
    float slen = length(s);
    if (slen < 1e-6f) return 0.0f;
    Vec3f wh = s / slen;

    // mixture density over half vectors; both strategies draw a lobe
    // direction and reflect, so the antipodal fold doubles the density and
    // the reflection jacobian is 1/(4 dot(wh, wo)) with dot(wh, wo) = slen/2,
    // leaving pdf(wi) = D(wh) / slen
    double dsum = 0;
    for (size_t i = 0; i < f.derived.size(); ++i) {
        const Frame &fr = f.ndf.lobes[i].lobe.frame;
        double w = 0.5 * double(f.ndf.lobes[i].weight);
        dsum += w * sggx_eval_normalized(SggxLobe{fr, f.derived[i].alpha_diff}, wh);
        for (int j = 0; j < 2; ++j)
            dsum += w * double(f.mix_w[j]) *
                    sggx_eval_normalized(SggxLobe{fr, f.derived[i].alpha_spec[j]}, wh);
    }
    float pdf = float(dsum / slen);
    return std::isfinite(pdf) ? pdf : 0.0f;
}

AbsdfSample absdf_sample(const FactoredAbsdf &f, const Vec3f &wo, Pcg32 &rng,
                         const PrecompTables &tables) {
    assert(f.prepared && !f.derived.empty());
    AbsdfSample out;
    for (int attempt = 0; attempt < 8; ++attempt) {
        // pick a component (diffuse or specular), then a lobe within it
        bool specular = rng.next_float() < 0.5f;
        float u = rng.next_float();
        size_t pick = f.derived.size() - 1;
        int pick_j = specular ? 1 : 0;
        float acc = 0;
        bool found = false;
        for (size_t i = 0; i < f.derived.size() && !found; ++i) {
            for (int j = 0; j < (specular ? 2 : 1) && !found; ++j) {
                acc += f.ndf.lobes[i].weight * (specular ? f.mix_w[j] : 1.0f);
                if (u < acc) {
                    pick = i;
                    pick_j = j;
                    found = true;
                }
            }
        }
        const Frame &fr = f.ndf.lobes[pick].lobe.frame;
        Vec2f alpha = specular ? f.derived[pick].alpha_spec[pick_j] : f.derived[pick].alpha_diff;
        Vec3f wh = sggx_sample(SggxLobe{fr, alpha}, rng);
        float c = dot(wh, wo);
        if (std::fabs(c) < 1e-6f) continue;  // grazing half vector, retry
        Vec3f wi = wh * (2.0f * c) - wo;
        float pdf = absdf_pdf(f, wi, wo, tables);
        if (!(pdf > 0)) continue;
        out.wi = wi;
        out.pdf = pdf;
        out.value = eval_unnormalized(f, wi, wo, tables);
        return out;
    }
    return out;  // zero-value failure sample
}

double projected_sample_area(const SurfaceSampleSet &set, const Vec3f &w) {
    double proj = 0;
    for (const SurfaceSample &it : set.items) proj += double(it.area) * std::max(dot(it.n, w), 0.0f);
    return proj;
}

Vec3f brute_force_absdf(const SurfaceSampleSet &set, const Vec3f &wi, const Vec3f &wo,
                        bool with_visibility, double *proj_area_o) {
    double acc[3] = {0, 0, 0};
    double proj = 0;
    for (size_t idx = 0; idx < set.items.size(); ++idx) {
        const SurfaceSample &it = set.items[idx];
        float ci = dot(it.n, wi), co = dot(it.n, wo);
        proj += double(it.area) * std::max(co, 0.0f);
        if (ci <= 0 || co <= 0) continue;  // samples are one-sided
        double w = double(it.area) * ci * co;
        if (with_visibility && set.visibility)
            w *= double(set.visibility(idx, wi)) * double(set.visibility(idx, wo));
        if (w <= 0) continue;
        Frame fr = build_frame(it.n);
        Vec3f fval = disney_eval(it.mat, fr.to_local(wi), fr.to_local(wo));
        acc[0] += w * fval.x;
        acc[1] += w * fval.y;
        acc[2] += w * fval.z;
    }
    if (proj_area_o) *proj_area_o = proj;
    return Vec3f(float(acc[0]), float(acc[1]), float(acc[2]));
}

FactoredAbsdf build_absdf(const SurfaceSampleSet &set, const PrecompTables &tables, int k_max,
                          uint64_t seed) {
    if (set.items.empty()) throw std::invalid_argument("build_absdf: empty sample set");
    FactoredAbsdf f;
    double area = 0;
    double bc[3] = {0, 0, 0}, m_bc[3] = {0, 0, 0};
    double sp = 0, m_sp = 0, al = 0, al2 = 0;
    std::vector<Vec3f> normals;
    normals.reserve(set.items.size());
    for (const SurfaceSample &it : set.items) {
        double a = it.area;
        area += a;
        for (int k = 0; k < 3; ++k) {
            bc[k] += a * it.mat.basecolor[k];
            m_bc[k] += a * it.mat.metallic * it.mat.basecolor[k];
        }
        sp += a * it.mat.specular;
        m_sp += a * it.mat.metallic * it.mat.specular;
        al += a * it.mat.alpha;
        al2 += a * it.mat.alpha * it.mat.alpha;
        normals.push_back(it.n);
        f.dir_moments.splat(it.n, it.mat, it.area);
    }
    if (area <= 0) throw std::invalid_argument("build_absdf: zero total area");
    double inv = 1.0 / area;
    f.moments.e_bc = Vec3f(float(bc[0] * inv), float(bc[1] * inv), float(bc[2] * inv));
    f.moments.e_m_bc = Vec3f(float(m_bc[0] * inv), float(m_bc[1] * inv), float(m_bc[2] * inv));
    f.moments.e_sp = float(sp * inv);
    f.moments.e_m_sp = float(m_sp * inv);
    f.moments.e_alpha = float(al * inv);
    f.moments.e_alpha2 = float(al2 * inv);
    f.area = float(area);
    float var = std::max(f.moments.e_alpha2 - sqr(f.moments.e_alpha), 0.0f);
    f.beta = beta_from_moments(f.moments.e_alpha, var);
    f.ndf = fit_ndf(normals, k_max, seed);
    absdf_prepare(&f, tables);
    return f;
}

}  // namespace vlod
