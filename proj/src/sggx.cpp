// SPDX-License-Identifier: Apache-2.0
#include "vlod/sggx.h"

#include <array>
#include <mutex>

#include "vlod/mappings.h"
#include "vlod/quadrature.h"

namespace vlod {

SggxMatrix SggxLobe::to_matrix() const {
    Mat3 r(frame.t, frame.b, frame.n);
    Mat3 d = Mat3::diag(alpha.x * alpha.x, alpha.y * alpha.y, 1.0f);
    return SggxMatrix::from_mat3(r * d * r.transposed());
}

void eigen_symmetric_3x3(const Mat3 &m, Vec3f *eigenvalues, Mat3 *eigenvectors) {
    double a[3][3] = {{m(0, 0), m(0, 1), m(0, 2)},
                      {m(1, 0), m(1, 1), m(1, 2)},
                      {m(2, 0), m(2, 1), m(2, 2)}};
    double v[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

    for (int sweep = 0; sweep < 50; ++sweep) {
        double off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        if (off < 1e-26) break;
        for (int p = 0; p < 2; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                if (std::fabs(a[p][q]) < 1e-30) continue;
                double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (int k = 0; k < 3; ++k) {
                    double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < 3; ++k) {
                    double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (int k = 0; k < 3; ++k) {
                    double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    int order[3] = {0, 1, 2};  // ascending eigenvalue order
    double lam[3] = {a[0][0], a[1][1], a[2][2]};
    for (int i = 0; i < 2; ++i)
        for (int j = i + 1; j < 3; ++j)
            if (lam[order[j]] < lam[order[i]]) std::swap(order[i], order[j]);

    for (int i = 0; i < 3; ++i) {
        int o = order[i];
        (*eigenvalues)[i] = float(lam[o]);
        Vec3f col(float(v[0][o]), float(v[1][o]), float(v[2][o]));
        // largest-magnitude component positive
        int arg = 0;
        for (int k = 1; k < 3; ++k)
            if (std::fabs(col[k]) > std::fabs(col[arg])) arg = k;
        if (col[arg] < 0) col = -col;
        (*eigenvectors)(0, i) = col.x;
        (*eigenvectors)(1, i) = col.y;
        (*eigenvectors)(2, i) = col.z;
    }
}

SggxLobe eigen_param(const SggxMatrix &s) {
    Vec3f lam;
    Mat3 vec;
    eigen_symmetric_3x3(s.to_mat3(), &lam, &vec);
    SggxLobe lobe;
    float l3 = std::max(lam[2], 0.0f);
    if (l3 <= 0.0f) return lobe;  // degenerate input: unit sphere lobe
    float s1 = safe_sqrt(std::max(lam[0], 0.0f) / l3);
    float s2 = safe_sqrt(std::max(lam[1], 0.0f) / l3);
    lobe.alpha = {clamp(s1, kAlphaMin, 1.0f), clamp(s2, kAlphaMin, 1.0f)};
    Vec3f e1 = vec.col(0), e3 = vec.col(2);
    Vec3f e2 = cross(e3, e1);  // right-handed (t, b, n) with n the major axis
    lobe.frame = Frame(e1, e2, e3);
    return lobe;
}

double ggx_norm_hemisphere(double alpha) {
    // closed form: 1 + alpha^2 * atanh(sqrt(1-alpha^2)) / sqrt(1-alpha^2);
    // equals 2 at alpha = 1, tends to 1 as alpha -> 0
    alpha = clamp(alpha, 0.0, 1.0);
    double c = 1.0 - alpha * alpha;
    if (c < 1e-8) return 2.0 - 2.0 * c / 3.0;  // series near alpha = 1
    double sc = std::sqrt(c);
    return 1.0 + alpha * alpha * std::atanh(sc) / sc;
}

double sggx_sphere_norm_exact(double ax, double ay) {
    // (1/pi) * integral over the sphere of sqrt(ax^2 x^2 + ay^2 y^2 + z^2);
    // even in every coordinate, so quadrature over one octant suffices
    static std::vector<double> tn, tw, pn, pw;
    static std::once_flag flag;
    std::call_once(flag, [] {
        gauss_legendre(24, 0.0, 1.0, &tn, &tw);
        gauss_legendre(24, 0.0, M_PI / 2.0, &pn, &pw);
    });
    double sum = 0;
    for (size_t i = 0; i < tn.size(); ++i) {
        double z = tn[i], r2 = 1.0 - z * z, zz = z * z;
        double row = 0;
        for (size_t j = 0; j < pn.size(); ++j) {
            double cx = std::cos(pn[j]), sy = std::sin(pn[j]);
            row += pw[j] * std::sqrt(ax * ax * r2 * cx * cx + ay * ay * r2 * sy * sy + zz);
        }
        sum += tw[i] * row;
    }
    return 8.0 * sum / M_PI;
}

namespace {
constexpr int kNormRes = 96;
struct NormGrid {
    std::array<float, kNormRes * kNormRes> v;
    NormGrid() {
        for (int j = 0; j < kNormRes; ++j)
            for (int i = 0; i < kNormRes; ++i) {
                double ax = double(i) / (kNormRes - 1), ay = double(j) / (kNormRes - 1);
                v[j * kNormRes + i] = float(sggx_sphere_norm_exact(ax, ay));
            }
    }
};
}  // namespace

float sggx_sphere_norm(float ax, float ay) {
    static NormGrid grid;
    float fx = clamp(ax, 0.0f, 1.0f) * (kNormRes - 1);
    float fy = clamp(ay, 0.0f, 1.0f) * (kNormRes - 1);
    int x0 = std::min(int(fx), kNormRes - 2), y0 = std::min(int(fy), kNormRes - 2);
    float tx = fx - x0, ty = fy - y0;
    const auto &v = grid.v;
    float a = v[y0 * kNormRes + x0], b = v[y0 * kNormRes + x0 + 1];
    float c = v[(y0 + 1) * kNormRes + x0], d = v[(y0 + 1) * kNormRes + x0 + 1];
    return lerp(lerp(a, b, tx), lerp(c, d, tx), ty);
}

Vec3f sggx_sample(const SggxLobe &lobe, Pcg32 &rng) {
    // proposal: push the uniform sphere through w = A u / |A u| with
    // A = diag(alpha, 1); the density ratio to the target is |A u|, which is
    // in (0, 1], so it serves directly as the acceptance probability
    for (int it = 0; it < 256; ++it) {
        Vec3f u = sample_uniform_sphere(rng.next_vec2());
        Vec3f s(lobe.alpha.x * u.x, lobe.alpha.y * u.y, u.z);
        float len = length(s);
        if (rng.next_float() < len) return lobe.frame.to_world(s / len);
    }
    return lobe.frame.n;
}

Vec3f sggx_sample_visible(const SggxLobe &lobe, const Vec3f &wi, Pcg32 &rng) {
    Frame vf = build_frame(wi);
    Mat3 s = lobe.to_matrix().to_mat3();
    const Vec3f wk = vf.t, wj = vf.b;
    float s_jj = quad_form(s, wj), s_ii = quad_form(s, wi);
    float s_kj = dot(wk, s * wj), s_ki = dot(wk, s * wi), s_ji = dot(wj, s * wi);

    float sqrt_det = std::max(lobe.alpha.x * lobe.alpha.y, 1e-12f);  // sqrt(det S)
    float inv_sqrt_sii = 1.0f / safe_sqrt(std::max(s_ii, 1e-12f));
    float tmp = safe_sqrt(std::max(s_jj * s_ii - s_ji * s_ji, 1e-16f));
    Vec3f mk(sqrt_det / tmp, 0.0f, 0.0f);
    Vec3f mj(-inv_sqrt_sii * (s_ki * s_ji - s_kj * s_ii) / tmp, inv_sqrt_sii * tmp, 0.0f);
    Vec3f mi(inv_sqrt_sii * s_ki, inv_sqrt_sii * s_ji, inv_sqrt_sii * s_ii);

    Vec2f d = square_to_disk(rng.next_vec2());
    float w = safe_sqrt(1.0f - d.x * d.x - d.y * d.y);
    Vec3f wm = normalize(mk * d.x + mj * d.y + mi * w);
    return normalize(wk * wm.x + wj * wm.y + wi * wm.z);
}

float sggx_pdf_visible(const SggxLobe &lobe, const Vec3f &wi, const Vec3f &w) {
    float c = dot(w, wi);
    if (c <= 0.0f) return 0.0f;
    float sig = std::max(lobe.sigma(wi), 1e-12f);
    return c * lobe.eval(w) / sig;
}

Vec3f NdfMixture::sample(Pcg32 &rng) const {
    float u = rng.next_float(), acc = 0;
    for (const Entry &e : lobes) {
        acc += e.weight;
        if (u < acc || &e == &lobes.back()) return sggx_sample(e.lobe, rng);
    }
    return sggx_sample(lobes.back().lobe, rng);
}

// --- NDF fit from sample normals ---

namespace {

// Heitz-style moment estimation: measure mean projected areas of the sample
// set along six fixed directions and solve for the matrix entries.
SggxMatrix fit_sggx_matrix(const std::vector<Vec3f> &normals, const std::vector<int> &idx) {
    const float inv_sqrt2 = 0.70710678f;
    const Vec3f dirs[6] = {{1, 0, 0},
                           {0, 1, 0},
                           {0, 0, 1},
                           {inv_sqrt2, inv_sqrt2, 0},
                           {inv_sqrt2, 0, inv_sqrt2},
                           {0, inv_sqrt2, inv_sqrt2}};
    double sigma2[6];
    for (int d = 0; d < 6; ++d) {
        double s = 0;
        for (int i : idx) s += std::fabs(dot(dirs[d], normals[i]));
        s /= double(idx.size());
        sigma2[d] = s * s;
    }
    SggxMatrix m;
    m.xx = float(sigma2[0]);
    m.yy = float(sigma2[1]);
    m.zz = float(sigma2[2]);
    m.xy = float(sigma2[3] - 0.5 * (sigma2[0] + sigma2[1]));
    m.xz = float(sigma2[4] - 0.5 * (sigma2[0] + sigma2[2]));
    m.yz = float(sigma2[5] - 0.5 * (sigma2[1] + sigma2[2]));
    return m;
}

// axial distance for antipodally-identified normals
inline float axial_dist(const Vec3f &n, const Vec3f &c) { return 1.0f - sqr(dot(n, c)); }

Vec3f cluster_axis(const std::vector<Vec3f> &normals, const std::vector<int> &idx) {
    Mat3 scatter({0, 0, 0}, {0, 0, 0}, {0, 0, 0});
    for (int i : idx) {
        const Vec3f &n = normals[i];
        scatter = scatter + Mat3::outer(n, n);
    }
    Vec3f lam;
    Mat3 vec;
    eigen_symmetric_3x3(scatter, &lam, &vec);
    return vec.col(2);
}

}  // namespace

NdfMixture fit_ndf(const std::vector<Vec3f> &normals, int k_max, uint64_t seed) {
    NdfMixture best;
    best.lobes.push_back({1.0f, SggxLobe{}});
    if (normals.empty()) return best;
    const int n = int(normals.size());
    k_max = clamp(k_max, 1, 4);

    double best_ll = -kInf;
    for (int k = 1; k <= std::min(k_max, n); ++k) {
        Pcg32 rng = make_rng(seed, 0x6b6d6561u, uint64_t(k));  // per-k stream
        // k-means++ style seeding under the axial metric
        std::vector<Vec3f> centers;
        centers.push_back(normals[rng.next_u32(uint32_t(n))]);
        while (int(centers.size()) < k) {
            std::vector<float> d(n);
            double total = 0;
            for (int i = 0; i < n; ++i) {
                float m = kInf;
                for (const Vec3f &c : centers) m = std::min(m, axial_dist(normals[i], c));
                d[i] = m;
                total += m;
            }
            if (total <= 1e-12) {
                centers.push_back(normals[rng.next_u32(uint32_t(n))]);
                continue;
            }
            double u = rng.next_double() * total, acc = 0;
            int pick = n - 1;
            for (int i = 0; i < n; ++i) {
                acc += d[i];
                if (u <= acc) {
                    pick = i;
                    break;
                }
            }
            centers.push_back(normals[pick]);
        }

        std::vector<int> assign(n, 0);
        for (int iter = 0; iter < 50; ++iter) {
            bool changed = false;
            for (int i = 0; i < n; ++i) {
                int arg = 0;
                float bd = kInf;
                for (int c = 0; c < int(centers.size()); ++c) {
                    float d = axial_dist(normals[i], centers[c]);
                    if (d < bd) {
                        bd = d;
                        arg = c;
                    }
                }
                if (arg != assign[i]) {
                    assign[i] = arg;
                    changed = true;
                }
            }
            if (!changed && iter > 0) break;
            for (int c = 0; c < int(centers.size()); ++c) {
                std::vector<int> idx;
                for (int i = 0; i < n; ++i)
                    if (assign[i] == c) idx.push_back(i);
                if (!idx.empty()) centers[c] = cluster_axis(normals, idx);
            }
        }

        NdfMixture mix;
        for (int c = 0; c < int(centers.size()); ++c) {
            std::vector<int> idx;
            for (int i = 0; i < n; ++i)
                if (assign[i] == c) idx.push_back(i);
            if (idx.empty()) continue;
            NdfMixture::Entry e;
            e.weight = float(idx.size()) / float(n);
            e.lobe = eigen_param(fit_sggx_matrix(normals, idx));
            mix.lobes.push_back(e);
        }
        if (mix.lobes.empty()) continue;

        double ll = 0;
        for (int i = 0; i < n; ++i) ll += std::log(std::max(mix.eval(normals[i]), 1e-18f));
        double margin = std::isfinite(best_ll) ? 1e-9 * std::fabs(best_ll) : 0.0;
        if (ll > best_ll + margin) {  // ties keep the smaller k
            best_ll = ll;
            best = mix;
        }
    }
    return best;
}

}  // namespace vlod
