// SPDX-License-Identifier: Apache-2.0
#include "vlod/tables.h"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cstring>
#include <functional>

#include "vlod/parallel.h"
#include "vlod/quadrature.h"
#include "vlod/serialization.h"
#include "vlod/sg.h"

namespace vlod {

// ---------------------------------------------------------------- grid query

void TableGrid::query(const float *x, float *out) const {
    int i0[3] = {0, 0, 0};
    float t[3] = {0, 0, 0};
    for (int d = 0; d < ndim; ++d) {
        const TableAxis &ax = axes[d];
        if (ax.n == 1) continue;
        float c = ax.coord(x[d]);
        i0[d] = std::min(int(c), ax.n - 2);
        t[d] = c - float(i0[d]);
    }
    for (int c = 0; c < channels; ++c) out[c] = 0;
    int corners = 1 << ndim;
    for (int m = 0; m < corners; ++m) {
        float w = 1;
        int idx[3] = {0, 0, 0};
        for (int d = 0; d < ndim; ++d) {
            int hi = (m >> d) & 1;
            idx[d] = i0[d] + hi;
            if (idx[d] >= axes[d].n) idx[d] = axes[d].n - 1;
            w *= hi ? t[d] : 1.0f - t[d];
        }
        if (w == 0.0f) continue;
        const float *p = node_ptr(idx[0], ndim > 1 ? idx[1] : 0, ndim > 2 ? idx[2] : 0);
        for (int c = 0; c < channels; ++c) out[c] += w * p[c];
    }
}

// ----------------------------------------------------------------- beta

BetaParams beta_from_moments(float mean, float variance) {
    double mu = clamp(double(mean), 1e-4, 1.0 - 1e-4);
    double var = std::max(double(variance), 1e-10);
    // cap variance below the theoretical bound mu*(1-mu)
    var = std::min(var, 0.999 * mu * (1.0 - mu));
    double nu = mu * (1.0 - mu) / var - 1.0;  // = a + b
    BetaParams p;
    p.a = float(clamp(mu * nu, 0.1, 100.0));
    p.b = float(clamp((1.0 - mu) * nu, 0.1, 100.0));
    return p;
}

double beta_pdf(double x, double a, double b) {
    // clamp only at the edge of double range; shapes with a < 1 or b < 1
    // carry real mass surprisingly close to the endpoints
    x = clamp(x, 1e-300, 1.0 - 1e-16);
    double lb = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    return std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - lb);
}

// Golub-Welsch on the Jacobi recurrence for weight (1-x)^A (1+x)^B on
// [-1, 1] with A = b-1, B = a-1, mapped to [0, 1]. The eigenvectors of the
// symmetric tridiagonal matrix are orthonormal, so the squared first
// components already sum to one and give the normalized beta weights.
void beta_quadrature(double a, double b, int n, std::vector<double> *x, std::vector<double> *w) {
    const double A = b - 1.0, B = a - 1.0;
    Eigen::VectorXd diag(n), sub(std::max(n - 1, 1));
    diag[0] = (B - A) / (A + B + 2.0);
    for (int k = 1; k < n; ++k) {
        double s = 2.0 * k + A + B;
        diag[k] = (B * B - A * A) / (s * (s + 2.0));
    }
    if (n > 1)
        sub[0] = std::sqrt(4.0 * (1.0 + A) * (1.0 + B) /
                           (sqr(2.0 + A + B) * (3.0 + A + B)));
    for (int k = 2; k < n; ++k) {
        double s = 2.0 * k + A + B;
        sub[k - 1] = std::sqrt(4.0 * k * (k + A) * (k + B) * (k + A + B) /
                               (s * s * (s + 1.0) * (s - 1.0)));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag.head(n), sub.head(std::max(n - 1, 0)),
                              Eigen::ComputeEigenvectors);
    x->resize(n);
    w->resize(n);
    for (int k = 0; k < n; ++k) {
        (*x)[k] = clamp(0.5 * (es.eigenvalues()[k] + 1.0), 0.0, 1.0);
        (*w)[k] = sqr(es.eigenvectors()(0, k));
    }
}

// ----------------------------------------------------------------- kernels

ConvKernel ConvKernel::sg(float kappa) {
    ConvKernel k;
    k.is_sg = true;
    k.kappa = kappa;
    k.mass = sg_integral(kappa);
    return k;
}

ConvKernel ConvKernel::ggx(float alpha) {
    ConvKernel k;
    k.is_sg = false;
    k.alpha = alpha;
    k.mass = 2.0 * ggx_norm_hemisphere(alpha);
    // inverse CDF of |cos| under the density ~ D(t) over [0, 1]
    double c = 1.0 - double(alpha) * alpha;
    auto cdf_un = [c](double t) {
        if (c < 1e-9) return t;  // alpha ~ 1: constant density
        double sc = std::sqrt(c);
        return t / (2.0 * (1.0 - c * t * t)) + std::atanh(sc * t) / (2.0 * sc);
    };
    double total = cdf_un(1.0);
    const int n = 1024;
    k.inv_cdf_.resize(n + 1);
    for (int i = 0; i <= n; ++i) {
        double u = double(i) / n, lo = 0.0, hi = 1.0;
        for (int it = 0; it < 40; ++it) {
            double mid = 0.5 * (lo + hi);
            (cdf_un(mid) / total < u ? lo : hi) = mid;
        }
        k.inv_cdf_[i] = float(0.5 * (lo + hi));
    }
    return k;
}

double ConvKernel::pdf(double cos_theta) const {
    if (is_sg) return std::exp(double(kappa) * (cos_theta - 1.0)) / mass;
    return double(ggx_d_iso(alpha, float(cos_theta))) / mass;
}

Vec3f ConvKernel::sample(const Vec3f &axis, Pcg32 &rng) const {
    float t;
    if (is_sg) {
        double u = rng.next_double();
        double q = std::exp(-2.0 * double(kappa));
        t = float(1.0 + std::log(u + (1.0 - u) * q) / double(kappa));
    } else {
        float u = rng.next_float() * 1024.0f;
        int i = std::min(int(u), 1023);
        t = lerp(inv_cdf_[i], inv_cdf_[i + 1], u - float(i));
        if (rng.next_float() < 0.5f) t = -t;  // double sided
    }
    t = clamp(t, -1.0f, 1.0f);
    float r = safe_sqrt(1.0f - t * t);
    float phi = kTwoPi * rng.next_float();
    Frame f = build_frame(axis);
    return f.to_world({r * std::cos(phi), r * std::sin(phi), t});
}

double conv_truth(const SggxLobe &lobe, const ConvKernel &kernel, const Vec3f &w, int samples,
                  Pcg32 &rng) {
    double inv_norm = 1.0 / sggx_sphere_norm(lobe.alpha.x, lobe.alpha.y);
    double sum = 0;
    for (int s = 0; s < samples; ++s) {
        Vec3f n = (s & 1) ? kernel.sample(w, rng) : sggx_sample(lobe, rng);
        double g = kernel.pdf(dot(w, n));
        double dbar = double(lobe.eval(n)) * inv_norm;
        double p = 0.5 * dbar + 0.5 * g;
        if (p > 0) sum += g * dbar / p;
    }
    return sum / samples;
}

// ------------------------------------------------------- damped least squares

namespace {

using ResidFn = std::function<void(const double *, double *)>;

// solve (n<=4) linear system in place, partial pivoting
bool solve_small(int n, double a[4][4], double *b) {
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
        if (std::fabs(a[piv][col]) < 1e-18) return false;
        if (piv != col) {
            for (int c = 0; c < n; ++c) std::swap(a[piv][c], a[col][c]);
            std::swap(b[piv], b[col]);
        }
        for (int r = col + 1; r < n; ++r) {
            double f = a[r][col] / a[col][col];
            for (int c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    for (int r = n - 1; r >= 0; --r) {
        for (int c = r + 1; c < n; ++c) b[r] -= a[r][c] * b[c];
        b[r] /= a[r][r];
    }
    return true;
}

double cost_of(const std::vector<double> &r) {
    double c = 0;
    for (double v : r) c += v * v;
    return c;
}

// Levenberg-Marquardt with numeric forward differences; small fixed budgets,
// deterministic. p is updated in place.
void lm_solve(int np, int nr, const ResidFn &fn, double *p, int iters = 24) {
    std::vector<double> r(nr), rt(nr), jac(size_t(np) * nr);
    fn(p, r.data());
    double cost = cost_of(r);
    double lambda = 1e-3;
    for (int it = 0; it < iters; ++it) {
        for (int j = 0; j < np; ++j) {
            double h = 1e-4 * (std::fabs(p[j]) + 1e-3);
            double saved = p[j];
            p[j] = saved + h;
            fn(p, rt.data());
            p[j] = saved;
            for (int i = 0; i < nr; ++i) jac[size_t(j) * nr + i] = (rt[i] - r[i]) / h;
        }
        double jtj[4][4] = {}, jtr[4] = {};
        for (int a = 0; a < np; ++a) {
            for (int b = a; b < np; ++b) {
                double s = 0;
                for (int i = 0; i < nr; ++i) s += jac[size_t(a) * nr + i] * jac[size_t(b) * nr + i];
                jtj[a][b] = jtj[b][a] = s;
            }
            double s = 0;
            for (int i = 0; i < nr; ++i) s += jac[size_t(a) * nr + i] * r[i];
            jtr[a] = s;
        }
        bool accepted = false;
        for (int tries = 0; tries < 6; ++tries) {
            double a[4][4], b[4];
            for (int i = 0; i < np; ++i) {
                for (int j = 0; j < np; ++j) a[i][j] = jtj[i][j];
                a[i][i] += lambda * (jtj[i][i] + 1e-12);
                b[i] = -jtr[i];
            }
            if (!solve_small(np, a, b)) {
                lambda *= 10;
                continue;
            }
            double pt[4];
            for (int i = 0; i < np; ++i) pt[i] = p[i] + b[i];
            fn(pt, rt.data());
            double ct = cost_of(rt);
            if (ct < cost) {
                for (int i = 0; i < np; ++i) p[i] = pt[i];
                r = rt;
                cost = ct;
                lambda = std::max(lambda / 3.0, 1e-9);
                accepted = true;
                break;
            }
            lambda *= 4.0;
        }
        if (!accepted && lambda > 1e8) break;
    }
}

// squashing helpers shared by the fits
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double y) {
    y = clamp(y, 1e-6, 1.0 - 1e-6);
    return std::log(y / (1.0 - y));
}

// fraction of the remaining roughness headroom, in [0, 1)
inline double frac_of(double p) { return p * p / (1.0 + p * p); }
inline double frac_inv(double f) {
    f = clamp(f, 0.0, 1.0 - 1e-9);
    return std::sqrt(f / (1.0 - f));
}

struct ConvNodeFit {
    Vec2f alpha_out;
    float rel_l2;
};

ConvNodeFit fit_conv_node(const Vec2f &alpha, const ConvKernel &kernel, int nd, int ns,
                          uint64_t seed) {
    SggxLobe lobe;
    lobe.alpha = alpha;
    Pcg32 rng(seed, 0x636f6e76);

    std::vector<Vec3f> dirs(nd);
    for (int d = 0; d < nd; ++d) {
        Vec3f n = sggx_sample(lobe, rng);
        dirs[d] = kernel.sample(n, rng);  // exact draw from the convolution
    }
    std::vector<double> truth(nd);
    double max_truth = 0;
    for (int d = 0; d < nd; ++d) {
        truth[d] = conv_truth(lobe, kernel, dirs[d], ns, rng);
        max_truth = std::max(max_truth, truth[d]);
    }
    // directions are drawn from the convolution itself, so plain least squares
    // here minimizes the mass-weighted L2 that the fit is judged by; the
    // uniform scale just keeps the solver numerics tame
    double scale = 1.0 / std::max(max_truth, 1e-12);
    std::vector<double> w(nd, scale);

    auto eval_out = [&](double fx, double fy, int d) {
        SggxLobe out;
        out.alpha.x = clamp(float(alpha.x + (1.0 - alpha.x) * fx), kAlphaMin, 1.0f);
        out.alpha.y = clamp(float(alpha.y + (1.0 - alpha.y) * fy), kAlphaMin, 1.0f);
        return double(out.eval(dirs[d])) / sggx_sphere_norm(out.alpha.x, out.alpha.y);
    };

    // an isotropic lobe convolved with an isotropic kernel stays isotropic, so
    // constrain the diagonal to a single parameter
    const bool iso = alpha.x == alpha.y;
    const int np = iso ? 1 : 2;

    // coarse scan as the fallback/init (the objective can have flat regions)
    double best_fx = 0, best_fy = 0, best_cost = kInf;
    const double grid[9] = {0.0, 0.02, 0.06, 0.12, 0.25, 0.45, 0.65, 0.85, 0.97};
    for (double fx : grid)
        for (double fy : grid) {
            if (iso && fy != fx) continue;
            double c = 0;
            for (int d = 0; d < nd; ++d) {
                double r = (eval_out(fx, fy, d) - truth[d]) * w[d];
                c += r * r;
            }
            if (c < best_cost) {
                best_cost = c;
                best_fx = fx;
                best_fy = fy;
            }
        }

    double p[2] = {frac_inv(best_fx), frac_inv(best_fy)};
    ResidFn fn = [&](const double *pp, double *r) {
        double fx = frac_of(pp[0]), fy = iso ? fx : frac_of(pp[1]);
        for (int d = 0; d < nd; ++d) r[d] = (eval_out(fx, fy, d) - truth[d]) * w[d];
    };
    lm_solve(np, nd, fn, p);

    double fx = frac_of(p[0]), fy = iso ? fx : frac_of(p[1]);
    ConvNodeFit out;
    out.alpha_out.x = clamp(float(alpha.x + (1.0 - alpha.x) * fx), kAlphaMin, 1.0f);
    out.alpha_out.y = clamp(float(alpha.y + (1.0 - alpha.y) * fy), kAlphaMin, 1.0f);
    double num = 0, den = 0;
    for (int d = 0; d < nd; ++d) {
        SggxLobe o;
        o.alpha = out.alpha_out;
        double f = double(o.eval(dirs[d])) / sggx_sphere_norm(o.alpha.x, o.alpha.y);
        num += sqr(f - truth[d]);
        den += truth[d] * truth[d];
    }
    out.rel_l2 = float(std::sqrt(num / std::max(den, 1e-30)));
    return out;
}

FitReportEntry summarize(const std::string &name, std::vector<float> residuals) {
    FitReportEntry e;
    e.table = name;
    e.nodes = uint32_t(residuals.size());
    if (residuals.empty()) return e;
    std::sort(residuals.begin(), residuals.end());
    e.median_rel_l2 = residuals[residuals.size() / 2];
    e.max_rel_l2 = residuals.back();
    float flag_lvl = std::max(0.10f, 2.0f * e.median_rel_l2);
    for (float r : residuals)
        if (r > flag_lvl) ++e.flagged;
    return e;
}

TableGrid fit_conv_table(bool sg_kernel, const int res[3], const TableFitConfig &cfg,
                         FitReportEntry *report) {
    TableGrid g;
    g.name = sg_kernel ? "sg_conv" : "ggx_conv";
    g.ndim = 3;
    g.channels = 2;
    g.axes[0] = {kAlphaMin, 1.0f, res[0], true};
    g.axes[1] = {kAlphaMin, 1.0f, res[1], true};
    g.axes[2] = sg_kernel ? TableAxis{0.5f, 10.0f, res[2], false}
                          : TableAxis{kAlphaMin, 1.0f, res[2], true};
    g.allocate();

    std::vector<ConvKernel> kernels(res[2]);
    for (int k = 0; k < res[2]; ++k)
        kernels[k] = sg_kernel ? ConvKernel::sg(g.axes[2].node(k))
                               : ConvKernel::ggx(g.axes[2].node(k));

    // fit only ax <= ay; the kernel is isotropic so the swapped node mirrors
    struct Task {
        int i, j, k;
    };
    std::vector<Task> tasks;
    for (int k = 0; k < res[2]; ++k)
        for (int j = 0; j < res[1]; ++j)
            for (int i = 0; i <= j && i < res[0]; ++i) tasks.push_back({i, j, k});

    int ns = std::max(64, cfg.mc_samples / std::max(1, cfg.fit_dirs));
    std::vector<float> residuals(tasks.size());
    TableGrid *gp = &g;
    parallel_for(int64_t(tasks.size()), [&](int64_t ti) {
        const Task &t = tasks[size_t(ti)];
        Vec2f alpha(gp->axes[0].node(t.i), gp->axes[1].node(t.j));
        uint64_t seed = hash_combine(cfg.seed, sg_kernel ? 1 : 2,
                                     uint64_t(t.i) | (uint64_t(t.j) << 16), uint64_t(t.k));
        ConvNodeFit fit = fit_conv_node(alpha, kernels[t.k], cfg.fit_dirs, ns, seed);
        float *p = gp->node_ptr(t.i, t.j, t.k);
        p[0] = fit.alpha_out.x - alpha.x;
        p[1] = fit.alpha_out.y - alpha.y;
        if (t.i != t.j) {  // mirrored node with swapped channels
            float *q = gp->node_ptr(t.j, t.i, t.k);
            q[0] = fit.alpha_out.y - alpha.y;
            q[1] = fit.alpha_out.x - alpha.x;
        }
        residuals[size_t(ti)] = fit.rel_l2;
    });

    // widening the kernel must never shrink the roughness offset
    for (int j = 0; j < res[1]; ++j)
        for (int i = 0; i < res[0]; ++i)
            for (int c = 0; c < 2; ++c) {
                if (sg_kernel) {  // kappa ascending = kernel narrowing
                    for (int k = res[2] - 2; k >= 0; --k) {
                        float &cur = g.node_ptr(i, j, k)[c];
                        cur = std::max(cur, g.node_ptr(i, j, k + 1)[c]);
                    }
                } else {  // kernel alpha ascending = kernel widening
                    for (int k = 1; k < res[2]; ++k) {
                        float &cur = g.node_ptr(i, j, k)[c];
                        cur = std::max(cur, g.node_ptr(i, j, k - 1)[c]);
                    }
                }
            }

    if (report) *report = summarize(g.name, residuals);
    return g;
}

}  // namespace

TableGrid fit_sg_conv_table(const TableFitConfig &cfg, FitReportEntry *report) {
    return fit_conv_table(true, cfg.m1_res, cfg, report);
}

TableGrid fit_ggx_conv_table(const TableFitConfig &cfg, FitReportEntry *report) {
    return fit_conv_table(false, cfg.m3_res, cfg, report);
}

// --------------------------------------------------------------- beta lobes

namespace {

// composite Gauss-Legendre nodes: captures both beta edge singularities and
// sharp lobes near cos = 1
void composite_gl(const std::vector<double> &cuts, int per_seg, std::vector<double> *n,
                  std::vector<double> *w) {
    n->clear();
    w->clear();
    for (size_t s = 0; s + 1 < cuts.size(); ++s) {
        std::vector<double> nn, ww;
        gauss_legendre(per_seg, cuts[s], cuts[s + 1], &nn, &ww);
        n->insert(n->end(), nn.begin(), nn.end());
        w->insert(w->end(), ww.begin(), ww.end());
    }
}

}  // namespace

TableGrid fit_beta_lobes_table(const TableFitConfig &cfg, FitReportEntry *report) {
    TableGrid g;
    g.name = "beta_lobes";
    g.ndim = 2;
    g.channels = 3;  // m1, alpha1, alpha2
    g.axes[0] = {0.1f, 100.0f, cfg.m2_res[0], true};
    g.axes[1] = {0.1f, 100.0f, cfg.m2_res[1], true};
    g.allocate();

    std::vector<double> tq, tw;  // hemisphere cos nodes
    composite_gl({0.0, 0.9, 0.999, 0.99999, 1.0}, 48, &tq, &tw);

    const int nt = int(tq.size());
    std::vector<float> residuals(g.node_count());
    TableGrid *gp = &g;
    parallel_for(int64_t(g.node_count()), [&](int64_t ni) {
        int i = int(ni % gp->axes[0].n), j = int(ni / gp->axes[0].n);
        double a = gp->axes[0].node(i), b = gp->axes[1].node(j);
        double mu = a / (a + b);
        double var = a * b / ((a + b) * (a + b) * (a + b + 1.0));
        float *out = gp->node_ptr(i, j);

        double mu_c = clamp(mu, double(kAlphaMin), 1.0);
        if (var < 1e-7) {  // concentration cap: collapse to a single lobe
            out[0] = 1.0f;
            out[1] = out[2] = float(mu_c);
            residuals[size_t(ni)] = 0.0f;
            return;
        }

        std::vector<double> aq, aw;  // roughness nodes under this beta weight
        beta_quadrature(a, b, 96, &aq, &aw);
        std::vector<double> target(nt, 0.0);
        for (size_t q = 0; q < aq.size(); ++q) {
            float al = clamp(float(aq[q]), kAlphaMin, 1.0f);
            for (int ti = 0; ti < nt; ++ti)
                target[ti] += aw[q] * ggx_d_iso(al, float(tq[ti]));
        }
        double tnorm = 0;
        for (int ti = 0; ti < nt; ++ti) tnorm += tw[ti] * target[ti] * target[ti];

        auto mix_resid = [&](const double *p, double *r) {
            double m1 = sigmoid(p[0]);
            float a1 = float(kAlphaMin + (1.0 - kAlphaMin) * sigmoid(p[1]));
            float a2 = float(kAlphaMin + (1.0 - kAlphaMin) * sigmoid(p[2]));
            for (int ti = 0; ti < nt; ++ti) {
                double f =
                    m1 * ggx_d_iso(a1, float(tq[ti])) + (1.0 - m1) * ggx_d_iso(a2, float(tq[ti]));
                r[ti] = (f - target[ti]) * std::sqrt(tw[ti]);
            }
        };

        double best_cost = kInf, best_p[3] = {0, 0, 0};
        double sd = std::sqrt(var);
        auto sq = [](double al) {
            return logit(clamp((al - kAlphaMin) / (1.0 - kAlphaMin), 1e-5, 1.0 - 1e-5));
        };
        // the third start is a single lobe at the mean, so the refined result
        // never does worse than that baseline
        double inits[3][3] = {{0.0, sq(mu_c), sq(mu_c * 1.4)},
                              {0.0, sq(mu_c - sd), sq(mu_c + sd)},
                              {logit(0.999), sq(mu_c), sq(mu_c)}};
        for (auto &init : inits) {
            double p[3] = {init[0], init[1], init[2]};
            std::vector<double> r(nt);
            lm_solve(3, nt, mix_resid, p);
            mix_resid(p, r.data());
            double c = cost_of(r);
            if (c < best_cost) {
                best_cost = c;
                std::memcpy(best_p, p, sizeof(best_p));
            }
        }

        float m1 = float(sigmoid(best_p[0]));
        float a1 = float(kAlphaMin + (1.0 - kAlphaMin) * sigmoid(best_p[1]));
        float a2 = float(kAlphaMin + (1.0 - kAlphaMin) * sigmoid(best_p[2]));
        if (a1 > a2) {  // canonical order keeps interpolation coherent
            std::swap(a1, a2);
            m1 = 1.0f - m1;
        }
        out[0] = m1;
        out[1] = a1;
        out[2] = a2;
        residuals[size_t(ni)] = float(std::sqrt(best_cost / std::max(tnorm, 1e-30)));
    });

    if (report) *report = summarize(g.name, residuals);
    return g;
}

// ----------------------------------------------------------------- LTC / norm

TableGrid fit_ltc_table(const TableFitConfig &cfg, FitReportEntry *report) {
    TableGrid g;
    g.name = "ltc_inv";
    g.ndim = 1;
    g.channels = 3;  // diagonal of the inverse transform
    g.axes[0] = {kAlphaMin, 1.0f, cfg.m4_res, true};
    g.allocate();

    std::vector<double> tq, tw;
    composite_gl({0.0, 0.9, 0.999, 0.99999, 1.0}, 48, &tq, &tw);
    const int nt = int(tq.size());

    std::vector<float> residuals(g.node_count());
    TableGrid *gp = &g;
    parallel_for(int64_t(g.node_count()), [&](int64_t ni) {
        float alpha = gp->axes[0].node(int(ni));
        // target: the single-sided density normalized to unit hemisphere mass,
        // matching the unit mass every transformed cosine carries
        double norm = ggx_norm_hemisphere(alpha);
        auto ltc_d = [](double a, double t) {
            double s2 = 1.0 - t * t;
            double q = s2 + a * a * t * t;
            return a * a * t / (M_PI * q * q);
        };
        // a free magnitude soaks up the mass mismatch during the fit so the
        // transform tracks the shape; downstream only the normalized
        // distribution is used, so the magnitude itself is discarded
        auto cost = [&](double log_a) {
            double a = std::exp(log_a);
            double ff = 0, fg = 0, gg = 0;
            for (int ti = 0; ti < nt; ++ti) {
                double f = ltc_d(a, tq[ti]);
                double t = double(ggx_d_iso(alpha, float(tq[ti]))) / norm;
                ff += tw[ti] * f * f;
                fg += tw[ti] * f * t;
                gg += tw[ti] * t * t;
            }
            double c = ff > 0 ? fg / ff : 1.0;
            return std::max(gg - 2.0 * c * fg + c * c * ff, 0.0);
        };
        // golden section over log(a)
        const double gr = 0.6180339887498949;
        double lo = std::log(1e-5), hi = std::log(8.0);
        double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
        double f1 = cost(x1), f2 = cost(x2);
        for (int it = 0; it < 70; ++it) {
            if (f1 < f2) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - gr * (hi - lo);
                f1 = cost(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + gr * (hi - lo);
                f2 = cost(x2);
            }
        }
        double a = std::exp(0.5 * (lo + hi));
        float *p = gp->node_ptr(int(ni));
        p[0] = p[1] = float(1.0 / a);  // inverse of diag(a, a, 1)
        p[2] = 1.0f;

        double tnorm = 0;
        for (int ti = 0; ti < nt; ++ti)
            tnorm += tw[ti] * sqr(double(ggx_d_iso(alpha, float(tq[ti]))) / norm);
        residuals[size_t(ni)] = float(std::sqrt(cost(std::log(a)) / std::max(tnorm, 1e-30)));
    });

    if (report) *report = summarize(g.name, residuals);
    return g;
}

TableGrid fit_ggx_norm_table(const TableFitConfig &cfg) {
    TableGrid g;
    g.name = "ggx_norm";
    g.ndim = 1;
    g.channels = 1;
    g.axes[0] = {kAlphaMin, 1.0f, cfg.m5_res, true};
    g.allocate();
    for (int i = 0; i < g.axes[0].n; ++i)
        g.node_ptr(i)[0] = float(ggx_norm_hemisphere(g.axes[0].node(i)));
    return g;
}

PrecompTables fit_all_tables(const TableFitConfig &cfg, bool verbose) {
    PrecompTables t;
    FitReportEntry e;
    auto log = [&](const char *name) {
        if (verbose) std::fprintf(stderr, "fitting %s...\n", name);
    };
    log("ggx_norm");
    t.ggx_norm = fit_ggx_norm_table(cfg);
    log("ltc_inv");
    t.ltc_inv = fit_ltc_table(cfg, &e);
    t.report.push_back(e);
    log("beta_lobes");
    t.beta_lobes = fit_beta_lobes_table(cfg, &e);
    t.report.push_back(e);
    log("sg_conv");
    t.sg_conv = fit_sg_conv_table(cfg, &e);
    t.report.push_back(e);
    log("ggx_conv");
    t.ggx_conv = fit_ggx_conv_table(cfg, &e);
    t.report.push_back(e);
    return t;
}

// ----------------------------------------------------------------- queries

Vec2f query_sg_conv(const PrecompTables &t, Vec2f alpha, float kappa) {
    float x[3] = {alpha.x, alpha.y, kappa}, d[2];
    t.sg_conv.query(x, d);
    return {clamp(alpha.x + d[0], kAlphaMin, 1.0f), clamp(alpha.y + d[1], kAlphaMin, 1.0f)};
}

Vec2f query_ggx_conv(const PrecompTables &t, Vec2f alpha, float kernel_alpha) {
    float x[3] = {alpha.x, alpha.y, kernel_alpha}, d[2];
    t.ggx_conv.query(x, d);
    return {clamp(alpha.x + d[0], kAlphaMin, 1.0f), clamp(alpha.y + d[1], kAlphaMin, 1.0f)};
}

void query_beta_lobes(const PrecompTables &t, const BetaParams &p, float *m1, float *a1,
                      float *a2) {
    float x[2] = {p.a, p.b}, out[3];
    t.beta_lobes.query(x, out);
    *m1 = clamp(out[0], 0.0f, 1.0f);
    *a1 = clamp(out[1], kAlphaMin, 1.0f);
    *a2 = clamp(out[2], kAlphaMin, 1.0f);
}

Vec3f query_ltc_inv_diag(const PrecompTables &t, float alpha) {
    float x = alpha, out[3];
    t.ltc_inv.query(&x, out);
    return {out[0], out[1], out[2]};
}

float query_ggx_norm(const PrecompTables &t, float alpha) {
    float x = alpha, out;
    t.ggx_norm.query(&x, &out);
    return out;
}

// ----------------------------------------------------------------- file io

static void write_grid(StreamWriter &w, const TableGrid &g) {
    w.str(g.name);
    w.u8(uint8_t(g.ndim));
    w.u8(uint8_t(g.channels));
    for (int d = 0; d < g.ndim; ++d) {
        w.u32(uint32_t(g.axes[d].n));
        w.f32(g.axes[d].lo);
        w.f32(g.axes[d].hi);
        w.u8(g.axes[d].log_spaced ? 1 : 0);
    }
    w.u64(g.data.size());
    w.f32_array(g.data.data(), g.data.size());
}

static TableGrid read_grid(StreamReader &r) {
    TableGrid g;
    g.name = r.str();
    g.ndim = r.u8();
    g.channels = r.u8();
    if (g.ndim < 1 || g.ndim > 3 || g.channels < 1 || g.channels > 8)
        throw std::runtime_error("table file: dimension mismatch");
    for (int d = 0; d < g.ndim; ++d) {
        g.axes[d].n = int(r.u32());
        g.axes[d].lo = r.f32();
        g.axes[d].hi = r.f32();
        g.axes[d].log_spaced = r.u8() != 0;
        if (g.axes[d].n < 1 || g.axes[d].n > (1 << 20))
            throw std::runtime_error("table file: bad axis size");
    }
    uint64_t count = r.u64();
    if (count != g.node_count() * g.channels)
        throw std::runtime_error("table file: dimension mismatch");
    g.data.resize(count);
    r.f32_array(g.data.data(), count);
    return g;
}

void save_tables(const std::string &path, const PrecompTables &t) {
    StreamWriter w;
    w.bytes("ABT1", 4);
    w.u32(1);  // version
    const TableGrid *grids[5] = {&t.sg_conv, &t.beta_lobes, &t.ggx_conv, &t.ltc_inv, &t.ggx_norm};
    w.u32(5);
    for (const TableGrid *g : grids) write_grid(w, *g);
    w.u32(uint32_t(t.report.size()));
    for (const FitReportEntry &e : t.report) {
        w.str(e.table);
        w.f32(e.median_rel_l2);
        w.f32(e.max_rel_l2);
        w.u32(e.flagged);
        w.u32(e.nodes);
    }
    uint32_t crc = w.crc();
    w.u32(crc);
    write_file_bytes(path, w.data());
}

PrecompTables load_tables(const std::string &path) {
    std::vector<uint8_t> bytes = read_file_bytes(path);
    if (bytes.size() < 12) throw std::runtime_error("table file: truncated: " + path);
    uint32_t stored_crc;
    std::memcpy(&stored_crc, bytes.data() + bytes.size() - 4, 4);
    if (crc32_bytes(bytes.data(), bytes.size() - 4) != stored_crc)
        throw std::runtime_error("corrupt table file (bad CRC): " + path);
    StreamReader r(bytes.data(), bytes.size() - 4);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, "ABT1", 4) != 0)
        throw std::runtime_error("wrong magic (not a table file): " + path);
    uint32_t version = r.u32();
    if (version != 1) throw std::runtime_error("unsupported table file version: " + path);
    uint32_t count = r.u32();
    PrecompTables t;
    for (uint32_t i = 0; i < count; ++i) {
        TableGrid g = read_grid(r);
        if (g.name == "sg_conv") t.sg_conv = std::move(g);
        else if (g.name == "beta_lobes") t.beta_lobes = std::move(g);
        else if (g.name == "ggx_conv") t.ggx_conv = std::move(g);
        else if (g.name == "ltc_inv") t.ltc_inv = std::move(g);
        else if (g.name == "ggx_norm") t.ggx_norm = std::move(g);
        else throw std::runtime_error("table file: unknown table " + g.name);
    }
    uint32_t nrep = r.u32();
    for (uint32_t i = 0; i < nrep; ++i) {
        FitReportEntry e;
        e.table = r.str();
        e.median_rel_l2 = r.f32();
        e.max_rel_l2 = r.f32();
        e.flagged = r.u32();
        e.nodes = r.u32();
        t.report.push_back(e);
    }
    if (!t.complete()) throw std::runtime_error("table file: missing tables: " + path);
    return t;
}

void conv_l2_parts(const SggxLobe &lobe, const ConvKernel &kernel, Vec2f alpha_out, int dirs,
                   int samples_per_dir, uint64_t seed, double *num, double *den) {
    Pcg32 rng(seed, 0x6f7261636c);
    SggxLobe out = lobe;
    out.alpha = alpha_out;
    double out_norm = sggx_sphere_norm(alpha_out.x, alpha_out.y);
    // scale by the peak so points with very different lobe sharpness pool on
    // an equal footing
    double peak = 0;
    std::vector<Vec3f> ws(dirs);
    std::vector<double> truths(dirs);
    for (int d = 0; d < dirs; ++d) {
        Vec3f n = sggx_sample(lobe, rng);
        ws[d] = kernel.sample(n, rng);
        truths[d] = conv_truth(lobe, kernel, ws[d], samples_per_dir, rng);
        peak = std::max(peak, truths[d]);
    }
    double s = 1.0 / std::max(peak, 1e-30);
    for (int d = 0; d < dirs; ++d) {
        double f = double(out.eval(ws[d])) / out_norm;
        *num += sqr((f - truths[d]) * s);
        *den += sqr(truths[d] * s);
    }
}

double conv_rel_l2(const SggxLobe &lobe, const ConvKernel &kernel, Vec2f alpha_out, int dirs,
                   int samples_per_dir, uint64_t seed) {
    double num = 0, den = 0;
    conv_l2_parts(lobe, kernel, alpha_out, dirs, samples_per_dir, seed, &num, &den);
    return std::sqrt(num / std::max(den, 1e-30));
}

}  // namespace vlod
