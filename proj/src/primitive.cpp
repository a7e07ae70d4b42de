// SPDX-License-Identifier: Apache-2.0
#include "vlod/primitive.h"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "vlod/frame.h"
#include "vlod/mappings.h"

namespace vlod {

namespace {

// interval of the full line o + t*d inside the box; false when it misses
bool line_box_interval(const Vec3f &o, const Vec3f &d, const Bounds3 &box, double *lo,
                       double *hi) {
    double tlo = -kInf, thi = kInf;
    for (int a = 0; a < 3; ++a) {
        if (std::fabs(d[a]) < 1e-30f) {
            if (o[a] < box.lo[a] || o[a] > box.hi[a]) return false;
            continue;
        }
        double tn = (double(box.lo[a]) - o[a]) / d[a];
        double tf = (double(box.hi[a]) - o[a]) / d[a];
        if (tn > tf) std::swap(tn, tf);
        tlo = std::max(tlo, tn);
        thi = std::min(thi, tf);
        if (tlo > thi) return false;
    }
    *lo = tlo;
    *hi = thi;
    return true;
}

// interval of the full line inside the ellipsoid; false when it misses
bool line_ellipsoid_interval(const TruncEllipsoid &prim, const Vec3f &o, const Vec3f &d,
                             double *lo, double *hi) {
    Vec3f e = o - prim.center;
    double a = quad_form(prim.m, d);
    double b = 2.0 * dot(d, prim.m * e);
    double c = quad_form(prim.m, e) - 1.0;
    double disc = b * b - 4.0 * a * c;
    if (disc < 0.0 || a <= 0.0) return false;
    double sq = std::sqrt(disc);
    *lo = (-b - sq) / (2.0 * a);
    *hi = (-b + sq) / (2.0 * a);
    return true;
}

// lower-triangular Cholesky factor of a symmetric 3x3, with escalating
// diagonal regularization when the matrix is not numerically positive
bool cholesky3(const double a[3][3], double l[3][3]) {
    double trace = a[0][0] + a[1][1] + a[2][2];
    double jitter = 0.0;
    for (int attempt = 0; attempt < 8; ++attempt) {
        bool ok = true;
        for (int i = 0; i < 3 && ok; ++i) {
            for (int j = 0; j <= i && ok; ++j) {
                double s = a[i][j] + (i == j ? jitter : 0.0);
                for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
                if (i == j) {
                    if (s <= 0.0) {
                        ok = false;
                        break;
                    }
                    l[i][i] = std::sqrt(s);
                } else {
                    l[i][j] = s / l[j][j];
                    l[j][i] = 0.0;
                }
            }
        }
        if (ok) return true;
        jitter = jitter == 0.0 ? std::max(1e-12 * trace, 1e-300) : jitter * 100.0;
    }
    return false;
}

// projected area of the box alone along unit w
float box_projected_area(const Bounds3 &box, const Vec3f &w) {
    Vec3f e = box.extent();
    return std::fabs(w.x) * e.y * e.z + std::fabs(w.y) * e.x * e.z + std::fabs(w.z) * e.x * e.y;
}

// after rounding the fit to float the tightest samples can poke out; measure
// the worst offender in double and grow the ellipsoid by exactly that factor
void enforce_containment(TruncEllipsoid *prim, const std::vector<Vec3f> &positions) {
    double maxq = 0.0;
    for (const Vec3f &p : positions) {
        double v[3] = {double(p.x) - prim->center.x, double(p.y) - prim->center.y,
                       double(p.z) - prim->center.z};
        double q = 0.0;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) q += double(prim->m(r, c)) * v[r] * v[c];
        maxq = std::max(maxq, q);
    }
    if (maxq > 1.0) {
        float grow = float(maxq) * (1.0f + 1e-6f);
        prim->m = prim->m * (1.0f / grow);
        prim->m_inv = prim->m_inv * grow;
    }
}

}  // namespace

TruncEllipsoid fit_primitive(const std::vector<Vec3f> &positions, const Bounds3 &box) {
    if (positions.empty()) throw std::invalid_argument("fit_primitive: no positions");
    float voxel_size = length(box.extent());

    Vec3d mean(0, 0, 0);
    for (const Vec3f &p : positions) mean = mean + Vec3d(p.x, p.y, p.z);
    mean = mean / double(positions.size());

    double max_d2 = 0.0;
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const Vec3f &p : positions) {
        Eigen::Vector3d q(p.x - mean.x, p.y - mean.y, p.z - mean.z);
        cov += q * q.transpose();
        max_d2 = std::max(max_d2, q.squaredNorm());
    }
    cov /= double(positions.size());

    TruncEllipsoid prim;
    prim.box = box;
    prim.center = Vec3f(float(mean.x), float(mean.y), float(mean.z));

    // all points coincident: tiny sphere so downstream math stays finite
    if (max_d2 <= 1e-14 * double(voxel_size) * voxel_size || voxel_size <= 0.0f) {
        float r = std::max(1e-3f * voxel_size, 1e-20f);
        prim.m = Mat3::diag(1.0f / (r * r), 1.0f / (r * r), 1.0f / (r * r));
        prim.m_inv = Mat3::diag(r * r, r * r, r * r);
        return prim;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    Eigen::Matrix3d v = es.eigenvectors();  // columns, orthonormal

    // principal-frame coordinates and per-axis spans
    std::vector<Eigen::Vector3d> q(positions.size());
    Eigen::Vector3d qmin = Eigen::Vector3d::Constant(kInf), qmax = -qmin;
    for (size_t i = 0; i < positions.size(); ++i) {
        Eigen::Vector3d p(positions[i].x - mean.x, positions[i].y - mean.y,
                          positions[i].z - mean.z);
        q[i] = v.transpose() * p;
        qmin = qmin.cwiseMin(q[i]);
        qmax = qmax.cwiseMax(q[i]);
    }
    Eigen::Vector3d mid = 0.5 * (qmin + qmax);
    Eigen::Vector3d half = 0.5 * (qmax - qmin);
    // flat or collinear clouds: keep the scale invertible; the resulting
    // ellipsoid thickness stays far below the voxel size
    for (int a = 0; a < 3; ++a) half[a] = std::max(half[a], 1e-4 * double(voxel_size));
    for (size_t i = 0; i < q.size(); ++i) q[i] = (q[i] - mid).cwiseQuotient(half);

    // Ritter bounding sphere in the scaled space
    size_t iy = 0;
    for (size_t i = 1; i < q.size(); ++i)
        if ((q[i] - q[0]).squaredNorm() > (q[iy] - q[0]).squaredNorm()) iy = i;
    size_t iz = iy;
    for (size_t i = 0; i < q.size(); ++i)
        if ((q[i] - q[iy]).squaredNorm() > (q[iz] - q[iy]).squaredNorm()) iz = i;
    Eigen::Vector3d sc = 0.5 * (q[iy] + q[iz]);
    double sr = 0.5 * (q[iy] - q[iz]).norm();
    for (const Eigen::Vector3d &p : q) {
        double d = (p - sc).norm();
        if (d > sr) {
            double nr = 0.5 * (sr + d);
            sc += (p - sc) * ((d - nr) / d);
            sr = nr;
        }
    }
    sr = sr * (1.0 + 1e-6) + 1e-12;  // containment slack against rounding

    // back to world space: semi-axis along eigenvector j is sr * half[j]
    Eigen::Vector3d qc = sc.cwiseProduct(half) + mid;
    Eigen::Vector3d wc = Eigen::Vector3d(mean.x, mean.y, mean.z) + v * qc;
    Eigen::Vector3d semi = sr * half;

    // a wildly oversized fit defeats the purpose of a tight primitive; fall
    // back to the bounding sphere of the inputs, which can never exceed the
    // box diagonal
    if (semi.maxCoeff() > 1.05 * double(voxel_size)) {
        double r = std::sqrt(max_d2) * (1.0 + 1e-6) + 1e-12;
        prim.m = Mat3::diag(float(1.0 / (r * r)), float(1.0 / (r * r)), float(1.0 / (r * r)));
        prim.m_inv = Mat3::diag(float(r * r), float(r * r), float(r * r));
        enforce_containment(&prim, positions);
        return prim;
    }

    Eigen::Matrix3d em = v * Eigen::Vector3d(1.0 / (semi[0] * semi[0]), 1.0 / (semi[1] * semi[1]),
                                             1.0 / (semi[2] * semi[2]))
                                 .asDiagonal() *
                         v.transpose();
    Eigen::Matrix3d ei =
        v *
        Eigen::Vector3d(semi[0] * semi[0], semi[1] * semi[1], semi[2] * semi[2]).asDiagonal() *
        v.transpose();
    prim.center = Vec3f(float(wc.x()), float(wc.y()), float(wc.z()));
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            prim.m(r, c) = float(em(r, c));
            prim.m_inv(r, c) = float(ei(r, c));
        }
    enforce_containment(&prim, positions);
    return prim;
}

bool intersect(const TruncEllipsoid &prim, const Vec3f &o, const Vec3f &d, float t_min,
               float t_max, float *t_enter, float *t_exit) {
    double blo, bhi, elo, ehi;
    if (!line_box_interval(o, d, prim.box, &blo, &bhi)) return false;
    if (!line_ellipsoid_interval(prim, o, d, &elo, &ehi)) return false;
    double lo = std::max({blo, elo, double(t_min)});
    double hi = std::min({bhi, ehi, double(t_max)});
    if (lo > hi) return false;
    *t_enter = float(lo);
    *t_exit = float(hi);
    return true;
}

float projected_area(const TruncEllipsoid &prim, const Vec3f &w, int n, Pcg32 &rng) {
    Frame frame = build_frame(w);
    // inverse quadric in the frame whose third axis is w; the projection of
    // the full ellipsoid is an ellipse of area pi * sqrt(det of the 2x2 block)
    Vec3f iw0 = prim.m_inv * frame.t, iw1 = prim.m_inv * frame.b, iw2 = prim.m_inv * w;
    double mw[3][3] = {
        {dot(frame.t, iw0), dot(frame.t, iw1), dot(frame.t, iw2)},
        {dot(frame.b, iw0), dot(frame.b, iw1), dot(frame.b, iw2)},
        {dot(w, iw0), dot(w, iw1), dot(w, iw2)},
    };
    double det2 = mw[0][0] * mw[1][1] - mw[0][1] * mw[1][0];
    double ellipse_area = kPi * std::sqrt(std::max(det2, 0.0));

    // ellipsoid inside the box: the ellipse is the exact answer
    float eps = 1e-5f * (1.0f + length(prim.box.extent()));
    bool ellipsoid_in_box = true;
    for (int a = 0; a < 3 && ellipsoid_in_box; ++a) {
        float h = safe_sqrt(prim.m_inv(a, a));
        ellipsoid_in_box = prim.center[a] - h >= prim.box.lo[a] - eps &&
                           prim.center[a] + h <= prim.box.hi[a] + eps;
    }
    if (ellipsoid_in_box) return float(ellipse_area);

    // box inside the ellipsoid: the box projection is the exact answer
    bool box_in_ellipsoid = true;
    for (int corner = 0; corner < 8 && box_in_ellipsoid; ++corner) {
        Vec3f p(corner & 1 ? prim.box.hi.x : prim.box.lo.x,
                corner & 2 ? prim.box.hi.y : prim.box.lo.y,
                corner & 4 ? prim.box.hi.z : prim.box.lo.z);
        box_in_ellipsoid = quad_form(prim.m, p - prim.center) <= 1.0f + 1e-5f;
    }
    if (box_in_ellipsoid) return box_projected_area(prim.box, w);

    // count lines through the projected ellipse that cross the intersection
    double l[3][3];
    if (!cholesky3(mw, l)) return box_projected_area(prim.box, w);  // defensive
    double aq = quad_form(prim.m, w);
    int m = 0;
    for (int i = 0; i < n; ++i) {
        Vec2f dsk = square_to_disk(rng.next_vec2());
        double z = std::sqrt(std::max(0.0, 1.0 - double(dsk.x) * dsk.x - double(dsk.y) * dsk.y));
        double px = l[0][0] * dsk.x;
        double py = l[1][0] * dsk.x + l[1][1] * dsk.y;
        double pz = l[2][0] * dsk.x + l[2][1] * dsk.y + l[2][2] * z;
        Vec3f p = frame.t * float(px) + frame.b * float(py) + w * float(pz) + prim.center;
        double blo, bhi;
        if (!line_box_interval(p, w, prim.box, &blo, &bhi)) continue;
        // p sits on the ellipsoid surface, so t = 0 is one root of the quadric
        // and -b/a is the other; no discriminant needed
        double t_other = -2.0 * dot(w, prim.m * (p - prim.center)) / aq;
        double elo = std::min(0.0, t_other), ehi = std::max(0.0, t_other);
        if (std::max(blo, elo) <= std::min(bhi, ehi) + 1e-9) ++m;
    }
    return float(double(m) / double(n) * ellipse_area);
}

}  // namespace vlod
