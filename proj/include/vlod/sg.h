// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vlod/vecmath.h"

namespace vlod {

// Spherical Gaussian c * exp(kappa * (dot(w, axis) - 1))
struct SgLobe {
    Vec3f axis{0, 0, 1};
    float kappa = 1.0f;
    float amplitude = 1.0f;
};

inline float sg_eval(const SgLobe &sg, const Vec3f &w) {
    return sg.amplitude * std::exp(sg.kappa * (dot(w, sg.axis) - 1.0f));
}

// integral over the full sphere: c * 2*pi/kappa * (1 - exp(-2*kappa))
inline double sg_integral(float kappa, float amplitude = 1.0f) {
    if (kappa < 1e-6f) return double(amplitude) * kFourPi;
    return double(amplitude) * 2.0 * kPi * (-std::expm1(-2.0 * double(kappa))) / double(kappa);
}

inline double sg_integral(const SgLobe &sg) { return sg_integral(sg.kappa, sg.amplitude); }

// The product of two SGs is an SG: axis along kappa1*mu1 + kappa2*mu2,
// sharpness = |kappa1*mu1 + kappa2*mu2|, amplitude picks up
// exp(kappa' - kappa1 - kappa2).
inline SgLobe sg_product(const SgLobe &a, const SgLobe &b) {
    Vec3f v = a.axis * a.kappa + b.axis * b.kappa;
    float kp = length(v);
    SgLobe out;
    out.axis = kp > 1e-9f ? v / kp : a.axis;
    out.kappa = kp;
    out.amplitude = a.amplitude * b.amplitude * std::exp(kp - a.kappa - b.kappa);
    return out;
}

// L2 fit of the clamped cosine max(dot(n, w), 0) by a single SG around n.
// For fixed kappa the best amplitude is closed form; the kappa line search
// happens over [0.5, 10]. Returns {axis = +z, kappa, amplitude}.
SgLobe fit_clamped_cosine_sg();

// residual of the returned fit, relative L2 over the sphere
double clamped_cosine_sg_residual(const SgLobe &fit);

}  // namespace vlod
