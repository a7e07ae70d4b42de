// SPDX-License-Identifier: Apache-2.0
#include "vlod/sg.h"

namespace vlod {

// 2*pi * integral_0^1 exp(kappa*(t-1)) * t dt = 2*pi * (kappa - 1 + exp(-kappa)) / kappa^2
static double sg_dot_clamped_cos(double kappa) {
    return 2.0 * kPi * (kappa - 1.0 + std::exp(-kappa)) / (kappa * kappa);
}

// 2*pi * integral_-1^1 exp(2*kappa*(t-1)) dt = pi * (1 - exp(-4*kappa)) / kappa
static double sg_dot_sg(double kappa) {
    return kPi * (-std::expm1(-4.0 * kappa)) / kappa;
}

SgLobe fit_clamped_cosine_sg() {
    // maximize I1(kappa)^2 / I2(kappa); unimodal, golden-section on [0.5, 10]
    auto score = [](double kappa) {
        double i1 = sg_dot_clamped_cos(kappa);
        return i1 * i1 / sg_dot_sg(kappa);
    };
    const double gr = 0.6180339887498949;
    double lo = 0.5, hi = 10.0;
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = score(x1), f2 = score(x2);
    for (int it = 0; it < 80; ++it) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = score(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = score(x1);
        }
    }
    double kappa = 0.5 * (lo + hi);
    double c = sg_dot_clamped_cos(kappa) / sg_dot_sg(kappa);
    SgLobe out;
    out.axis = {0, 0, 1};
    out.kappa = float(kappa);
    out.amplitude = float(c);
    return out;
}

double clamped_cosine_sg_residual(const SgLobe &fit) {
    // ||c*SG - <cos>||^2 = c^2*I2 - 2*c*I1 + 2*pi/3, relative to ||<cos>||^2
    double c = fit.amplitude, kappa = fit.kappa;
    double target_norm2 = 2.0 * kPi / 3.0;
    double err2 = c * c * sg_dot_sg(kappa) - 2.0 * c * sg_dot_clamped_cos(kappa) + target_norm2;
    return std::sqrt(std::max(0.0, err2) / target_norm2);
}

}  // namespace vlod
