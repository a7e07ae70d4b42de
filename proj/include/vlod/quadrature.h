// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

namespace vlod {

// Gauss-Legendre nodes/weights on [lo, hi], Newton iteration on P_n
inline void gauss_legendre(int n, double lo, double hi, std::vector<double> *nodes,
                           std::vector<double> *weights) {
    nodes->resize(n);
    weights->resize(n);
    int m = (n + 1) / 2;
    double mid = 0.5 * (hi + lo), half = 0.5 * (hi - lo);
    for (int i = 0; i < m; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            double dx = p0 / pp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        (*nodes)[i] = mid - half * x;
        (*nodes)[n - 1 - i] = mid + half * x;
        (*weights)[i] = 2.0 * half / ((1.0 - x * x) * pp * pp);
        (*weights)[n - 1 - i] = (*weights)[i];
    }
}

}  // namespace vlod
