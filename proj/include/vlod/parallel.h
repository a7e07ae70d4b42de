// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace vlod {

// Parallel loop over [0, n). Work items must be independent and write only
// their own slots so results do not depend on the thread count.
template <typename F>
inline void parallel_for(int64_t n, F &&f) {
#pragma omp parallel for schedule(dynamic, 8)
    for (int64_t i = 0; i < n; ++i) f(i);
}

}  // namespace vlod
