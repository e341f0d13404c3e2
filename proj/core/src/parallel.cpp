// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#include "splatview/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace splatview {

int configure_threads() {
    if (const char *env = std::getenv("SPLATVIEW_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) {
                omp_set_num_threads(n);
            }
        } catch (const std::exception &) {
            // non-numeric values fall back to the runtime default
        }
    }
    return omp_get_max_threads();
}

} // namespace splatview
