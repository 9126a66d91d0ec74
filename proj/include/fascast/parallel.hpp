// SPDX-License-Identifier: Apache-2.0
//
// fascast: OTFS satellite-to-fluid-antenna channel simulation, compression
// and forecasting toolkit
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fascast::par
{
    // Global worker count. 1 selects the serial reference path; values > 1
    // enable the OpenMP path. Thread count must never change results: callers
    // of for_index write to disjoint outputs and reduce in index order.
    void set_threads(int n);
    int threads();

    // Runs body(i) for i in [0, n). Iterations may execute concurrently, so
    // the body must only write to locations owned by its own index.
    template <typename F>
    void for_index(std::size_t n, F &&body)
    {
        const int nt = threads();
        if (nt <= 1 || n < 2)
        {
            for (std::size_t i = 0; i < n; ++i)
                body(i);
            return;
        }
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nt)
        for (long long i = 0; i < static_cast<long long>(n); ++i)
            body(static_cast<std::size_t>(i));
#else
        for (std::size_t i = 0; i < n; ++i)
            body(i);
#endif
    }
}
