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

#include "fascast/parallel.hpp"

#include <atomic>

#include <Eigen/Core>

namespace fascast::par
{
    namespace
    {
        std::atomic<int> g_threads{1};

        // Eigen's own threading would introduce schedule-dependent reduction
        // orders inside matrix products, breaking bitwise reproducibility.
        // All parallelism goes through for_index instead.
        struct EigenSingleThreadGuard
        {
            EigenSingleThreadGuard() { Eigen::setNbThreads(1); }
        };
        const EigenSingleThreadGuard g_eigen_guard;
    }

    void set_threads(int n)
    {
        g_threads.store(n < 1 ? 1 : n);
    }

    int threads()
    {
        return g_threads.load();
    }
}
