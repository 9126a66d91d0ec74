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

#include <string>
#include <vector>

#include "fascast/common.hpp"

namespace fascast
{
    // Perfect predictions clamp here instead of -inf.
    inline constexpr double kNmseFloorDb = -300.0;

    struct LinkParams
    {
        double snr_linear = 1.0; // rho
        double target_rate = 1.0; // R0, bit/s/Hz

        void validate() const;
    };

    // 10*log10(sum of squared errors / reference energy) over the whole list.
    double nmse_db(const std::vector<Eigen::MatrixXcd> &preds,
                   const std::vector<Eigen::MatrixXcd> &truths);
    double nmse_db(const std::vector<Eigen::MatrixXd> &preds,
                   const std::vector<Eigen::MatrixXd> &truths);

    // sqrt(mean over samples of the squared error norm).
    double rmse(const std::vector<Eigen::MatrixXcd> &preds,
                const std::vector<Eigen::MatrixXcd> &truths);
    double rmse(const std::vector<Eigen::MatrixXd> &preds,
                const std::vector<Eigen::MatrixXd> &truths);

    // Mean over all bins of log2(1 + rho*|H|^2) for one delay-Doppler slice
    // (a single port/tx pair picked by the caller).
    double frame_capacity(const Eigen::MatrixXcd &dd_slice, double snr_linear);

    // Mean of frame_capacity over the list.
    double ergodic_capacity(const std::vector<Eigen::MatrixXcd> &dd_slices, double snr_linear);

    // Empirical fraction of frames whose capacity is below the target rate.
    double outage_probability(const std::vector<Eigen::MatrixXcd> &dd_slices, double snr_linear,
                              double target_rate);
    double outage_probability(const std::vector<double> &frame_capacities, double target_rate);

    // Capacity restricted to the strongest taps: bins are taken in descending
    // energy order (index order on ties) until energy_fraction of the frame
    // energy is covered, powers are rescaled so the mean active-tap power is
    // one, then log2(1 + rho*|H|^2) is averaged over the active taps.
    double active_tap_capacity(const Eigen::MatrixXcd &dd_slice, double snr_linear,
                               double energy_fraction);

    // One CSV record: (metric, horizon M, snr_db, value, config-hash).
    // horizon/snr may be empty when a metric does not depend on them.
    struct MetricRow
    {
        std::string metric;
        std::string horizon;
        std::string snr_db;
        double value = 0.0;
        std::string config_hash;
    };

    struct MetricReport
    {
        std::vector<MetricRow> rows;

        void add(const std::string &metric, const std::string &horizon, const std::string &snr,
                 double value, const std::string &hash);
        // Header row plus one line per record, with full-precision values.
        std::string to_csv() const;
    };
}
