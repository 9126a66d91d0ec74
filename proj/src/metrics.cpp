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

#include "fascast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace fascast
{
    void LinkParams::validate() const
    {
        if (!(snr_linear >= 0.0) || !std::isfinite(snr_linear))
            throw argument_error("LinkParams: snr_linear must be non-negative and finite");
        if (!(target_rate >= 0.0) || !std::isfinite(target_rate))
            throw argument_error("LinkParams: target_rate must be non-negative and finite");
    }

    namespace
    {
        template <typename Mat>
        void accumulate_errors(const std::vector<Mat> &preds, const std::vector<Mat> &truths,
                               double &err_sq, double &ref_sq)
        {
            if (preds.empty() || preds.size() != truths.size())
                throw argument_error("metrics: prediction/truth lists empty or of unequal length");
            err_sq = 0.0;
            ref_sq = 0.0;
            for (std::size_t i = 0; i < preds.size(); ++i)
            {
                if (preds[i].rows() != truths[i].rows() || preds[i].cols() != truths[i].cols())
                    throw argument_error("metrics: prediction/truth shapes differ");
                err_sq += (preds[i] - truths[i]).squaredNorm();
                ref_sq += truths[i].squaredNorm();
            }
        }

        template <typename Mat>
        double nmse_db_impl(const std::vector<Mat> &preds, const std::vector<Mat> &truths)
        {
            double err_sq = 0.0;
            double ref_sq = 0.0;
            accumulate_errors(preds, truths, err_sq, ref_sq);
            if (!(ref_sq > 0.0))
                throw argument_error("nmse_db: reference energy is zero; NMSE undefined");
            if (!(err_sq > 0.0))
                return kNmseFloorDb;
            return std::max(kNmseFloorDb, 10.0 * std::log10(err_sq / ref_sq));
        }

        template <typename Mat>
        double rmse_impl(const std::vector<Mat> &preds, const std::vector<Mat> &truths)
        {
            double err_sq = 0.0;
            double ref_sq = 0.0;
            accumulate_errors(preds, truths, err_sq, ref_sq);
            return std::sqrt(err_sq / static_cast<double>(preds.size()));
        }
    }

    double nmse_db(const std::vector<Eigen::MatrixXcd> &preds,
                   const std::vector<Eigen::MatrixXcd> &truths)
    {
        return nmse_db_impl(preds, truths);
    }

    double nmse_db(const std::vector<Eigen::MatrixXd> &preds,
                   const std::vector<Eigen::MatrixXd> &truths)
    {
        return nmse_db_impl(preds, truths);
    }

    double rmse(const std::vector<Eigen::MatrixXcd> &preds,
                const std::vector<Eigen::MatrixXcd> &truths)
    {
        return rmse_impl(preds, truths);
    }

    double rmse(const std::vector<Eigen::MatrixXd> &preds,
                const std::vector<Eigen::MatrixXd> &truths)
    {
        return rmse_impl(preds, truths);
    }

    double frame_capacity(const Eigen::MatrixXcd &dd_slice, double snr_linear)
    {
        if (!(snr_linear >= 0.0) || !std::isfinite(snr_linear))
            throw argument_error("frame_capacity: snr must be non-negative and finite");
        if (dd_slice.size() == 0)
            throw argument_error("frame_capacity: empty slice");
        double acc = 0.0;
        for (Eigen::Index j = 0; j < dd_slice.cols(); ++j)
            for (Eigen::Index i = 0; i < dd_slice.rows(); ++i)
                acc += std::log2(1.0 + snr_linear * std::norm(dd_slice(i, j)));
        return acc / static_cast<double>(dd_slice.size());
    }

    double ergodic_capacity(const std::vector<Eigen::MatrixXcd> &dd_slices, double snr_linear)
    {
        if (dd_slices.empty())
            throw argument_error("ergodic_capacity: empty frame list");
        double acc = 0.0;
        for (const Eigen::MatrixXcd &slice : dd_slices)
            acc += frame_capacity(slice, snr_linear);
        return acc / static_cast<double>(dd_slices.size());
    }

    double outage_probability(const std::vector<double> &frame_capacities, double target_rate)
    {
        if (frame_capacities.empty())
            throw argument_error("outage_probability: empty capacity list");
        if (!(target_rate >= 0.0) || !std::isfinite(target_rate))
            throw argument_error("outage_probability: target rate must be non-negative");
        std::size_t below = 0;
        for (double c : frame_capacities)
            if (c < target_rate)
                ++below;
        return static_cast<double>(below) / static_cast<double>(frame_capacities.size());
    }

    double outage_probability(const std::vector<Eigen::MatrixXcd> &dd_slices, double snr_linear,
                              double target_rate)
    {
        if (dd_slices.empty())
            throw argument_error("outage_probability: empty frame list");
        std::vector<double> caps;
        caps.reserve(dd_slices.size());
        for (const Eigen::MatrixXcd &slice : dd_slices)
            caps.push_back(frame_capacity(slice, snr_linear));
        return outage_probability(caps, target_rate);
    }

    double active_tap_capacity(const Eigen::MatrixXcd &dd_slice, double snr_linear,
                               double energy_fraction)
    {
        if (!(snr_linear >= 0.0) || !std::isfinite(snr_linear))
            throw argument_error("active_tap_capacity: snr must be non-negative and finite");
        if (!(energy_fraction > 0.0) || energy_fraction > 1.0)
            throw argument_error("active_tap_capacity: energy_fraction must lie in (0, 1]");
        if (dd_slice.size() == 0)
            throw argument_error("active_tap_capacity: empty slice");

        const Eigen::Index n = dd_slice.size();
        std::vector<double> power(static_cast<std::size_t>(n));
        double total = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
        {
            power[static_cast<std::size_t>(i)] = std::norm(*(dd_slice.data() + i));
            total += power[static_cast<std::size_t>(i)];
        }
        if (!(total > 0.0))
            throw argument_error("active_tap_capacity: zero-energy frame; capacity undefined");

        std::vector<std::size_t> idx(static_cast<std::size_t>(n));
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return power[a] > power[b]; });

        const double wanted = energy_fraction * total;
        std::vector<std::size_t> active;
        double covered = 0.0;
        for (std::size_t i : idx)
        {
            active.push_back(i);
            covered += power[i];
            if (covered >= wanted)
                break;
        }

        // Rescale so the mean active-tap power is one.
        const double mean_power = covered / static_cast<double>(active.size());
        double acc = 0.0;
        for (std::size_t i : active)
            acc += std::log2(1.0 + snr_linear * power[i] / mean_power);
        return acc / static_cast<double>(active.size());
    }

    void MetricReport::add(const std::string &metric, const std::string &horizon,
                           const std::string &snr, double value, const std::string &hash)
    {
        rows.push_back({metric, horizon, snr, value, hash});
    }

    std::string MetricReport::to_csv() const
    {
        std::string out = "metric,horizon,snr_db,value,config_hash\n";
        char buf[64];
        for (const MetricRow &row : rows)
        {
            std::snprintf(buf, sizeof(buf), "%.17g", row.value);
            out += row.metric;
            out += ',';
            out += row.horizon;
            out += ',';
            out += row.snr_db;
            out += ',';
            out += buf;
            out += ',';
            out += row.config_hash;
            out += '\n';
        }
        return out;
    }
}
