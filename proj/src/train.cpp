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

#include "fascast/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fascast/metrics.hpp"
#include "fascast/parallel.hpp"

namespace fascast
{
    Normalizer Normalizer::fit(const Eigen::MatrixXd &rows)
    {
        if (rows.rows() < 1 || rows.cols() < 1)
            throw argument_error("Normalizer::fit: empty training matrix");
        Normalizer norm;
        norm.mean = rows.colwise().mean();
        const Eigen::MatrixXd centered = rows.rowwise() - norm.mean.transpose();
        norm.stddev = centered.array().square().colwise().mean().sqrt().matrix().transpose();
        for (Eigen::Index j = 0; j < norm.stddev.size(); ++j)
        {
            const double floor = 1e-12 * std::max(1.0, std::abs(norm.mean(j)));
            if (!(norm.stddev(j) > floor))
                norm.stddev(j) = 1.0;
        }
        return norm;
    }

    Eigen::MatrixXd Normalizer::apply(const Eigen::MatrixXd &rows) const
    {
        if (rows.cols() != mean.size())
            throw argument_error("Normalizer::apply: feature count mismatch");
        return ((rows.rowwise() - mean.transpose()).array().rowwise() /
                stddev.transpose().array())
            .matrix();
    }

    Eigen::MatrixXd Normalizer::invert(const Eigen::MatrixXd &rows) const
    {
        if (rows.cols() != mean.size())
            throw argument_error("Normalizer::invert: feature count mismatch");
        Eigen::MatrixXd out =
            (rows.array().rowwise() * stddev.transpose().array()).matrix();
        out.rowwise() += mean.transpose();
        return out;
    }

    WindowDataset make_windows(const Eigen::MatrixXd &series, int n_past, int n_future,
                               Eigen::Index first_start, Eigen::Index row_limit)
    {
        if (n_past < 1 || n_future < 1)
            throw argument_error("make_windows: window lengths must be positive");
        if (first_start < 0 || row_limit > series.rows())
            throw argument_error("make_windows: window range outside the series");

        WindowDataset set;
        const Eigen::Index span = n_past + n_future;
        for (Eigen::Index s = first_start; s + span <= row_limit; ++s)
        {
            set.past.push_back(series.middleRows(s, n_past));
            set.future.push_back(series.middleRows(s + n_past, n_future));
        }
        return set;
    }

    void TrainConfig::validate() const
    {
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
            throw config_error("train.learning_rate", "must be positive and finite");
        if (batch_size < 1)
            throw config_error("train.batch_size", "must be at least 1");
        if (epochs < 0)
            throw config_error("train.epochs", "must be non-negative");
        if (!(loss_eps > 0.0))
            throw config_error("train.loss_eps", "must be positive");
        if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay))
            throw config_error("train.weight_decay", "must be non-negative and finite");
        if (!(momentum >= 0.0) || momentum >= 1.0)
            throw config_error("train.momentum", "must lie in [0, 1)");
        if (!(clip_norm >= 0.0) || !std::isfinite(clip_norm))
            throw config_error("train.clip_norm", "must be non-negative and finite");
    }

    namespace
    {
        struct FlatView
        {
            double *data;
            std::size_t size;
            ParamKind kind;
        };

        std::vector<FlatView> flat_views(MicroModel &m)
        {
            std::vector<FlatView> views;
            visit_params(m, [&](const std::string &, ParamKind kind, auto &arr) {
                views.push_back({arr.data(), static_cast<std::size_t>(arr.size()), kind});
            });
            return views;
        }
    }

    TrainResult train(MicroModel &m, const WindowDataset &train_set, const WindowDataset &val_set,
                      const Normalizer &norm, const TrainConfig &cfg)
    {
        cfg.validate();
        if (train_set.past.empty() || train_set.past.size() != train_set.future.size())
            throw argument_error("train: empty or inconsistent training windows");
        if (val_set.past.size() != val_set.future.size())
            throw argument_error("train: inconsistent validation windows");

        MicroModel grads = zeros_like(m);
        MicroModel velocity = zeros_like(m);
        const std::vector<FlatView> theta = flat_views(m);
        const std::vector<FlatView> g = flat_views(grads);
        const std::vector<FlatView> vel = flat_views(velocity);

        std::mt19937_64 rng(cfg.seed);
        std::vector<std::size_t> order(train_set.past.size());
        std::iota(order.begin(), order.end(), std::size_t{0});

        TrainResult result;
        result.epoch_loss.reserve(static_cast<std::size_t>(cfg.epochs));

        std::vector<Eigen::MatrixXd> batch_past, batch_future;
        for (int epoch = 0; epoch < cfg.epochs; ++epoch)
        {
            std::shuffle(order.begin(), order.end(), rng);
            double loss_sum = 0.0;
            std::size_t n_batches = 0;
            for (std::size_t b0 = 0; b0 < order.size(); b0 += static_cast<std::size_t>(cfg.batch_size))
            {
                const std::size_t b1 =
                    std::min(order.size(), b0 + static_cast<std::size_t>(cfg.batch_size));
                batch_past.clear();
                batch_future.clear();
                for (std::size_t i = b0; i < b1; ++i)
                {
                    batch_past.push_back(train_set.past[order[i]]);
                    batch_future.push_back(train_set.future[order[i]]);
                }

                const double loss =
                    forward_backward(m, batch_past, batch_future, cfg.loss_eps, cfg.mode, grads);
                if (!std::isfinite(loss))
                    throw training_error(epoch, "training loss left the finite range");
                loss_sum += loss;
                ++n_batches;

                // Global gradient-norm clip over the trainable arrays, in the
                // fixed parameter order.
                if (cfg.clip_norm > 0.0)
                {
                    double sq = 0.0;
                    for (const FlatView &gv : g)
                        for (std::size_t i = 0; i < gv.size; ++i)
                            sq += gv.data[i] * gv.data[i];
                    const double gn = std::sqrt(sq);
                    if (gn > cfg.clip_norm)
                    {
                        const double scale = cfg.clip_norm / gn;
                        for (const FlatView &gv : g)
                            for (std::size_t i = 0; i < gv.size; ++i)
                                gv.data[i] *= scale;
                    }
                }

                const double beta = cfg.plain_sgd ? 0.0 : cfg.momentum;
                const double decay = cfg.plain_sgd ? 0.0 : cfg.weight_decay;
                for (std::size_t a = 0; a < theta.size(); ++a)
                {
                    if (!is_trainable(theta[a].kind, cfg.mode))
                        continue;
                    for (std::size_t i = 0; i < theta[a].size; ++i)
                    {
                        vel[a].data[i] = beta * vel[a].data[i] + g[a].data[i];
                        theta[a].data[i] -= cfg.learning_rate * vel[a].data[i];
                        if (decay > 0.0)
                            theta[a].data[i] -= cfg.learning_rate * decay * theta[a].data[i];
                    }
                }
            }
            result.epoch_loss.push_back(n_batches > 0 ? loss_sum / static_cast<double>(n_batches)
                                                      : 0.0);
        }

        // Validation on de-standardized predictions against raw-scale targets.
        if (val_set.past.empty())
        {
            result.val_nmse = std::numeric_limits<double>::quiet_NaN();
            result.val_nmse_db = std::numeric_limits<double>::quiet_NaN();
            return result;
        }
        std::vector<Eigen::MatrixXd> preds(val_set.past.size());
        par::for_index(val_set.past.size(), [&](std::size_t i) {
            preds[i] = norm.invert(forward(m, val_set.past[i]));
        });
        double num = 0.0;
        double den = 0.0;
        for (std::size_t i = 0; i < preds.size(); ++i)
        {
            const Eigen::MatrixXd truth = norm.invert(val_set.future[i]);
            num += (preds[i] - truth).squaredNorm();
            den += truth.squaredNorm();
        }
        if (!(den > 0.0))
            throw numerical_error("train: validation targets have zero energy");
        result.val_nmse = num / den;
        result.val_nmse_db =
            num > 0.0 ? std::max(kNmseFloorDb, 10.0 * std::log10(result.val_nmse)) : kNmseFloorDb;
        return result;
    }

    Eigen::MatrixXd realify_codes(const std::vector<Eigen::VectorXcd> &codes)
    {
        if (codes.empty())
            throw argument_error("realify_codes: empty code list");
        const Eigen::Index n = codes.front().size();
        Eigen::MatrixXd rows(static_cast<Eigen::Index>(codes.size()), 2 * n);
        for (std::size_t t = 0; t < codes.size(); ++t)
        {
            if (codes[t].size() != n)
                throw argument_error("realify_codes: inconsistent code lengths");
            rows.row(static_cast<Eigen::Index>(t)).head(n) = codes[t].real();
            rows.row(static_cast<Eigen::Index>(t)).tail(n) = codes[t].imag();
        }
        return rows;
    }

    std::vector<Eigen::VectorXcd> complexify_rows(const Eigen::MatrixXd &rows)
    {
        if (rows.cols() % 2 != 0)
            throw argument_error("complexify_rows: feature count must be even");
        const Eigen::Index n = rows.cols() / 2;
        std::vector<Eigen::VectorXcd> codes(static_cast<std::size_t>(rows.rows()));
        for (Eigen::Index t = 0; t < rows.rows(); ++t)
        {
            codes[static_cast<std::size_t>(t)].resize(n);
            for (Eigen::Index i = 0; i < n; ++i)
                codes[static_cast<std::size_t>(t)](i) = cplx(rows(t, i), rows(t, n + i));
        }
        return codes;
    }

    std::vector<Eigen::VectorXcd> predict_codes(const MicroModel &m, const Normalizer &norm,
                                                const std::vector<Eigen::VectorXcd> &history,
                                                int n_past)
    {
        if (n_past < 1 || history.size() < static_cast<std::size_t>(n_past))
            throw argument_error("predict_codes: history shorter than the past window");
        const std::vector<Eigen::VectorXcd> tail(history.end() - n_past, history.end());
        const Eigen::MatrixXd raw = realify_codes(tail);
        if (raw.cols() != m.feat_dim)
            throw argument_error("predict_codes: code length does not match the model");
        const Eigen::MatrixXd pred = norm.invert(forward(m, norm.apply(raw)));
        return complexify_rows(pred);
    }
}
