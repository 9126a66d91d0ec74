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

#include <cstdint>
#include <vector>

#include "fascast/common.hpp"
#include "fascast/model.hpp"

namespace fascast
{
    // Per-feature affine standardization fitted on the training split only.
    struct Normalizer
    {
        Eigen::VectorXd mean;
        Eigen::VectorXd stddev; // strictly positive

        // Population statistics per column. Columns whose std is negligible
        // relative to their mean magnitude keep std = 1 so constant features
        // standardize to zero instead of amplified rounding noise.
        static Normalizer fit(const Eigen::MatrixXd &rows);

        Eigen::MatrixXd apply(const Eigen::MatrixXd &rows) const;
        Eigen::MatrixXd invert(const Eigen::MatrixXd &rows) const;
    };

    // Sliding windows over a feature series (rows are time steps).
    struct WindowDataset
    {
        std::vector<Eigen::MatrixXd> past;   // each n_past x D
        std::vector<Eigen::MatrixXd> future; // each n_future x D
    };

    // Stride-1 windows with start s in [first_start, row_limit - n_past -
    // n_future]; a window uses rows [s, s+n_past) and targets the n_future
    // rows after them. May be empty if the range does not fit.
    WindowDataset make_windows(const Eigen::MatrixXd &series, int n_past, int n_future,
                               Eigen::Index first_start, Eigen::Index row_limit);

    struct TrainConfig
    {
        double learning_rate = 1e-3;
        int batch_size = 16;
        int epochs = 50;
        std::uint64_t seed = 42;
        double loss_eps = 1e-8;     // NMSE loss denominator guard
        TrainMode mode = TrainMode::lora_only;
        double weight_decay = 0.0;  // decoupled
        double momentum = 0.9;
        double clip_norm = 1.0;     // global gradient norm cap; 0 disables
        bool plain_sgd = false;     // fallback: no momentum, no decay

        void validate() const;
    };

    struct TrainResult
    {
        std::vector<double> epoch_loss; // mean training batch loss per epoch
        double val_nmse = 0.0;          // linear NMSE on de-standardized predictions
        double val_nmse_db = 0.0;       // same in dB, clamped at -300
    };

    // Mini-batch first-order training with decoupled weight decay. Windows
    // are shuffled per epoch from the seeded generator; batches and gradient
    // reductions run in a fixed order, so a rerun is bit-identical. Throws
    // training_error (with the epoch) if the loss leaves the finite range.
    TrainResult train(MicroModel &m, const WindowDataset &train_set, const WindowDataset &val_set,
                      const Normalizer &norm, const TrainConfig &cfg);

    // Splits complex code vectors into [Re; Im] feature rows and back.
    Eigen::MatrixXd realify_codes(const std::vector<Eigen::VectorXcd> &codes);
    std::vector<Eigen::VectorXcd> complexify_rows(const Eigen::MatrixXd &rows);

    // Forecast the next n_queries codes from the trailing n_past entries of
    // the history: standardize, run the model, de-standardize.
    std::vector<Eigen::VectorXcd> predict_codes(const MicroModel &m, const Normalizer &norm,
                                                const std::vector<Eigen::VectorXcd> &history,
                                                int n_past);
}
