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

#include "fascast/common.hpp"

namespace fascast
{
    // Repeats the last observed row for every forecast step.
    Eigen::MatrixXd persistence_predict(const Eigen::MatrixXd &history, int n_future);

    // Per-feature scalar autoregression: each feature is regressed on its own
    // `order` most recent lags with ridge-regularized least squares.
    struct ArModel
    {
        int order = 0;
        double ridge = 0.0;
        Eigen::MatrixXd coeffs; // order x D; row k weighs lag k+1
    };

    ArModel ar_fit(const Eigen::MatrixXd &series, int order, double ridge);

    // Closed-loop rollout: each forecast step feeds the next.
    Eigen::MatrixXd ar_predict(const ArModel &model, const Eigen::MatrixXd &history, int n_future);
}
