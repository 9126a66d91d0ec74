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

#include "fascast/baselines.hpp"

#include <cmath>

namespace fascast
{
    Eigen::MatrixXd persistence_predict(const Eigen::MatrixXd &history, int n_future)
    {
        if (history.rows() < 1)
            throw argument_error("persistence_predict: empty history");
        if (n_future < 1)
            throw argument_error("persistence_predict: n_future must be positive");
        return history.row(history.rows() - 1).replicate(n_future, 1);
    }

    ArModel ar_fit(const Eigen::MatrixXd &series, int order, double ridge)
    {
        if (order < 1)
            throw argument_error("ar_fit: order must be positive");
        if (!(ridge >= 0.0) || !std::isfinite(ridge))
            throw argument_error("ar_fit: ridge must be non-negative and finite");
        const Eigen::Index t_len = series.rows();
        const Eigen::Index n_eq = t_len - order;
        if (n_eq < 1)
            throw argument_error("ar_fit: series shorter than order + 1");

        ArModel model;
        model.order = order;
        model.ridge = ridge;
        model.coeffs.resize(order, series.cols());

        Eigen::MatrixXd design(n_eq, order);
        for (Eigen::Index d = 0; d < series.cols(); ++d)
        {
            for (Eigen::Index i = 0; i < n_eq; ++i)
                for (int k = 0; k < order; ++k)
                    design(i, k) = series(order + i - 1 - k, d);
            const Eigen::VectorXd y = series.col(d).segment(order, n_eq);

            Eigen::MatrixXd normal = design.transpose() * design;
            normal.diagonal().array() += ridge;
            const Eigen::VectorXd rhs = design.transpose() * y;
            if (ridge > 0.0)
            {
                model.coeffs.col(d) = normal.ldlt().solve(rhs);
            }
            else
            {
                const Eigen::FullPivLU<Eigen::MatrixXd> lu(normal);
                if (!lu.isInvertible())
                    throw numerical_error("ar_fit: singular normal equations; add ridge");
                model.coeffs.col(d) = lu.solve(rhs);
            }
        }
        return model;
    }

    Eigen::MatrixXd ar_predict(const ArModel &model, const Eigen::MatrixXd &history, int n_future)
    {
        if (model.order < 1 || model.coeffs.rows() != model.order)
            throw argument_error("ar_predict: model not fitted");
        if (history.cols() != model.coeffs.cols())
            throw argument_error("ar_predict: feature count does not match the model");
        if (history.rows() < model.order)
            throw argument_error("ar_predict: history shorter than the model order");
        if (n_future < 1)
            throw argument_error("ar_predict: n_future must be positive");

        const Eigen::Index d_feat = history.cols();
        // Rolling buffer of the most recent `order` rows, newest last.
        Eigen::MatrixXd recent = history.bottomRows(model.order);
        Eigen::MatrixXd out(n_future, d_feat);
        for (int s = 0; s < n_future; ++s)
        {
            for (Eigen::Index d = 0; d < d_feat; ++d)
            {
                double v = 0.0;
                for (int k = 0; k < model.order; ++k)
                    v += model.coeffs(k, d) * recent(model.order - 1 - k, d);
                out(s, d) = v;
            }
            // shift up, append the new row
            for (int r = 0; r + 1 < model.order; ++r)
                recent.row(r) = recent.row(r + 1);
            recent.row(model.order - 1) = out.row(s);
        }
        return out;
    }
}
