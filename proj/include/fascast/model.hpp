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
#include <string>
#include <vector>

#include "fascast/common.hpp"

namespace fascast
{
    // Trainable low-rank update attached to a frozen projection:
    // effective weight = W + alpha * down * up.
    struct LoraPair
    {
        Eigen::MatrixXd down; // width x rank
        Eigen::MatrixXd up;   // rank x width
    };

    // One pre-norm residual block: multi-head self-attention followed by a
    // position-wise feed-forward expansion of factor 4.
    struct AttentionBlock
    {
        Eigen::VectorXd ln1_gain, ln1_bias;
        Eigen::MatrixXd w_query, w_key, w_value, w_proj; // width x width
        LoraPair lora_query, lora_value;
        Eigen::VectorXd ln2_gain, ln2_bias;
        Eigen::MatrixXd w_ff1; // width x 4*width
        Eigen::VectorXd b_ff1;
        Eigen::MatrixXd w_ff2; // 4*width x width
        Eigen::VectorXd b_ff2;
    };

    // Sequence-to-forecast transformer. The past window is embedded into
    // width-dimensional tokens, n_queries learnable query tokens are appended,
    // the joint sequence runs through the blocks, and the query positions are
    // projected back to feature space as the forecast.
    struct MicroModel
    {
        int feat_dim = 0;  // D, real features per time step
        int width = 0;     // D_h
        int n_heads = 1;   // must divide width
        int n_queries = 0; // M, forecast steps
        int lora_rank = 0;
        double lora_alpha = 1.0;

        Eigen::MatrixXd w_in; // feat_dim x width
        Eigen::VectorXd b_in;
        Eigen::MatrixXd queries; // n_queries x width
        std::vector<AttentionBlock> blocks;
        Eigen::MatrixXd w_out; // width x feat_dim
        Eigen::VectorXd b_out;

        int head_dim() const { return n_heads > 0 ? width / n_heads : 0; }
    };

    // Parameter grouping used to decide what trains in each mode.
    enum class ParamKind
    {
        base,    // embedding, attention/FFN projections, layer norms
        adapter, // LoRA factors
        head     // query tokens and the output projection
    };

    enum class TrainMode
    {
        full,     // every parameter trains (plain-transformer baseline)
        lora_only // adapters + head train; base weights stay frozen
    };

    bool is_trainable(ParamKind kind, TrainMode mode);

    // Visits every parameter array in a fixed declaration order. The same
    // order drives the optimizer state, serialization and gradient checks.
    // Visitor signature: f(const std::string& name, ParamKind, Eigen::MatrixXd&)
    // plus an overload taking Eigen::VectorXd&.
    template <typename Model, typename F>
    void visit_params(Model &m, F &&f)
    {
        f("w_in", ParamKind::base, m.w_in);
        f("b_in", ParamKind::base, m.b_in);
        f("queries", ParamKind::head, m.queries);
        for (std::size_t l = 0; l < m.blocks.size(); ++l)
        {
            auto &blk = m.blocks[l];
            const std::string prefix = "block" + std::to_string(l) + ".";
            f(prefix + "ln1_gain", ParamKind::base, blk.ln1_gain);
            f(prefix + "ln1_bias", ParamKind::base, blk.ln1_bias);
            f(prefix + "w_query", ParamKind::base, blk.w_query);
            f(prefix + "lora_query.down", ParamKind::adapter, blk.lora_query.down);
            f(prefix + "lora_query.up", ParamKind::adapter, blk.lora_query.up);
            f(prefix + "w_key", ParamKind::base, blk.w_key);
            f(prefix + "w_value", ParamKind::base, blk.w_value);
            f(prefix + "lora_value.down", ParamKind::adapter, blk.lora_value.down);
            f(prefix + "lora_value.up", ParamKind::adapter, blk.lora_value.up);
            f(prefix + "w_proj", ParamKind::base, blk.w_proj);
            f(prefix + "ln2_gain", ParamKind::base, blk.ln2_gain);
            f(prefix + "ln2_bias", ParamKind::base, blk.ln2_bias);
            f(prefix + "w_ff1", ParamKind::base, blk.w_ff1);
            f(prefix + "b_ff1", ParamKind::base, blk.b_ff1);
            f(prefix + "w_ff2", ParamKind::base, blk.w_ff2);
            f(prefix + "b_ff2", ParamKind::base, blk.b_ff2);
        }
        f("w_out", ParamKind::head, m.w_out);
        f("b_out", ParamKind::head, m.b_out);
    }

    // Seeded initialization: weights, queries and LoRA down factors from
    // N(0, 0.02^2); biases, norms neutral; LoRA up factors zero so the
    // adapters start as an exact no-op.
    MicroModel make_micro_model(int feat_dim, int width, int n_blocks, int n_heads, int n_queries,
                                int lora_rank, double lora_alpha, std::uint64_t seed);

    // Same shapes as m with every parameter array zeroed; gradient container.
    MicroModel zeros_like(const MicroModel &m);

    Eigen::MatrixXd lora_effective(const Eigen::MatrixXd &w, const LoraPair &pair, double alpha);

    // Scaled dot-product attention over row-token matrices with the
    // max-subtracted softmax. Single head; callers split columns per head.
    Eigen::MatrixXd attention(const Eigen::MatrixXd &queries, const Eigen::MatrixXd &keys,
                              const Eigen::MatrixXd &values);

    // Forward pass for one sample: past is n_past x feat_dim (rows are time
    // steps), result is n_queries x feat_dim.
    Eigen::MatrixXd forward(const MicroModel &m, const Eigen::MatrixXd &past);

    // Batch NMSE: sum of squared errors over the whole batch divided by the
    // target energy plus eps.
    double nmse_loss(const std::vector<Eigen::MatrixXd> &preds,
                     const std::vector<Eigen::MatrixXd> &targets, double eps);

    // Forward + reverse pass over a batch. Returns the batch loss, fills
    // grads (zeroed first) with d loss / d parameter, with arrays frozen
    // under `mode` left at zero. Per-sample work runs in parallel; gradients
    // are reduced in sample order.
    double forward_backward(const MicroModel &m, const std::vector<Eigen::MatrixXd> &past,
                            const std::vector<Eigen::MatrixXd> &targets, double eps,
                            TrainMode mode, MicroModel &grads);
}
