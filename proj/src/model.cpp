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

#include "fascast/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "fascast/parallel.hpp"

namespace fascast
{
    namespace
    {
        constexpr double kLnEps = 1e-5;
        constexpr double kInitStd = 0.02;

        double gelu(double x)
        {
            return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2));
        }

        double gelu_deriv(double x)
        {
            const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
            const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
            return cdf + x * pdf;
        }

        void check_model(const MicroModel &m)
        {
            if (m.feat_dim < 1 || m.width < 1 || m.n_queries < 1)
                throw argument_error("model: feat_dim, width and n_queries must be positive");
            if (m.n_heads < 1 || m.width % m.n_heads != 0)
                throw argument_error("model: n_heads must divide width");
            if (m.lora_rank < 0 || m.lora_rank > m.width)
                throw argument_error("model: lora_rank must lie in [0, width]");
            if (m.blocks.empty())
                throw argument_error("model: needs at least one block");
        }

        // Row-wise stabilized softmax, in place.
        void softmax_rows(Eigen::MatrixXd &s)
        {
            const Eigen::VectorXd rmax = s.rowwise().maxCoeff();
            s.colwise() -= rmax;
            s = s.array().exp().matrix();
            const Eigen::VectorXd rsum = s.rowwise().sum();
            s.array().colwise() /= rsum.array();
        }

        struct LnCache
        {
            Eigen::MatrixXd xhat;
            Eigen::VectorXd istd;
        };

        Eigen::MatrixXd layernorm_forward(const Eigen::MatrixXd &x, const Eigen::VectorXd &gain,
                                          const Eigen::VectorXd &bias, LnCache &cache)
        {
            const Eigen::VectorXd mean = x.rowwise().mean();
            const Eigen::MatrixXd centered = x.colwise() - mean;
            const Eigen::VectorXd var = centered.array().square().rowwise().mean().matrix();
            cache.istd = (var.array() + kLnEps).rsqrt().matrix();
            cache.xhat = (centered.array().colwise() * cache.istd.array()).matrix();
            Eigen::MatrixXd y = (cache.xhat.array().rowwise() * gain.transpose().array()).matrix();
            y.rowwise() += bias.transpose();
            return y;
        }

        // dy -> dx; accumulates the gain/bias gradients.
        Eigen::MatrixXd layernorm_backward(const Eigen::MatrixXd &dy, const LnCache &cache,
                                           const Eigen::VectorXd &gain, Eigen::VectorXd &g_gain,
                                           Eigen::VectorXd &g_bias)
        {
            g_gain += (dy.array() * cache.xhat.array()).colwise().sum().matrix().transpose();
            g_bias += dy.colwise().sum().transpose();

            const Eigen::MatrixXd dxhat =
                (dy.array().rowwise() * gain.transpose().array()).matrix();
            const Eigen::VectorXd m1 = dxhat.rowwise().mean();
            const Eigen::VectorXd m2 = (dxhat.array() * cache.xhat.array()).rowwise().mean().matrix();
            Eigen::MatrixXd dx = ((dxhat.colwise() - m1).array() -
                                  cache.xhat.array().colwise() * m2.array())
                                     .matrix();
            dx.array().colwise() *= cache.istd.array();
            return dx;
        }

        struct BlockCache
        {
            LnCache ln1;
            Eigen::MatrixXd ln1_out;
            Eigen::MatrixXd q, k, v;
            std::vector<Eigen::MatrixXd> probs; // per-head attention weights
            Eigen::MatrixXd concat;
            LnCache ln2;
            Eigen::MatrixXd ln2_out;
            Eigen::MatrixXd ff_pre, ff_act;
        };

        struct FwdCache
        {
            std::vector<BlockCache> blocks;
            Eigen::MatrixXd stream; // residual stream after the last block
        };

        Eigen::MatrixXd forward_cached(const MicroModel &m, const Eigen::MatrixXd &past,
                                       FwdCache &cache)
        {
            const Eigen::Index n_past = past.rows();
            const Eigen::Index n_tok = n_past + m.n_queries;
            const int dk = m.head_dim();
            const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));

            Eigen::MatrixXd x(n_tok, m.width);
            x.topRows(n_past).noalias() = past * m.w_in;
            x.topRows(n_past).rowwise() += m.b_in.transpose();
            x.bottomRows(m.n_queries) = m.queries;

            cache.blocks.resize(m.blocks.size());
            for (std::size_t l = 0; l < m.blocks.size(); ++l)
            {
                const AttentionBlock &blk = m.blocks[l];
                BlockCache &bc = cache.blocks[l];
                bc.ln1_out = layernorm_forward(x, blk.ln1_gain, blk.ln1_bias, bc.ln1);

                const Eigen::MatrixXd wq_eff =
                    lora_effective(blk.w_query, blk.lora_query, m.lora_alpha);
                const Eigen::MatrixXd wv_eff =
                    lora_effective(blk.w_value, blk.lora_value, m.lora_alpha);
                bc.q.noalias() = bc.ln1_out * wq_eff;
                bc.k.noalias() = bc.ln1_out * blk.w_key;
                bc.v.noalias() = bc.ln1_out * wv_eff;

                bc.probs.resize(static_cast<std::size_t>(m.n_heads));
                bc.concat.resize(n_tok, m.width);
                for (int h = 0; h < m.n_heads; ++h)
                {
                    Eigen::MatrixXd s =
                        bc.q.middleCols(h * dk, dk) * bc.k.middleCols(h * dk, dk).transpose();
                    s *= inv_sqrt_dk;
                    softmax_rows(s);
                    bc.concat.middleCols(h * dk, dk).noalias() =
                        s * bc.v.middleCols(h * dk, dk);
                    bc.probs[static_cast<std::size_t>(h)] = std::move(s);
                }

                x.noalias() += bc.concat * blk.w_proj; // x is now the mid stream

                bc.ln2_out = layernorm_forward(x, blk.ln2_gain, blk.ln2_bias, bc.ln2);
                bc.ff_pre.noalias() = bc.ln2_out * blk.w_ff1;
                bc.ff_pre.rowwise() += blk.b_ff1.transpose();
                bc.ff_act = bc.ff_pre.unaryExpr([](double t) { return gelu(t); });

                x.noalias() += bc.ff_act * blk.w_ff2;
                x.rowwise() += blk.b_ff2.transpose();
            }
            cache.stream = x;

            Eigen::MatrixXd pred = cache.stream.bottomRows(m.n_queries) * m.w_out;
            pred.rowwise() += m.b_out.transpose();
            return pred;
        }

        // Reverse pass for one sample; dpred is d loss / d prediction.
        void backward_cached(const MicroModel &m, const Eigen::MatrixXd &past,
                             const FwdCache &cache, const Eigen::MatrixXd &dpred, MicroModel &g)
        {
            const Eigen::Index n_past = past.rows();
            const int dk = m.head_dim();
            const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));

            g.w_out.noalias() += cache.stream.bottomRows(m.n_queries).transpose() * dpred;
            g.b_out += dpred.colwise().sum().transpose();

            Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(cache.stream.rows(), m.width);
            dx.bottomRows(m.n_queries).noalias() = dpred * m.w_out.transpose();

            for (std::size_t li = m.blocks.size(); li > 0; --li)
            {
                const AttentionBlock &blk = m.blocks[li - 1];
                const BlockCache &bc = cache.blocks[li - 1];
                AttentionBlock &gblk = g.blocks[li - 1];

                // feed-forward sublayer
                gblk.w_ff2.noalias() += bc.ff_act.transpose() * dx;
                gblk.b_ff2 += dx.colwise().sum().transpose();
                const Eigen::MatrixXd d_act = dx * blk.w_ff2.transpose();
                const Eigen::MatrixXd d_pre =
                    (d_act.array() *
                     bc.ff_pre.unaryExpr([](double t) { return gelu_deriv(t); }).array())
                        .matrix();
                gblk.w_ff1.noalias() += bc.ln2_out.transpose() * d_pre;
                gblk.b_ff1 += d_pre.colwise().sum().transpose();
                const Eigen::MatrixXd d_ln2out = d_pre * blk.w_ff1.transpose();
                Eigen::MatrixXd dx_mid = layernorm_backward(d_ln2out, bc.ln2, blk.ln2_gain,
                                                            gblk.ln2_gain, gblk.ln2_bias);
                dx_mid += dx; // residual branch

                // attention sublayer
                gblk.w_proj.noalias() += bc.concat.transpose() * dx_mid;
                const Eigen::MatrixXd d_concat = dx_mid * blk.w_proj.transpose();

                Eigen::MatrixXd dq(bc.q.rows(), m.width);
                Eigen::MatrixXd dkk(bc.k.rows(), m.width);
                Eigen::MatrixXd dv(bc.v.rows(), m.width);
                for (int h = 0; h < m.n_heads; ++h)
                {
                    const Eigen::MatrixXd &p = bc.probs[static_cast<std::size_t>(h)];
                    const Eigen::MatrixXd d_oh = d_concat.middleCols(h * dk, dk);
                    const Eigen::MatrixXd dp = d_oh * bc.v.middleCols(h * dk, dk).transpose();
                    dv.middleCols(h * dk, dk).noalias() = p.transpose() * d_oh;

                    const Eigen::VectorXd dots = (p.array() * dp.array()).rowwise().sum().matrix();
                    const Eigen::MatrixXd ds =
                        ((dp.colwise() - dots).array() * p.array() * inv_sqrt_dk).matrix();
                    dq.middleCols(h * dk, dk).noalias() = ds * bc.k.middleCols(h * dk, dk);
                    dkk.middleCols(h * dk, dk).noalias() =
                        ds.transpose() * bc.q.middleCols(h * dk, dk);
                }

                const Eigen::MatrixXd wq_eff =
                    lora_effective(blk.w_query, blk.lora_query, m.lora_alpha);
                const Eigen::MatrixXd wv_eff =
                    lora_effective(blk.w_value, blk.lora_value, m.lora_alpha);

                const Eigen::MatrixXd gq_eff = bc.ln1_out.transpose() * dq;
                const Eigen::MatrixXd gv_eff = bc.ln1_out.transpose() * dv;
                gblk.w_query += gq_eff;
                gblk.w_value += gv_eff;
                if (m.lora_rank > 0)
                {
                    gblk.lora_query.down.noalias() +=
                        m.lora_alpha * gq_eff * blk.lora_query.up.transpose();
                    gblk.lora_query.up.noalias() +=
                        m.lora_alpha * blk.lora_query.down.transpose() * gq_eff;
                    gblk.lora_value.down.noalias() +=
                        m.lora_alpha * gv_eff * blk.lora_value.up.transpose();
                    gblk.lora_value.up.noalias() +=
                        m.lora_alpha * blk.lora_value.down.transpose() * gv_eff;
                }
                gblk.w_key.noalias() += bc.ln1_out.transpose() * dkk;

                Eigen::MatrixXd d_ln1out = dq * wq_eff.transpose();
                d_ln1out.noalias() += dkk * blk.w_key.transpose();
                d_ln1out.noalias() += dv * wv_eff.transpose();
                const Eigen::MatrixXd dx_in = layernorm_backward(
                    d_ln1out, bc.ln1, blk.ln1_gain, gblk.ln1_gain, gblk.ln1_bias);
                dx = dx_mid + dx_in;
            }

            g.queries += dx.bottomRows(m.n_queries);
            g.w_in.noalias() += past.transpose() * dx.topRows(n_past);
            g.b_in += dx.topRows(n_past).colwise().sum().transpose();
        }
    }

    bool is_trainable(ParamKind kind, TrainMode mode)
    {
        if (mode == TrainMode::lora_only)
            return kind != ParamKind::base;
        return true;
    }

    MicroModel make_micro_model(int feat_dim, int width, int n_blocks, int n_heads, int n_queries,
                                int lora_rank, double lora_alpha, std::uint64_t seed)
    {
        if (n_blocks < 1)
            throw argument_error("make_micro_model: n_blocks must be at least 1");
        MicroModel m;
        m.feat_dim = feat_dim;
        m.width = width;
        m.n_heads = n_heads;
        m.n_queries = n_queries;
        m.lora_rank = lora_rank;
        m.lora_alpha = lora_alpha;
        m.blocks.resize(static_cast<std::size_t>(n_blocks));
        if (!std::isfinite(lora_alpha))
            throw argument_error("make_micro_model: lora_alpha must be finite");

        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, kInitStd);
        const auto fill = [&](Eigen::MatrixXd &w, Eigen::Index rows, Eigen::Index cols) {
            w.resize(rows, cols);
            for (Eigen::Index j = 0; j < cols; ++j)
                for (Eigen::Index i = 0; i < rows; ++i)
                    w(i, j) = gauss(rng);
        };

        fill(m.w_in, feat_dim, width);
        m.b_in = Eigen::VectorXd::Zero(width);
        fill(m.queries, n_queries, width);
        for (AttentionBlock &blk : m.blocks)
        {
            blk.ln1_gain = Eigen::VectorXd::Ones(width);
            blk.ln1_bias = Eigen::VectorXd::Zero(width);
            fill(blk.w_query, width, width);
            fill(blk.lora_query.down, width, lora_rank);
            blk.lora_query.up = Eigen::MatrixXd::Zero(lora_rank, width);
            fill(blk.w_key, width, width);
            fill(blk.w_value, width, width);
            fill(blk.lora_value.down, width, lora_rank);
            blk.lora_value.up = Eigen::MatrixXd::Zero(lora_rank, width);
            fill(blk.w_proj, width, width);
            blk.ln2_gain = Eigen::VectorXd::Ones(width);
            blk.ln2_bias = Eigen::VectorXd::Zero(width);
            fill(blk.w_ff1, width, 4 * width);
            blk.b_ff1 = Eigen::VectorXd::Zero(4 * width);
            fill(blk.w_ff2, 4 * width, width);
            blk.b_ff2 = Eigen::VectorXd::Zero(width);
        }
        fill(m.w_out, width, feat_dim);
        m.b_out = Eigen::VectorXd::Zero(feat_dim);

        check_model(m);
        return m;
    }

    MicroModel zeros_like(const MicroModel &m)
    {
        MicroModel z = m;
        visit_params(z, [](const std::string &, ParamKind, auto &arr) { arr.setZero(); });
        return z;
    }

    Eigen::MatrixXd lora_effective(const Eigen::MatrixXd &w, const LoraPair &pair, double alpha)
    {
        // An entirely empty pair means the adapter is absent.
        if (pair.down.size() == 0 && pair.up.size() == 0)
            return w;
        if (pair.down.rows() != w.rows() || pair.up.cols() != w.cols() ||
            pair.down.cols() != pair.up.rows())
            throw argument_error("lora_effective: adapter shapes do not match the base weight");
        if (alpha == 0.0 || pair.down.cols() == 0)
            return w;
        return w + alpha * pair.down * pair.up;
    }

    Eigen::MatrixXd attention(const Eigen::MatrixXd &queries, const Eigen::MatrixXd &keys,
                              const Eigen::MatrixXd &values)
    {
        if (queries.cols() != keys.cols())
            throw argument_error("attention: query/key dims differ");
        if (keys.rows() != values.rows())
            throw argument_error("attention: key/value sequence lengths differ");
        if (queries.rows() < 1 || keys.rows() < 1 || queries.cols() < 1)
            throw argument_error("attention: empty operands");
        if (!queries.allFinite() || !keys.allFinite() || !values.allFinite())
            throw numerical_error("attention: non-finite inputs");

        Eigen::MatrixXd s = queries * keys.transpose();
        s *= 1.0 / std::sqrt(static_cast<double>(queries.cols()));
        softmax_rows(s);
        return s * values;
    }

    Eigen::MatrixXd forward(const MicroModel &m, const Eigen::MatrixXd &past)
    {
        check_model(m);
        if (past.cols() != m.feat_dim || past.rows() < 1)
            throw argument_error("forward: past window must be n_past x feat_dim");
        if (!past.allFinite())
            throw numerical_error("forward: non-finite input");
        FwdCache cache;
        return forward_cached(m, past, cache);
    }

    double nmse_loss(const std::vector<Eigen::MatrixXd> &preds,
                     const std::vector<Eigen::MatrixXd> &targets, double eps)
    {
        if (preds.empty() || preds.size() != targets.size())
            throw argument_error("nmse_loss: batch sizes differ or empty");
        if (!(eps > 0.0))
            throw argument_error("nmse_loss: eps must be positive");
        double num = 0.0;
        double den = 0.0;
        for (std::size_t b = 0; b < preds.size(); ++b)
        {
            if (preds[b].rows() != targets[b].rows() || preds[b].cols() != targets[b].cols())
                throw argument_error("nmse_loss: prediction/target shapes differ");
            num += (preds[b] - targets[b]).squaredNorm();
            den += targets[b].squaredNorm();
        }
        return num / (den + eps);
    }

    double forward_backward(const MicroModel &m, const std::vector<Eigen::MatrixXd> &past,
                            const std::vector<Eigen::MatrixXd> &targets, double eps,
                            TrainMode mode, MicroModel &grads)
    {
        check_model(m);
        if (past.empty() || past.size() != targets.size())
            throw argument_error("forward_backward: batch sizes differ or empty");
        if (!(eps > 0.0))
            throw argument_error("forward_backward: eps must be positive");
        const std::size_t batch = past.size();
        for (std::size_t b = 0; b < batch; ++b)
        {
            if (past[b].cols() != m.feat_dim || past[b].rows() < 1)
                throw argument_error("forward_backward: past window must be n_past x feat_dim");
            if (targets[b].rows() != m.n_queries || targets[b].cols() != m.feat_dim)
                throw argument_error("forward_backward: target must be n_queries x feat_dim");
        }

        std::vector<FwdCache> caches(batch);
        std::vector<Eigen::MatrixXd> preds(batch);
        par::for_index(batch, [&](std::size_t b) {
            preds[b] = forward_cached(m, past[b], caches[b]);
        });

        // Batch-global loss pieces accumulate in sample order.
        double num = 0.0;
        double den = 0.0;
        for (std::size_t b = 0; b < batch; ++b)
        {
            num += (preds[b] - targets[b]).squaredNorm();
            den += targets[b].squaredNorm();
        }
        den += eps;
        const double loss = num / den;

        std::vector<MicroModel> sample_grads(batch, zeros_like(m));
        par::for_index(batch, [&](std::size_t b) {
            const Eigen::MatrixXd dpred = (2.0 / den) * (preds[b] - targets[b]);
            backward_cached(m, past[b], caches[b], dpred, sample_grads[b]);
        });

        visit_params(grads, [](const std::string &, ParamKind, auto &arr) { arr.setZero(); });
        std::vector<double *> dst_ptrs;
        std::vector<std::size_t> dst_sizes;
        visit_params(grads, [&](const std::string &, ParamKind, auto &arr) {
            dst_ptrs.push_back(arr.data());
            dst_sizes.push_back(static_cast<std::size_t>(arr.size()));
        });
        // Reduce per-sample gradients in index order so the result does not
        // depend on the worker count.
        for (std::size_t b = 0; b < batch; ++b)
        {
            std::size_t slot = 0;
            visit_params(sample_grads[b], [&](const std::string &, ParamKind, auto &arr) {
                double *dst = dst_ptrs[slot];
                const double *src = arr.data();
                for (std::size_t i = 0; i < dst_sizes[slot]; ++i)
                    dst[i] += src[i];
                ++slot;
            });
        }

        // Arrays frozen under this mode report zero gradient.
        visit_params(grads, [&](const std::string &, ParamKind kind, auto &arr) {
            if (!is_trainable(kind, mode))
                arr.setZero();
        });
        return loss;
    }
}
