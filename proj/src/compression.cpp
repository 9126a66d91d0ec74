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

#include "fascast/compression.hpp"

#include <cmath>
#include <numbers>

#include "fascast/parallel.hpp"

namespace fascast
{
    Eigen::VectorXcd Code::vec() const
    {
        return Eigen::Map<const Eigen::VectorXcd>(matrix.data(), matrix.size());
    }

    Code Code::from_vec(const Eigen::VectorXcd &v, int rank_s, int rank_d,
                        std::int64_t frame_index)
    {
        if (rank_s < 1 || rank_d < 1 || v.size() != static_cast<Eigen::Index>(rank_s) * rank_d)
            throw argument_error("Code::from_vec: length does not equal rank_s * rank_d");
        Code code;
        code.matrix = Eigen::Map<const Eigen::MatrixXcd>(v.data(), rank_s, rank_d);
        code.frame_index = frame_index;
        return code;
    }

    int select_reference_port(const Eigen::VectorXd &port_energy)
    {
        if (port_energy.size() == 0)
            throw argument_error("select_reference_port: no ports");
        int best = 0;
        for (int p = 1; p < port_energy.size(); ++p)
            if (port_energy(p) > port_energy(best))
                best = p;
        return best;
    }

    int select_reference_port(const std::vector<ChannelTensor> &frames)
    {
        if (frames.empty())
            throw argument_error("select_reference_port: empty frame list");
        const int n_ports = frames.front().n_ports;
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(n_ports);
        for (const ChannelTensor &frame : frames)
        {
            if (frame.n_ports != n_ports)
                throw argument_error("select_reference_port: inconsistent port counts");
            for (int p = 0; p < n_ports; ++p)
                acc(p) += frame.port_energy(p);
        }
        // argmax of the sum equals argmax of the mean
        return select_reference_port(acc);
    }

    RefMatrix extract_reference(const ChannelTensor &frame, int port)
    {
        if (port < 0 || port >= frame.n_ports)
            throw argument_error("extract_reference: port index out of range");
        RefMatrix ref;
        ref.frame_index = frame.frame_index;
        ref.data.resize(frame.n_tx, static_cast<Eigen::Index>(frame.n_delay) * frame.n_doppler);
        for (int t = 0; t < frame.n_tx; ++t)
            for (int m = 0; m < frame.n_delay; ++m)
                for (int d = 0; d < frame.n_doppler; ++d)
                    ref.data(t, static_cast<Eigen::Index>(m) * frame.n_doppler + d) =
                        frame.at(port, t, d, m);
        return ref;
    }

    namespace
    {
        // Gram matrix Sᴴ S over fixed-width column tiles. Tiles write disjoint
        // output columns and each entry is produced by exactly one product
        // call, so the result does not depend on the worker count.
        constexpr Eigen::Index kGramTile = 64;

        Eigen::MatrixXcd gram_tiled(const Eigen::MatrixXcd &s)
        {
            const Eigen::Index n = s.cols();
            Eigen::MatrixXcd gram(n, n);
            const std::size_t n_tiles = static_cast<std::size_t>((n + kGramTile - 1) / kGramTile);
            par::for_index(n_tiles, [&](std::size_t tile) {
                const Eigen::Index c0 = static_cast<Eigen::Index>(tile) * kGramTile;
                const Eigen::Index w = std::min(kGramTile, n - c0);
                gram.middleCols(c0, w).noalias() = s.adjoint() * s.middleCols(c0, w);
            });
            return gram;
        }

        struct EigenPairs
        {
            Eigen::VectorXd values;  // descending, clamped at zero
            Eigen::MatrixXcd vectors; // columns aligned with values
        };

        // Hermitian eigendecomposition, descending, with the deterministic
        // phase convention: each vector is rotated so its largest-magnitude
        // entry (lowest index on ties) becomes real positive.
        EigenPairs decompose_descending(const Eigen::MatrixXcd &herm)
        {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(herm);
            if (solver.info() != Eigen::Success)
                throw numerical_error("fit_pca: eigendecomposition failed");

            const Eigen::Index n = herm.rows();
            EigenPairs out;
            out.values.resize(n);
            out.vectors.resize(n, n);
            for (Eigen::Index i = 0; i < n; ++i)
            {
                const Eigen::Index src = n - 1 - i; // solver returns ascending order
                out.values(i) = std::max(0.0, solver.eigenvalues()(src));
                Eigen::VectorXcd v = solver.eigenvectors().col(src);

                Eigen::Index pivot = 0;
                double best = std::abs(v(0));
                for (Eigen::Index k = 1; k < n; ++k)
                {
                    const double mag = std::abs(v(k));
                    if (mag > best)
                    {
                        best = mag;
                        pivot = k;
                    }
                }
                if (best > 0.0)
                    v *= std::conj(v(pivot)) / best;
                out.vectors.col(i) = v;
            }
            return out;
        }

        // Smallest r whose leading eigenvalue mass reaches the threshold.
        // The total is the same front-to-back prefix sum, so the ratio hits
        // exactly 1.0 at the last nonzero entry and the loop always stops.
        void pick_rank(const Eigen::VectorXd &values, double threshold, int &rank,
                       double &retained)
        {
            double total = 0.0;
            for (Eigen::Index i = 0; i < values.size(); ++i)
                total += values(i);
            if (!(total > 0.0))
                throw numerical_error("fit_pca: training data has zero energy");

            double running = 0.0;
            for (Eigen::Index i = 0; i < values.size(); ++i)
            {
                running += values(i);
                const double ratio = running / total;
                if (ratio >= threshold)
                {
                    rank = static_cast<int>(i) + 1;
                    retained = ratio;
                    return;
                }
            }
            // threshold <= 1 guarantees the loop returned; unreachable.
            throw numerical_error("fit_pca: rank selection did not terminate");
        }
    }

    PcaBasis fit_pca(const std::vector<RefMatrix> &train_refs, double threshold)
    {
        if (train_refs.empty())
            throw argument_error("fit_pca: need at least one training frame");
        if (!std::isfinite(threshold) || threshold <= 0.0 || threshold > 1.0)
            throw argument_error("fit_pca: threshold must lie in (0, 1]");

        const Eigen::Index n_tx = train_refs.front().data.rows();
        const Eigen::Index n_bins = train_refs.front().data.cols();
        for (const RefMatrix &ref : train_refs)
            if (ref.data.rows() != n_tx || ref.data.cols() != n_bins)
                throw argument_error("fit_pca: inconsistent training frame shapes");
        const double inv_n = 1.0 / static_cast<double>(train_refs.size());

        // Spatial side: n_tx is small, accumulate H Hᴴ frame by frame.
        Eigen::MatrixXcd r_s = Eigen::MatrixXcd::Zero(n_tx, n_tx);
        for (const RefMatrix &ref : train_refs)
            r_s.noalias() += ref.data * ref.data.adjoint();
        r_s *= inv_n;

        // Delay-Doppler side: sparse occupancy is the common case (a handful
        // of active bins out of thousands), and HᴴH is exactly zero in any
        // row/column whose bin is zero in every frame. Work on the active
        // subminor and embed the eigenvectors back afterwards.
        std::vector<Eigen::Index> active;
        active.reserve(static_cast<std::size_t>(n_bins));
        for (Eigen::Index c = 0; c < n_bins; ++c)
        {
            bool nonzero = false;
            for (const RefMatrix &ref : train_refs)
            {
                if (!ref.data.col(c).isZero(0.0))
                {
                    nonzero = true;
                    break;
                }
            }
            if (nonzero)
                active.push_back(c);
        }
        if (active.empty())
            throw numerical_error("fit_pca: training data has zero energy");
        const Eigen::Index n_active = static_cast<Eigen::Index>(active.size());

        Eigen::MatrixXcd stacked(n_tx * static_cast<Eigen::Index>(train_refs.size()), n_active);
        for (std::size_t f = 0; f < train_refs.size(); ++f)
            for (Eigen::Index j = 0; j < n_active; ++j)
                stacked.block(static_cast<Eigen::Index>(f) * n_tx, j, n_tx, 1) =
                    train_refs[f].data.col(active[static_cast<std::size_t>(j)]);
        Eigen::MatrixXcd r_d_active = gram_tiled(stacked);
        r_d_active *= inv_n;

        const EigenPairs spatial = decompose_descending(r_s);
        const EigenPairs dd = decompose_descending(r_d_active);

        PcaBasis basis;
        basis.threshold = threshold;
        basis.spatial_eigs = spatial.values;
        basis.dd_eigs = Eigen::VectorXd::Zero(n_bins);
        basis.dd_eigs.head(n_active) = dd.values; // zero-padded tail keeps descending order

        int rank_s = 0;
        int rank_d = 0;
        pick_rank(basis.spatial_eigs, threshold, rank_s, basis.spatial_retained);
        pick_rank(basis.dd_eigs, threshold, rank_d, basis.dd_retained);

        basis.spatial_basis = spatial.vectors.leftCols(rank_s);
        basis.dd_basis = Eigen::MatrixXcd::Zero(n_bins, rank_d);
        for (int j = 0; j < rank_d; ++j)
            for (Eigen::Index i = 0; i < n_active; ++i)
                basis.dd_basis(active[static_cast<std::size_t>(i)], j) = dd.vectors(i, j);
        return basis;
    }

    Code compress(const RefMatrix &ref, const PcaBasis &basis)
    {
        if (ref.data.rows() != basis.spatial_basis.rows() ||
            ref.data.cols() != basis.dd_basis.rows())
            throw argument_error("compress: frame shape does not match basis");
        Code code;
        code.frame_index = ref.frame_index;
        code.matrix.noalias() = basis.spatial_basis.adjoint() * ref.data * basis.dd_basis;
        return code;
    }

    RefMatrix reconstruct_ref(const Code &code, const PcaBasis &basis)
    {
        if (code.matrix.rows() != basis.rank_s() || code.matrix.cols() != basis.rank_d())
            throw argument_error("reconstruct_ref: code dims do not match basis ranks");
        RefMatrix ref;
        ref.frame_index = code.frame_index;
        ref.data.noalias() = basis.spatial_basis * code.matrix * basis.dd_basis.adjoint();
        return ref;
    }

    PhaseRamp make_phase_ramp(const FasGeometry &geom)
    {
        geom.validate();
        const double step = -2.0 * std::numbers::pi * geom.spacing_over_lambda *
                            std::sin(geom.elevation_rad);
        PhaseRamp ramp;
        ramp.phasors.resize(geom.n_ports);
        ramp.phasors(0) = cplx(1.0, 0.0);
        for (int p = 1; p < geom.n_ports; ++p)
        {
            const double arg = step * p;
            ramp.phasors(p) = cplx(std::cos(arg), std::sin(arg));
        }
        return ramp;
    }

    ChannelTensor replicate_ports(const RefMatrix &ref, const PhaseRamp &ramp,
                                  const GridConfig &grid)
    {
        grid.validate();
        const int n_ports = static_cast<int>(ramp.phasors.size());
        if (n_ports < 1)
            throw argument_error("replicate_ports: empty phase ramp");
        if (ref.data.rows() != grid.n_tx || ref.data.cols() != grid.dd_bins())
            throw argument_error("replicate_ports: reference shape does not match grid");

        ChannelTensor out(n_ports, grid.n_tx, grid.n_doppler, grid.n_delay, ref.frame_index);
        par::for_index(static_cast<std::size_t>(n_ports), [&](std::size_t p) {
            const cplx phasor = ramp.phasors(static_cast<Eigen::Index>(p));
            for (int t = 0; t < grid.n_tx; ++t)
                for (int m = 0; m < grid.n_delay; ++m)
                    for (int d = 0; d < grid.n_doppler; ++d)
                        out.at(static_cast<int>(p), t, d, m) =
                            ref.data(t, static_cast<Eigen::Index>(m) * grid.n_doppler + d) *
                            phasor;
        });
        return out;
    }

    void delta_encode(std::vector<Code> &codes)
    {
        for (std::size_t i = codes.size(); i > 1; --i)
            codes[i - 1].matrix -= codes[i - 2].matrix;
    }

    void delta_decode(std::vector<Code> &codes)
    {
        for (std::size_t i = 1; i < codes.size(); ++i)
            codes[i].matrix += codes[i - 1].matrix;
    }
}
