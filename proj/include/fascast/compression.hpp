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

#include "fascast/channel.hpp"
#include "fascast/common.hpp"

namespace fascast
{
    // One frame restricted to the reference port: rows are tx antennas,
    // column m_delay * n_doppler + n_dopp holds bin (n_dopp, m_delay).
    struct RefMatrix
    {
        Eigen::MatrixXcd data;
        std::int64_t frame_index = 0;
    };

    // Truncated eigenbases of the spatial and delay-Doppler sample
    // covariances. Eigenvalue vectors keep the full spectra (descending) so
    // retained-energy ratios can be recomputed from the stored basis.
    struct PcaBasis
    {
        Eigen::MatrixXcd spatial_basis; // n_tx x r_s, orthonormal columns
        Eigen::MatrixXcd dd_basis;      // (n_delay * n_doppler) x r_d, orthonormal columns
        Eigen::VectorXd spatial_eigs;   // length n_tx, descending, >= 0
        Eigen::VectorXd dd_eigs;        // length n_delay * n_doppler, descending, >= 0
        double threshold = 0.0;
        double spatial_retained = 0.0; // leading-eigenvalue mass fraction at r_s
        double dd_retained = 0.0;

        int rank_s() const { return static_cast<int>(spatial_basis.cols()); }
        int rank_d() const { return static_cast<int>(dd_basis.cols()); }
    };

    // Compressed representation of one frame: r_s x r_d coefficients.
    struct Code
    {
        Eigen::MatrixXcd matrix;
        std::int64_t frame_index = 0;

        // Column-major flattening; from_vec is its exact inverse.
        Eigen::VectorXcd vec() const;
        static Code from_vec(const Eigen::VectorXcd &v, int rank_s, int rank_d,
                             std::int64_t frame_index);
    };

    // Unit-modulus per-port phasors of the plane-wave ramp; phasors(0) == 1.
    struct PhaseRamp
    {
        Eigen::VectorXcd phasors;
    };

    // Port whose slice has the largest mean energy over the given frames.
    // Ties go to the lowest index.
    int select_reference_port(const std::vector<ChannelTensor> &frames);

    // Same rule applied to precomputed per-port mean (or summed) energies.
    int select_reference_port(const Eigen::VectorXd &port_energy);

    RefMatrix extract_reference(const ChannelTensor &frame, int port);

    // Fits both bases on the training frames: sample covariances, Hermitian
    // eigendecomposition, and the smallest ranks whose leading eigenvalue
    // mass reaches the threshold.
    PcaBasis fit_pca(const std::vector<RefMatrix> &train_refs, double threshold);

    Code compress(const RefMatrix &ref, const PcaBasis &basis);
    RefMatrix reconstruct_ref(const Code &code, const PcaBasis &basis);

    PhaseRamp make_phase_ramp(const FasGeometry &geom);

    // Expands a reference-port matrix onto all ports of the ramp.
    ChannelTensor replicate_ports(const RefMatrix &ref, const PhaseRamp &ramp,
                                  const GridConfig &grid);

    // In-place differencing of successive code matrices (first kept as-is),
    // and its inverse. Optional storage-side transform, off by default.
    void delta_encode(std::vector<Code> &codes);
    void delta_decode(std::vector<Code> &codes);
}
