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
#include <functional>
#include <vector>

#include "fascast/common.hpp"

namespace fascast
{
    // Receive-side fluid antenna: a line of selectable ports along which the
    // radiating element can slide.
    struct FasGeometry
    {
        int n_ports = 16;
        double spacing_over_lambda = 0.1; // port spacing as a fraction of wavelength
        double elevation_rad = 0.7853981633974483; // satellite elevation, pi/4
        double loading_eps = 1e-6; // diagonal loading applied before the Cholesky factor

        void validate() const; // throws config_error naming the bad field
    };

    // Delay-Doppler resource grid and frame timing.
    struct GridConfig
    {
        int n_tx = 8;
        int n_doppler = 32;
        int n_delay = 32;
        double frame_duration_s = 1e-3;
        double doppler_res_hz = 0.0; // Hz spanned by one Doppler bin; must be set > 0

        int dd_bins() const { return n_doppler * n_delay; }
        void validate() const;
    };

    // Port correlation under the isotropic-ring law together with its loaded
    // Cholesky square root (lower triangular).
    struct CorrelationMatrix
    {
        Eigen::MatrixXd entries;
        Eigen::MatrixXcd sqrt_factor;
    };

    // One scattered propagation path, pinned to a delay-Doppler bin.
    struct ScatteredPath
    {
        int delay_bin = 0;   // >= 1; bin 0 is reserved for the direct path
        int doppler_bin = 0;
        double power = 0.0;
        Eigen::VectorXcd rx_vector; // white spatial seed, length n_ports
        Eigen::VectorXcd tx_gains;  // per-antenna gains, length n_tx
    };

    // Direct-path parameters plus all scattered paths of one realization.
    // Held fixed for a whole frame sequence; only phases evolve with time.
    struct ScattererSet
    {
        double rice_kappa = 0.0;
        int los_doppler_bin = 0;
        std::vector<ScatteredPath> paths;
    };

    // Complex channel coefficients of one frame, indexed by
    // (port, tx antenna, doppler bin, delay bin).
    struct ChannelTensor
    {
        int n_ports = 0;
        int n_tx = 0;
        int n_doppler = 0;
        int n_delay = 0;
        std::int64_t frame_index = 0;
        std::vector<cplx> data; // layout: ((p * n_tx + t) * n_doppler + d) * n_delay + m

        ChannelTensor() = default;
        ChannelTensor(int ports, int tx, int doppler, int delay, std::int64_t frame);

        std::size_t flat(int p, int t, int d, int m) const
        {
            return ((static_cast<std::size_t>(p) * n_tx + t) * n_doppler + d) * n_delay + m;
        }
        cplx &at(int p, int t, int d, int m) { return data[flat(p, t, d, m)]; }
        const cplx &at(int p, int t, int d, int m) const { return data[flat(p, t, d, m)]; }

        double energy() const;           // squared Frobenius norm over every entry
        double port_energy(int p) const; // squared norm of one port slice
    };

    enum class GenMode
    {
        correlated, // every port gets its own correlated fading draw
        phase_ramp  // ports are exact phase-shifted copies of port 0
    };

    // Port correlation from geometry: entries follow the zeroth-order Bessel
    // law in port separation, then a loaded Cholesky factor is attached.
    CorrelationMatrix build_fas_correlation(const FasGeometry &geom);

    // Draws path placement, powers and fading seeds. Delay bins are >= 1 and
    // (delay, doppler) pairs are pairwise distinct; powers sum to one. The
    // direct path sits at delay 0 and doppler bin n_doppler / 2.
    ScattererSet draw_scatterers(const FasGeometry &geom, const GridConfig &grid, int n_paths,
                                 double rice_kappa, std::uint64_t seed);

    // Assembles the frame tensor for one time index. Deterministic given the
    // scatterer set; no randomness is consumed here.
    ChannelTensor generate_frame(std::int64_t frame_index, const FasGeometry &geom,
                                 const GridConfig &grid, const ScattererSet &scat,
                                 const CorrelationMatrix &corr, GenMode mode);

    // Draws one scatterer set from the seed and renders n_frames consecutive
    // frames. Frames are independent given the set, so they are rendered in
    // parallel with disjoint output slots.
    std::vector<ChannelTensor> generate_sequence(int n_frames, const FasGeometry &geom,
                                                 const GridConfig &grid, int n_paths,
                                                 double rice_kappa, GenMode mode,
                                                 std::uint64_t seed);

    // Streaming variant: frames are handed to the sink in index order and
    // never accumulated. Used where a full sequence would not fit in memory.
    void generate_sequence_stream(int n_frames, const FasGeometry &geom, const GridConfig &grid,
                                  int n_paths, double rice_kappa, GenMode mode, std::uint64_t seed,
                                  const std::function<void(ChannelTensor &&)> &sink);
}
