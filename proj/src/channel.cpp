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

#include "fascast/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "fascast/bessel.hpp"
#include "fascast/compression.hpp"
#include "fascast/parallel.hpp"

namespace fascast
{
    void FasGeometry::validate() const
    {
        if (n_ports < 1)
            throw config_error("geometry.n_ports", "must be at least 1");
        if (!std::isfinite(spacing_over_lambda) || spacing_over_lambda <= 0.0)
            throw config_error("geometry.spacing_over_lambda", "must be positive and finite");
        if (!std::isfinite(elevation_rad) || elevation_rad < 0.0 ||
            elevation_rad > std::numbers::pi / 2.0)
            throw config_error("geometry.elevation_rad", "must lie in [0, pi/2]");
        if (!std::isfinite(loading_eps) || loading_eps <= 0.0)
            throw config_error("geometry.loading_eps", "must be positive and finite");
    }

    void GridConfig::validate() const
    {
        if (n_tx < 1)
            throw config_error("grid.n_tx", "must be at least 1");
        if (n_doppler < 1)
            throw config_error("grid.n_doppler", "must be at least 1");
        if (n_delay < 1)
            throw config_error("grid.n_delay", "must be at least 1");
        if (!std::isfinite(frame_duration_s) || frame_duration_s <= 0.0)
            throw config_error("grid.frame_duration_s", "must be positive and finite");
        if (!std::isfinite(doppler_res_hz) || doppler_res_hz <= 0.0)
            throw config_error("grid.doppler_res_hz", "must be positive and finite");
    }

    ChannelTensor::ChannelTensor(int ports, int tx, int doppler, int delay, std::int64_t frame)
        : n_ports(ports), n_tx(tx), n_doppler(doppler), n_delay(delay), frame_index(frame),
          data(static_cast<std::size_t>(ports) * tx * doppler * delay, cplx(0.0, 0.0))
    {
    }

    double ChannelTensor::energy() const
    {
        double acc = 0.0;
        for (const cplx &z : data)
            acc += std::norm(z);
        return acc;
    }

    double ChannelTensor::port_energy(int p) const
    {
        if (p < 0 || p >= n_ports)
            throw argument_error("port_energy: port index out of range");
        const std::size_t slice = static_cast<std::size_t>(n_tx) * n_doppler * n_delay;
        double acc = 0.0;
        for (std::size_t i = slice * p; i < slice * (p + 1); ++i)
            acc += std::norm(data[i]);
        return acc;
    }

    CorrelationMatrix build_fas_correlation(const FasGeometry &geom)
    {
        geom.validate();
        const int n = geom.n_ports;
        const double scale =
            2.0 * std::numbers::pi * geom.spacing_over_lambda * std::sin(geom.elevation_rad);

        CorrelationMatrix corr;
        corr.entries.resize(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                corr.entries(i, j) = bessel_j0(scale * std::abs(i - j));

        // The Bessel law is positive semi-definite but can be numerically
        // rank-deficient for dense ports, so load the diagonal before
        // factorizing.
        Eigen::MatrixXd loaded = corr.entries;
        loaded.diagonal().array() += geom.loading_eps;
        Eigen::LLT<Eigen::MatrixXd> llt(loaded);
        if (llt.info() != Eigen::Success)
            throw numerical_error("build_fas_correlation: Cholesky factorization failed");
        corr.sqrt_factor = llt.matrixL().toDenseMatrix().cast<cplx>();
        return corr;
    }

    ScattererSet draw_scatterers(const FasGeometry &geom, const GridConfig &grid, int n_paths,
                                 double rice_kappa, std::uint64_t seed)
    {
        geom.validate();
        grid.validate();
        if (n_paths < 0)
            throw argument_error("draw_scatterers: n_paths must be non-negative");
        if (!std::isfinite(rice_kappa) || rice_kappa < 0.0)
            throw argument_error("draw_scatterers: rice_kappa must be non-negative and finite");

        // Delay bin 0 is reserved for the direct path, leaving
        // (n_delay - 1) * n_doppler distinct scatterer slots.
        const std::int64_t slots = static_cast<std::int64_t>(grid.n_delay - 1) * grid.n_doppler;
        if (n_paths > slots)
            throw config_error("channel.n_paths",
                               "cannot place this many distinct delay-Doppler bins");

        std::mt19937_64 rng(seed);

        ScattererSet scat;
        scat.rice_kappa = rice_kappa;
        scat.los_doppler_bin = grid.n_doppler / 2;
        scat.paths.resize(n_paths);

        std::vector<std::int64_t> slot_ids(static_cast<std::size_t>(slots));
        std::iota(slot_ids.begin(), slot_ids.end(), 0);
        std::shuffle(slot_ids.begin(), slot_ids.end(), rng);
        for (int p = 0; p < n_paths; ++p)
        {
            scat.paths[p].delay_bin = 1 + static_cast<int>(slot_ids[p] / grid.n_doppler);
            scat.paths[p].doppler_bin = static_cast<int>(slot_ids[p] % grid.n_doppler);
        }

        std::uniform_real_distribution<double> unif(0.0, 1.0);
        double power_sum = 0.0;
        for (int p = 0; p < n_paths; ++p)
        {
            double u = unif(rng);
            while (u <= 0.0)
                u = unif(rng);
            scat.paths[p].power = -std::log(u);
            power_sum += scat.paths[p].power;
        }
        for (int p = 0; p < n_paths; ++p)
            scat.paths[p].power /= power_sum;

        // Unit-variance circular Gaussians: Re and Im each have std 0.5.
        std::normal_distribution<double> gauss(0.0, 0.5);
        for (int p = 0; p < n_paths; ++p)
        {
            ScatteredPath &path = scat.paths[p];
            path.rx_vector.resize(geom.n_ports);
            for (int i = 0; i < geom.n_ports; ++i)
            {
                const double re = gauss(rng);
                const double im = gauss(rng);
                path.rx_vector(i) = cplx(re, im);
            }
            path.tx_gains.resize(grid.n_tx);
            for (int t = 0; t < grid.n_tx; ++t)
            {
                const double re = gauss(rng);
                const double im = gauss(rng);
                path.tx_gains(t) = cplx(re, im);
            }
        }
        return scat;
    }

    namespace
    {
        void check_frame_inputs(const FasGeometry &geom, const GridConfig &grid,
                                const ScattererSet &scat, const CorrelationMatrix &corr)
        {
            geom.validate();
            grid.validate();
            if (corr.sqrt_factor.rows() != geom.n_ports || corr.sqrt_factor.cols() != geom.n_ports)
                throw argument_error("generate_frame: correlation factor does not match n_ports");
            if (scat.los_doppler_bin < 0 || scat.los_doppler_bin >= grid.n_doppler)
                throw argument_error("generate_frame: direct-path Doppler bin out of range");
            for (const ScatteredPath &path : scat.paths)
            {
                if (path.delay_bin < 1 || path.delay_bin >= grid.n_delay)
                    throw argument_error("generate_frame: scattered delay bin out of range");
                if (path.doppler_bin < 0 || path.doppler_bin >= grid.n_doppler)
                    throw argument_error("generate_frame: scattered Doppler bin out of range");
                if (path.rx_vector.size() != geom.n_ports)
                    throw argument_error("generate_frame: rx_vector length does not match n_ports");
                if (path.tx_gains.size() != grid.n_tx)
                    throw argument_error("generate_frame: tx_gains length does not match n_tx");
            }
        }

        cplx doppler_phase(int doppler_bin, const GridConfig &grid, std::int64_t frame_index)
        {
            const double freq = doppler_bin * grid.doppler_res_hz;
            const double arg =
                2.0 * std::numbers::pi * freq * static_cast<double>(frame_index) *
                grid.frame_duration_s;
            return cplx(std::cos(arg), std::sin(arg));
        }
    }

    ChannelTensor generate_frame(std::int64_t frame_index, const FasGeometry &geom,
                                 const GridConfig &grid, const ScattererSet &scat,
                                 const CorrelationMatrix &corr, GenMode mode)
    {
        check_frame_inputs(geom, grid, scat, corr);

        ChannelTensor out(geom.n_ports, grid.n_tx, grid.n_doppler, grid.n_delay, frame_index);
        const double kappa = scat.rice_kappa;
        const double los_amp = std::sqrt(kappa / (kappa + 1.0));
        const double nlos_amp = std::sqrt(1.0 / (kappa + 1.0));
        const cplx los_phase = doppler_phase(scat.los_doppler_bin, grid, frame_index);

        if (mode == GenMode::correlated)
        {
            const Eigen::VectorXcd b = corr.sqrt_factor.col(0);
            const cplx los_coef_base = los_amp * los_phase;
            for (int p = 0; p < geom.n_ports; ++p)
            {
                const cplx v = los_coef_base * b(p); // unit tx gains
                for (int t = 0; t < grid.n_tx; ++t)
                    out.at(p, t, scat.los_doppler_bin, 0) += v;
            }
            for (const ScatteredPath &path : scat.paths)
            {
                const Eigen::VectorXcd spatial = corr.sqrt_factor * path.rx_vector;
                const cplx c0 = nlos_amp * std::sqrt(path.power) *
                                doppler_phase(path.doppler_bin, grid, frame_index);
                for (int p = 0; p < geom.n_ports; ++p)
                {
                    const cplx pg = c0 * spatial(p);
                    for (int t = 0; t < grid.n_tx; ++t)
                        out.at(p, t, path.doppler_bin, path.delay_bin) += pg * path.tx_gains(t);
                }
            }
            return out;
        }

        // phase_ramp: render the reference port (port 0), then copy it onto
        // every other port under the plane-wave phase progression. This makes
        // the ramp-replication round trip exact by construction.
        const PhaseRamp ramp = make_phase_ramp(geom);
        const cplx b0 = corr.sqrt_factor(0, 0);
        const cplx los_v = los_amp * los_phase * b0;
        for (int p = 0; p < geom.n_ports; ++p)
        {
            const cplx v = los_v * ramp.phasors(p);
            for (int t = 0; t < grid.n_tx; ++t)
                out.at(p, t, scat.los_doppler_bin, 0) += v;
        }
        for (const ScatteredPath &path : scat.paths)
        {
            const cplx scalar = b0 * path.rx_vector(0); // port-0 entry of the correlated draw
            const cplx c0 = nlos_amp * std::sqrt(path.power) *
                            doppler_phase(path.doppler_bin, grid, frame_index) * scalar;
            for (int t = 0; t < grid.n_tx; ++t)
            {
                const cplx ref_v = c0 * path.tx_gains(t);
                for (int p = 0; p < geom.n_ports; ++p)
                    out.at(p, t, path.doppler_bin, path.delay_bin) += ref_v * ramp.phasors(p);
            }
        }
        return out;
    }

    std::vector<ChannelTensor> generate_sequence(int n_frames, const FasGeometry &geom,
                                                 const GridConfig &grid, int n_paths,
                                                 double rice_kappa, GenMode mode,
                                                 std::uint64_t seed)
    {
        if (n_frames < 0)
            throw argument_error("generate_sequence: n_frames must be non-negative");
        const ScattererSet scat = draw_scatterers(geom, grid, n_paths, rice_kappa, seed);
        const CorrelationMatrix corr = build_fas_correlation(geom);

        std::vector<ChannelTensor> frames(static_cast<std::size_t>(n_frames));
        par::for_index(frames.size(), [&](std::size_t q) {
            frames[q] = generate_frame(static_cast<std::int64_t>(q), geom, grid, scat, corr, mode);
        });
        return frames;
    }

    void generate_sequence_stream(int n_frames, const FasGeometry &geom, const GridConfig &grid,
                                  int n_paths, double rice_kappa, GenMode mode, std::uint64_t seed,
                                  const std::function<void(ChannelTensor &&)> &sink)
    {
        if (n_frames < 0)
            throw argument_error("generate_sequence_stream: n_frames must be non-negative");
        const ScattererSet scat = draw_scatterers(geom, grid, n_paths, rice_kappa, seed);
        const CorrelationMatrix corr = build_fas_correlation(geom);

        // Render in small chunks: frames within a chunk in parallel, chunks
        // handed to the sink strictly in frame order.
        const int chunk = std::max(1, par::threads()) * 2;
        std::vector<ChannelTensor> buffer;
        for (int start = 0; start < n_frames; start += chunk)
        {
            const int count = std::min(chunk, n_frames - start);
            buffer.assign(static_cast<std::size_t>(count), ChannelTensor{});
            par::for_index(static_cast<std::size_t>(count), [&](std::size_t i) {
                buffer[i] = generate_frame(start + static_cast<std::int64_t>(i), geom, grid, scat,
                                           corr, mode);
            });
            for (int i = 0; i < count; ++i)
                sink(std::move(buffer[i]));
        }
    }
}
