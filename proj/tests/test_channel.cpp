// SPDX-License-Identifier: Apache-2.0
// Correlation construction, scatterer draws and frame generation.

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>
#include <utility>
#include <vector>

#include "fascast/channel.hpp"
#include "oracles.hpp"

using namespace fascast;

namespace
{
    FasGeometry small_geom()
    {
        FasGeometry g;
        g.n_ports = 6;
        g.spacing_over_lambda = 0.1;
        g.elevation_rad = 0.6;
        return g;
    }

    GridConfig small_grid()
    {
        GridConfig g;
        g.n_tx = 3;
        g.n_doppler = 8;
        g.n_delay = 8;
        g.frame_duration_s = 1e-3;
        g.doppler_res_hz = 7.0;
        return g;
    }
}

TEST_SUITE("channel")
{
    TEST_CASE("correlation entries follow the ring law")
    {
        const FasGeometry geom = small_geom();
        const CorrelationMatrix corr = build_fas_correlation(geom);
        REQUIRE(corr.entries.rows() == geom.n_ports);
        REQUIRE(corr.entries.cols() == geom.n_ports);
        for (int i = 0; i < geom.n_ports; ++i)
        {
            CHECK(corr.entries(i, i) == 1.0);
            for (int j = 0; j < geom.n_ports; ++j)
            {
                CHECK(corr.entries(i, j) == corr.entries(j, i));
                const double expected = static_cast<double>(oracle::j0_series(
                    2.0 * std::numbers::pi * geom.spacing_over_lambda * std::abs(i - j) *
                    std::sin(geom.elevation_rad)));
                CHECK(std::abs(corr.entries(i, j) - expected) <= 1e-9);
            }
        }
    }

    TEST_CASE("flat elevation gives the all-ones matrix")
    {
        FasGeometry geom = small_geom();
        geom.elevation_rad = 0.0;
        const CorrelationMatrix corr = build_fas_correlation(geom);
        CHECK((corr.entries.array() - 1.0).abs().maxCoeff() == 0.0);
    }

    TEST_CASE("two-port off-diagonal value")
    {
        FasGeometry geom;
        geom.n_ports = 2;
        geom.spacing_over_lambda = 0.1;
        geom.elevation_rad = std::numbers::pi / 2.0;
        const CorrelationMatrix corr = build_fas_correlation(geom);
        CHECK(std::abs(corr.entries(0, 1) - 0.9037126420924663) <= 1e-12);
    }

    TEST_CASE("loaded Cholesky factor reconstructs the matrix")
    {
        const FasGeometry geom = small_geom();
        const CorrelationMatrix corr = build_fas_correlation(geom);
        const Eigen::MatrixXcd rebuilt = corr.sqrt_factor * corr.sqrt_factor.adjoint();
        Eigen::MatrixXd target = corr.entries;
        target.diagonal().array() += geom.loading_eps;
        CHECK((rebuilt - target.cast<cplx>()).cwiseAbs().maxCoeff() <= 1e-10);
        // Lower-triangular with a real positive diagonal.
        for (int i = 0; i < geom.n_ports; ++i)
        {
            CHECK(corr.sqrt_factor(i, i).imag() == 0.0);
            CHECK(corr.sqrt_factor(i, i).real() > 0.0);
            for (int j = i + 1; j < geom.n_ports; ++j)
                CHECK(corr.sqrt_factor(i, j) == cplx(0.0, 0.0));
        }
    }

    TEST_CASE("scatterer draw honors the documented invariants")
    {
        const FasGeometry geom = small_geom();
        const GridConfig grid = small_grid();
        const ScattererSet scat = draw_scatterers(geom, grid, 10, 4.0, 7);
        REQUIRE(scat.paths.size() == 10);
        CHECK(scat.rice_kappa == 4.0);
        CHECK(scat.los_doppler_bin == grid.n_doppler / 2);

        double total = 0.0;
        std::set<std::pair<int, int>> bins;
        for (const ScatteredPath &p : scat.paths)
        {
            CHECK(p.delay_bin >= 1);
            CHECK(p.delay_bin < grid.n_delay);
            CHECK(p.doppler_bin >= 0);
            CHECK(p.doppler_bin < grid.n_doppler);
            CHECK(p.power > 0.0);
            CHECK(p.rx_vector.size() == geom.n_ports);
            CHECK(p.tx_gains.size() == grid.n_tx);
            bins.insert({p.delay_bin, p.doppler_bin});
            total += p.power;
        }
        CHECK(bins.size() == scat.paths.size()); // pairwise distinct placement
        CHECK(std::abs(total - 1.0) <= 1e-12);
    }

    TEST_CASE("scatterer draw is deterministic under the seed")
    {
        const FasGeometry geom = small_geom();
        const GridConfig grid = small_grid();
        const ScattererSet a = draw_scatterers(geom, grid, 6, 2.0, 99);
        const ScattererSet b = draw_scatterers(geom, grid, 6, 2.0, 99);
        REQUIRE(a.paths.size() == b.paths.size());
        for (std::size_t i = 0; i < a.paths.size(); ++i)
        {
            CHECK(a.paths[i].delay_bin == b.paths[i].delay_bin);
            CHECK(a.paths[i].doppler_bin == b.paths[i].doppler_bin);
            CHECK(a.paths[i].power == b.paths[i].power);
            CHECK(a.paths[i].rx_vector == b.paths[i].rx_vector);
            CHECK(a.paths[i].tx_gains == b.paths[i].tx_gains);
        }
    }

    TEST_CASE("scatterer draw with no paths keeps only the direct path")
    {
        const ScattererSet scat = draw_scatterers(small_geom(), small_grid(), 0, 1.0, 3);
        CHECK(scat.paths.empty());
    }

    TEST_CASE("too many paths for the grid is a configuration error")
    {
        GridConfig grid = small_grid();
        grid.n_doppler = 2;
        grid.n_delay = 3; // (3 - 1) * 2 = 4 scatterer slots
        CHECK_NOTHROW(draw_scatterers(small_geom(), grid, 4, 1.0, 1));
        CHECK_THROWS_AS(draw_scatterers(small_geom(), grid, 5, 1.0, 1), config_error);
    }

    TEST_CASE("dominant direct path concentrates energy on its bin")
    {
        const FasGeometry geom = small_geom();
        const GridConfig grid = small_grid();
        const CorrelationMatrix corr = build_fas_correlation(geom);
        const ScattererSet scat = draw_scatterers(geom, grid, 0, 1e12, 11);
        const ChannelTensor frame = generate_frame(0, geom, grid, scat, corr, GenMode::correlated);

        for (int p = 0; p < geom.n_ports; ++p)
        {
            const double b_sq = std::norm(corr.sqrt_factor(p, 0));
            for (int t = 0; t < grid.n_tx; ++t)
            {
                for (int d = 0; d < grid.n_doppler; ++d)
                    for (int m = 0; m < grid.n_delay; ++m)
                        if (d != scat.los_doppler_bin || m != 0)
                            CHECK(std::abs(frame.at(p, t, d, m)) == 0.0);
                const double los_sq = std::norm(frame.at(p, t, scat.los_doppler_bin, 0));
                CHECK(std::abs(los_sq - b_sq) <= 1e-6 * b_sq);
            }
        }
    }

    TEST_CASE("only phases rotate between consecutive frames")
    {
        const FasGeometry geom = small_geom();
        const GridConfig grid = small_grid();
        const CorrelationMatrix corr = build_fas_correlation(geom);
        const ScattererSet scat = draw_scatterers(geom, grid, 7, 3.0, 21);
        const ChannelTensor f0 = generate_frame(4, geom, grid, scat, corr, GenMode::correlated);
        const ChannelTensor f1 = generate_frame(5, geom, grid, scat, corr, GenMode::correlated);
        for (std::size_t i = 0; i < f0.data.size(); ++i)
            CHECK(std::abs(std::abs(f0.data[i]) - std::abs(f1.data[i])) <= 1e-12);
    }

    TEST_CASE("phase-ramp slices are exact ramp multiples of port zero")
    {
        const FasGeometry geom = small_geom();
        const GridConfig grid = small_grid();
        const CorrelationMatrix corr = build_fas_correlation(geom);
        const ScattererSet scat = draw_scatterers(geom, grid, 7, 3.0, 5);
        const ChannelTensor frame = generate_frame(2, geom, grid, scat, corr, GenMode::phase_ramp);

        const double phase = -2.0 * std::numbers::pi * geom.spacing_over_lambda * std::sin(geom.elevation_rad);
        for (int p = 0; p < geom.n_ports; ++p)
        {
            const cplx ramp = std::polar(1.0, phase * p);
            for (int t = 0; t < grid.n_tx; ++t)
                for (int d = 0; d < grid.n_doppler; ++d)
                    for (int m = 0; m < grid.n_delay; ++m)
                        CHECK(std::abs(frame.at(p, t, d, m) - ramp * frame.at(0, t, d, m)) <=
                              1e-12);
        }
    }

    TEST_CASE("phase-ramp mode at flat elevation copies the reference slice")
    {
        FasGeometry geom = small_geom();
        geom.elevation_rad = 0.0;
        const GridConfig grid = small_grid();
        const CorrelationMatrix corr = build_fas_correlation(geom);
        const ScattererSet scat = draw_scatterers(geom, grid, 4, 2.0, 13);
        const ChannelTensor frame = generate_frame(1, geom, grid, scat, corr, GenMode::phase_ramp);
        for (int p = 1; p < geom.n_ports; ++p)
            for (int t = 0; t < grid.n_tx; ++t)
                for (int d = 0; d < grid.n_doppler; ++d)
                    for (int m = 0; m < grid.n_delay; ++m)
                        CHECK(frame.at(p, t, d, m) == frame.at(0, t, d, m));
    }

    TEST_CASE("sequence of one frame equals the directly generated frame")
    {
        const FasGeometry geom = small_geom();
        const GridConfig grid = small_grid();
        const std::uint64_t seed = 17;
        const std::vector<ChannelTensor> seq =
            generate_sequence(1, geom, grid, 5, 2.5, GenMode::correlated, seed);
        REQUIRE(seq.size() == 1);

        const CorrelationMatrix corr = build_fas_correlation(geom);
        const ScattererSet scat = draw_scatterers(geom, grid, 5, 2.5, seed);
        const ChannelTensor direct = generate_frame(0, geom, grid, scat, corr, GenMode::correlated);
        CHECK(seq[0].data == direct.data);
    }

    TEST_CASE("sequences are deterministic under the seed")
    {
        const FasGeometry geom = small_geom();
        const GridConfig grid = small_grid();
        const auto a = generate_sequence(6, geom, grid, 5, 2.5, GenMode::correlated, 31);
        const auto b = generate_sequence(6, geom, grid, 5, 2.5, GenMode::correlated, 31);
        REQUIRE(a.size() == b.size());
        for (std::size_t q = 0; q < a.size(); ++q)
        {
            CHECK(a[q].frame_index == static_cast<std::int64_t>(q));
            CHECK(a[q].data == b[q].data);
        }
    }

    TEST_CASE("frame energy is invariant across the sequence")
    {
        const FasGeometry geom = small_geom();
        const GridConfig grid = small_grid();
        for (const GenMode mode : {GenMode::correlated, GenMode::phase_ramp})
        {
            const auto seq = generate_sequence(24, geom, grid, 6, 3.0, mode, 47);
            const double e0 = seq.front().energy();
            REQUIRE(e0 > 0.0);
            for (const ChannelTensor &f : seq)
                CHECK(std::abs(f.energy() - e0) <= 1e-9 * e0);
        }
    }

    TEST_CASE("scattered energy vanishes as the Rice factor grows")
    {
        const FasGeometry geom = small_geom();
        const GridConfig grid = small_grid();
        const CorrelationMatrix corr = build_fas_correlation(geom);
        const ScattererSet scat = draw_scatterers(geom, grid, 5, 1e12, 23);
        const ChannelTensor frame = generate_frame(0, geom, grid, scat, corr, GenMode::correlated);

        double los_energy = 0.0;
        for (int p = 0; p < geom.n_ports; ++p)
            for (int t = 0; t < grid.n_tx; ++t)
                los_energy += std::norm(frame.at(p, t, scat.los_doppler_bin, 0));
        const double total = frame.energy();
        CHECK(total - los_energy <= 1e-10 * total);
    }

    TEST_CASE("with a zero Rice factor the direct path is absent")
    {
        const FasGeometry geom = small_geom();
        const GridConfig grid = small_grid();
        const CorrelationMatrix corr = build_fas_correlation(geom);
        const ScattererSet scat = draw_scatterers(geom, grid, 5, 0.0, 29);
        const ChannelTensor frame = generate_frame(0, geom, grid, scat, corr, GenMode::correlated);
        // No scattered path sits at delay 0, so the direct-path bin is empty.
        for (int p = 0; p < geom.n_ports; ++p)
            for (int t = 0; t < grid.n_tx; ++t)
                CHECK(std::abs(frame.at(p, t, scat.los_doppler_bin, 0)) == 0.0);
        CHECK(frame.energy() > 0.0);
    }

    TEST_CASE("streaming generation matches the in-memory sequence")
    {
        const FasGeometry geom = small_geom();
        const GridConfig grid = small_grid();
        const auto seq = generate_sequence(9, geom, grid, 4, 2.0, GenMode::phase_ramp, 53);

        std::vector<ChannelTensor> streamed;
        generate_sequence_stream(9, geom, grid, 4, 2.0, GenMode::phase_ramp, 53,
                                 [&](ChannelTensor &&f) { streamed.push_back(std::move(f)); });
        REQUIRE(streamed.size() == seq.size());
        for (std::size_t q = 0; q < seq.size(); ++q)
        {
            CHECK(streamed[q].frame_index == static_cast<std::int64_t>(q));
            CHECK(streamed[q].data == seq[q].data);
        }
    }

    TEST_CASE("tensor layout helpers agree with the documented order")
    {
        ChannelTensor t(2, 3, 4, 5, 0);
        REQUIRE(t.data.size() == 2u * 3u * 4u * 5u);
        t.at(1, 2, 3, 4) = cplx(1.5, -0.5);
        CHECK(t.data[((1 * 3 + 2) * 4 + 3) * 5 + 4] == cplx(1.5, -0.5));
        CHECK(t.flat(0, 0, 0, 1) == 1u);
        CHECK(t.flat(0, 0, 1, 0) == 5u);
        CHECK(t.flat(0, 1, 0, 0) == 20u);
        CHECK(t.flat(1, 0, 0, 0) == 60u);

        t.data.assign(t.data.size(), cplx(0.0, 0.0));
        t.at(0, 1, 2, 3) = cplx(3.0, 4.0);
        CHECK(t.energy() == 25.0);
        CHECK(t.port_energy(0) == 25.0);
        CHECK(t.port_energy(1) == 0.0);
    }
}
