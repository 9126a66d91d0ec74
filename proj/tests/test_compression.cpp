// SPDX-License-Identifier: Apache-2.0
// Reference-port selection, separable eigenbasis fit, code round trips and
// phase-ramp port replication against extended-precision references.

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "fascast/compression.hpp"
#include "oracles.hpp"

using namespace fascast;

namespace
{
    Eigen::MatrixXcd random_complex(int rows, int cols, std::mt19937_64 &rng)
    {
        std::normal_distribution<double> dist(0.0, 1.0);
        Eigen::MatrixXcd m(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                m(i, j) = cplx(dist(rng), dist(rng));
        return m;
    }

    std::vector<RefMatrix> random_refs(int count, int rows, int cols, std::uint64_t seed)
    {
        std::mt19937_64 rng(seed);
        std::vector<RefMatrix> refs;
        for (int q = 0; q < count; ++q)
            refs.push_back({random_complex(rows, cols, rng), q});
        return refs;
    }

    double aggregate_recon_error(const std::vector<RefMatrix> &refs, const PcaBasis &basis)
    {
        double err = 0.0;
        for (const RefMatrix &r : refs)
        {
            const RefMatrix back = reconstruct_ref(compress(r, basis), basis);
            err += (back.data - r.data).squaredNorm();
        }
        return err;
    }

    // Explicit projector applied per frame; the ground truth for the
    // truncation error.
    double projector_error(const std::vector<RefMatrix> &refs, const PcaBasis &basis)
    {
        const Eigen::MatrixXcd ps = basis.spatial_basis * basis.spatial_basis.adjoint();
        const Eigen::MatrixXcd pd = basis.dd_basis * basis.dd_basis.adjoint();
        double err = 0.0;
        for (const RefMatrix &r : refs)
            err += (r.data - ps * r.data * pd).squaredNorm();
        return err;
    }
}

TEST_SUITE("compression")
{
    TEST_CASE("reference extraction follows the documented column order")
    {
        ChannelTensor t(2, 3, 4, 5, 9);
        for (std::size_t i = 0; i < t.data.size(); ++i)
            t.data[i] = cplx(static_cast<double>(i), 0.5);
        const RefMatrix ref = extract_reference(t, 1);
        REQUIRE(ref.data.rows() == 3);
        REQUIRE(ref.data.cols() == 20);
        CHECK(ref.frame_index == 9);
        for (int tx = 0; tx < 3; ++tx)
            for (int d = 0; d < 4; ++d)
                for (int m = 0; m < 5; ++m)
                    CHECK(ref.data(tx, m * 4 + d) == t.at(1, tx, d, m));
    }

    TEST_CASE("reference port is the one with the highest mean energy")
    {
        ChannelTensor base(3, 2, 2, 2, 0);
        std::mt19937_64 rng(5);
        std::normal_distribution<double> dist(0.0, 1.0);
        for (auto &v : base.data)
            v = cplx(dist(rng), dist(rng));

        ChannelTensor boosted = base;
        for (int t = 0; t < 2; ++t)
            for (int d = 0; d < 2; ++d)
                for (int m = 0; m < 2; ++m)
                    boosted.at(1, t, d, m) *= 10.0;
        const std::vector<ChannelTensor> single = {boosted};
        CHECK(select_reference_port(single) == 1);
        const std::vector<ChannelTensor> pair = {boosted, base};
        CHECK(select_reference_port(pair) == 1);
    }

    TEST_CASE("identical port slices tie toward port zero")
    {
        ChannelTensor t(4, 2, 2, 2, 0);
        for (int p = 0; p < 4; ++p)
            for (int tx = 0; tx < 2; ++tx)
                for (int d = 0; d < 2; ++d)
                    for (int m = 0; m < 2; ++m)
                        t.at(p, tx, d, m) = cplx(1.0, -1.0);
        const std::vector<ChannelTensor> frames = {t};
        CHECK(select_reference_port(frames) == 0);

        Eigen::VectorXd energies(3);
        energies << 2.0, 2.0, 1.0;
        CHECK(select_reference_port(energies) == 0);
    }

    TEST_CASE("empty inputs are rejected")
    {
        CHECK_THROWS_AS(select_reference_port(std::vector<ChannelTensor>{}), argument_error);
        CHECK_THROWS_AS(select_reference_port(Eigen::VectorXd()), argument_error);
        CHECK_THROWS_AS(fit_pca({}, 0.9), argument_error);
    }

    TEST_CASE("identical rank-one frames give unit ranks and full energy")
    {
        std::mt19937_64 rng(11);
        const Eigen::VectorXcd u = random_complex(4, 1, rng);
        const Eigen::VectorXcd v = random_complex(8, 1, rng);
        std::vector<RefMatrix> refs;
        for (int q = 0; q < 5; ++q)
            refs.push_back({u * v.adjoint(), q});

        const PcaBasis basis = fit_pca(refs, 0.9);
        CHECK(basis.rank_s() == 1);
        CHECK(basis.rank_d() == 1);
        CHECK(std::abs(basis.spatial_retained - 1.0) <= 1e-12);
        CHECK(std::abs(basis.dd_retained - 1.0) <= 1e-12);

        const RefMatrix back = reconstruct_ref(compress(refs[0], basis), basis);
        CHECK((back.data - refs[0].data).cwiseAbs().maxCoeff() <= 1e-10);
    }

    TEST_CASE("full threshold keeps every informative direction")
    {
        const std::vector<RefMatrix> refs = random_refs(12, 4, 8, 23);
        const PcaBasis basis = fit_pca(refs, 1.0);
        CHECK(basis.rank_s() == 4);
        CHECK(basis.rank_d() == 8);
        for (const RefMatrix &r : refs)
        {
            const RefMatrix back = reconstruct_ref(compress(r, basis), basis);
            CHECK((back.data - r.data).cwiseAbs().maxCoeff() <= 1e-10);
        }
    }

    TEST_CASE("ranks and retained ratios match the extended-precision reference")
    {
        const std::vector<RefMatrix> refs = random_refs(10, 4, 8, 37);
        const double threshold = 0.9;
        const PcaBasis basis = fit_pca(refs, threshold);

        Eigen::MatrixXcd rs = Eigen::MatrixXcd::Zero(4, 4);
        Eigen::MatrixXcd rd = Eigen::MatrixXcd::Zero(8, 8);
        for (const RefMatrix &r : refs)
        {
            rs += r.data * r.data.adjoint();
            rd += r.data.adjoint() * r.data;
        }
        rs /= static_cast<double>(refs.size());
        rd /= static_cast<double>(refs.size());

        const auto eig_s = oracle::hermitian_eigenvalues(oracle::to_extended(rs), 4);
        const auto eig_d = oracle::hermitian_eigenvalues(oracle::to_extended(rd), 8);
        CHECK(basis.rank_s() == oracle::min_rank(eig_s, threshold));
        CHECK(basis.rank_d() == oracle::min_rank(eig_d, threshold));
        CHECK(std::abs(basis.spatial_retained -
                       static_cast<double>(oracle::retained_ratio(eig_s, basis.rank_s()))) <=
              1e-12);
        CHECK(std::abs(basis.dd_retained -
                       static_cast<double>(oracle::retained_ratio(eig_d, basis.rank_d()))) <=
              1e-12);
        CHECK(basis.spatial_retained >= threshold);
        CHECK(basis.dd_retained >= threshold);

        for (int i = 0; i < 4; ++i)
            CHECK(std::abs(basis.spatial_eigs(i) - static_cast<double>(eig_s[i])) <=
                  1e-12 * static_cast<double>(eig_s[0]));
        for (int i = 0; i < 8; ++i)
            CHECK(std::abs(basis.dd_eigs(i) - static_cast<double>(eig_d[i])) <=
                  1e-12 * static_cast<double>(eig_d[0]));
    }

    TEST_CASE("basis columns are orthonormal and spectra descend")
    {
        const std::vector<RefMatrix> refs = random_refs(9, 4, 8, 41);
        const PcaBasis basis = fit_pca(refs, 0.95);
        const Eigen::MatrixXcd gs =
            basis.spatial_basis.adjoint() * basis.spatial_basis -
            Eigen::MatrixXcd::Identity(basis.rank_s(), basis.rank_s());
        const Eigen::MatrixXcd gd = basis.dd_basis.adjoint() * basis.dd_basis -
                                    Eigen::MatrixXcd::Identity(basis.rank_d(), basis.rank_d());
        CHECK(gs.cwiseAbs().maxCoeff() <= 1e-10);
        CHECK(gd.cwiseAbs().maxCoeff() <= 1e-10);
        for (int i = 1; i < basis.spatial_eigs.size(); ++i)
            CHECK(basis.spatial_eigs(i) <= basis.spatial_eigs(i - 1));
        for (int i = 1; i < basis.dd_eigs.size(); ++i)
            CHECK(basis.dd_eigs(i) <= basis.dd_eigs(i - 1));
        CHECK(basis.spatial_eigs.minCoeff() >= 0.0);
        CHECK(basis.dd_eigs.minCoeff() >= 0.0);
    }

    TEST_CASE("raising the threshold never lowers the ranks")
    {
        const std::vector<RefMatrix> refs = random_refs(10, 4, 8, 59);
        const PcaBasis lo = fit_pca(refs, 0.7);
        const PcaBasis hi = fit_pca(refs, 0.98);
        CHECK(hi.rank_s() >= lo.rank_s());
        CHECK(hi.rank_d() >= lo.rank_d());
    }

    TEST_CASE("basis fit is reproducible on the same training frames")
    {
        const std::vector<RefMatrix> refs = random_refs(8, 4, 8, 61);
        const PcaBasis a = fit_pca(refs, 0.9);
        const PcaBasis b = fit_pca(refs, 0.9);
        CHECK(a.spatial_basis == b.spatial_basis);
        CHECK(a.dd_basis == b.dd_basis);
        // Sign convention: the largest-magnitude entry of each column is
        // real positive, so the basis is fixed even under eigensolver ties.
        for (int c = 0; c < a.rank_s(); ++c)
        {
            Eigen::Index where = 0;
            a.spatial_basis.col(c).cwiseAbs().maxCoeff(&where);
            CHECK(std::abs(a.spatial_basis(where, c).imag()) <= 1e-12);
            CHECK(a.spatial_basis(where, c).real() > 0.0);
        }
    }

    TEST_CASE("reconstruction error equals the explicit projector error")
    {
        const std::vector<RefMatrix> refs = random_refs(10, 4, 8, 67);
        const PcaBasis basis = fit_pca(refs, 0.85);
        const double via_codes = aggregate_recon_error(refs, basis);
        const double via_projector = projector_error(refs, basis);
        REQUIRE(via_projector > 0.0);
        CHECK(std::abs(via_codes - via_projector) <= 1e-8 * via_projector);
    }

    TEST_CASE("residuals are orthogonal to the retained subspace")
    {
        const std::vector<RefMatrix> refs = random_refs(10, 4, 8, 71);
        const PcaBasis basis = fit_pca(refs, 0.85);
        for (const RefMatrix &r : refs)
        {
            const RefMatrix back = reconstruct_ref(compress(r, basis), basis);
            const cplx inner = (back.data.conjugate().array() * (r.data - back.data).array()).sum();
            CHECK(std::abs(inner) <= 1e-8 * back.data.squaredNorm());
        }
    }

    TEST_CASE("compression is non-expansive and exact at full rank")
    {
        const std::vector<RefMatrix> refs = random_refs(10, 4, 8, 73);
        const PcaBasis trunc = fit_pca(refs, 0.8);
        const PcaBasis full = fit_pca(refs, 1.0);
        for (const RefMatrix &r : refs)
        {
            const double ref_energy = r.data.squaredNorm();
            CHECK(compress(r, trunc).matrix.squaredNorm() <= ref_energy * (1.0 + 1e-12));
            const double full_energy = compress(r, full).matrix.squaredNorm();
            CHECK(std::abs(full_energy - ref_energy) <= 1e-10 * ref_energy);
        }
    }

    TEST_CASE("zero frames compress to zero codes and back")
    {
        const std::vector<RefMatrix> refs = random_refs(6, 4, 8, 79);
        const PcaBasis basis = fit_pca(refs, 0.9);
        RefMatrix zero{Eigen::MatrixXcd::Zero(4, 8), 0};
        const Code code = compress(zero, basis);
        CHECK(code.matrix.cwiseAbs().maxCoeff() == 0.0);
        Code zcode{Eigen::MatrixXcd::Zero(basis.rank_s(), basis.rank_d()), 0};
        CHECK(reconstruct_ref(zcode, basis).data.cwiseAbs().maxCoeff() == 0.0);
    }

    TEST_CASE("shape mismatches are rejected")
    {
        const std::vector<RefMatrix> refs = random_refs(6, 4, 8, 83);
        const PcaBasis basis = fit_pca(refs, 0.9);
        std::mt19937_64 rng(3);
        RefMatrix bad{random_complex(5, 8, rng), 0};
        CHECK_THROWS_AS(compress(bad, basis), argument_error);
        Code code{random_complex(basis.rank_s() + 1, basis.rank_d(), rng), 0};
        CHECK_THROWS_AS(reconstruct_ref(code, basis), argument_error);
        CHECK_THROWS_AS(fit_pca(refs, 0.0), argument_error);
        CHECK_THROWS_AS(fit_pca(refs, 1.5), argument_error);
    }

    TEST_CASE("a wide truncated basis reduces sixty-four fold")
    {
        std::mt19937_64 rng(89);
        PcaBasis basis;
        basis.spatial_basis = Eigen::MatrixXcd::Identity(8, 4);
        basis.dd_basis = Eigen::MatrixXcd::Identity(1024, 16);
        basis.spatial_eigs = Eigen::VectorXd::Ones(8);
        basis.dd_eigs = Eigen::VectorXd::Ones(1024);
        basis.threshold = 0.9;
        const RefMatrix ref{random_complex(8, 1024, rng), 0};
        const Code code = compress(ref, basis);
        CHECK(code.matrix.rows() == 4);
        CHECK(code.matrix.cols() == 16);
        CHECK(code.matrix.size() * 100 <= ref.data.size()); // at least 99% fewer values
    }

    TEST_CASE("code vectorisation is column-major and invertible")
    {
        std::mt19937_64 rng(97);
        Code code{random_complex(3, 4, rng), 6};
        const Eigen::VectorXcd v = code.vec();
        REQUIRE(v.size() == 12);
        for (int j = 0; j < 4; ++j)
            for (int i = 0; i < 3; ++i)
                CHECK(v(j * 3 + i) == code.matrix(i, j));
        const Code back = Code::from_vec(v, 3, 4, code.frame_index);
        CHECK(back.matrix == code.matrix);
        CHECK(back.frame_index == 6);
        CHECK_THROWS_AS(Code::from_vec(v, 5, 4, 0), argument_error);
    }

    TEST_CASE("phase ramp matches the closed form")
    {
        FasGeometry geom;
        geom.n_ports = 5;
        geom.spacing_over_lambda = 0.1;
        geom.elevation_rad = std::numbers::pi / 2.0;
        const PhaseRamp ramp = make_phase_ramp(geom);
        REQUIRE(ramp.phasors.size() == 5);
        CHECK(ramp.phasors(0) == cplx(1.0, 0.0));
        CHECK(std::abs(std::arg(ramp.phasors(1)) - (-0.2 * std::numbers::pi)) <= 1e-12);
        for (int p = 0; p < 5; ++p)
            CHECK(std::abs(std::abs(ramp.phasors(p)) - 1.0) <= 1e-15);

        geom.elevation_rad = 0.0;
        const PhaseRamp flat = make_phase_ramp(geom);
        for (int p = 0; p < 5; ++p)
            CHECK(flat.phasors(p) == cplx(1.0, 0.0));
    }

    TEST_CASE("port replication keeps the reference slice and the magnitudes")
    {
        FasGeometry geom;
        geom.n_ports = 4;
        GridConfig grid;
        grid.n_tx = 3;
        grid.n_doppler = 4;
        grid.n_delay = 5;
        grid.doppler_res_hz = 1.0;
        std::mt19937_64 rng(101);
        const RefMatrix ref{random_complex(3, 20, rng), 2};
        const PhaseRamp ramp = make_phase_ramp(geom);
        const ChannelTensor tensor = replicate_ports(ref, ramp, grid);
        REQUIRE(tensor.n_ports == 4);
        CHECK(tensor.frame_index == 2);
        for (int t = 0; t < 3; ++t)
            for (int d = 0; d < 4; ++d)
                for (int m = 0; m < 5; ++m)
                {
                    CHECK(tensor.at(0, t, d, m) == ref.data(t, m * 4 + d));
                    for (int p = 1; p < 4; ++p)
                        CHECK(std::abs(std::abs(tensor.at(p, t, d, m)) -
                                       std::abs(ref.data(t, m * 4 + d))) <= 1e-12);
                }

        RefMatrix bad{ref.data.leftCols(10), 0};
        CHECK_THROWS_AS(replicate_ports(bad, ramp, grid), argument_error);
    }

    TEST_CASE("generated phase-ramp frames survive the replication round trip")
    {
        FasGeometry geom;
        geom.n_ports = 6;
        GridConfig grid;
        grid.n_tx = 3;
        grid.n_doppler = 8;
        grid.n_delay = 8;
        grid.doppler_res_hz = 5.0;
        const auto seq = generate_sequence(3, geom, grid, 6, 4.0, GenMode::phase_ramp, 113);
        const PhaseRamp ramp = make_phase_ramp(geom);
        for (const ChannelTensor &frame : seq)
        {
            const RefMatrix ref = extract_reference(frame, 0);
            const ChannelTensor back = replicate_ports(ref, ramp, grid);
            double worst = 0.0;
            for (std::size_t i = 0; i < frame.data.size(); ++i)
                worst = std::max(worst, std::abs(frame.data[i] - back.data[i]));
            CHECK(worst <= 1e-10);
        }
    }

    TEST_CASE("delta coding round-trips and keeps the first code intact")
    {
        std::mt19937_64 rng(127);
        std::vector<Code> codes;
        for (int q = 0; q < 7; ++q)
            codes.push_back({random_complex(3, 4, rng), q});
        const std::vector<Code> original = codes;

        delta_encode(codes);
        CHECK(codes[0].matrix == original[0].matrix);
        for (int q = 1; q < 7; ++q)
            CHECK((codes[q].matrix - (original[q].matrix - original[q - 1].matrix))
                      .cwiseAbs()
                      .maxCoeff() == 0.0);

        delta_decode(codes);
        for (int q = 0; q < 7; ++q)
            CHECK((codes[q].matrix - original[q].matrix).cwiseAbs().maxCoeff() <= 1e-12);
    }
}
