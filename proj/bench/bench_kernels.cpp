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
//
// Wall-clock comparison of the serial reference path (1 thread) against the
// OpenMP path for the three parallel kernels: frame generation, per-frame
// compression and batched training. The parallel path must reproduce the
// serial results bit for bit; any mismatch exits nonzero.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "fascast/channel.hpp"
#include "fascast/compression.hpp"
#include "fascast/model.hpp"
#include "fascast/parallel.hpp"
#include "fascast/train.hpp"

using namespace fascast;

namespace
{
    template <typename F>
    double seconds(F &&fn)
    {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    bool frames_equal(const std::vector<ChannelTensor> &a, const std::vector<ChannelTensor> &b)
    {
        if (a.size() != b.size())
            return false;
        for (std::size_t q = 0; q < a.size(); ++q)
        {
            if (a[q].data.size() != b[q].data.size())
                return false;
            for (std::size_t i = 0; i < a[q].data.size(); ++i)
                if (a[q].data[i] != b[q].data[i])
                    return false;
        }
        return true;
    }

    void report(const char *name, double serial_s, double parallel_s, int threads)
    {
        std::printf("%-22s serial %8.3f s | %d threads %8.3f s | speedup %5.2fx\n", name,
                    serial_s, threads, parallel_s, serial_s / parallel_s);
    }
}

int main(int argc, char **argv)
{
    const int threads = argc > 1 ? std::atoi(argv[1]) : 4;
    if (threads < 2)
    {
        std::fprintf(stderr, "usage: %s [threads >= 2]\n", argv[0]);
        return 2;
    }
    std::printf("comparing the serial reference path against %d OpenMP threads\n\n", threads);
    int mismatches = 0;

    // Kernel 1: correlated frame generation, full-size geometry and grid.
    {
        FasGeometry geom;
        GridConfig grid;
        grid.doppler_res_hz = 1.0 / (35.0 * grid.frame_duration_s * (grid.n_doppler / 2));
        const int n_frames = 48;

        std::vector<ChannelTensor> serial, parallel;
        par::set_threads(1);
        const double ts = seconds([&]() {
            serial = generate_sequence(n_frames, geom, grid, 12, 5.0, GenMode::correlated, 7);
        });
        par::set_threads(threads);
        const double tp = seconds([&]() {
            parallel = generate_sequence(n_frames, geom, grid, 12, 5.0, GenMode::correlated, 7);
        });
        par::set_threads(1);
        report("generate (48 frames)", ts, tp, threads);
        if (!frames_equal(serial, parallel))
        {
            std::fprintf(stderr, "generate: parallel output differs from serial\n");
            ++mismatches;
        }

        // Kernel 2: frame compression against a fitted basis.
        std::vector<RefMatrix> refs;
        for (const ChannelTensor &frame : serial)
            for (int copy = 0; copy < 8; ++copy)
                refs.push_back(extract_reference(frame, 0));
        const PcaBasis basis = fit_pca(refs, 0.90);

        std::vector<Code> codes_serial(refs.size()), codes_parallel(refs.size());
        par::set_threads(1);
        const double cs = seconds([&]() {
            par::for_index(refs.size(),
                           [&](std::size_t i) { codes_serial[i] = compress(refs[i], basis); });
        });
        par::set_threads(threads);
        const double cp = seconds([&]() {
            par::for_index(refs.size(),
                           [&](std::size_t i) { codes_parallel[i] = compress(refs[i], basis); });
        });
        par::set_threads(1);
        report("compress (384 frames)", cs, cp, threads);
        for (std::size_t i = 0; i < codes_serial.size(); ++i)
            if (!(codes_serial[i].matrix.array() == codes_parallel[i].matrix.array()).all())
            {
                std::fprintf(stderr, "compress: code %zu differs\n", i);
                ++mismatches;
                break;
            }
    }

    // Kernel 3: batched forward/backward training epochs.
    {
        Eigen::MatrixXd series(200, 16);
        for (int r = 0; r < 200; ++r)
            for (int c = 0; c < 16; ++c)
                series(r, c) = std::cos(0.05 * r * (c + 1)) + 0.1 * std::sin(0.3 * r + c);
        const Normalizer norm = Normalizer::fit(series.topRows(160));
        const Eigen::MatrixXd series_std = norm.apply(series);
        const WindowDataset train_set = make_windows(series_std, 24, 6, 0, 160);
        const WindowDataset val_set = make_windows(series_std, 24, 6, 160, 200);

        const MicroModel init = make_micro_model(16, 32, 2, 4, 6, 4, 1.0, 5);
        TrainConfig tc;
        tc.epochs = 3;
        tc.batch_size = 16;
        tc.mode = TrainMode::full;
        tc.seed = 11;

        MicroModel m_serial = init, m_parallel = init;
        TrainResult r_serial, r_parallel;
        par::set_threads(1);
        const double ts = seconds(
            [&]() { r_serial = train(m_serial, train_set, val_set, norm, tc); });
        par::set_threads(threads);
        const double tp = seconds(
            [&]() { r_parallel = train(m_parallel, train_set, val_set, norm, tc); });
        par::set_threads(1);
        report("train (3 epochs)", ts, tp, threads);

        bool same = r_serial.epoch_loss == r_parallel.epoch_loss &&
                    r_serial.val_nmse == r_parallel.val_nmse;
        std::vector<Eigen::MatrixXd> pa, pb;
        visit_params(m_serial,
                     [&](auto, auto, auto &arr) { pa.push_back(Eigen::MatrixXd(arr)); });
        visit_params(m_parallel,
                     [&](auto, auto, auto &arr) { pb.push_back(Eigen::MatrixXd(arr)); });
        for (std::size_t i = 0; i < pa.size() && same; ++i)
            same = (pa[i].array() == pb[i].array()).all();
        if (!same)
        {
            std::fprintf(stderr, "train: parallel run differs from serial\n");
            ++mismatches;
        }
    }

    if (mismatches > 0)
    {
        std::fprintf(stderr, "\n%d kernel(s) broke bitwise reproducibility\n", mismatches);
        return 1;
    }
    std::printf("\nall kernels bitwise-identical across thread counts\n");
    return 0;
}
