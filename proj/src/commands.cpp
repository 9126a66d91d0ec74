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

#include "fascast/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <CLI11.hpp>

#include "fascast/baselines.hpp"
#include "fascast/channel.hpp"
#include "fascast/compression.hpp"
#include "fascast/io.hpp"
#include "fascast/model.hpp"
#include "fascast/parallel.hpp"

namespace fascast
{
    namespace
    {
        // Index of the first held-out frame; the leading fraction trains.
        Eigen::Index split_index(double fraction, Eigen::Index total)
        {
            const auto k =
                static_cast<Eigen::Index>(std::floor(fraction * static_cast<double>(total)));
            return std::max<Eigen::Index>(1, std::min(k, total - 1));
        }

        std::string fmt_g(double v)
        {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%g", v);
            return buf;
        }

        double clamped_nmse_db(double err_sq, double ref_sq)
        {
            if (!(ref_sq > 0.0))
                throw argument_error("nmse: reference energy is zero; NMSE undefined");
            if (!(err_sq > 0.0))
                return kNmseFloorDb;
            return std::max(kNmseFloorDb, 10.0 * std::log10(err_sq / ref_sq));
        }

        // Delay-Doppler slice of the first tx antenna, rows are Doppler bins.
        Eigen::MatrixXcd tx0_slice(const RefMatrix &ref, int n_doppler, int n_delay)
        {
            Eigen::MatrixXcd slice(n_doppler, n_delay);
            for (int m = 0; m < n_delay; ++m)
                for (int d = 0; d < n_doppler; ++d)
                    slice(d, m) = ref.data(0, m * n_doppler + d);
            return slice;
        }

        Code code_from_row(const Eigen::MatrixXd &rows, Eigen::Index row, int rank_s, int rank_d,
                           std::int64_t frame_index)
        {
            const Eigen::Index n = rank_s * static_cast<Eigen::Index>(rank_d);
            Eigen::VectorXcd v(n);
            for (Eigen::Index i = 0; i < n; ++i)
                v(i) = cplx(rows(row, i), rows(row, n + i));
            return Code::from_vec(v, rank_s, rank_d, frame_index);
        }
    }

    GenSummary cmd_gen(const ExperimentConfig &cfg, const std::string &out_path)
    {
        cfg.validate();

        io::ChannelHeader header;
        header.n_frames = static_cast<std::uint32_t>(cfg.n_frames);
        header.n_ports = static_cast<std::uint32_t>(cfg.geometry.n_ports);
        header.n_tx = static_cast<std::uint32_t>(cfg.grid.n_tx);
        header.n_doppler = static_cast<std::uint32_t>(cfg.grid.n_doppler);
        header.n_delay = static_cast<std::uint32_t>(cfg.grid.n_delay);

        io::ChannelWriter writer(out_path, header);
        GenSummary summary;
        summary.n_frames = cfg.n_frames;
        summary.min_energy = std::numeric_limits<double>::infinity();
        summary.max_energy = -std::numeric_limits<double>::infinity();
        double energy_sum = 0.0;
        generate_sequence_stream(cfg.n_frames, cfg.geometry, cfg.grid, cfg.n_paths, cfg.rice_kappa,
                                 cfg.mode, cfg.seed, [&](ChannelTensor &&frame) {
                                     const double e = frame.energy();
                                     energy_sum += e;
                                     summary.min_energy = std::min(summary.min_energy, e);
                                     summary.max_energy = std::max(summary.max_energy, e);
                                     writer.append(frame);
                                 });
        writer.close();
        summary.mean_energy = energy_sum / static_cast<double>(cfg.n_frames);

        std::printf("wrote %d frames (%d ports x %d tx x %d x %d bins) to %s\n", cfg.n_frames,
                    cfg.geometry.n_ports, cfg.grid.n_tx, cfg.grid.n_doppler, cfg.grid.n_delay,
                    out_path.c_str());
        std::printf("frame energy: mean %.6g, min %.6g, max %.6g\n", summary.mean_energy,
                    summary.min_energy, summary.max_energy);
        return summary;
    }

    FitCompressSummary cmd_fit_compress(const ExperimentConfig &cfg,
                                        const std::string &channels_path,
                                        const std::string &basis_path,
                                        const std::string &codes_path, bool decompress_check)
    {
        int n_frames = 0;
        int n_ports = 0;
        {
            io::ChannelReader probe(channels_path);
            n_frames = static_cast<int>(probe.header().n_frames);
            n_ports = static_cast<int>(probe.header().n_ports);
        }
        if (n_frames < 1)
            throw argument_error("channel file holds no frames: " + channels_path);

        const Eigen::Index n_train = split_index(cfg.train_fraction, n_frames);

        // The plane-wave mode makes every port an exact unit-modulus copy of
        // port 0, so port 0 is pinned there; otherwise the training split
        // votes by energy.
        int ref_port = 0;
        if (cfg.mode == GenMode::correlated)
        {
            Eigen::VectorXd acc = Eigen::VectorXd::Zero(n_ports);
            io::ChannelReader reader(channels_path);
            ChannelTensor frame;
            for (Eigen::Index i = 0; i < n_train && reader.next(frame); ++i)
                for (int p = 0; p < n_ports; ++p)
                    acc(p) += frame.port_energy(p);
            ref_port = select_reference_port(acc);
        }

        std::vector<RefMatrix> refs;
        refs.reserve(static_cast<std::size_t>(n_frames));
        {
            io::ChannelReader reader(channels_path);
            ChannelTensor frame;
            while (reader.next(frame))
                refs.push_back(extract_reference(frame, ref_port));
        }

        const std::vector<RefMatrix> train_refs(refs.begin(), refs.begin() + n_train);
        const PcaBasis basis = fit_pca(train_refs, cfg.energy_threshold);

        std::vector<Code> codes(refs.size());
        par::for_index(refs.size(), [&](std::size_t i) { codes[i] = compress(refs[i], basis); });

        FitCompressSummary summary;
        summary.ref_port = ref_port;
        summary.rank_s = basis.rank_s();
        summary.rank_d = basis.rank_d();
        summary.spatial_retained = basis.spatial_retained;
        summary.dd_retained = basis.dd_retained;
        summary.train_recon_nmse_db = std::numeric_limits<double>::quiet_NaN();
        summary.full_recon_nmse_db = std::numeric_limits<double>::quiet_NaN();

        if (decompress_check)
        {
            double train_err = 0.0, train_ref = 0.0, full_err = 0.0, full_ref = 0.0;
            for (std::size_t i = 0; i < refs.size(); ++i)
            {
                const RefMatrix recon = reconstruct_ref(codes[i], basis);
                const double err = (recon.data - refs[i].data).squaredNorm();
                const double ref = refs[i].data.squaredNorm();
                full_err += err;
                full_ref += ref;
                if (i < static_cast<std::size_t>(n_train))
                {
                    train_err += err;
                    train_ref += ref;
                }
            }
            summary.train_recon_nmse_db = clamped_nmse_db(train_err, train_ref);
            summary.full_recon_nmse_db = clamped_nmse_db(full_err, full_ref);
        }

        if (cfg.delta_codes)
            delta_encode(codes);
        io::write_basis(basis_path, basis, ref_port);
        io::write_codes(codes_path, codes, cfg.delta_codes);

        const Eigen::Index n_tx = basis.spatial_basis.rows();
        const Eigen::Index n_bins = basis.dd_basis.rows();
        const double raw = static_cast<double>(n_tx * n_bins);
        const double kept = static_cast<double>(summary.rank_s) * summary.rank_d;
        std::printf("reference port: %d\n", ref_port);
        std::printf("spatial rank %d of %d (retained %.6g)\n", summary.rank_s,
                    static_cast<int>(n_tx), summary.spatial_retained);
        std::printf("delay-Doppler rank %d of %d (retained %.6g)\n", summary.rank_d,
                    static_cast<int>(n_bins), summary.dd_retained);
        std::printf("code size: %d coefficients per frame (%d raw, %.4g%% reduction)\n",
                    static_cast<int>(kept), static_cast<int>(raw), 100.0 * (1.0 - kept / raw));
        if (decompress_check)
        {
            std::printf("train reconstruction NMSE: %.6g dB\n", summary.train_recon_nmse_db);
            std::printf("full-set reconstruction NMSE: %.6g dB\n", summary.full_recon_nmse_db);
        }
        std::printf("wrote %s and %s (%d codes)\n", basis_path.c_str(), codes_path.c_str(),
                    n_frames);
        return summary;
    }

    TrainSummary cmd_train(const ExperimentConfig &cfg, const std::string &codes_path, int horizon,
                           const std::string &model_path, const std::string &loss_log_path)
    {
        cfg.validate();
        const int n_future = horizon > 0 ? horizon : cfg.horizons.front();

        bool delta = false;
        std::vector<Code> codes = io::read_codes(codes_path, delta);
        if (delta)
            delta_decode(codes);

        std::vector<Eigen::VectorXcd> codevecs;
        codevecs.reserve(codes.size());
        for (const Code &code : codes)
            codevecs.push_back(code.vec());

        const Eigen::MatrixXd series_raw = realify_codes(codevecs);
        const Eigen::Index n_rows = series_raw.rows();
        const Eigen::Index t_train = split_index(cfg.train_fraction, n_rows);
        const int n_past = cfg.past_window;

        if (t_train < n_past + n_future)
            throw argument_error("training split of " + std::to_string(t_train) +
                                 " frames cannot fit one window of " + std::to_string(n_past) +
                                 " past + " + std::to_string(n_future) + " future steps");

        const Normalizer norm = Normalizer::fit(series_raw.topRows(t_train));
        const Eigen::MatrixXd series_std = norm.apply(series_raw);
        const WindowDataset train_set = make_windows(series_std, n_past, n_future, 0, t_train);
        const WindowDataset val_set = make_windows(series_std, n_past, n_future, t_train, n_rows);

        const int feat_dim = static_cast<int>(series_raw.cols());
        MicroModel model = make_micro_model(feat_dim, cfg.width, cfg.n_blocks, cfg.n_heads,
                                            n_future, cfg.lora_rank, cfg.lora_alpha, cfg.seed);

        TrainConfig tc = cfg.train;
        tc.seed = cfg.seed;

        TrainSummary summary;
        summary.feat_dim = feat_dim;
        summary.n_train_windows = static_cast<int>(train_set.past.size());
        summary.n_val_windows = static_cast<int>(val_set.past.size());
        std::printf("features %d, horizon %d, windows: train %d, validation %d, mode %s\n",
                    feat_dim, n_future, summary.n_train_windows, summary.n_val_windows,
                    tc.mode == TrainMode::lora_only ? "lora" : "full");

        summary.result = train(model, train_set, val_set, norm, tc);

        std::ofstream log(loss_log_path, std::ios::trunc);
        if (!log)
            throw io_error("cannot open for writing: " + loss_log_path);
        char buf[64];
        for (std::size_t e = 0; e < summary.result.epoch_loss.size(); ++e)
        {
            std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", e + 1, summary.result.epoch_loss[e]);
            log << buf;
        }
        log.flush();
        if (!log)
            throw io_error("write failed: " + loss_log_path);

        io::write_model(model_path, model, norm);

        if (!summary.result.epoch_loss.empty())
            std::printf("final training loss: %.6g\n", summary.result.epoch_loss.back());
        if (summary.n_val_windows > 0)
            std::printf("validation NMSE: %.6g dB\n", summary.result.val_nmse_db);
        std::printf("wrote %s and %s\n", model_path.c_str(), loss_log_path.c_str());
        return summary;
    }

    namespace
    {
        struct Checkpoint
        {
            std::string name;
            MicroModel model;
            Normalizer norm;
        };

        struct Predictor
        {
            std::string name;
            const Checkpoint *ckpt = nullptr; // null for closed-form baselines
            bool injected = false;            // rows mirror the actual channel
            std::vector<Eigen::MatrixXd> preds;
            std::vector<Eigen::MatrixXcd> slices;
            double chan_err_sq = 0.0;
            double chan_ref_sq = 0.0;
        };
    }

    MetricReport cmd_eval(const ExperimentConfig &cfg, const std::string &codes_path,
                          const std::string &basis_path,
                          const std::vector<std::string> &model_paths, bool perfect_csi,
                          const std::string &report_path)
    {
        cfg.validate();

        int ref_port = 0;
        const PcaBasis basis = io::read_basis(basis_path, ref_port);
        if (basis.spatial_basis.rows() != cfg.grid.n_tx ||
            basis.dd_basis.rows() != cfg.grid.dd_bins())
            throw argument_error("basis dimensions do not match the configured grid");

        bool delta = false;
        std::vector<Code> codes = io::read_codes(codes_path, delta);
        if (delta)
            delta_decode(codes);
        if (codes.front().matrix.rows() != basis.rank_s() ||
            codes.front().matrix.cols() != basis.rank_d())
            throw argument_error("code shape does not match the basis ranks");

        std::vector<Eigen::VectorXcd> codevecs;
        codevecs.reserve(codes.size());
        for (const Code &code : codes)
            codevecs.push_back(code.vec());

        const Eigen::MatrixXd series_raw = realify_codes(codevecs);
        const Eigen::Index n_rows = series_raw.rows();
        const int feat_dim = static_cast<int>(series_raw.cols());
        const Eigen::Index t_train = split_index(cfg.train_fraction, n_rows);
        const int n_past = cfg.past_window;

        const Normalizer norm = Normalizer::fit(series_raw.topRows(t_train));
        const Eigen::MatrixXd series_std = norm.apply(series_raw);
        const ArModel ar = ar_fit(series_std.topRows(t_train), cfg.ar_order, cfg.ar_ridge);

        std::vector<Checkpoint> checkpoints;
        for (const std::string &path : model_paths)
        {
            Checkpoint ck;
            io::read_model(path, ck.model, ck.norm);
            if (ck.model.feat_dim != feat_dim)
                throw argument_error("checkpoint " + path + ": feature dimension " +
                                     std::to_string(ck.model.feat_dim) +
                                     " does not match the code file (" +
                                     std::to_string(feat_dim) + ")");
            ck.name = ck.model.lora_rank > 0 ? "model" : "transformer_full";
            checkpoints.push_back(std::move(ck));
        }

        MetricReport report;
        const std::string hash = cfg.hash();

        for (int horizon : cfg.horizons)
        {
            const Eigen::Index last_start = n_rows - n_past - horizon;
            if (t_train > last_start)
            {
                std::printf("horizon %d: no held-out windows, skipped\n", horizon);
                continue;
            }
            const std::string horizon_str = std::to_string(horizon);

            std::vector<Predictor> predictors;
            predictors.emplace_back();
            predictors.back().name = "persistence";
            predictors.emplace_back();
            predictors.back().name = "ar";
            for (const Checkpoint &ck : checkpoints)
                if (ck.model.n_queries == horizon)
                {
                    Predictor p;
                    p.name = ck.name;
                    p.ckpt = &ck;
                    predictors.push_back(std::move(p));
                }
            if (perfect_csi)
            {
                Predictor p;
                p.name = "perfect_csi";
                p.injected = true;
                predictors.push_back(std::move(p));
            }

            std::vector<Eigen::MatrixXd> truths;
            std::vector<Eigen::MatrixXcd> actual_slices;

            for (Eigen::Index s = t_train; s <= last_start; ++s)
            {
                const Eigen::MatrixXd hist_raw = series_raw.middleRows(s, n_past);
                truths.push_back(series_raw.middleRows(s + n_past, horizon));

                const std::size_t truth_frame = static_cast<std::size_t>(s + n_past + horizon - 1);
                const RefMatrix truth_ref = reconstruct_ref(codes[truth_frame], basis);
                actual_slices.push_back(tx0_slice(truth_ref, cfg.grid.n_doppler, cfg.grid.n_delay));

                for (Predictor &p : predictors)
                {
                    if (p.injected)
                        continue;
                    Eigen::MatrixXd pred;
                    if (p.ckpt != nullptr)
                        pred = p.ckpt->norm.invert(
                            forward(p.ckpt->model, p.ckpt->norm.apply(hist_raw)));
                    else if (p.name == "persistence")
                        pred = persistence_predict(hist_raw, horizon);
                    else
                        pred = norm.invert(
                            ar_predict(ar, series_std.middleRows(s, n_past), horizon));

                    const Code pred_code =
                        code_from_row(pred, horizon - 1, basis.rank_s(), basis.rank_d(),
                                      static_cast<std::int64_t>(truth_frame));
                    const RefMatrix pred_ref = reconstruct_ref(pred_code, basis);
                    p.chan_err_sq += (pred_ref.data - truth_ref.data).squaredNorm();
                    p.chan_ref_sq += truth_ref.data.squaredNorm();
                    p.slices.push_back(tx0_slice(pred_ref, cfg.grid.n_doppler, cfg.grid.n_delay));
                    p.preds.push_back(std::move(pred));
                }
            }

            for (Predictor &p : predictors)
                if (p.injected)
                    p.slices = actual_slices;

            for (const Predictor &p : predictors)
            {
                if (p.injected)
                    continue;
                report.add("code_nmse_db." + p.name, horizon_str, "", nmse_db(p.preds, truths),
                           hash);
                report.add("code_rmse." + p.name, horizon_str, "", rmse(p.preds, truths), hash);
                report.add("channel_nmse_db." + p.name, horizon_str, "",
                           clamped_nmse_db(p.chan_err_sq, p.chan_ref_sq), hash);
            }

            for (double snr : cfg.snr_db)
            {
                const double rho = std::pow(10.0, snr / 10.0);
                const std::string snr_str = fmt_g(snr);

                const auto frame_caps = [&](const std::vector<Eigen::MatrixXcd> &slices) {
                    std::vector<double> caps;
                    caps.reserve(slices.size());
                    for (const Eigen::MatrixXcd &slice : slices)
                        caps.push_back(frame_capacity(slice, rho));
                    return caps;
                };
                const auto mean_of = [](const std::vector<double> &v) {
                    double acc = 0.0;
                    for (double x : v)
                        acc += x;
                    return acc / static_cast<double>(v.size());
                };

                const std::vector<double> actual_caps = frame_caps(actual_slices);
                report.add("ergodic_capacity.actual", horizon_str, snr_str, mean_of(actual_caps),
                           hash);
                std::vector<std::vector<double>> pred_caps;
                for (const Predictor &p : predictors)
                {
                    pred_caps.push_back(frame_caps(p.slices));
                    report.add("ergodic_capacity." + p.name, horizon_str, snr_str,
                               mean_of(pred_caps.back()), hash);
                }

                for (double rate : cfg.target_rates)
                {
                    const std::string suffix = ".r0=" + fmt_g(rate);
                    report.add("outage.actual" + suffix, horizon_str, snr_str,
                               outage_probability(actual_caps, rate), hash);
                    for (std::size_t i = 0; i < predictors.size(); ++i)
                        report.add("outage." + predictors[i].name + suffix, horizon_str, snr_str,
                                   outage_probability(pred_caps[i], rate), hash);
                }

                const auto active_mean = [&](const std::vector<Eigen::MatrixXcd> &slices) {
                    double acc = 0.0;
                    for (const Eigen::MatrixXcd &slice : slices)
                        acc += active_tap_capacity(slice, rho, cfg.energy_fraction);
                    return acc / static_cast<double>(slices.size());
                };
                report.add("active_tap_capacity.actual", horizon_str, snr_str,
                           active_mean(actual_slices), hash);
                for (const Predictor &p : predictors)
                    report.add("active_tap_capacity." + p.name, horizon_str, snr_str,
                               active_mean(p.slices), hash);
            }

            std::string names;
            for (const Predictor &p : predictors)
                names += (names.empty() ? "" : ", ") + p.name;
            std::printf("horizon %d: %d windows starting at frame %d; predictors: %s\n", horizon,
                        static_cast<int>(last_start - t_train + 1), static_cast<int>(t_train),
                        names.c_str());
        }

        if (!report_path.empty())
        {
            std::ofstream out(report_path, std::ios::trunc);
            if (!out)
                throw io_error("cannot open for writing: " + report_path);
            out << report.to_csv();
            out.flush();
            if (!out)
                throw io_error("write failed: " + report_path);
            std::printf("wrote %s (%zu rows)\n", report_path.c_str(), report.rows.size());
        }
        return report;
    }

    void cmd_report(const std::vector<std::string> &report_paths, const std::string &out_path)
    {
        const std::string header = "metric,horizon,snr_db,value,config_hash";
        std::string merged = header + "\n";
        std::size_t n_rows = 0;
        for (const std::string &path : report_paths)
        {
            std::ifstream in(path);
            if (!in)
                throw io_error("cannot open for reading: " + path);
            std::string line;
            if (!std::getline(in, line) || line != header)
                throw format_error("report header mismatch: " + path);
            while (std::getline(in, line))
            {
                if (line.empty())
                    continue;
                merged += line;
                merged += '\n';
                ++n_rows;
            }
        }

        std::ofstream out(out_path, std::ios::trunc);
        if (!out)
            throw io_error("cannot open for writing: " + out_path);
        out << merged;
        out.flush();
        if (!out)
            throw io_error("write failed: " + out_path);
        std::printf("merged %zu reports into %s (%zu rows)\n", report_paths.size(),
                    out_path.c_str(), n_rows);
    }

    namespace
    {
        struct CommonOpts
        {
            std::string config_path;
            std::vector<std::string> overrides;
            std::string mode;
            std::string lora;
            std::uint64_t seed = 0;
            bool seed_set = false;
            int threads = 1;
        };

        void add_common(CLI::App *sub, CommonOpts &opts)
        {
            sub->add_option("--config", opts.config_path, "experiment config file");
            // Each occurrence takes exactly one value so positionals that
            // follow are not swallowed.
            sub->add_option("--set", opts.overrides, "override a config key (key=value)")
                ->type_size(1)
                ->allow_extra_args(false);
            sub->add_option("--seed", opts.seed, "override the experiment seed")
                ->each([&opts](const std::string &) { opts.seed_set = true; });
            sub->add_option("--threads", opts.threads, "worker threads (default 1)");
        }

        ExperimentConfig resolve(const CommonOpts &opts)
        {
            ExperimentConfig cfg;
            if (!opts.config_path.empty())
                cfg = load_config(opts.config_path);
            for (const std::string &pair : opts.overrides)
            {
                const std::size_t eq = pair.find('=');
                if (eq == std::string::npos)
                    throw argument_error("--set expects key=value, got '" + pair + "'");
                apply_override(cfg, pair.substr(0, eq), pair.substr(eq + 1));
            }
            if (!opts.mode.empty())
                apply_override(cfg, "channel.mode", opts.mode);
            if (!opts.lora.empty())
                apply_override(cfg, "train.mode", opts.lora == "on" ? "lora" : "full");
            if (opts.seed_set)
                cfg.seed = opts.seed;
            cfg.finalize();
            cfg.validate();
            if (opts.threads < 1)
                throw argument_error("--threads must be at least 1");
            par::set_threads(opts.threads);
            return cfg;
        }
    }

    int cli_main(int argc, char **argv)
    {
        CLI::App app{"delay-Doppler channel compression and forecasting toolkit"};
        app.require_subcommand(1);

        CommonOpts gen_opts;
        std::string gen_out;
        CLI::App *gen = app.add_subcommand("gen", "generate a channel frame sequence");
        add_common(gen, gen_opts);
        gen->add_option("--mode", gen_opts.mode, "generation mode")
            ->check(CLI::IsMember({"correlated", "phase_ramp"}));
        gen->add_option("--out", gen_out, "output channel file")->required();
        gen->callback([&]() { cmd_gen(resolve(gen_opts), gen_out); });

        CommonOpts fit_opts;
        std::string fit_in, fit_out;
        bool fit_check = false;
        CLI::App *fit = app.add_subcommand("fit-compress",
                                           "fit the compression basis and compress every frame");
        add_common(fit, fit_opts);
        fit->add_option("--mode", fit_opts.mode, "generation mode the input came from")
            ->check(CLI::IsMember({"correlated", "phase_ramp"}));
        fit->add_option("input", fit_in, "channel file")->required();
        fit->add_option("--out", fit_out, "output stem; writes <stem>.ddpb and <stem>.ddcd")
            ->required();
        fit->add_flag("--check", fit_check, "print reconstruction NMSE of the stored codes");
        fit->callback([&]() {
            cmd_fit_compress(resolve(fit_opts), fit_in, fit_out + ".ddpb", fit_out + ".ddcd",
                             fit_check);
        });

        CommonOpts train_opts;
        std::string train_in, train_out, train_log;
        int train_horizon = 0;
        CLI::App *tr = app.add_subcommand("train", "train the forecaster on a code file");
        add_common(tr, train_opts);
        tr->add_option("input", train_in, "code file")->required();
        tr->add_option("--out", train_out, "output model checkpoint")->required();
        tr->add_option("--horizon", train_horizon, "forecast steps (default: first configured)");
        tr->add_option("--lora", train_opts.lora, "adapter-only training on/off")
            ->check(CLI::IsMember({"on", "off"}));
        tr->add_option("--loss-log", train_log, "loss log path (default: <out>.loss.csv)");
        tr->callback([&]() {
            const std::string log_path = train_log.empty() ? train_out + ".loss.csv" : train_log;
            cmd_train(resolve(train_opts), train_in, train_horizon, train_out, log_path);
        });

        CommonOpts eval_opts;
        std::string eval_codes, eval_basis, eval_out;
        std::vector<std::string> eval_models;
        bool eval_perfect = false;
        CLI::App *ev = app.add_subcommand("eval", "evaluate checkpoints and baselines");
        add_common(ev, eval_opts);
        ev->add_option("codes", eval_codes, "code file")->required();
        ev->add_option("basis", eval_basis, "basis file")->required();
        ev->add_option("--model", eval_models, "model checkpoint (repeatable)")
            ->type_size(1)
            ->allow_extra_args(false);
        ev->add_option("--out", eval_out, "output CSV report")->required();
        ev->add_flag("--perfect-csi", eval_perfect,
                     "also report capacity and outage under perfect channel knowledge");
        ev->callback([&]() {
            cmd_eval(resolve(eval_opts), eval_codes, eval_basis, eval_models, eval_perfect,
                     eval_out);
        });

        std::vector<std::string> report_in;
        std::string report_out;
        CLI::App *rp = app.add_subcommand("report", "merge CSV reports");
        rp->add_option("inputs", report_in, "CSV reports to merge")->required();
        rp->add_option("--out", report_out, "merged CSV path")->required();
        rp->callback([&]() { cmd_report(report_in, report_out); });

        try
        {
            app.parse(argc, argv);
        }
        catch (const CLI::CallForHelp &e)
        {
            return app.exit(e);
        }
        catch (const CLI::ParseError &e)
        {
            app.exit(e);
            return 1;
        }
        catch (const config_error &e)
        {
            std::fprintf(stderr, "config error: %s\n", e.what());
            return 1;
        }
        catch (const argument_error &e)
        {
            std::fprintf(stderr, "argument error: %s\n", e.what());
            return 1;
        }
        catch (const training_error &e)
        {
            std::fprintf(stderr, "training error: %s\n", e.what());
            return 1;
        }
        catch (const format_error &e)
        {
            std::fprintf(stderr, "format error: %s\n", e.what());
            return 3;
        }
        catch (const io_error &e)
        {
            std::fprintf(stderr, "io error: %s\n", e.what());
            return 2;
        }
        catch (const numerical_error &e)
        {
            std::fprintf(stderr, "numerical error: %s\n", e.what());
            return 1;
        }
        catch (const std::exception &e)
        {
            std::fprintf(stderr, "error: %s\n", e.what());
            return 1;
        }
        return 0;
    }
}
