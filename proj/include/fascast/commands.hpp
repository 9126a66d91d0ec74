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

#include <string>
#include <vector>

#include "fascast/config.hpp"
#include "fascast/metrics.hpp"
#include "fascast/train.hpp"

namespace fascast
{
    // Harness commands. Each throws on failure; cli_main maps exceptions to
    // exit codes (argument/config/training/numerical 1, I/O 2, format 3).
    // Summary structs exist so tests can drive the pipeline in-process.

    struct GenSummary
    {
        int n_frames = 0;
        double mean_energy = 0.0;
        double min_energy = 0.0;
        double max_energy = 0.0;
    };

    // Streams the configured frame sequence into a channel file.
    GenSummary cmd_gen(const ExperimentConfig &cfg, const std::string &out_path);

    struct FitCompressSummary
    {
        int ref_port = 0;
        int rank_s = 0;
        int rank_d = 0;
        double spatial_retained = 0.0;
        double dd_retained = 0.0;
        // Filled only when decompress_check is set; dB over the given split.
        double train_recon_nmse_db = 0.0;
        double full_recon_nmse_db = 0.0;
    };

    // Reference-port selection and basis fit on the leading train fraction of
    // the file, then compression of every frame.
    FitCompressSummary cmd_fit_compress(const ExperimentConfig &cfg,
                                        const std::string &channels_path,
                                        const std::string &basis_path,
                                        const std::string &codes_path, bool decompress_check);

    struct TrainSummary
    {
        int feat_dim = 0;
        int n_train_windows = 0;
        int n_val_windows = 0;
        TrainResult result;
    };

    // Sliding-window dataset from the code file, temporal split, training,
    // checkpoint plus one "epoch,loss" line per epoch in the loss log.
    // horizon <= 0 selects the first configured horizon.
    TrainSummary cmd_train(const ExperimentConfig &cfg, const std::string &codes_path, int horizon,
                           const std::string &model_path, const std::string &loss_log_path);

    // Held-out evaluation of every checkpoint and baseline on identical
    // windows; writes the CSV report (report_path may be empty to skip).
    MetricReport cmd_eval(const ExperimentConfig &cfg, const std::string &codes_path,
                          const std::string &basis_path,
                          const std::vector<std::string> &model_paths, bool perfect_csi,
                          const std::string &report_path);

    // Concatenates CSV reports that share the standard header.
    void cmd_report(const std::vector<std::string> &report_paths, const std::string &out_path);

    int cli_main(int argc, char **argv);
}
