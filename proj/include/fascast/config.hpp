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
#include <string>
#include <vector>

#include "fascast/channel.hpp"
#include "fascast/train.hpp"

namespace fascast
{
    // Full experiment description. Loaded from a key-value text file
    // ("key = value" lines, '#' comments), then optionally overridden from
    // the command line. finalize() resolves derived defaults; validate()
    // checks every field and names the offender in the error.
    struct ExperimentConfig
    {
        FasGeometry geometry;
        GridConfig grid; // doppler_res_hz <= 0 means "derive in finalize()"

        int n_paths = 12;
        double rice_kappa = 5.0;
        GenMode mode = GenMode::phase_ramp;
        int n_frames = 600;
        std::uint64_t seed = 42;

        double energy_threshold = 0.90;
        bool delta_codes = false;
        double train_fraction = 0.8;

        int width = 64;
        int n_blocks = 2;
        int n_heads = 4;
        int lora_rank = 8;
        double lora_alpha = 1.0;
        TrainConfig train;

        int past_window = 50;
        std::vector<int> horizons = {10, 20, 30, 40, 50};
        std::vector<double> snr_db = {0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20};
        std::vector<double> target_rates = {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5};
        int ar_order = 4;
        double ar_ridge = 1e-3;
        double energy_fraction = 0.99;

        // Derives the Doppler resolution from the coherence anchor (the
        // direct path advances one cycle per 35 frames) when unset.
        void finalize();
        void validate() const;

        // Canonical "key = value" rendering of every key in table order.
        std::string resolved_text() const;
        // FNV-1a 64-bit hash of resolved_text, 16 hex digits.
        std::string hash() const;
    };

    // Defaults, then the file's pairs. Missing file -> io_error; unknown key
    // or unparsable value -> config_error naming the key.
    ExperimentConfig load_config(const std::string &path);

    void apply_override(ExperimentConfig &cfg, const std::string &key, const std::string &value);
}
