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

#include "fascast/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace fascast
{
    namespace
    {
        std::string trim(const std::string &s)
        {
            std::size_t a = 0;
            std::size_t b = s.size();
            while (a < b && std::isspace(static_cast<unsigned char>(s[a])))
                ++a;
            while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1])))
                --b;
            return s.substr(a, b - a);
        }

        double parse_double(const std::string &key, const std::string &value)
        {
            try
            {
                std::size_t pos = 0;
                const double v = std::stod(value, &pos);
                if (pos != value.size())
                    throw std::invalid_argument("trailing characters");
                return v;
            }
            catch (const std::exception &)
            {
                throw config_error(key, "cannot parse '" + value + "' as a real number");
            }
        }

        long long parse_int(const std::string &key, const std::string &value)
        {
            try
            {
                std::size_t pos = 0;
                const long long v = std::stoll(value, &pos);
                if (pos != value.size())
                    throw std::invalid_argument("trailing characters");
                return v;
            }
            catch (const std::exception &)
            {
                throw config_error(key, "cannot parse '" + value + "' as an integer");
            }
        }

        std::uint64_t parse_u64(const std::string &key, const std::string &value)
        {
            try
            {
                std::size_t pos = 0;
                const unsigned long long v = std::stoull(value, &pos);
                if (pos != value.size())
                    throw std::invalid_argument("trailing characters");
                return v;
            }
            catch (const std::exception &)
            {
                throw config_error(key, "cannot parse '" + value + "' as an unsigned integer");
            }
        }

        bool parse_bool(const std::string &key, const std::string &value)
        {
            if (value == "true" || value == "on" || value == "1")
                return true;
            if (value == "false" || value == "off" || value == "0")
                return false;
            throw config_error(key, "cannot parse '" + value + "' as a boolean");
        }

        std::vector<double> parse_double_list(const std::string &key, const std::string &value)
        {
            std::vector<double> out;
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, ','))
            {
                item = trim(item);
                if (item.empty())
                    throw config_error(key, "empty list element");
                out.push_back(parse_double(key, item));
            }
            if (out.empty())
                throw config_error(key, "empty list");
            return out;
        }

        std::vector<int> parse_int_list(const std::string &key, const std::string &value)
        {
            std::vector<int> out;
            for (double v : parse_double_list(key, value))
            {
                const int i = static_cast<int>(v);
                if (static_cast<double>(i) != v)
                    throw config_error(key, "list element is not an integer");
                out.push_back(i);
            }
            return out;
        }

        std::string render_double(double v)
        {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            return buf;
        }

        template <typename T>
        std::string render_list(const std::vector<T> &values)
        {
            std::string out;
            for (std::size_t i = 0; i < values.size(); ++i)
            {
                if (i)
                    out += ',';
                if constexpr (std::is_same_v<T, double>)
                    out += render_double(values[i]);
                else
                    out += std::to_string(values[i]);
            }
            return out;
        }

        struct ConfigKey
        {
            const char *name;
            std::function<std::string(const ExperimentConfig &)> get;
            std::function<void(ExperimentConfig &, const std::string &)> set;
        };

        int checked_int(const std::string &key, const std::string &value)
        {
            const long long v = parse_int(key, value);
            if (v < -(1ll << 31) || v >= (1ll << 31))
                throw config_error(key, "integer out of range");
            return static_cast<int>(v);
        }

        const std::vector<ConfigKey> &config_keys()
        {
            static const std::vector<ConfigKey> keys = {
                {"geometry.n_ports",
                 [](const ExperimentConfig &c) { return std::to_string(c.geometry.n_ports); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.geometry.n_ports = checked_int("geometry.n_ports", v);
                 }},
                {"geometry.spacing_over_lambda",
                 [](const ExperimentConfig &c) {
                     return render_double(c.geometry.spacing_over_lambda);
                 },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.geometry.spacing_over_lambda = parse_double("geometry.spacing_over_lambda", v);
                 }},
                {"geometry.elevation_rad",
                 [](const ExperimentConfig &c) { return render_double(c.geometry.elevation_rad); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.geometry.elevation_rad = parse_double("geometry.elevation_rad", v);
                 }},
                {"geometry.loading_eps",
                 [](const ExperimentConfig &c) { return render_double(c.geometry.loading_eps); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.geometry.loading_eps = parse_double("geometry.loading_eps", v);
                 }},
                {"grid.n_tx",
                 [](const ExperimentConfig &c) { return std::to_string(c.grid.n_tx); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.grid.n_tx = checked_int("grid.n_tx", v);
                 }},
                {"grid.n_doppler",
                 [](const ExperimentConfig &c) { return std::to_string(c.grid.n_doppler); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.grid.n_doppler = checked_int("grid.n_doppler", v);
                 }},
                {"grid.n_delay",
                 [](const ExperimentConfig &c) { return std::to_string(c.grid.n_delay); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.grid.n_delay = checked_int("grid.n_delay", v);
                 }},
                {"grid.frame_duration_s",
                 [](const ExperimentConfig &c) { return render_double(c.grid.frame_duration_s); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.grid.frame_duration_s = parse_double("grid.frame_duration_s", v);
                 }},
                {"grid.doppler_res_hz",
                 [](const ExperimentConfig &c) { return render_double(c.grid.doppler_res_hz); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.grid.doppler_res_hz = parse_double("grid.doppler_res_hz", v);
                 }},
                {"channel.n_paths",
                 [](const ExperimentConfig &c) { return std::to_string(c.n_paths); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.n_paths = checked_int("channel.n_paths", v);
                 }},
                {"channel.rice_kappa",
                 [](const ExperimentConfig &c) { return render_double(c.rice_kappa); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.rice_kappa = parse_double("channel.rice_kappa", v);
                 }},
                {"channel.mode",
                 [](const ExperimentConfig &c) {
                     return c.mode == GenMode::correlated ? "correlated" : "phase_ramp";
                 },
                 [](ExperimentConfig &c, const std::string &v) {
                     if (v == "correlated")
                         c.mode = GenMode::correlated;
                     else if (v == "phase_ramp")
                         c.mode = GenMode::phase_ramp;
                     else
                         throw config_error("channel.mode",
                                            "must be 'correlated' or 'phase_ramp'");
                 }},
                {"channel.n_frames",
                 [](const ExperimentConfig &c) { return std::to_string(c.n_frames); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.n_frames = checked_int("channel.n_frames", v);
                 }},
                {"seed",
                 [](const ExperimentConfig &c) { return std::to_string(c.seed); },
                 [](ExperimentConfig &c, const std::string &v) { c.seed = parse_u64("seed", v); }},
                {"compression.threshold",
                 [](const ExperimentConfig &c) { return render_double(c.energy_threshold); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.energy_threshold = parse_double("compression.threshold", v);
                 }},
                {"compression.delta_codes",
                 [](const ExperimentConfig &c) { return c.delta_codes ? "true" : "false"; },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.delta_codes = parse_bool("compression.delta_codes", v);
                 }},
                {"split.train_fraction",
                 [](const ExperimentConfig &c) { return render_double(c.train_fraction); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.train_fraction = parse_double("split.train_fraction", v);
                 }},
                {"model.width",
                 [](const ExperimentConfig &c) { return std::to_string(c.width); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.width = checked_int("model.width", v);
                 }},
                {"model.n_blocks",
                 [](const ExperimentConfig &c) { return std::to_string(c.n_blocks); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.n_blocks = checked_int("model.n_blocks", v);
                 }},
                {"model.n_heads",
                 [](const ExperimentConfig &c) { return std::to_string(c.n_heads); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.n_heads = checked_int("model.n_heads", v);
                 }},
                {"model.lora_rank",
                 [](const ExperimentConfig &c) { return std::to_string(c.lora_rank); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.lora_rank = checked_int("model.lora_rank", v);
                 }},
                {"model.lora_alpha",
                 [](const ExperimentConfig &c) { return render_double(c.lora_alpha); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.lora_alpha = parse_double("model.lora_alpha", v);
                 }},
                {"train.learning_rate",
                 [](const ExperimentConfig &c) { return render_double(c.train.learning_rate); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.train.learning_rate = parse_double("train.learning_rate", v);
                 }},
                {"train.batch_size",
                 [](const ExperimentConfig &c) { return std::to_string(c.train.batch_size); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.train.batch_size = checked_int("train.batch_size", v);
                 }},
                {"train.epochs",
                 [](const ExperimentConfig &c) { return std::to_string(c.train.epochs); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.train.epochs = checked_int("train.epochs", v);
                 }},
                {"train.loss_eps",
                 [](const ExperimentConfig &c) { return render_double(c.train.loss_eps); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.train.loss_eps = parse_double("train.loss_eps", v);
                 }},
                {"train.mode",
                 [](const ExperimentConfig &c) {
                     return c.train.mode == TrainMode::lora_only ? "lora" : "full";
                 },
                 [](ExperimentConfig &c, const std::string &v) {
                     if (v == "lora" || v == "lora_only")
                         c.train.mode = TrainMode::lora_only;
                     else if (v == "full")
                         c.train.mode = TrainMode::full;
                     else
                         throw config_error("train.mode", "must be 'lora' or 'full'");
                 }},
                {"train.weight_decay",
                 [](const ExperimentConfig &c) { return render_double(c.train.weight_decay); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.train.weight_decay = parse_double("train.weight_decay", v);
                 }},
                {"train.momentum",
                 [](const ExperimentConfig &c) { return render_double(c.train.momentum); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.train.momentum = parse_double("train.momentum", v);
                 }},
                {"train.clip_norm",
                 [](const ExperimentConfig &c) { return render_double(c.train.clip_norm); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.train.clip_norm = parse_double("train.clip_norm", v);
                 }},
                {"train.plain_sgd",
                 [](const ExperimentConfig &c) { return c.train.plain_sgd ? "true" : "false"; },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.train.plain_sgd = parse_bool("train.plain_sgd", v);
                 }},
                {"forecast.past_window",
                 [](const ExperimentConfig &c) { return std::to_string(c.past_window); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.past_window = checked_int("forecast.past_window", v);
                 }},
                {"forecast.horizons",
                 [](const ExperimentConfig &c) { return render_list(c.horizons); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.horizons = parse_int_list("forecast.horizons", v);
                 }},
                {"eval.snr_db",
                 [](const ExperimentConfig &c) { return render_list(c.snr_db); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.snr_db = parse_double_list("eval.snr_db", v);
                 }},
                {"eval.target_rates",
                 [](const ExperimentConfig &c) { return render_list(c.target_rates); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.target_rates = parse_double_list("eval.target_rates", v);
                 }},
                {"eval.ar_order",
                 [](const ExperimentConfig &c) { return std::to_string(c.ar_order); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.ar_order = checked_int("eval.ar_order", v);
                 }},
                {"eval.ar_ridge",
                 [](const ExperimentConfig &c) { return render_double(c.ar_ridge); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.ar_ridge = parse_double("eval.ar_ridge", v);
                 }},
                {"eval.energy_fraction",
                 [](const ExperimentConfig &c) { return render_double(c.energy_fraction); },
                 [](ExperimentConfig &c, const std::string &v) {
                     c.energy_fraction = parse_double("eval.energy_fraction", v);
                 }},
            };
            return keys;
        }
    }

    void ExperimentConfig::finalize()
    {
        if (grid.doppler_res_hz <= 0.0 && grid.frame_duration_s > 0.0 && grid.n_doppler >= 1)
        {
            const int half = std::max(1, grid.n_doppler / 2);
            grid.doppler_res_hz = 1.0 / (35.0 * grid.frame_duration_s * half);
        }
    }

    void ExperimentConfig::validate() const
    {
        geometry.validate();
        grid.validate();
        train.validate();
        if (n_paths < 0)
            throw config_error("channel.n_paths", "must be non-negative");
        if (!std::isfinite(rice_kappa) || rice_kappa < 0.0)
            throw config_error("channel.rice_kappa", "must be non-negative and finite");
        if (n_frames < 1)
            throw config_error("channel.n_frames", "must be at least 1");
        if (!(energy_threshold > 0.0) || energy_threshold > 1.0)
            throw config_error("compression.threshold", "must lie in (0, 1]");
        if (!(train_fraction > 0.0) || train_fraction >= 1.0)
            throw config_error("split.train_fraction", "must lie in (0, 1)");
        if (width < 1)
            throw config_error("model.width", "must be at least 1");
        if (n_blocks < 1)
            throw config_error("model.n_blocks", "must be at least 1");
        if (n_heads < 1 || width % n_heads != 0)
            throw config_error("model.n_heads", "must divide model.width");
        if (lora_rank < 0 || lora_rank > width)
            throw config_error("model.lora_rank", "must lie in [0, model.width]");
        if (!std::isfinite(lora_alpha))
            throw config_error("model.lora_alpha", "must be finite");
        if (past_window < 1)
            throw config_error("forecast.past_window", "must be at least 1");
        if (horizons.empty())
            throw config_error("forecast.horizons", "must not be empty");
        for (int h : horizons)
            if (h < 1)
                throw config_error("forecast.horizons", "entries must be positive");
        if (snr_db.empty())
            throw config_error("eval.snr_db", "must not be empty");
        if (target_rates.empty())
            throw config_error("eval.target_rates", "must not be empty");
        for (double r : target_rates)
            if (!(r >= 0.0) || !std::isfinite(r))
                throw config_error("eval.target_rates", "entries must be non-negative");
        if (ar_order < 1)
            throw config_error("eval.ar_order", "must be at least 1");
        if (!(ar_ridge >= 0.0) || !std::isfinite(ar_ridge))
            throw config_error("eval.ar_ridge", "must be non-negative and finite");
        if (!(energy_fraction > 0.0) || energy_fraction > 1.0)
            throw config_error("eval.energy_fraction", "must lie in (0, 1]");
    }

    std::string ExperimentConfig::resolved_text() const
    {
        std::string out;
        for (const ConfigKey &key : config_keys())
        {
            out += key.name;
            out += " = ";
            out += key.get(*this);
            out += '\n';
        }
        return out;
    }

    std::string ExperimentConfig::hash() const
    {
        // FNV-1a, 64-bit
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (unsigned char ch : resolved_text())
        {
            h ^= ch;
            h *= 0x100000001b3ull;
        }
        char buf[17];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }

    ExperimentConfig load_config(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw io_error("cannot open config file: " + path);

        ExperimentConfig cfg;
        std::string line;
        int line_no = 0;
        while (std::getline(in, line))
        {
            ++line_no;
            const std::size_t hash_pos = line.find('#');
            if (hash_pos != std::string::npos)
                line = line.substr(0, hash_pos);
            line = trim(line);
            if (line.empty())
                continue;
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw config_error(path + ":" + std::to_string(line_no),
                                   "expected 'key = value'");
            apply_override(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
        return cfg;
    }

    void apply_override(ExperimentConfig &cfg, const std::string &key, const std::string &value)
    {
        for (const ConfigKey &entry : config_keys())
        {
            if (key == entry.name)
            {
                entry.set(cfg, value);
                return;
            }
        }
        throw config_error(key, "unknown configuration key");
    }
}
