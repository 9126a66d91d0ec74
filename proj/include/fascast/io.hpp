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
// Binary dataset formats. Every file is:
//   5-byte magic, 1 version byte, header of u32 little-endian dimensions,
//   payload of f64 little-endian values, complex numbers interleaved (re, im).
//
//   DDCH1  channel tensors; header (n_frames, n_ports, n_tx, n_doppler,
//          n_delay); frames in index order, each frame in (port, tx,
//          doppler, delay) order with delay fastest.
//   DDCD1  code sequence; header (n_codes, rank_s, rank_d, delta_flag);
//          each code matrix column-major. Codes are stored in frame order;
//          readers assign frame indices by position.
//   DDPB1  compression basis; header (n_tx, n_bins, rank_s, rank_d,
//          ref_port); payload: spatial basis, dd basis (column-major
//          complex), full eigenvalue lists, threshold, retained ratios.
//   DDMD1  model checkpoint; header (feat_dim, width, n_blocks, n_heads,
//          n_queries, lora_rank); payload: lora_alpha, normalizer mean and
//          std, then parameter arrays in declaration order.

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fascast/channel.hpp"
#include "fascast/compression.hpp"
#include "fascast/model.hpp"
#include "fascast/train.hpp"

namespace fascast::io
{
    struct ChannelHeader
    {
        std::uint32_t n_frames = 0;
        std::uint32_t n_ports = 0;
        std::uint32_t n_tx = 0;
        std::uint32_t n_doppler = 0;
        std::uint32_t n_delay = 0;
    };

    // Streams frames to disk one at a time; the header is written up front,
    // so the final frame count must be known in advance. close() verifies
    // the promised count was delivered.
    class ChannelWriter
    {
    public:
        ChannelWriter(const std::string &path, const ChannelHeader &header);
        ~ChannelWriter();
        ChannelWriter(const ChannelWriter &) = delete;
        ChannelWriter &operator=(const ChannelWriter &) = delete;

        void append(const ChannelTensor &frame);
        void close();

    private:
        struct Impl;
        std::unique_ptr<Impl> impl_;
    };

    class ChannelReader
    {
    public:
        explicit ChannelReader(const std::string &path);
        ~ChannelReader();
        ChannelReader(const ChannelReader &) = delete;
        ChannelReader &operator=(const ChannelReader &) = delete;

        const ChannelHeader &header() const;
        // Fills the next frame in index order; false once all frames are read.
        bool next(ChannelTensor &frame);

    private:
        struct Impl;
        std::unique_ptr<Impl> impl_;
    };

    void write_channels(const std::string &path, const std::vector<ChannelTensor> &frames);
    std::vector<ChannelTensor> read_channels(const std::string &path);

    void write_codes(const std::string &path, const std::vector<Code> &codes, bool delta_encoded);
    std::vector<Code> read_codes(const std::string &path, bool &delta_encoded);

    void write_basis(const std::string &path, const PcaBasis &basis, int ref_port);
    PcaBasis read_basis(const std::string &path, int &ref_port);

    void write_model(const std::string &path, const MicroModel &model, const Normalizer &norm);
    void read_model(const std::string &path, MicroModel &model, Normalizer &norm);
}
