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

#include "fascast/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "file formats store little-endian scalars verbatim");
static_assert(sizeof(fascast::cplx) == 2 * sizeof(double),
              "std::complex<double> must be two packed doubles");

namespace fascast::io
{
    namespace
    {
        constexpr std::uint8_t kVersion = 1;

        void write_bytes(std::ofstream &out, const void *p, std::size_t n, const std::string &path)
        {
            out.write(static_cast<const char *>(p), static_cast<std::streamsize>(n));
            if (!out)
                throw io_error("write failed: " + path);
        }

        void read_bytes(std::ifstream &in, void *p, std::size_t n, const std::string &path)
        {
            in.read(static_cast<char *>(p), static_cast<std::streamsize>(n));
            if (in.gcount() != static_cast<std::streamsize>(n))
                throw format_error("truncated file: " + path);
        }

        void write_magic(std::ofstream &out, const char magic[6], const std::string &path)
        {
            write_bytes(out, magic, 5, path);
            write_bytes(out, &kVersion, 1, path);
        }

        void check_magic(std::ifstream &in, const char magic[6], const std::string &path)
        {
            char got[5];
            read_bytes(in, got, 5, path);
            if (std::memcmp(got, magic, 5) != 0)
                throw format_error("bad magic in " + path);
            std::uint8_t version = 0;
            read_bytes(in, &version, 1, path);
            if (version != kVersion)
                throw format_error("unsupported version in " + path);
        }

        void write_u32(std::ofstream &out, std::uint32_t v, const std::string &path)
        {
            write_bytes(out, &v, sizeof(v), path);
        }

        std::uint32_t read_u32(std::ifstream &in, const std::string &path)
        {
            std::uint32_t v = 0;
            read_bytes(in, &v, sizeof(v), path);
            return v;
        }

        void write_f64(std::ofstream &out, const double *p, std::size_t n, const std::string &path)
        {
            write_bytes(out, p, n * sizeof(double), path);
        }

        void read_f64(std::ifstream &in, double *p, std::size_t n, const std::string &path)
        {
            read_bytes(in, p, n * sizeof(double), path);
        }

        void write_cplx(std::ofstream &out, const cplx *p, std::size_t n, const std::string &path)
        {
            // std::complex<double> is layout-compatible with double[2].
            write_f64(out, reinterpret_cast<const double *>(p), 2 * n, path);
        }

        void read_cplx(std::ifstream &in, cplx *p, std::size_t n, const std::string &path)
        {
            read_f64(in, reinterpret_cast<double *>(p), 2 * n, path);
        }

        std::ofstream open_out(const std::string &path)
        {
            std::ofstream out(path, std::ios::binary | std::ios::trunc);
            if (!out)
                throw io_error("cannot open for writing: " + path);
            return out;
        }

        std::ifstream open_in(const std::string &path)
        {
            std::ifstream in(path, std::ios::binary);
            if (!in)
                throw io_error("cannot open for reading: " + path);
            return in;
        }
    }

    struct ChannelWriter::Impl
    {
        std::string path;
        std::ofstream out;
        ChannelHeader header;
        std::uint32_t written = 0;
        bool closed = false;
    };

    ChannelWriter::ChannelWriter(const std::string &path, const ChannelHeader &header)
        : impl_(std::make_unique<Impl>())
    {
        if (header.n_ports == 0 || header.n_tx == 0 || header.n_doppler == 0 ||
            header.n_delay == 0)
            throw argument_error("ChannelWriter: zero dimension in header");
        impl_->path = path;
        impl_->header = header;
        impl_->out = open_out(path);
        write_magic(impl_->out, "DDCH1", path);
        write_u32(impl_->out, header.n_frames, path);
        write_u32(impl_->out, header.n_ports, path);
        write_u32(impl_->out, header.n_tx, path);
        write_u32(impl_->out, header.n_doppler, path);
        write_u32(impl_->out, header.n_delay, path);
    }

    ChannelWriter::~ChannelWriter() = default;

    void ChannelWriter::append(const ChannelTensor &frame)
    {
        Impl &im = *impl_;
        if (im.closed)
            throw argument_error("ChannelWriter: append after close");
        if (im.written >= im.header.n_frames)
            throw argument_error("ChannelWriter: more frames than the header promises");
        if (frame.n_ports != static_cast<int>(im.header.n_ports) ||
            frame.n_tx != static_cast<int>(im.header.n_tx) ||
            frame.n_doppler != static_cast<int>(im.header.n_doppler) ||
            frame.n_delay != static_cast<int>(im.header.n_delay))
            throw argument_error("ChannelWriter: frame shape does not match the header");
        write_cplx(im.out, frame.data.data(), frame.data.size(), im.path);
        ++im.written;
    }

    void ChannelWriter::close()
    {
        Impl &im = *impl_;
        if (im.closed)
            return;
        if (im.written != im.header.n_frames)
            throw argument_error("ChannelWriter: frame count does not match the header");
        im.out.flush();
        if (!im.out)
            throw io_error("write failed: " + im.path);
        im.out.close();
        im.closed = true;
    }

    struct ChannelReader::Impl
    {
        std::string path;
        std::ifstream in;
        ChannelHeader header;
        std::uint32_t read_count = 0;
    };

    ChannelReader::ChannelReader(const std::string &path) : impl_(std::make_unique<Impl>())
    {
        impl_->path = path;
        impl_->in = open_in(path);
        check_magic(impl_->in, "DDCH1", path);
        impl_->header.n_frames = read_u32(impl_->in, path);
        impl_->header.n_ports = read_u32(impl_->in, path);
        impl_->header.n_tx = read_u32(impl_->in, path);
        impl_->header.n_doppler = read_u32(impl_->in, path);
        impl_->header.n_delay = read_u32(impl_->in, path);
        if (impl_->header.n_ports == 0 || impl_->header.n_tx == 0 ||
            impl_->header.n_doppler == 0 || impl_->header.n_delay == 0)
            throw format_error("zero dimension in header: " + path);
    }

    ChannelReader::~ChannelReader() = default;

    const ChannelHeader &ChannelReader::header() const
    {
        return impl_->header;
    }

    bool ChannelReader::next(ChannelTensor &frame)
    {
        Impl &im = *impl_;
        if (im.read_count >= im.header.n_frames)
            return false;
        frame = ChannelTensor(static_cast<int>(im.header.n_ports),
                              static_cast<int>(im.header.n_tx),
                              static_cast<int>(im.header.n_doppler),
                              static_cast<int>(im.header.n_delay),
                              static_cast<std::int64_t>(im.read_count));
        read_cplx(im.in, frame.data.data(), frame.data.size(), im.path);
        ++im.read_count;
        return true;
    }

    void write_channels(const std::string &path, const std::vector<ChannelTensor> &frames)
    {
        if (frames.empty())
            throw argument_error("write_channels: empty frame list");
        ChannelHeader header;
        header.n_frames = static_cast<std::uint32_t>(frames.size());
        header.n_ports = static_cast<std::uint32_t>(frames.front().n_ports);
        header.n_tx = static_cast<std::uint32_t>(frames.front().n_tx);
        header.n_doppler = static_cast<std::uint32_t>(frames.front().n_doppler);
        header.n_delay = static_cast<std::uint32_t>(frames.front().n_delay);
        ChannelWriter writer(path, header);
        for (const ChannelTensor &frame : frames)
            writer.append(frame);
        writer.close();
    }

    std::vector<ChannelTensor> read_channels(const std::string &path)
    {
        ChannelReader reader(path);
        std::vector<ChannelTensor> frames;
        frames.reserve(reader.header().n_frames);
        ChannelTensor frame;
        while (reader.next(frame))
            frames.push_back(std::move(frame));
        return frames;
    }

    void write_codes(const std::string &path, const std::vector<Code> &codes, bool delta_encoded)
    {
        if (codes.empty())
            throw argument_error("write_codes: empty code list");
        const Eigen::Index rank_s = codes.front().matrix.rows();
        const Eigen::Index rank_d = codes.front().matrix.cols();
        for (const Code &code : codes)
            if (code.matrix.rows() != rank_s || code.matrix.cols() != rank_d)
                throw argument_error("write_codes: inconsistent code shapes");

        std::ofstream out = open_out(path);
        write_magic(out, "DDCD1", path);
        write_u32(out, static_cast<std::uint32_t>(codes.size()), path);
        write_u32(out, static_cast<std::uint32_t>(rank_s), path);
        write_u32(out, static_cast<std::uint32_t>(rank_d), path);
        write_u32(out, delta_encoded ? 1u : 0u, path);
        for (const Code &code : codes)
            write_cplx(out, code.matrix.data(), static_cast<std::size_t>(code.matrix.size()),
                       path);
        out.flush();
        if (!out)
            throw io_error("write failed: " + path);
    }

    std::vector<Code> read_codes(const std::string &path, bool &delta_encoded)
    {
        std::ifstream in = open_in(path);
        check_magic(in, "DDCD1", path);
        const std::uint32_t n_codes = read_u32(in, path);
        const std::uint32_t rank_s = read_u32(in, path);
        const std::uint32_t rank_d = read_u32(in, path);
        const std::uint32_t delta_flag = read_u32(in, path);
        if (n_codes == 0 || rank_s == 0 || rank_d == 0)
            throw format_error("zero dimension in header: " + path);
        if (delta_flag > 1)
            throw format_error("invalid delta flag: " + path);
        delta_encoded = delta_flag == 1;

        std::vector<Code> codes(n_codes);
        for (std::uint32_t i = 0; i < n_codes; ++i)
        {
            codes[i].matrix.resize(rank_s, rank_d);
            codes[i].frame_index = i;
            read_cplx(in, codes[i].matrix.data(), static_cast<std::size_t>(codes[i].matrix.size()),
                      path);
        }
        return codes;
    }

    void write_basis(const std::string &path, const PcaBasis &basis, int ref_port)
    {
        if (basis.rank_s() < 1 || basis.rank_d() < 1)
            throw argument_error("write_basis: empty basis");
        if (ref_port < 0)
            throw argument_error("write_basis: negative reference port");

        std::ofstream out = open_out(path);
        write_magic(out, "DDPB1", path);
        write_u32(out, static_cast<std::uint32_t>(basis.spatial_basis.rows()), path);
        write_u32(out, static_cast<std::uint32_t>(basis.dd_basis.rows()), path);
        write_u32(out, static_cast<std::uint32_t>(basis.rank_s()), path);
        write_u32(out, static_cast<std::uint32_t>(basis.rank_d()), path);
        write_u32(out, static_cast<std::uint32_t>(ref_port), path);
        write_cplx(out, basis.spatial_basis.data(),
                   static_cast<std::size_t>(basis.spatial_basis.size()), path);
        write_cplx(out, basis.dd_basis.data(), static_cast<std::size_t>(basis.dd_basis.size()),
                   path);
        write_f64(out, basis.spatial_eigs.data(),
                  static_cast<std::size_t>(basis.spatial_eigs.size()), path);
        write_f64(out, basis.dd_eigs.data(), static_cast<std::size_t>(basis.dd_eigs.size()), path);
        const double tail[3] = {basis.threshold, basis.spatial_retained, basis.dd_retained};
        write_f64(out, tail, 3, path);
        out.flush();
        if (!out)
            throw io_error("write failed: " + path);
    }

    PcaBasis read_basis(const std::string &path, int &ref_port)
    {
        std::ifstream in = open_in(path);
        check_magic(in, "DDPB1", path);
        const std::uint32_t n_tx = read_u32(in, path);
        const std::uint32_t n_bins = read_u32(in, path);
        const std::uint32_t rank_s = read_u32(in, path);
        const std::uint32_t rank_d = read_u32(in, path);
        ref_port = static_cast<int>(read_u32(in, path));
        if (n_tx == 0 || n_bins == 0 || rank_s == 0 || rank_d == 0)
            throw format_error("zero dimension in header: " + path);
        if (rank_s > n_tx || rank_d > n_bins)
            throw format_error("ranks exceed dimensions: " + path);

        PcaBasis basis;
        basis.spatial_basis.resize(n_tx, rank_s);
        basis.dd_basis.resize(n_bins, rank_d);
        basis.spatial_eigs.resize(n_tx);
        basis.dd_eigs.resize(n_bins);
        read_cplx(in, basis.spatial_basis.data(),
                  static_cast<std::size_t>(basis.spatial_basis.size()), path);
        read_cplx(in, basis.dd_basis.data(), static_cast<std::size_t>(basis.dd_basis.size()),
                  path);
        read_f64(in, basis.spatial_eigs.data(),
                 static_cast<std::size_t>(basis.spatial_eigs.size()), path);
        read_f64(in, basis.dd_eigs.data(), static_cast<std::size_t>(basis.dd_eigs.size()), path);
        double tail[3] = {0.0, 0.0, 0.0};
        read_f64(in, tail, 3, path);
        basis.threshold = tail[0];
        basis.spatial_retained = tail[1];
        basis.dd_retained = tail[2];
        return basis;
    }

    void write_model(const std::string &path, const MicroModel &model, const Normalizer &norm)
    {
        if (norm.mean.size() != model.feat_dim || norm.stddev.size() != model.feat_dim)
            throw argument_error("write_model: normalizer does not match feat_dim");

        std::ofstream out = open_out(path);
        write_magic(out, "DDMD1", path);
        write_u32(out, static_cast<std::uint32_t>(model.feat_dim), path);
        write_u32(out, static_cast<std::uint32_t>(model.width), path);
        write_u32(out, static_cast<std::uint32_t>(model.blocks.size()), path);
        write_u32(out, static_cast<std::uint32_t>(model.n_heads), path);
        write_u32(out, static_cast<std::uint32_t>(model.n_queries), path);
        write_u32(out, static_cast<std::uint32_t>(model.lora_rank), path);
        write_f64(out, &model.lora_alpha, 1, path);
        write_f64(out, norm.mean.data(), static_cast<std::size_t>(norm.mean.size()), path);
        write_f64(out, norm.stddev.data(), static_cast<std::size_t>(norm.stddev.size()), path);
        // Parameter arrays in declaration order, each in Eigen storage order.
        visit_params(const_cast<MicroModel &>(model),
                     [&](const std::string &, ParamKind, auto &arr) {
                         write_f64(out, arr.data(), static_cast<std::size_t>(arr.size()), path);
                     });
        out.flush();
        if (!out)
            throw io_error("write failed: " + path);
    }

    void read_model(const std::string &path, MicroModel &model, Normalizer &norm)
    {
        std::ifstream in = open_in(path);
        check_magic(in, "DDMD1", path);
        const std::uint32_t feat_dim = read_u32(in, path);
        const std::uint32_t width = read_u32(in, path);
        const std::uint32_t n_blocks = read_u32(in, path);
        const std::uint32_t n_heads = read_u32(in, path);
        const std::uint32_t n_queries = read_u32(in, path);
        const std::uint32_t lora_rank = read_u32(in, path);
        if (feat_dim == 0 || width == 0 || n_blocks == 0 || n_heads == 0 || n_queries == 0)
            throw format_error("zero dimension in header: " + path);
        if (width % n_heads != 0 || lora_rank > width)
            throw format_error("inconsistent model header: " + path);

        double alpha = 0.0;
        read_f64(in, &alpha, 1, path);
        // Allocates the right shapes; every array is overwritten below.
        model = make_micro_model(static_cast<int>(feat_dim), static_cast<int>(width),
                                 static_cast<int>(n_blocks), static_cast<int>(n_heads),
                                 static_cast<int>(n_queries), static_cast<int>(lora_rank), alpha,
                                 0);
        norm.mean.resize(feat_dim);
        norm.stddev.resize(feat_dim);
        read_f64(in, norm.mean.data(), feat_dim, path);
        read_f64(in, norm.stddev.data(), feat_dim, path);
        visit_params(model, [&](const std::string &, ParamKind, auto &arr) {
            read_f64(in, arr.data(), static_cast<std::size_t>(arr.size()), path);
        });
    }
}
