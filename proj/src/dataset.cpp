// SPDX-License-Identifier: Apache-2.0
//
// mimo-sounder: software twin of a frequency-multiplexed Massive MIMO channel sounder
// Copyright (C) 2026 The mimo-sounder authors
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

#include "sounder/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

namespace sounder
{
    namespace
    {
        constexpr char kMagic[4] = {'C', 'S', 'I', 'D'};
        constexpr std::uint64_t kMaxDescriptorBytes = 1u << 24;

        template <typename U>
        void put_le(std::vector<char> &buf, U v)
        {
            for (std::size_t i = 0; i < sizeof(U); ++i)
                buf.push_back(char((v >> (8 * i)) & 0xffu));
        }

        void put_f64(std::vector<char> &buf, double v) { put_le(buf, std::bit_cast<std::uint64_t>(v)); }
        void put_f32(std::vector<char> &buf, float v) { put_le(buf, std::bit_cast<std::uint32_t>(v)); }

        template <typename U>
        U get_le(const char *p)
        {
            U v = 0;
            for (std::size_t i = 0; i < sizeof(U); ++i)
                v |= U(static_cast<unsigned char>(p[i])) << (8 * i);
            return v;
        }

        double get_f64(const char *p) { return std::bit_cast<double>(get_le<std::uint64_t>(p)); }
        float get_f32(const char *p) { return std::bit_cast<float>(get_le<std::uint32_t>(p)); }

        std::vector<char> encode_header(const CsidHeader &h)
        {
            std::vector<char> b(kMagic, kMagic + 4);
            put_le(b, CsidHeader::kVersion);
            put_f64(b, h.carrier_hz);
            put_f64(b, h.bandwidth_hz);
            put_le(b, h.n_ant);
            put_le(b, h.n_sub);
            put_le(b, std::uint32_t(h.array_descriptor.size()));
            b.insert(b.end(), h.array_descriptor.begin(), h.array_descriptor.end());
            put_le(b, std::uint8_t(h.scenario));
            put_f64(b, h.height_m);
            put_le(b, h.record_count);
            return b;
        }

        void read_exact(std::ifstream &in, char *dst, std::size_t n, const std::string &what)
        {
            in.read(dst, std::streamsize(n));
            if (std::size_t(in.gcount()) != n)
                throw std::runtime_error("CSID: unexpected end of file while reading " + what);
        }

        void check_record(const CsidHeader &h, const TaggedCsiRecord &r, std::uint64_t index)
        {
            if (r.snr_db.size() != Eigen::Index(h.n_ant) || r.csi.rows() != Eigen::Index(h.n_ant) ||
                r.csi.cols() != Eigen::Index(h.n_sub))
                throw std::invalid_argument("CSID: record " + std::to_string(index) + " has dimensions " +
                                            std::to_string(r.csi.rows()) + "x" + std::to_string(r.csi.cols()) +
                                            " (snr " + std::to_string(r.snr_db.size()) + "), header declares " +
                                            std::to_string(h.n_ant) + "x" + std::to_string(h.n_sub) + "; " +
                                            std::to_string(index) + " records written");
            if (!r.position_m.allFinite())
                throw std::invalid_argument("CSID: record " + std::to_string(index) + " has a non-finite position; " +
                                            std::to_string(index) + " records written");
        }
    } // namespace

    void CsidHeader::validate() const
    {
        if (n_ant == 0 || n_sub == 0)
            throw std::invalid_argument("CsidHeader: n_ant and n_sub must be positive");
        if (array_descriptor.size() > kMaxDescriptorBytes)
            throw std::invalid_argument("CsidHeader: array descriptor too long");
        if (scenario != ScenarioKind::LoS && scenario != ScenarioKind::NLoS && scenario != ScenarioKind::Unspecified)
            throw std::invalid_argument("CsidHeader: unknown scenario kind");
        if (!std::isfinite(carrier_hz) || !std::isfinite(bandwidth_hz) || !std::isfinite(height_m))
            throw std::invalid_argument("CsidHeader: non-finite carrier, bandwidth or height");
    }

    std::uint64_t CsidHeader::header_bytes() const
    {
        return 4 + 4 + 8 + 8 + 4 + 4 + 4 + array_descriptor.size() + 1 + 8 + 8;
    }

    std::uint64_t CsidHeader::record_bytes() const
    {
        return 8 + 24 + 4 * std::uint64_t(n_ant) + 8 * std::uint64_t(n_ant) * n_sub;
    }

    bool operator==(const TaggedCsiRecord &a, const TaggedCsiRecord &b)
    {
        auto same = [](const auto *x, const auto *y, Eigen::Index n, std::size_t elem) {
            return n == 0 || std::memcmp(x, y, std::size_t(n) * elem) == 0;
        };
        return std::bit_cast<std::uint64_t>(a.timestamp_s) == std::bit_cast<std::uint64_t>(b.timestamp_s) &&
               same(a.position_m.data(), b.position_m.data(), 3, sizeof(double)) &&
               a.snr_db.size() == b.snr_db.size() && same(a.snr_db.data(), b.snr_db.data(), a.snr_db.size(), sizeof(float)) &&
               a.csi.rows() == b.csi.rows() && a.csi.cols() == b.csi.cols() &&
               same(a.csi.data(), b.csi.data(), a.csi.size(), sizeof(std::complex<float>));
    }

    CsidWriter::CsidWriter(const std::filesystem::path &path, CsidHeader header) : header_(std::move(header))
    {
        header_.validate();
        header_.record_count = 0;
        out_.open(path, std::ios::binary | std::ios::trunc);
        if (!out_)
            throw std::runtime_error("CSID: cannot open " + path.string() + " for writing");
        const auto h = encode_header(header_);
        out_.write(h.data(), std::streamsize(h.size()));
        buffer_.reserve(std::size_t(header_.record_bytes()));
    }

    CsidWriter::~CsidWriter()
    {
        try
        {
            close();
        }
        catch (...)
        {
        }
    }

    void CsidWriter::write(const TaggedCsiRecord &rec)
    {
        if (!open_)
            throw std::logic_error("CSID: write after close");
        try
        {
            check_record(header_, rec, count_);
        }
        catch (...)
        {
            close();
            throw;
        }
        buffer_.clear();
        put_f64(buffer_, rec.timestamp_s);
        for (int i = 0; i < 3; ++i)
            put_f64(buffer_, rec.position_m[i]);
        for (Eigen::Index a = 0; a < rec.snr_db.size(); ++a)
            put_f32(buffer_, rec.snr_db[a]);
        for (Eigen::Index a = 0; a < rec.csi.rows(); ++a)
            for (Eigen::Index k = 0; k < rec.csi.cols(); ++k)
            {
                put_f32(buffer_, rec.csi(a, k).real());
                put_f32(buffer_, rec.csi(a, k).imag());
            }
        out_.write(buffer_.data(), std::streamsize(buffer_.size()));
        if (!out_)
            throw std::runtime_error("CSID: write failed at record " + std::to_string(count_));
        ++count_;
    }

    void CsidWriter::patch_count()
    {
        std::vector<char> b;
        put_le(b, count_);
        out_.seekp(std::streamoff(header_.header_bytes() - 8));
        out_.write(b.data(), 8);
        out_.seekp(0, std::ios::end);
    }

    std::uint64_t CsidWriter::close()
    {
        if (open_)
        {
            open_ = false;
            patch_count();
            out_.close();
            if (out_.fail())
                throw std::runtime_error("CSID: failed to finalize file");
        }
        return count_;
    }

    std::uint64_t write_csid(const std::filesystem::path &path, const CsidHeader &header,
                             const std::vector<TaggedCsiRecord> &records)
    {
        CsidWriter w(path, header);
        for (const auto &r : records)
            w.write(r);
        return w.close();
    }

    CsidReader::CsidReader(const std::filesystem::path &path)
    {
        in_.open(path, std::ios::binary);
        if (!in_)
            throw std::runtime_error("CSID: cannot open " + path.string());
        char fixed[36];
        read_exact(in_, fixed, sizeof fixed, "header");
        if (std::memcmp(fixed, kMagic, 4) != 0)
            throw std::runtime_error("CSID: bad magic in " + path.string());
        const auto version = get_le<std::uint32_t>(fixed + 4);
        if (version != CsidHeader::kVersion)
            throw std::runtime_error("CSID: unsupported version " + std::to_string(version));
        header_.carrier_hz = get_f64(fixed + 8);
        header_.bandwidth_hz = get_f64(fixed + 16);
        header_.n_ant = get_le<std::uint32_t>(fixed + 24);
        header_.n_sub = get_le<std::uint32_t>(fixed + 28);
        const auto desc_len = get_le<std::uint32_t>(fixed + 32);
        if (desc_len > kMaxDescriptorBytes)
            throw std::runtime_error("CSID: implausible descriptor length");
        header_.array_descriptor.resize(desc_len);
        read_exact(in_, header_.array_descriptor.data(), desc_len, "array descriptor");
        char tail[17];
        read_exact(in_, tail, sizeof tail, "header");
        const auto kind = std::uint8_t(tail[0]);
        if (kind > 2)
            throw std::runtime_error("CSID: unknown scenario kind " + std::to_string(kind));
        header_.scenario = ScenarioKind(kind);
        header_.height_m = get_f64(tail + 1);
        header_.record_count = get_le<std::uint64_t>(tail + 9);
        if (header_.n_ant == 0 || header_.n_sub == 0)
            throw std::runtime_error("CSID: zero dimensions in header");

        const auto size = std::filesystem::file_size(path);
        const auto expected = header_.header_bytes() + header_.record_count * header_.record_bytes();
        if (size > expected)
            throw std::runtime_error("CSID: " + std::to_string(size - expected) +
                                     " bytes beyond the declared record count");
        buffer_.resize(std::size_t(header_.record_bytes()));
    }

    bool CsidReader::next(TaggedCsiRecord &rec)
    {
        if (index_ >= header_.record_count)
            return false;
        in_.read(buffer_.data(), std::streamsize(buffer_.size()));
        if (std::size_t(in_.gcount()) != buffer_.size())
            throw std::runtime_error("CSID: truncated file, record " + std::to_string(index_) + " of " +
                                     std::to_string(header_.record_count) + " is incomplete");
        const char *p = buffer_.data();
        const auto n_ant = Eigen::Index(header_.n_ant), n_sub = Eigen::Index(header_.n_sub);
        rec.timestamp_s = get_f64(p);
        for (int i = 0; i < 3; ++i)
            rec.position_m[i] = get_f64(p + 8 + 8 * i);
        p += 32;
        rec.snr_db.resize(n_ant);
        for (Eigen::Index a = 0; a < n_ant; ++a, p += 4)
            rec.snr_db[a] = get_f32(p);
        rec.csi.resize(n_ant, n_sub);
        for (Eigen::Index a = 0; a < n_ant; ++a)
            for (Eigen::Index k = 0; k < n_sub; ++k, p += 8)
                rec.csi(a, k) = {get_f32(p), get_f32(p + 4)};
        ++index_;
        return true;
    }

    CsidHeader read_csid_header(const std::filesystem::path &path) { return CsidReader(path).header(); }

    std::vector<TaggedCsiRecord> read_csid(const std::filesystem::path &path, CsidHeader *header)
    {
        CsidReader r(path);
        if (header)
            *header = r.header();
        std::vector<TaggedCsiRecord> out;
        TaggedCsiRecord rec;
        while (r.next(rec))
            out.push_back(rec);
        return out;
    }

    SplitIndices split_indices(std::size_t n, double train_fraction, std::uint64_t seed)
    {
        if (n == 0)
            throw std::invalid_argument("split_train_val: no records");
        if (!(train_fraction > 0.0 && train_fraction < 1.0))
            throw std::invalid_argument("split_train_val: train fraction must lie in (0, 1)");
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t(0));
        std::mt19937_64 rng(seed);
        std::shuffle(idx.begin(), idx.end(), rng);
        auto n_train = std::size_t(std::llround(double(n) * train_fraction));
        n_train = std::min(n_train, n - 1);
        if (n >= 2)
            n_train = std::max<std::size_t>(n_train, 1);
        SplitIndices s;
        s.train.assign(idx.begin(), idx.begin() + std::ptrdiff_t(n_train));
        s.val.assign(idx.begin() + std::ptrdiff_t(n_train), idx.end());
        return s;
    }

    void export_csv(std::ostream &os, const std::vector<TaggedCsiRecord> &records,
                    const std::vector<std::string> &fields)
    {
        static const std::vector<std::string> known = {"timestamp", "position", "snr", "csi_magphase", "csi_reim"};
        std::vector<bool> on(known.size(), false);
        for (const auto &f : fields)
        {
            const auto it = std::find(known.begin(), known.end(), f);
            if (it == known.end())
                throw std::invalid_argument("export_csv: unknown field '" + f + "'");
            on[std::size_t(it - known.begin())] = true;
        }
        if (std::find(on.begin(), on.end(), true) == on.end())
            throw std::invalid_argument("export_csv: no fields selected");

        const Eigen::Index n_ant = records.empty() ? 0 : records.front().csi.rows();
        const Eigen::Index n_sub = records.empty() ? 0 : records.front().csi.cols();
        std::vector<std::string> cols;
        if (on[0])
            cols.push_back("timestamp_s");
        if (on[1])
            cols.insert(cols.end(), {"x_m", "y_m", "z_m"});
        if (on[2])
            for (Eigen::Index a = 0; a < n_ant; ++a)
                cols.push_back("snr_db_a" + std::to_string(a));
        for (int part : {3, 4})
            if (on[std::size_t(part)])
                for (Eigen::Index a = 0; a < n_ant; ++a)
                    for (Eigen::Index k = 0; k < n_sub; ++k)
                    {
                        const auto tag = "_a" + std::to_string(a) + "_k" + std::to_string(k);
                        cols.push_back((part == 3 ? "mag" : "re") + tag);
                        cols.push_back((part == 3 ? "phase" : "im") + tag);
                    }
        for (std::size_t i = 0; i < cols.size(); ++i)
            os << (i ? "," : "") << cols[i];
        os << '\n';

        char num[32];
        auto emit = [&](bool &first, const char *fmt, double v) {
            std::snprintf(num, sizeof num, fmt, v);
            os << (first ? "" : ",") << num;
            first = false;
        };
        for (const auto &r : records)
        {
            if (r.csi.rows() != n_ant || r.csi.cols() != n_sub || r.snr_db.size() != n_ant)
                throw std::invalid_argument("export_csv: records have differing dimensions");
            bool first = true;
            if (on[0])
                emit(first, "%.17g", r.timestamp_s);
            if (on[1])
                for (int i = 0; i < 3; ++i)
                    emit(first, "%.17g", r.position_m[i]);
            if (on[2])
                for (Eigen::Index a = 0; a < n_ant; ++a)
                    emit(first, "%.9g", r.snr_db[a]);
            if (on[3])
                for (Eigen::Index a = 0; a < n_ant; ++a)
                    for (Eigen::Index k = 0; k < n_sub; ++k)
                    {
                        const std::complex<double> z(r.csi(a, k));
                        emit(first, "%.9g", std::abs(z));
                        emit(first, "%.9g", std::arg(z));
                    }
            if (on[4])
                for (Eigen::Index a = 0; a < n_ant; ++a)
                    for (Eigen::Index k = 0; k < n_sub; ++k)
                    {
                        emit(first, "%.9g", r.csi(a, k).real());
                        emit(first, "%.9g", r.csi(a, k).imag());
                    }
            os << '\n';
        }
    }
} // namespace sounder
