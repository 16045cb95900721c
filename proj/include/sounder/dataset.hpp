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

#ifndef SOUNDER_DATASET_HPP
#define SOUNDER_DATASET_HPP

#include "sounder/types.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <string>
#include <vector>

namespace sounder
{
    enum class ScenarioKind : std::uint8_t
    {
        LoS = 0,
        NLoS = 1,
        Unspecified = 2
    };

    // Little-endian container of position-tagged CSI. Layout in docs/csid_format.md.
    struct CsidHeader
    {
        static constexpr std::uint32_t kVersion = 1;

        double carrier_hz = 0.0;
        double bandwidth_hz = 0.0;
        std::uint32_t n_ant = 0;
        std::uint32_t n_sub = 0;
        std::string array_descriptor; // UTF-8 JSON
        ScenarioKind scenario = ScenarioKind::Unspecified;
        double height_m = 0.0;
        std::uint64_t record_count = 0; // filled in by the writer

        void validate() const;
        std::uint64_t header_bytes() const;
        std::uint64_t record_bytes() const;
    };

    struct TaggedCsiRecord
    {
        double timestamp_s = 0.0;
        Vec3 position_m = Vec3::Zero();
        Eigen::VectorXf snr_db;  // [n_ant]
        Eigen::MatrixXcf csi;    // [n_ant x n_sub], stored antenna-major
    };

    bool operator==(const TaggedCsiRecord &a, const TaggedCsiRecord &b); // bitwise on every field

    // Streaming writer. The record count is patched into the header on close(). A record whose
    // dimensions disagree with the header leaves the file holding every record before it and throws.
    class CsidWriter
    {
      public:
        CsidWriter(const std::filesystem::path &path, CsidHeader header);
        ~CsidWriter();
        CsidWriter(const CsidWriter &) = delete;
        CsidWriter &operator=(const CsidWriter &) = delete;

        void write(const TaggedCsiRecord &rec);
        std::uint64_t close();
        std::uint64_t count() const { return count_; }

      private:
        void patch_count();

        std::ofstream out_;
        CsidHeader header_;
        std::uint64_t count_ = 0;
        std::vector<char> buffer_;
        bool open_ = true;
    };

    std::uint64_t write_csid(const std::filesystem::path &path, const CsidHeader &header,
                             const std::vector<TaggedCsiRecord> &records);

    // Streaming reader, one record in memory at a time
    class CsidReader
    {
      public:
        explicit CsidReader(const std::filesystem::path &path);

        const CsidHeader &header() const { return header_; }

        // False once every declared record has been read; throws on a truncated body
        bool next(TaggedCsiRecord &rec);
        std::uint64_t records_read() const { return index_; }

      private:
        std::ifstream in_;
        CsidHeader header_;
        std::uint64_t index_ = 0;
        std::vector<char> buffer_;
    };

    CsidHeader read_csid_header(const std::filesystem::path &path);
    std::vector<TaggedCsiRecord> read_csid(const std::filesystem::path &path, CsidHeader *header = nullptr);

    // Seeded uniform shuffle of 0..n-1, then the first round(n * train_fraction) indices go to
    // training. Validation keeps at least one index.
    struct SplitIndices
    {
        std::vector<std::size_t> train, val;
    };
    SplitIndices split_indices(std::size_t n, double train_fraction, std::uint64_t seed);

    template <typename T>
    struct TrainValSplit
    {
        std::vector<T> train, val;
    };

    template <typename T>
    TrainValSplit<T> split_train_val(const std::vector<T> &records, double train_fraction = 0.9,
                                     std::uint64_t seed = 1)
    {
        const auto idx = split_indices(records.size(), train_fraction, seed);
        TrainValSplit<T> s;
        s.train.reserve(idx.train.size());
        s.val.reserve(idx.val.size());
        for (auto i : idx.train)
            s.train.push_back(records[i]);
        for (auto i : idx.val)
            s.val.push_back(records[i]);
        return s;
    }

    // Fields: "timestamp", "position", "snr", "csi_magphase", "csi_reim". Columns always follow that
    // order regardless of the order requested.
    void export_csv(std::ostream &os, const std::vector<TaggedCsiRecord> &records,
                    const std::vector<std::string> &fields);
} // namespace sounder

#endif
