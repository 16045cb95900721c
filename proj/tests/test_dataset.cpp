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


#include <catch_amalgamated.hpp>

#include "sounder/dataset.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

using namespace sounder;
namespace fs = std::filesystem;

namespace
{
    struct TempDir
    {
        fs::path path;
        explicit TempDir(const std::string &name) : path(fs::temp_directory_path() / name)
        {
            fs::remove_all(path);
            fs::create_directories(path);
        }
        ~TempDir() { fs::remove_all(path); }
    };

    CsidHeader make_header(std::uint32_t n_ant, std::uint32_t n_sub)
    {
        CsidHeader h;
        h.carrier_hz = 1.25e9;
        h.bandwidth_hz = 20e6;
        h.n_ant = n_ant;
        h.n_sub = n_sub;
        h.array_descriptor = R"({"type":"rectangular"})";
        h.scenario = ScenarioKind::NLoS;
        h.height_m = 1.5;
        return h;
    }

    std::vector<TaggedCsiRecord> random_records(std::size_t n, int n_ant, int n_sub, std::uint64_t seed)
    {
        std::mt19937_64 rng(seed);
        std::normal_distribution<float> nf;
        std::normal_distribution<double> nd(0.0, 10.0);
        std::vector<TaggedCsiRecord> out(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            auto &r = out[i];
            r.timestamp_s = 0.1 * double(i) + nd(rng) * 1e-3;
            r.position_m = Vec3(nd(rng), nd(rng), nd(rng));
            r.snr_db.resize(n_ant);
            for (auto &v : r.snr_db)
                v = 25.0f + nf(rng);
            r.csi.resize(n_ant, n_sub);
            for (Eigen::Index k = 0; k < r.csi.size(); ++k)
                r.csi(k) = {nf(rng), nf(rng)};
        }
        return out;
    }

    std::vector<unsigned char> slurp(const fs::path &p)
    {
        std::ifstream f(p, std::ios::binary);
        return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
    }

    // Little-endian decode written out byte by byte
    std::uint64_t le(const std::vector<unsigned char> &b, std::size_t off, int n)
    {
        std::uint64_t v = 0;
        for (int i = n - 1; i >= 0; --i)
            v = (v << 8) | b[off + std::size_t(i)];
        return v;
    }

    double le_f64(const std::vector<unsigned char> &b, std::size_t off)
    {
        const std::uint64_t u = le(b, off, 8);
        double d;
        std::memcpy(&d, &u, 8);
        return d;
    }

    float le_f32(const std::vector<unsigned char> &b, std::size_t off)
    {
        const auto u = std::uint32_t(le(b, off, 4));
        float f;
        std::memcpy(&f, &u, 4);
        return f;
    }

    std::vector<std::string> split_line(const std::string &line)
    {
        std::vector<std::string> out;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            out.push_back(cell);
        return out;
    }
}

TEST_CASE("CSID sizes")
{
    const auto h = make_header(64, 922);
    CHECK(h.record_bytes() == 8 + 24 + 64 * 4 + 64 * 922 * 8);
    CHECK(6000 * h.record_bytes() == 6000ull * (8 + 24 + 64 * 4 + 64 * 922 * 8));
    CHECK(h.header_bytes() == 4 + 4 + 8 + 8 + 4 + 4 + 4 + h.array_descriptor.size() + 1 + 8 + 8);
}

TEST_CASE("CSID empty file")
{
    TempDir dir("csid_empty");
    const auto path = dir.path / "empty.csid";
    CHECK(write_csid(path, make_header(4, 8), {}) == 0);
    CsidHeader h;
    const auto recs = read_csid(path, &h);
    CHECK(recs.empty());
    CHECK(h.record_count == 0);
    CHECK(fs::file_size(path) == h.header_bytes());
}

TEST_CASE("CSID round trip is bit exact and follows the byte layout")
{
    TempDir dir("csid_roundtrip");
    const auto path = dir.path / "r.csid";
    const auto hdr = make_header(4, 16);
    const auto recs = random_records(100, 4, 16, 11);
    CHECK(write_csid(path, hdr, recs) == 100);
    CHECK(fs::file_size(path) == hdr.header_bytes() + 100 * hdr.record_bytes());

    CsidHeader back;
    const auto got = read_csid(path, &back);
    REQUIRE(got.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i)
        CHECK(got[i] == recs[i]);
    CHECK(back.carrier_hz == hdr.carrier_hz);
    CHECK(back.bandwidth_hz == hdr.bandwidth_hz);
    CHECK(back.array_descriptor == hdr.array_descriptor);
    CHECK(back.scenario == ScenarioKind::NLoS);
    CHECK(back.height_m == 1.5);

    // Independent decode of the raw bytes
    const auto b = slurp(path);
    CHECK(std::string(b.begin(), b.begin() + 4) == "CSID");
    CHECK(le(b, 4, 4) == 1);
    CHECK(le_f64(b, 8) == 1.25e9);
    CHECK(le_f64(b, 16) == 20e6);
    CHECK(le(b, 24, 4) == 4);
    CHECK(le(b, 28, 4) == 16);
    const std::size_t dlen = le(b, 32, 4);
    CHECK(dlen == hdr.array_descriptor.size());
    std::size_t off = 36 + dlen;
    CHECK(b[off] == 1);
    CHECK(le_f64(b, off + 1) == 1.5);
    CHECK(le(b, off + 9, 8) == 100);
    off += 17;
    const auto &r7 = recs[7];
    const std::size_t rec = off + 7 * hdr.record_bytes();
    CHECK(le_f64(b, rec) == r7.timestamp_s);
    CHECK(le_f64(b, rec + 16) == r7.position_m.y());
    CHECK(le_f32(b, rec + 32 + 4 * 2) == r7.snr_db[2]);
    const std::size_t csi = rec + 32 + 4 * 4;
    // antenna-major: antenna 1, subcarrier 3
    CHECK(le_f32(b, csi + 8 * (1 * 16 + 3)) == r7.csi(1, 3).real());
    CHECK(le_f32(b, csi + 8 * (1 * 16 + 3) + 4) == r7.csi(1, 3).imag());

    // Identical input gives identical bytes
    const auto path2 = dir.path / "r2.csid";
    write_csid(path2, hdr, recs);
    CHECK(slurp(path2) == b);
}

TEST_CASE("CSID streaming reader")
{
    TempDir dir("csid_stream");
    const auto path = dir.path / "s.csid";
    const auto recs = random_records(5, 2, 3, 12);
    write_csid(path, make_header(2, 3), recs);

    CHECK(read_csid_header(path).record_count == 5);
    CsidReader reader(path);
    TaggedCsiRecord r;
    int n = 0;
    while (reader.next(r))
        CHECK(r == recs[std::size_t(n++)]);
    CHECK(n == 5);
    CHECK(reader.records_read() == 5);
}

TEST_CASE("CSID corruption")
{
    TempDir dir("csid_corrupt");
    const auto path = dir.path / "c.csid";
    const auto hdr = make_header(2, 3);
    write_csid(path, hdr, random_records(10, 2, 3, 13));
    const auto bytes = slurp(path);

    SECTION("tampered magic")
    {
        auto b = bytes;
        b[0] = 'X';
        std::ofstream(path, std::ios::binary).write(reinterpret_cast<const char *>(b.data()), std::streamsize(b.size()));
        CHECK_THROWS_WITH(read_csid(path), Catch::Matchers::ContainsSubstring("magic"));
    }

    SECTION("unsupported version")
    {
        auto b = bytes;
        b[4] = 2;
        std::ofstream(path, std::ios::binary).write(reinterpret_cast<const char *>(b.data()), std::streamsize(b.size()));
        CHECK_THROWS_WITH(read_csid(path), Catch::Matchers::ContainsSubstring("version"));
    }

    SECTION("truncation reports the failing record")
    {
        const auto cut = hdr.header_bytes() + 6 * hdr.record_bytes() + 5;
        fs::resize_file(path, cut);
        CsidReader reader(path);
        TaggedCsiRecord r;
        for (int i = 0; i < 6; ++i)
            CHECK(reader.next(r));
        CHECK_THROWS_WITH(reader.next(r), Catch::Matchers::ContainsSubstring("record 6 of 10"));
    }

    SECTION("trailing bytes")
    {
        std::ofstream(path, std::ios::binary | std::ios::app) << "junk";
        CHECK_THROWS(CsidReader(path));
    }
}

TEST_CASE("CSID writer stops at a malformed record")
{
    TempDir dir("csid_mismatch");
    const auto path = dir.path / "m.csid";
    auto recs = random_records(4, 2, 3, 14);
    recs[2].csi.resize(2, 4);
    CHECK_THROWS_WITH(write_csid(path, make_header(2, 3), recs), Catch::Matchers::ContainsSubstring("record 2"));
    const auto back = read_csid(path);
    REQUIRE(back.size() == 2);
    CHECK(back[1] == recs[1]);

    auto bad = random_records(1, 2, 3, 15);
    bad[0].position_m.x() = std::nan("");
    CHECK_THROWS_AS(write_csid(path, make_header(2, 3), bad), std::invalid_argument);

    auto h = make_header(0, 3);
    CHECK_THROWS_AS(h.validate(), std::invalid_argument);
}

TEST_CASE("Train/validation split")
{
    SECTION("full-size dataset")
    {
        const auto s = split_indices(6000, 0.9, 1);
        CHECK(s.train.size() == 5400);
        CHECK(s.val.size() == 600);
        std::set<std::size_t> all(s.train.begin(), s.train.end());
        all.insert(s.val.begin(), s.val.end());
        CHECK(all.size() == 6000);
        CHECK(*all.rbegin() == 5999);
    }

    SECTION("validation keeps at least one record")
    {
        const auto s = split_indices(10, 0.95, 1);
        CHECK(s.train.size() == 9);
        CHECK(s.val.size() == 1);
    }

    SECTION("determinism")
    {
        std::vector<int> v(100);
        std::iota(v.begin(), v.end(), 0);
        const auto a = split_train_val(v, 0.9, 5);
        const auto b = split_train_val(v, 0.9, 5);
        const auto c = split_train_val(v, 0.9, 6);
        CHECK(a.train == b.train);
        CHECK(a.val == b.val);
        CHECK(a.train != c.train);
    }

    SECTION("invalid input")
    {
        CHECK_THROWS_AS(split_indices(0, 0.9, 1), std::invalid_argument);
        CHECK_THROWS_AS(split_indices(10, 1.0, 1), std::invalid_argument);
        CHECK_THROWS_AS(split_indices(10, 0.0, 1), std::invalid_argument);
    }
}

TEST_CASE("CSV export")
{
    const auto recs = random_records(1, 2, 3, 16);

    SECTION("one record gives one data row in documented column order")
    {
        std::ostringstream os;
        export_csv(os, recs, {"csi_magphase", "position", "timestamp"});
        std::istringstream is(os.str());
        std::string header, row, extra;
        std::getline(is, header);
        std::getline(is, row);
        CHECK(!std::getline(is, extra));
        const auto cols = split_line(header);
        const auto vals = split_line(row);
        REQUIRE(cols.size() == 1 + 3 + 2 * 2 * 3);
        CHECK(vals.size() == cols.size());
        CHECK(cols[0] == "timestamp_s");
        CHECK(cols[1] == "x_m");
        CHECK(cols[4] == "mag_a0_k0");
        CHECK(cols[5] == "phase_a0_k0");

        CHECK(std::stod(vals[0]) == recs[0].timestamp_s);
        for (int i = 0; i < 3; ++i)
            CHECK(std::stod(vals[std::size_t(1 + i)]) == recs[0].position_m[i]);
        for (int a = 0; a < 2; ++a)
            for (int k = 0; k < 3; ++k)
            {
                const std::size_t c = 4 + 2 * std::size_t(a * 3 + k);
                const float mag = std::abs(recs[0].csi(a, k));
                CHECK(std::abs(float(std::stod(vals[c])) - mag) <= std::numeric_limits<float>::epsilon() * mag);
            }
    }

    SECTION("real and imaginary parts")
    {
        std::ostringstream os;
        export_csv(os, recs, {"csi_reim", "snr"});
        std::istringstream is(os.str());
        std::string header, row;
        std::getline(is, header);
        std::getline(is, row);
        const auto cols = split_line(header);
        const auto vals = split_line(row);
        CHECK(cols[0] == "snr_db_a0");
        CHECK(cols[2] == "re_a0_k0");
        CHECK(float(std::stod(vals[2])) == recs[0].csi(0, 0).real());
        CHECK(float(std::stod(vals[3])) == recs[0].csi(0, 0).imag());
    }

    SECTION("unknown or empty field selection")
    {
        std::ostringstream os;
        CHECK_THROWS_AS(export_csv(os, recs, {"position", "velocity"}), std::invalid_argument);
        CHECK_THROWS_AS(export_csv(os, recs, {}), std::invalid_argument);
    }
}
