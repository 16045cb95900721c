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

#include "sounder/propagation.hpp"
#include "sounder/receiver.hpp"

#include <random>

using namespace sounder;
using Catch::Matchers::WithinAbs;

namespace
{
    Eigen::MatrixXcd random_channel(Eigen::Index n_ant, Eigen::Index n_sub, std::uint64_t seed)
    {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
        Eigen::MatrixXcd h(n_ant, n_sub);
        for (Eigen::Index i = 0; i < h.size(); ++i)
            h(i) = {nd(rng), nd(rng)};
        return h;
    }

    std::vector<SymbolGrid> received_grids(const Frame &frame, const Eigen::MatrixXcd &h)
    {
        std::vector<SymbolGrid> out;
        for (Eigen::Index a = 0; a < h.rows(); ++a)
        {
            SymbolGrid g = frame.grid;
            for (Eigen::Index s = 0; s < g.n_ofdm_symbols(); ++s)
                g.symbols.row(s) = g.symbols.row(s).cwiseProduct(h.row(a));
            out.push_back(std::move(g));
        }
        return out;
    }

    double nmse(const Eigen::MatrixXcd &est, const Eigen::MatrixXcd &truth)
    {
        return (est - truth).squaredNorm() / truth.squaredNorm();
    }

    std::vector<SymbolGrid> demodulate_all(const std::vector<ComplexWaveform> &rx, const OfdmConfig &ofdm)
    {
        std::vector<SymbolGrid> out;
        for (const auto &w : rx)
            out.push_back(ofdm_demodulate(w, ofdm));
        return out;
    }
}

TEST_CASE("Least-squares estimate")
{
    OfdmConfig ofdm;
    const auto frame = build_frame(ofdm, {}, 3);
    Eigen::MatrixXcd h = random_channel(4, ofdm.n_active(), 1);
    h.row(2).setZero();
    const auto grids = received_grids(frame, h);
    const auto est = estimate_csi(grids, frame.grid, ofdm.carrier_hz, 1.5);

    CHECK(est.csi.n_antennas() == 4);
    CHECK(est.csi.n_subcarriers() == 922);
    CHECK(est.timestamp_s == 1.5);
    CHECK((est.csi.h - h).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(est.csi.h.row(2).cwiseAbs().maxCoeff() == 0.0);
    CHECK(est.snr_per_antenna_db[0] >= 60.0);
    CHECK(est.snr_per_antenna_db[2] < 0.0);

    SECTION("scale equivariance")
    {
        const cdouble g(0.7, -2.1);
        auto scaled = grids;
        for (auto &s : scaled)
            s.symbols *= g;
        const auto est_g = estimate_csi(scaled, frame.grid);
        CHECK((est_g.csi.h - g * est.csi.h).cwiseAbs().maxCoeff() <= 1e-14 * est.csi.h.cwiseAbs().maxCoeff());
    }

    SECTION("invalid pilot references")
    {
        SymbolGrid no_pilots = frame.grid;
        no_pilots.pilot_mask.setConstant(false);
        CHECK_THROWS_AS(estimate_csi(grids, no_pilots), std::invalid_argument);
        SymbolGrid zero_pilot = frame.grid;
        zero_pilot.symbols(0, 10) = 0.0;
        CHECK_THROWS_AS(estimate_csi(grids, zero_pilot), std::invalid_argument);
        CHECK_THROWS_AS(estimate_csi({}, frame.grid), std::invalid_argument);
    }
}

TEST_CASE("Estimation error follows the injected noise")
{
    OfdmConfig ofdm;
    const auto frame = build_frame(ofdm, {}, 4);
    CsiMatrix csi;
    csi.carrier_hz = ofdm.carrier_hz;
    csi.h = random_channel(8, ofdm.n_active(), 2);

    double err40 = 0.0, err20 = 0.0;
    const int frames = 10;
    for (int t = 0; t < frames; ++t)
    {
        const auto e40 = estimate_csi(demodulate_all(apply_channel(frame.waveform, csi, ofdm, 40.0, 100 + t), ofdm),
                                      frame.grid);
        const auto e20 = estimate_csi(demodulate_all(apply_channel(frame.waveform, csi, ofdm, 20.0, 200 + t), ofdm),
                                      frame.grid);
        err40 += nmse(e40.csi.h, csi.h) / frames;
        err20 += nmse(e20.csi.h, csi.h) / frames;
    }
    CHECK(err40 < 1e-3);
    CHECK(err20 > 0.5e-2);
    CHECK(err20 < 2e-2);
}

TEST_CASE("EVM-based SNR")
{
    SECTION("known error vector magnitude")
    {
        const auto c = qpsk_constellation();
        Eigen::MatrixXcd sym(1, 400);
        for (Eigen::Index i = 0; i < sym.cols(); ++i)
            sym(0, i) = c[i % 4] + std::polar(0.1, 0.37 * double(i)) * 0.5;
        CHECK_THAT(evm_snr(sym, c)[0], WithinAbs(-20.0 * std::log10(0.05), 1e-9));
    }

    SECTION("perfect symbols hit the numerical ceiling")
    {
        const auto c = qpsk_constellation();
        Eigen::MatrixXcd sym(2, 100);
        for (Eigen::Index i = 0; i < sym.size(); ++i)
            sym(i) = c[i % 4];
        CHECK((evm_snr(sym, c).array() >= 60.0).all());
    }

    SECTION("too few symbols")
    {
        const auto c = qpsk_constellation();
        CHECK_THROWS_AS(evm_snr(Eigen::MatrixXcd(1, 0), c), std::invalid_argument);
        CHECK_THROWS_AS(evm_snr(Eigen::MatrixXcd::Ones(1, 50), c), std::invalid_argument);
    }

    SECTION("measured SNR tracks injected AWGN over 100 frames")
    {
        OfdmConfig ofdm;
        const auto frame = build_frame(ofdm, {}, 5);
        CsiMatrix csi;
        csi.h = random_channel(4, ofdm.n_active(), 3);
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(4);
        for (int t = 0; t < 100; ++t)
        {
            const auto est = estimate_csi(demodulate_all(apply_channel(frame.waveform, csi, ofdm, 20.0, 1000 + t), ofdm),
                                          frame.grid);
            mean += est.snr_per_antenna_db / 100.0;
        }
        for (Eigen::Index a = 0; a < mean.size(); ++a)
            CHECK_THAT(mean[a], WithinAbs(20.0, 1.0));
    }
}

TEST_CASE("Subband extraction")
{
    OfdmConfig ofdm;
    const Eigen::Index L = ofdm.frame_length();

    SECTION("single driven chain without quantization")
    {
        auto cfg = default_combiner(16, 1);
        cfg.quantize = false;
        std::vector<ComplexWaveform> tx(16);
        const auto frame = build_frame(ofdm, {}, 6);
        for (auto &w : tx)
        {
            w = frame.waveform;
            w.samples.setZero();
        }
        tx[5] = frame.waveform;
        const auto rx = split_subbands(combine_chains(tx, cfg), cfg, ofdm);
        REQUIRE(rx.size() == 16);
        CHECK(rx[5].samples.size() == L);
        CHECK(rx[5].sample_rate_hz == ofdm.sample_rate_hz());
        const auto grid = ofdm_demodulate(rx[5], ofdm);
        const double evm = (grid.symbols - frame.grid.symbols).squaredNorm() / frame.grid.symbols.squaredNorm();
        CHECK(10.0 * std::log10(evm) <= -40.0);
    }

    SECTION("relative phases of a common tone survive combining")
    {
        auto cfg = default_combiner(64, 4);
        cfg.quantize = false;
        const double f = 37.0 * ofdm.sample_rate_hz() / double(L);
        std::vector<ComplexWaveform> tx;
        for (int a = 0; a < 64; ++a)
        {
            ComplexWaveform w;
            w.sample_rate_hz = ofdm.sample_rate_hz();
            w.samples.resize(L);
            for (Eigen::Index t = 0; t < L; ++t)
                w.samples[t] = std::polar(1.0, 2.0 * kPi * f * double(t) / w.sample_rate_hz + 0.1 * a);
            tx.push_back(std::move(w));
        }
        const auto rx = split_subbands(combine_chains(tx, cfg), cfg, ofdm);
        double worst = 0.0;
        for (int a = 1; a < 64; ++a)
        {
            const cdouble in = tx[std::size_t(a)].samples.dot(tx[0].samples);
            const cdouble out = rx[std::size_t(a)].samples.dot(rx[0].samples);
            worst = std::max(worst, std::abs(std::arg(out / in)));
        }
        CHECK(worst < 1e-3);
    }

    SECTION("64 independent frames decode bit-exact at 30 dB through the ADC")
    {
        const auto cfg = default_combiner(64, 4);
        const double vrms = dbm_to_vrms(-40.0);
        std::vector<ComplexWaveform> tx;
        std::vector<Frame> frames;
        std::mt19937_64 rng(7);
        std::bernoulli_distribution coin;
        for (int a = 0; a < 64; ++a)
        {
            Bits payload(ofdm.payload_capacity_bits());
            for (auto &b : payload)
                b = coin(rng) ? 1 : 0;
            frames.push_back(build_frame(ofdm, payload, 900 + std::uint64_t(a)));
            CsiMatrix one;
            one.h = Eigen::MatrixXcd::Ones(1, ofdm.n_active());
            auto noisy = apply_channel(frames.back().waveform, one, ofdm, 30.0, 77 + std::uint64_t(a));
            noisy[0].samples *= vrms / std::sqrt(frames.back().waveform.mean_power());
            tx.push_back(std::move(noisy[0]));
        }
        const FrontEnd fe(cfg, ofdm.sample_rate_hz(), L);
        auto rx = split_subbands(fe.digitize(fe.combine(tx)), cfg, ofdm);
        std::size_t errors = 0;
        for (int a = 0; a < 64; ++a)
        {
            const auto grid = ofdm_demodulate(rx[std::size_t(a)], ofdm);
            const auto est = estimate_csi({grid}, frames[std::size_t(a)].grid);
            const auto bits = decode_payload(grid, est.csi.h.row(0).transpose());
            const auto ref = grid_payload_bits(frames[std::size_t(a)].grid);
            for (std::size_t i = 0; i < bits.size(); ++i)
                errors += bits[i] != ref[i];
            CHECK_THAT(est.snr_per_antenna_db[0], WithinAbs(30.0, 2.0));
        }
        CHECK(errors == 0);
    }

    SECTION("stream mismatches are rejected")
    {
        const auto cfg = default_combiner(8, 2);
        std::vector<ComplexWaveform> streams(1);
        streams[0].sample_rate_hz = cfg.adc_sample_rate_hz;
        streams[0].samples = Eigen::VectorXcd::Zero(L * 80);
        CHECK_THROWS_AS(split_subbands(streams, cfg, ofdm), std::invalid_argument);
    }
}
