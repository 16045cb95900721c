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

#include "sounder/receiver.hpp"
#include "sounder/rf_chain.hpp"

#include <unsupported/Eigen/FFT>

#include <random>

using namespace sounder;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace
{
    ComplexWaveform tone(double fs, Eigen::Index n, double f, double amp = 1.0)
    {
        ComplexWaveform w;
        w.sample_rate_hz = fs;
        w.samples.resize(n);
        for (Eigen::Index t = 0; t < n; ++t)
            w.samples[t] = std::polar(amp, 2.0 * kPi * f * double(t) / fs);
        return w;
    }

    ComplexWaveform real_signal(const Eigen::VectorXd &x, double fs)
    {
        ComplexWaveform w;
        w.sample_rate_hz = fs;
        w.occupied_bw_hz = fs;
        w.samples = x.cast<cdouble>();
        return w;
    }

    double db_ratio(double num, double den) { return 10.0 * std::log10(num / den); }

    // Straight evaluation of sum_n h[n] exp(-j w n), magnitude only
    double magnitude_at(const Eigen::VectorXd &h, double f, double fs)
    {
        cdouble acc = 0.0;
        for (Eigen::Index n = 0; n < h.size(); ++n)
            acc += h[n] * std::polar(1.0, -2.0 * kPi * f / fs * double(n));
        return std::abs(acc);
    }

    std::vector<ComplexWaveform> ofdm_frames(const OfdmConfig &ofdm, int n, std::uint64_t seed)
    {
        std::vector<ComplexWaveform> out;
        for (int a = 0; a < n; ++a)
            out.push_back(build_frame(ofdm, {}, seed + std::uint64_t(a)).waveform);
        return out;
    }
}

TEST_CASE("Mixing")
{
    const double fs = 100e6;
    const auto w = tone(fs, 4096, 0.0);

    SECTION("zero shift is the identity")
    {
        CHECK(mix(w, 0.0).samples == w.samples);
    }
    SECTION("shift and shift back")
    {
        std::mt19937_64 rng(1);
        std::normal_distribution<double> nd;
        ComplexWaveform x = w;
        for (auto &s : x.samples)
            s = {nd(rng), nd(rng)};
        x.occupied_bw_hz = 20e6;
        const auto y = mix(mix(x, 7.3e6), -7.3e6);
        const double rms = std::sqrt((y.samples - x.samples).squaredNorm() / double(x.samples.size()));
        CHECK(rms < 1e-12);
        CHECK_THAT(mix(x, 7.3e6).samples.squaredNorm(), WithinRel(x.samples.squaredNorm(), 1e-9));
        CHECK(mix(x, 7.3e6).center_offset_hz == 7.3e6);
    }
    SECTION("tone lands on the shifted frequency")
    {
        const double shift = 1e6;
        const auto y = mix(w, shift);
        Eigen::FFT<double> fft;
        Eigen::VectorXcd Y;
        Eigen::VectorXcd in = y.samples;
        fft.fwd(Y, in);
        Eigen::Index peak = 0;
        Y.cwiseAbs().maxCoeff(&peak);
        CHECK_THAT(double(peak) * fs / 4096.0, WithinAbs(shift, fs / 4096.0));
    }
    SECTION("shifts past Nyquist are rejected")
    {
        ComplexWaveform x = w;
        x.occupied_bw_hz = 20e6;
        CHECK_THROWS_AS(mix(x, 45e6), std::invalid_argument);
    }
}

TEST_CASE("Subband filter design")
{
    const double fs = 100e6;

    SECTION("all-pass gives a unit impulse")
    {
        FilterSpec s;
        s.pass_lo_hz = 0.0;
        s.pass_hi_hz = fs / 2;
        s.transition_hz = 1e6;
        const auto f = design_subband_filter(s, fs);
        REQUIRE(f.taps.size() == 1);
        CHECK(f.taps[0] == 1.0);
    }

    SECTION("bandpass meets the specification")
    {
        FilterSpec s;
        s.pass_lo_hz = 20e6;
        s.pass_hi_hz = 30e6;
        s.transition_hz = 4e6;
        s.stop_atten_db = 60.0;
        const auto f = design_subband_filter(s, fs);
        CHECK(f.taps.size() % 2 == 1);
        CHECK((f.taps - f.taps.reverse()).cwiseAbs().maxCoeff() < 1e-15);
        CHECK(f.group_delay_samples == 0.5 * double(f.taps.size() - 1));
        CHECK(f.achieved_stop_atten_db >= 60.0);
        for (double fr = 0.0; fr <= 16e6; fr += 0.25e6)
            CHECK(20.0 * std::log10(magnitude_at(f.taps, fr, fs)) <= -60.0 + 1e-9);
        for (double fr = 34e6; fr <= 50e6; fr += 0.25e6)
            CHECK(20.0 * std::log10(magnitude_at(f.taps, fr, fs)) <= -60.0 + 1e-9);
        CHECK_THAT(magnitude_at(f.taps, 25e6, fs), WithinAbs(1.0, 0.01));
    }

    SECTION("white noise power follows the mean power gain")
    {
        FilterSpec s;
        s.pass_hi_hz = 10e6;
        s.transition_hz = 5e6;
        s.stop_atten_db = 60.0;
        const auto f = design_subband_filter(s, fs);
        const double mean_gain = f.taps.squaredNorm(); // Parseval

        std::mt19937_64 rng(2);
        std::normal_distribution<double> nd;
        const Eigen::Index n = 400000;
        Eigen::VectorXd x(n);
        for (auto &v : x)
            v = nd(rng);
        const Eigen::Index nt = f.taps.size();
        double out_power = 0.0;
        for (Eigen::Index t = nt; t < n; ++t)
        {
            const double y = f.taps.dot(x.segment(t - nt + 1, nt).reverse());
            out_power += y * y;
        }
        out_power /= double(n - nt);
        CHECK(std::abs(db_ratio(out_power, x.squaredNorm() / double(n) * mean_gain)) < 0.2);
    }

    SECTION("invalid specifications")
    {
        FilterSpec s;
        s.pass_lo_hz = 20e6;
        s.pass_hi_hz = 30e6;
        s.transition_hz = 0.0;
        CHECK_THROWS_AS(design_subband_filter(s, fs), std::invalid_argument);
        s.transition_hz = 1e6;
        s.stop_atten_db = 10.0;
        CHECK_THROWS_AS(design_subband_filter(s, fs), std::invalid_argument);
        s.stop_atten_db = 100.0;
        s.max_taps = 31;
        CHECK_THROWS_WITH(design_subband_filter(s, fs), Catch::Matchers::ContainsSubstring("achieved"));
    }
}

TEST_CASE("Wilkinson combiner loss")
{
    CHECK(wilkinson_loss_db(64) == 18.0);
    CHECK(wilkinson_loss_db(1) == 0.0);
    CHECK(wilkinson_loss_db(8) == 9.0);
    CHECK_THROWS_AS(wilkinson_loss_db(10), std::invalid_argument);
    CHECK_THROWS_AS(wilkinson_loss_db(0), std::invalid_argument);
}

TEST_CASE("Isolation matrix")
{
    SECTION("disjoint brickwall bands sit at the floor")
    {
        const Eigen::Index n = 1000;
        Eigen::MatrixXd power = Eigen::MatrixXd::Zero(2, n);
        power.row(0).segment(100, 200).setOnes();
        power.row(1).segment(500, 200).setOnes();
        const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> band = power.array() > 0.5;
        const auto iso = isolation_from_responses(power, band);
        CHECK(iso(0, 0) == 0.0);
        CHECK(iso(1, 1) == 0.0);
        CHECK(iso(0, 1) <= -120.0);
        CHECK(iso(1, 0) <= -120.0);
    }

    SECTION("identical filters leak completely")
    {
        FilterSpec s;
        s.pass_lo_hz = 20e6;
        s.pass_hi_hz = 30e6;
        s.transition_hz = 4e6;
        const auto f = design_subband_filter(s, 100e6);
        const auto iso = subband_isolation({f, f}, 100e6);
        CHECK_THAT(iso(0, 1), WithinAbs(0.0, 1e-9));
        CHECK(iso(0, 0) == 0.0);
    }

    SECTION("relaxing the stopband degrades isolation monotonically")
    {
        double previous = -1e9;
        for (const double atten : {80.0, 60.0, 40.0, 25.0})
        {
            std::vector<FilterTaps> filters;
            for (int i = 0; i < 4; ++i)
            {
                FilterSpec s;
                s.pass_lo_hz = 22e6 * (i + 1) - 9.1e6;
                s.pass_hi_hz = 22e6 * (i + 1) + 9.1e6;
                s.transition_hz = 3.8e6;
                s.stop_atten_db = atten;
                filters.push_back(design_subband_filter(s, 400e6));
            }
            const auto iso = subband_isolation(filters, 400e6);
            double worst = kIsolationFloorDb;
            for (Eigen::Index i = 0; i < iso.rows(); ++i)
                for (Eigen::Index j = 0; j < iso.cols(); ++j)
                    if (i != j)
                        worst = std::max(worst, iso(i, j));
            CHECK(worst >= previous);
            previous = worst;
        }
    }
}

TEST_CASE("Quantizer")
{
    const double vpp = 0.1;

    SECTION("full-scale sinusoid")
    {
        const double enob = 7.8;
        const Eigen::Index n = 1 << 18;
        Eigen::VectorXd x(n);
        for (Eigen::Index t = 0; t < n; ++t)
            x[t] = 0.5 * vpp * std::sin(2.0 * kPi * 0.0123456789 * double(t) + 0.3);
        const auto q = clip_and_quantize(real_signal(x, 1e9), vpp, enob);
        const Eigen::VectorXd e = q.samples.real() - x;
        CHECK(std::abs(db_ratio(x.squaredNorm(), e.squaredNorm()) - (6.02 * enob + 1.76)) <= 0.2);
        CHECK(q.samples.imag().cwiseAbs().maxCoeff() == 0.0);
    }

    SECTION("ramp error is bounded by half a step")
    {
        for (const double enob : {8.0, 7.8, 6.0})
        {
            const UniformQuantizer q(vpp, enob);
            const Eigen::ArrayXd ramp = Eigen::ArrayXd::LinSpaced(100001, -0.5 * vpp, 0.5 * vpp);
            const double worst = (q.apply(ramp) - ramp).abs().maxCoeff();
            CHECK(worst <= 0.5 * q.step() * (1.0 + 1e-12));
            if (enob == 8.0)
                CHECK(worst <= 0.5 * vpp / 256.0 * (1.0 + 1e-12));
        }
    }

    SECTION("error power of a busy unclipped input is step squared over twelve")
    {
        const UniformQuantizer q(vpp, 7.8);
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(-0.45 * vpp, 0.45 * vpp);
        Eigen::ArrayXd x(200000);
        for (auto &v : x)
            v = u(rng);
        const double p = (q.apply(x) - x).square().mean();
        CHECK_THAT(p, WithinRel(q.step() * q.step() / 12.0, 0.05));
    }

    SECTION("input far below one step")
    {
        const UniformQuantizer q(vpp, 7.8);
        Eigen::VectorXd x(1000);
        for (Eigen::Index t = 0; t < x.size(); ++t)
            x[t] = 0.01 * q.step() * std::sin(0.1 * double(t));
        const auto y = clip_and_quantize(real_signal(x, 1e9), vpp, 7.8);
        const Eigen::VectorXd yr = y.samples.real();
        CHECK((yr.array().abs() - 0.5 * q.step()).abs().maxCoeff() < 1e-15);
        CHECK(db_ratio(x.squaredNorm(), (yr - x).squaredNorm()) <= 0.0);
    }

    SECTION("clipping")
    {
        Eigen::VectorXd x(3);
        x << 1.0, -1.0, 0.0;
        const auto y = clip_and_quantize(real_signal(x, 1e9), vpp, 7.8);
        CHECK(y.samples.real().cwiseAbs().maxCoeff() <= 0.5 * vpp);
    }
}

TEST_CASE("Frequency-multiplexed combining")
{
    OfdmConfig ofdm;
    const double fs_bb = ofdm.sample_rate_hz();
    const Eigen::Index L = ofdm.frame_length();

    SECTION("default plan layout")
    {
        const auto cfg = default_combiner();
        REQUIRE_NOTHROW(cfg.validate());
        CHECK(cfg.n_antennas() == 64);
        std::vector<int> per_adc(4, 0);
        for (const auto &c : cfg.chains)
            ++per_adc[std::size_t(c.adc_channel)];
        CHECK(per_adc == std::vector<int>{16, 16, 16, 16});
    }

    SECTION("overlapping passbands are rejected")
    {
        auto cfg = default_combiner(2, 1);
        cfg.chains[1].if_center_hz = cfg.chains[0].if_center_hz + 5e6;
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    }

    SECTION("single chain tone appears at its IF")
    {
        auto cfg = default_combiner(1, 1);
        cfg.quantize = false;
        const FrontEnd fe(cfg, fs_bb, L);
        const int b = 100;
        const auto in = tone(fs_bb, L, b * fs_bb / double(L));
        const auto out = fe.combine({in});
        REQUIRE(out.size() == 1);
        CHECK(out[0].samples.imag().cwiseAbs().maxCoeff() == 0.0);

        Eigen::FFT<double> fft;
        Eigen::VectorXcd Y;
        Eigen::VectorXcd y = out[0].samples;
        fft.fwd(Y, y);
        const Eigen::Index M = fe.adc_length();
        const long pos = std::lround(fe.realized_if_hz(0) / (cfg.adc_sample_rate_hz / double(M))) + b;
        const double peak = std::abs(Y[pos]);
        Eigen::VectorXcd rest = Y;
        rest[pos] = 0.0;
        rest[M - pos] = 0.0;
        CHECK(rest.cwiseAbs().maxCoeff() < 1e-9 * peak);

        // Cosine at the IF: power amplitude^2 / 2 carried by the real composite, scaled by |H|^2
        const double h = fe.chain_response(0)[b];
        CHECK_THAT(out[0].mean_power(), WithinRel(h * h, 1e-9));
    }

    SECTION("composite power is the sum of per-chain powers")
    {
        auto cfg = default_combiner(16, 1);
        cfg.quantize = false;
        const FrontEnd fe(cfg, fs_bb, L);
        const auto frames = ofdm_frames(ofdm, 16, 40);
        const double total = fe.combine(frames)[0].mean_power();
        double sum = 0.0;
        for (int a = 0; a < 16; ++a)
        {
            std::vector<ComplexWaveform> only(16, frames[0]);
            for (auto &w : only)
                w.samples.setZero();
            only[std::size_t(a)] = frames[std::size_t(a)];
            sum += fe.combine(only)[0].mean_power();
        }
        CHECK(std::abs(db_ratio(total, sum)) < 0.1);
    }

    SECTION("undriven chains stay 30 dB below the driven one")
    {
        auto cfg = default_combiner(16, 1);
        cfg.quantize = false;
        const FrontEnd fe(cfg, fs_bb, L);
        auto frames = ofdm_frames(ofdm, 16, 50);
        for (int a = 0; a < 16; ++a)
            if (a != 3)
                frames[std::size_t(a)].samples.setZero();
        const auto rx = fe.split(fe.combine(frames));
        const double driven = rx[3].mean_power();
        for (int a = 0; a < 16; ++a)
            if (a != 3)
                CHECK(db_ratio(rx[std::size_t(a)].mean_power(), driven) <= -30.0);
    }

    SECTION("mismatched inputs are rejected")
    {
        const auto cfg = default_combiner(4, 1);
        const auto frames = ofdm_frames(ofdm, 3, 1);
        CHECK_THROWS_AS(combine_chains(frames, cfg), std::invalid_argument);
    }
}

TEST_CASE("SQNR of a single antenna follows the white-noise model")
{
    OfdmConfig ofdm;
    auto cfg = default_combiner(1, 1);
    const double p_dbm = -30.0;
    const auto pts = sqnr_sweep(cfg, ofdm, {p_dbm}, {7.8}, {4, 9});
    REQUIRE(pts.size() == 1);

    const FrontEnd fe(cfg, ofdm.sample_rate_hz(), ofdm.frame_length());
    const UniformQuantizer q(cfg.clip_range_vpp, 7.8);
    const double mean_h2 = fe.chain_response(0).squaredNorm() / double(fe.baseband_length());
    const double noise = q.step() * q.step() / 12.0 * 2.0 / double(fe.ratio()) * mean_h2;
    const double vrms = dbm_to_vrms(p_dbm);
    const double oracle = db_ratio(vrms * vrms, noise);
    CHECK(std::abs(pts[0].sqnr_db - oracle) < 1.0);

    CHECK_THROWS_AS(sqnr_sweep(cfg, ofdm, {p_dbm}, {7.8}, {0, 1}), std::invalid_argument);
}

TEST_CASE("Finer quantization dominates below clipping")
{
    OfdmConfig ofdm;
    const auto cfg = default_combiner(8, 1);
    const auto t = sqnr_per_antenna(cfg, ofdm, -60.0, {6.0, 7.8, 10.0, 12.0}, {2, 3});
    for (Eigen::Index r = 1; r < t.rows(); ++r)
        CHECK((t.row(r).array() > t.row(r - 1).array()).all());
}
