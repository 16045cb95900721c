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

#include "sounder/waveform.hpp"
#include "sounder/detail_fft.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace sounder
{
    namespace
    {
        constexpr double kInvSqrt2 = 0.70710678118654752440;

        // Bits from the raw engine output, identical across standard library implementations.
        Bits seeded_bits(std::uint64_t seed, std::size_t count)
        {
            std::mt19937_64 rng(seed);
            Bits bits(count);
            std::uint64_t word = 0;
            for (std::size_t i = 0; i < count; ++i)
            {
                if (i % 64 == 0)
                    word = rng();
                bits[i] = std::uint8_t((word >> (i % 64)) & 1u);
            }
            return bits;
        }

        constexpr std::uint64_t kPaddingSeedSalt = 0x9e3779b97f4a7c15ull;
    } // namespace

    void ComplexWaveform::validate() const
    {
        if (!(sample_rate_hz > 0.0))
            throw std::invalid_argument("ComplexWaveform: sample rate must be positive");
        if (samples.size() == 0)
            throw std::invalid_argument("ComplexWaveform: empty sample sequence");
        if (!samples.allFinite())
            throw std::invalid_argument("ComplexWaveform: non-finite samples");
    }

    void OfdmConfig::validate() const
    {
        if (n_subcarriers < 2)
            throw std::invalid_argument("OfdmConfig: need at least 2 subcarriers");
        if (!(guard_fraction >= 0.0 && guard_fraction < 0.5))
            throw std::invalid_argument("OfdmConfig: guard_fraction must lie in [0, 0.5)");
        if (!(cp_fraction > 0.0 && cp_fraction < 1.0))
            throw std::invalid_argument("OfdmConfig: cp_fraction must lie in (0, 1)");
        if (!(bandwidth_hz > 0.0) || !(carrier_hz > 0.0))
            throw std::invalid_argument("OfdmConfig: bandwidth and carrier must be positive");
        if (n_data_symbols < 0)
            throw std::invalid_argument("OfdmConfig: negative data symbol count");
    }

    int OfdmConfig::n_guard() const { return static_cast<int>(std::lround(guard_fraction * n_subcarriers)); }
    int OfdmConfig::cp_length() const { return static_cast<int>(std::lround(cp_fraction * n_subcarriers)); }
    int OfdmConfig::fft_bin(int k) const { return static_cast<int>(detail::wrap_bin(frequency_index(k), n_subcarriers)); }

    Eigen::VectorXcd map_qpsk(const Bits &bits)
    {
        if (bits.size() % 2 != 0)
            throw std::invalid_argument("map_qpsk: odd bit count " + std::to_string(bits.size()));
        Eigen::VectorXcd out(Eigen::Index(bits.size() / 2));
        for (Eigen::Index i = 0; i < out.size(); ++i)
        {
            const double re = 1.0 - 2.0 * (bits[2 * i] & 1u);
            const double im = 1.0 - 2.0 * (bits[2 * i + 1] & 1u);
            out[i] = cdouble(re, im) * kInvSqrt2;
        }
        return out;
    }

    Bits demap_qpsk(const Eigen::Ref<const Eigen::VectorXcd> &symbols)
    {
        Bits bits(std::size_t(symbols.size()) * 2);
        for (Eigen::Index i = 0; i < symbols.size(); ++i)
        {
            bits[2 * i] = symbols[i].real() < 0.0 ? 1 : 0;
            bits[2 * i + 1] = symbols[i].imag() < 0.0 ? 1 : 0;
        }
        return bits;
    }

    Eigen::VectorXcd qpsk_constellation() { return map_qpsk({0, 0, 0, 1, 1, 0, 1, 1}); }

    Eigen::VectorXcd pilot_symbols(const OfdmConfig &cfg, std::uint64_t pilot_seed)
    {
        return map_qpsk(seeded_bits(pilot_seed, std::size_t(cfg.n_active()) * 2));
    }

    ComplexWaveform ofdm_modulate(const Eigen::Ref<const Eigen::MatrixXcd> &symbols, const OfdmConfig &cfg)
    {
        cfg.validate();
        const int n = cfg.n_subcarriers;
        const int na = cfg.n_active();
        const int cp = cfg.cp_length();
        if (symbols.cols() != na)
            throw std::invalid_argument("ofdm_modulate: grid width " + std::to_string(symbols.cols()) +
                                        " != active subcarriers " + std::to_string(na));

        const double scale = std::sqrt(double(n)); // inverse transform carries 1/N
        ComplexWaveform w;
        w.sample_rate_hz = cfg.sample_rate_hz();
        w.occupied_bw_hz = cfg.occupied_bw_hz();
        w.samples.resize(symbols.rows() * cfg.symbol_length());

        Eigen::VectorXcd spectrum(n);
        for (Eigen::Index s = 0; s < symbols.rows(); ++s)
        {
            spectrum.setZero();
            for (int k = 0; k < na; ++k)
                spectrum[cfg.fft_bin(k)] = symbols(s, k);
            const Eigen::VectorXcd body = detail::ifft(spectrum) * scale;
            auto out = w.samples.segment(s * cfg.symbol_length(), cfg.symbol_length());
            out.head(cp) = body.tail(cp);
            out.tail(n) = body;
        }
        return w;
    }

    Frame build_frame(const OfdmConfig &cfg, const Bits &payload_bits, std::uint64_t pilot_seed)
    {
        cfg.validate();
        const std::size_t capacity = cfg.payload_capacity_bits();
        if (payload_bits.size() > capacity)
            throw std::invalid_argument("build_frame: payload needs " + std::to_string(payload_bits.size()) +
                                        " bits, frame carries " + std::to_string(capacity));

        Bits data = seeded_bits(pilot_seed ^ kPaddingSeedSalt, capacity);
        std::copy(payload_bits.begin(), payload_bits.end(), data.begin());

        const int na = cfg.n_active();
        Frame frame;
        frame.grid.symbols.resize(cfg.n_ofdm_symbols(), na);
        frame.grid.pilot_mask.setConstant(cfg.n_ofdm_symbols(), na, false);
        frame.grid.symbols.row(0) = pilot_symbols(cfg, pilot_seed).transpose();
        frame.grid.pilot_mask.row(0).setConstant(true);

        const Eigen::VectorXcd payload = map_qpsk(data);
        for (int s = 0; s < cfg.n_data_symbols; ++s)
            frame.grid.symbols.row(1 + s) = payload.segment(Eigen::Index(s) * na, na).transpose();

        frame.waveform = ofdm_modulate(frame.grid.symbols, cfg);
        return frame;
    }

    SymbolGrid ofdm_demodulate(const ComplexWaveform &w, const OfdmConfig &cfg)
    {
        cfg.validate();
        const Eigen::Index len = cfg.symbol_length();
        if (w.samples.size() == 0 || w.samples.size() % len != 0)
            throw std::invalid_argument("ofdm_demodulate: waveform length " + std::to_string(w.samples.size()) +
                                        " is not a multiple of the CP-extended symbol length " + std::to_string(len));
        const int n = cfg.n_subcarriers;
        const int na = cfg.n_active();
        const Eigen::Index n_sym = w.samples.size() / len;
        const double scale = 1.0 / std::sqrt(double(n));

        SymbolGrid grid;
        grid.symbols.resize(n_sym, na);
        grid.pilot_mask.setConstant(n_sym, na, false);
        grid.pilot_mask.row(0).setConstant(true);
        for (Eigen::Index s = 0; s < n_sym; ++s)
        {
            const Eigen::VectorXcd spectrum = detail::fft(w.samples.segment(s * len + cfg.cp_length(), n)) * scale;
            for (int k = 0; k < na; ++k)
                grid.symbols(s, k) = spectrum[cfg.fft_bin(k)];
        }
        return grid;
    }

    Bits encode_position(const Vec3 &position_m)
    {
        Bits bits;
        bits.reserve(kPositionBits);
        for (int c = 0; c < 3; ++c)
        {
            const double v = position_m[c];
            if (!std::isfinite(v) || std::abs(v) >= 32768.0)
                throw std::invalid_argument("encode_position: coordinate out of range: " + std::to_string(v));
            const auto mm = static_cast<std::int32_t>(std::llround(v * 1000.0));
            const auto word = static_cast<std::uint32_t>(mm);
            for (int b = 0; b < 32; ++b)
                bits.push_back(std::uint8_t((word >> b) & 1u));
        }
        return bits;
    }

    Vec3 decode_position(const Bits &bits)
    {
        if (bits.size() < kPositionBits)
            throw std::invalid_argument("decode_position: need 96 bits, got " + std::to_string(bits.size()));
        Vec3 p;
        for (int c = 0; c < 3; ++c)
        {
            std::uint32_t word = 0;
            for (int b = 0; b < 32; ++b)
                word |= std::uint32_t(bits[std::size_t(32 * c + b)] & 1u) << b;
            p[c] = static_cast<std::int32_t>(word) / 1000.0;
        }
        return p;
    }

    Bits grid_payload_bits(const SymbolGrid &grid)
    {
        std::vector<cdouble> data;
        for (Eigen::Index s = 0; s < grid.symbols.rows(); ++s)
            for (Eigen::Index k = 0; k < grid.symbols.cols(); ++k)
                if (!grid.pilot_mask(s, k))
                    data.push_back(grid.symbols(s, k));
        return demap_qpsk(Eigen::Map<const Eigen::VectorXcd>(data.data(), Eigen::Index(data.size())));
    }
} // namespace sounder
