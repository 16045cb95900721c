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

#ifndef SOUNDER_WAVEFORM_HPP
#define SOUNDER_WAVEFORM_HPP

#include "sounder/types.hpp"

#include <cstdint>
#include <vector>

namespace sounder
{
    enum class Modulation
    {
        Qpsk
    };

    // Air interface of the sounding frame.
    //
    // Frames start with one all-pilot OFDM symbol followed by n_data_symbols payload symbols. Guard
    // subcarriers are split evenly between both band edges, the DC subcarrier stays active.
    struct OfdmConfig
    {
        int n_subcarriers = 1024;
        double guard_fraction = 0.10;
        double cp_fraction = 1.0 / 8.0;
        double bandwidth_hz = 20e6;
        double carrier_hz = 1.25e9;
        Modulation modulation = Modulation::Qpsk;
        int n_data_symbols = 1;

        void validate() const;

        int n_guard() const;
        int n_active() const { return n_subcarriers - n_guard(); }
        int cp_length() const;
        int symbol_length() const { return n_subcarriers + cp_length(); }
        int n_ofdm_symbols() const { return 1 + n_data_symbols; }
        int frame_length() const { return n_ofdm_symbols() * symbol_length(); }
        double sample_rate_hz() const { return bandwidth_hz; }
        double subcarrier_spacing_hz() const { return bandwidth_hz / n_subcarriers; }
        double occupied_bw_hz() const { return n_active() * subcarrier_spacing_hz(); }
        std::size_t payload_capacity_bits() const { return std::size_t(n_data_symbols) * std::size_t(n_active()) * 2; }

        // Signed frequency index (in subcarrier spacings, relative to the carrier) of active subcarrier k
        int frequency_index(int k) const { return k - n_subcarriers / 2 + n_guard() / 2; }

        // DFT bin of active subcarrier k
        int fft_bin(int k) const;

        // RF frequency of active subcarrier k
        double subcarrier_frequency_hz(int k) const { return carrier_hz + frequency_index(k) * subcarrier_spacing_hz(); }
    };

    struct SymbolGrid
    {
        Eigen::MatrixXcd symbols;                              // [n_ofdm_symbols x n_active]
        Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> pilot_mask; // same shape

        Eigen::Index n_ofdm_symbols() const { return symbols.rows(); }
        Eigen::Index n_active() const { return symbols.cols(); }
    };

    struct Frame
    {
        ComplexWaveform waveform;
        SymbolGrid grid;
    };

    // Gray-mapped unit-energy QPSK: (b0, b1) -> ((1 - 2 b0) + i (1 - 2 b1)) / sqrt(2)
    Eigen::VectorXcd map_qpsk(const Bits &bits);

    // Hard decisions, inverse of map_qpsk
    Bits demap_qpsk(const Eigen::Ref<const Eigen::VectorXcd> &symbols);

    // Nearest QPSK constellation point
    inline cdouble qpsk_decision(cdouble z)
    {
        constexpr double a = 0.70710678118654752440;
        return {z.real() < 0.0 ? -a : a, z.imag() < 0.0 ? -a : a};
    }

    // The four QPSK points in Gray order
    Eigen::VectorXcd qpsk_constellation();

    // Seeded pilot symbols, identical at TX and RX
    Eigen::VectorXcd pilot_symbols(const OfdmConfig &cfg, std::uint64_t pilot_seed);

    // Unitary OFDM modulation of a symbol grid (one row per OFDM symbol), CP prepended per symbol
    ComplexWaveform ofdm_modulate(const Eigen::Ref<const Eigen::MatrixXcd> &symbols, const OfdmConfig &cfg);

    // Payload bits are padded with seeded pseudorandom bits up to the frame capacity.
    Frame build_frame(const OfdmConfig &cfg, const Bits &payload_bits, std::uint64_t pilot_seed);

    SymbolGrid ofdm_demodulate(const ComplexWaveform &w, const OfdmConfig &cfg);

    // 32-bit two's complement millimetres per coordinate, LSB first, x then y then z
    inline constexpr std::size_t kPositionBits = 96;
    Bits encode_position(const Vec3 &position_m);
    Vec3 decode_position(const Bits &bits);

    // Data bits carried by a grid (all non-pilot symbols, row-major)
    Bits grid_payload_bits(const SymbolGrid &grid);
} // namespace sounder

#endif
