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

#ifndef SOUNDER_RECEIVER_HPP
#define SOUNDER_RECEIVER_HPP

#include "sounder/propagation.hpp"
#include "sounder/rf_chain.hpp"
#include "sounder/waveform.hpp"

#include <vector>

namespace sounder
{
    struct ChannelEstimate
    {
        CsiMatrix csi;
        Eigen::VectorXd snr_per_antenna_db; // [n_ant]
        double timestamp_s = 0.0;
    };

    inline constexpr double kSnrCeilingDb = 300.0;

    // ADC composites -> per-antenna baseband at the OFDM sample rate, time aligned across antennas
    std::vector<ComplexWaveform> split_subbands(const std::vector<ComplexWaveform> &adc_streams,
                                                const CombinerConfig &cfg, const OfdmConfig &ofdm);

    // Raw least-squares estimate ĥ[a, k] = y_pilot[a, k] / p[k], averaged over the pilot symbols of
    // subcarrier k. Per-antenna SNR comes from the data symbols when the grid carries at least 100.
    ChannelEstimate estimate_csi(const std::vector<SymbolGrid> &grids, const SymbolGrid &pilots,
                                 double carrier_hz = 0.0, double timestamp_s = 0.0);

    // SNR_dB = -20 log10(RMS error vector / RMS reference magnitude) per row, the error measured
    // against the nearest constellation point. Optional non-negative weights per symbol.
    Eigen::VectorXd evm_snr(const Eigen::Ref<const Eigen::MatrixXcd> &equalized,
                            const Eigen::Ref<const Eigen::VectorXcd> &constellation);
    Eigen::VectorXd evm_snr(const Eigen::Ref<const Eigen::MatrixXcd> &equalized,
                            const Eigen::Ref<const Eigen::VectorXcd> &constellation,
                            const Eigen::Ref<const Eigen::MatrixXd> &weights);

    // EVM-based SNR of one antenna's grid given its channel estimate. Equalized errors are weighted
    // by |ĥ|^2 and corrected for the noise the LS pilot estimate adds to every equalized symbol.
    double measure_snr_db(const SymbolGrid &grid, const Eigen::Ref<const Eigen::VectorXcd> &h_hat,
                          const SymbolGrid &pilots);

    // Zero-forcing equalization and hard QPSK decisions on every data symbol
    Bits decode_payload(const SymbolGrid &grid, const Eigen::Ref<const Eigen::VectorXcd> &h_hat);
} // namespace sounder

#endif
