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

#ifndef SOUNDER_RF_CHAIN_HPP
#define SOUNDER_RF_CHAIN_HPP

#include "sounder/types.hpp"
#include "sounder/waveform.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace sounder
{
    // ---------------------------------------------------------------------------------------------
    // Subband filters

    // Linear-phase bandpass specification. pass_lo_hz <= 0 designs a lowpass, a passband covering
    // [0, fs/2] designs the identity filter.
    struct FilterSpec
    {
        double pass_lo_hz = 0.0;
        double pass_hi_hz = 0.0;
        double stop_atten_db = 60.0; // >= 20
        double transition_hz = 0.0;  // > 0
        int max_taps = 4095;
    };

    struct FilterTaps
    {
        Eigen::VectorXd taps;             // symmetric
        double group_delay_samples = 0.0; // (taps - 1) / 2
        double sample_rate_hz = 0.0;
        double pass_lo_hz = 0.0;
        double pass_hi_hz = 0.0;

        // Measured on a dense frequency grid after design
        double achieved_stop_atten_db = 0.0;
        double passband_ripple_db = 0.0;
    };

    // Kaiser-windowed sinc design. The tap count grows from the Kaiser estimate until the measured
    // stopband meets the specification; beyond max_taps the design is rejected.
    FilterTaps design_subband_filter(const FilterSpec &spec, double sample_rate_hz);

    // Real amplitude response with the group delay removed, evaluated at the given frequencies.
    Eigen::VectorXd zero_phase_response(const FilterTaps &filter, const Eigen::Ref<const Eigen::VectorXd> &freqs_hz);

    // |H|^2 on n_points uniformly spaced frequencies covering [0, fs/2)
    Eigen::VectorXd power_response(const FilterTaps &filter, Eigen::Index n_points);

    namespace detail
    {
        // Zero-phase amplitude of symmetric taps on DFT bins 0 .. n_fft/2 of an n_fft grid
        Eigen::VectorXd zero_phase_grid(const Eigen::VectorXd &taps, Eigen::Index n_fft);
    } // namespace detail

    inline constexpr double kIsolationFloorDb = -200.0;

    // Entry (i, j): power collected by filter j when only band i is driven with white noise confined
    // to its passband, relative to the power filter i collects. Rows of `power` hold |H_j|^2 on a
    // common grid, rows of `drive_band` mark the grid points inside band i.
    Eigen::MatrixXd isolation_from_responses(const Eigen::Ref<const Eigen::MatrixXd> &power,
                                             const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> &drive_band);

    Eigen::MatrixXd subband_isolation(const std::vector<FilterTaps> &filters, double sample_rate_hz);

    // Loss of a binary Wilkinson combiner tree, 3 log2(n) dB
    double wilkinson_loss_db(int n_ant);

    // ---------------------------------------------------------------------------------------------
    // Mixing and quantization

    // Multiply by exp(j 2 pi shift t). Rejects shifts that move the occupied band beyond Nyquist.
    ComplexWaveform mix(const ComplexWaveform &w, double shift_hz);

    // Mid-rise uniform quantizer across [-vpp/2, vpp/2]. The level count is round(2^enob) taken to the
    // nearest even number, so zero always sits on a decision threshold.
    struct UniformQuantizer
    {
        double clip_range_vpp = 0.1;
        double enob = 7.8;

        UniformQuantizer(double vpp, double bits);

        std::int64_t levels() const { return levels_; }
        double step() const { return step_; }

        double operator()(double x) const
        {
            const double half = 0.5 * clip_range_vpp;
            const double idx = std::floor((x + half) / step_);
            const double clamped = idx < 0.0 ? 0.0 : (idx > double(levels_ - 1) ? double(levels_ - 1) : idx);
            return -half + (clamped + 0.5) * step_;
        }

        template <typename Derived>
        auto apply(const Eigen::ArrayBase<Derived> &x) const
        {
            return x.unaryExpr([this](typename Derived::Scalar v) {
                return static_cast<typename Derived::Scalar>((*this)(double(v)));
            });
        }

    private:
        std::int64_t levels_;
        double step_;
    };

    // Hard-limit to +-vpp/2 and quantize. Input must be real-valued (zero imaginary part).
    ComplexWaveform clip_and_quantize(const ComplexWaveform &w, double clip_range_vpp, double enob);

    // ---------------------------------------------------------------------------------------------
    // Frequency-multiplexed front end

    struct ChainConfig
    {
        int antenna_index = 0; // 0-based
        double if_center_hz = 0.0;
        int subband_index = 0;
        int board_index = 0;
        int adc_channel = 0;
        double gain_db = 0.0;
        double lo_phase_rad = 0.0; // local oscillator phase, removed again by the calibrated receiver
    };

    struct CombinerConfig
    {
        std::vector<ChainConfig> chains;
        int n_adc_channels = 4;
        double clip_range_vpp = 0.100;
        double enob = 7.8;
        bool quantize = true;
        double adc_sample_rate_hz = 1.6e9;
        int antennas_per_board = 10;
        int n_subbands = 10;

        // Coarse gain applied equally to every chain
        double common_gain_db = 0.0;

        // Board/extraction filter shape around each IF
        double passband_half_width_hz = 9.1e6;
        double transition_hz = 3.8e6;
        double stop_atten_db = 80.0;
        int max_filter_taps = 4095;

        int n_antennas() const { return static_cast<int>(chains.size()); }
        FilterSpec chain_filter_spec(const ChainConfig &chain) const;
        void validate() const;
    };

    // Interleaved IF plan: each ADC channel hosts consecutive antennas in slots spaced by
    // subband_spacing_hz starting at first_if_hz. Board and subband indices follow the
    // antennas_per_board / n_subbands layout. LO phases are drawn uniformly from lo_phase_seed.
    CombinerConfig default_combiner(int n_antennas = 64, int n_adc_channels = 4, double subband_spacing_hz = 22e6,
                                    double first_if_hz = 22e6, std::uint64_t lo_phase_seed = 1);

    // Frequency-domain model of the repeated sounding frame: every frame is treated as one period of a
    // continuously transmitted signal, so up-sampling, mixing and filtering are exact circular
    // operations on the frame's DFT grid. IF centres are realised on that grid.
    class FrontEnd
    {
    public:
        FrontEnd(CombinerConfig cfg, double baseband_rate_hz, Eigen::Index baseband_length);

        const CombinerConfig &config() const { return cfg_; }
        int ratio() const { return ratio_; }
        Eigen::Index baseband_length() const { return baseband_length_; }
        Eigen::Index adc_length() const { return baseband_length_ * ratio_; }
        double baseband_rate_hz() const { return baseband_rate_hz_; }
        double realized_if_hz(std::size_t chain) const;
        const FilterTaps &chain_filter(std::size_t chain) const { return filters_[chain]; }

        // Zero-phase board filter amplitude seen by baseband DFT bin b of chain `chain`
        const Eigen::VectorXd &chain_response(std::size_t chain) const { return responses_[chain]; }

        // Baseband waveforms indexed by antenna -> one real composite per ADC channel
        std::vector<ComplexWaveform> combine(const std::vector<ComplexWaveform> &per_antenna) const;

        // Clip and quantize every composite when the configuration asks for it
        std::vector<ComplexWaveform> digitize(const std::vector<ComplexWaveform> &adc_streams) const;

        // ADC composites -> baseband waveform per antenna (mix down, filter, decimate)
        std::vector<ComplexWaveform> split(const std::vector<ComplexWaveform> &adc_streams) const;

        // Chains assigned to an ADC channel, as indices into config().chains
        const std::vector<std::size_t> &chains_on(int adc_channel) const { return by_adc_[std::size_t(adc_channel)]; }

    private:
        CombinerConfig cfg_;
        double baseband_rate_hz_;
        Eigen::Index baseband_length_;
        int ratio_;
        std::vector<long> if_bin_;
        std::vector<FilterTaps> filters_;
        std::vector<Eigen::VectorXd> responses_;
        std::vector<std::vector<std::size_t>> by_adc_;
        std::vector<std::size_t> chain_of_antenna_;
    };

    // Convenience wrapper constructing a FrontEnd for the given waveforms.
    std::vector<ComplexWaveform> combine_chains(const std::vector<ComplexWaveform> &per_antenna,
                                                const CombinerConfig &cfg);

    // ---------------------------------------------------------------------------------------------
    // SQNR analysis

    struct SqnrOptions
    {
        int trials = 100;
        std::uint64_t seed = 1;
    };

    struct SqnrPoint
    {
        double power_dbm = 0.0;
        double enob = 0.0;
        double sqnr_db = 0.0;              // mean over antennas
        Eigen::VectorXd per_antenna_db;     // [n_ant]
    };

    // Drives every chain with an independent OFDM frame at the given per-antenna input power (dBm at
    // 50 Ohm) and measures signal over quantization-plus-clipping error after subband extraction.
    std::vector<SqnrPoint> sqnr_sweep(const CombinerConfig &cfg, const OfdmConfig &ofdm,
                                      const std::vector<double> &powers_dbm, const std::vector<double> &enobs,
                                      const SqnrOptions &opt = {});

    // [n_enob x n_ant] SQNR table at one input power
    Eigen::MatrixXd sqnr_per_antenna(const CombinerConfig &cfg, const OfdmConfig &ofdm, double input_power_dbm,
                                     const std::vector<double> &enobs, const SqnrOptions &opt = {});
} // namespace sounder

#endif
