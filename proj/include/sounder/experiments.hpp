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

#ifndef SOUNDER_EXPERIMENTS_HPP
#define SOUNDER_EXPERIMENTS_HPP

#include "sounder/dataset.hpp"
#include "sounder/metrics.hpp"
#include "sounder/propagation.hpp"
#include "sounder/receiver.hpp"
#include "sounder/rf_chain.hpp"
#include "sounder/waveform.hpp"

#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace sounder
{
    // ---------------------------------------------------------------------------------------------
    // Measurement pipeline

    // One sounding snapshot: the transmitted frame passes the channel, receiver noise is added per
    // antenna, and the receiver estimates CSI and per-antenna SNR from the demodulated grids. With a
    // combiner the per-antenna signals first go through combine -> ADC -> split at the given input power.
    struct SnapshotOptions
    {
        double snr_db = std::numeric_limits<double>::infinity(); // per antenna; used when noise_power < 0
        double noise_power = -1.0;       // per sample in the unitary OFDM domain, shared by all antennas
        std::optional<CombinerConfig> front_end;
        double input_power_dbm = -45.0;  // mean per-antenna power at the combiner input
        std::uint64_t seed = 1;
    };

    ChannelEstimate measure_snapshot(const Frame &frame, const OfdmConfig &ofdm, const CsiMatrix &csi,
                                     const SnapshotOptions &opt, double timestamp_s = 0.0);

    // ---------------------------------------------------------------------------------------------
    // End-to-end loopback through the frequency-multiplexed front end

    struct LoopbackOptions
    {
        int n_antennas = 64;
        double snr_db = 30.0;          // injected per antenna
        bool quantize = true;
        double enob = 7.8;
        double input_power_dbm = -44.0;
        Vec3 tx_position = Vec3(6.0, 4.0, 1.0);
        int max_reflection_order = 0; // direct ray only keeps antenna powers within about 1 dB
        std::uint64_t seed = 1;
    };

    struct LoopbackResult
    {
        std::size_t payload_bits = 0;
        std::size_t bit_errors = 0; // summed over antennas
        Vec3 decoded_position = Vec3::Zero();
        Eigen::VectorXd evm_snr_db; // per antenna
        double csi_nmse = 0.0;      // against the true channel, after removing the front-end gain
        CsiMatrix truth;
        ChannelEstimate estimate;
    };

    LoopbackResult run_loopback(const Scenario &sc, const OfdmConfig &ofdm, const LoopbackOptions &opt);

    // ---------------------------------------------------------------------------------------------
    // Verification suites

    struct StabilityOptions
    {
        double duration_s = 600.0;
        double interval_s = 1.0;
        double snr_db = 25.0;
        Vec3 static_position = Vec3(6.0, 4.0, 1.0);
        int moving_points = 60;       // half-wavelength steps along the first path
        double moving_threshold_wavelengths = 3.0;
        std::uint64_t seed = 1;
    };

    struct StabilityReport
    {
        CorrelationSeries static_series;
        CorrelationSeries moving_series;
        Eigen::VectorXd moving_displacement_m;
        double wavelength_m = 0.0;
        double static_min = 0.0;
        double moving_max_beyond = 0.0; // max delta past the threshold displacement
        bool self_exact = false;        // delta(h, h) == 1
        bool symmetric_exact = false;   // delta(a, b) == delta(b, a)
        double scale_deviation = 0.0;   // |delta(h, g h) - 1|
        double rotation_deviation = 0.0;
        bool pass = false;
    };

    StabilityReport run_stability_suite(const Scenario &sc, const OfdmConfig &ofdm, const StabilityOptions &opt = {});

    struct IsolationReport
    {
        Eigen::MatrixXd isolation_db;  // [n_sub x n_sub]
        Eigen::MatrixXd separation_db; // filter i attenuation across subband j's passband
        double worst_isolation_db = 0.0;
        double min_separation_db = 0.0;
        bool pass = false;
    };

    // Extraction filters of the first n_subbands chains on ADC channel 0
    IsolationReport run_isolation_suite(const CombinerConfig &cfg, const OfdmConfig &ofdm, int n_subbands = 10);

    struct MrcOptions
    {
        std::vector<int> antenna_counts = {1, 2, 4, 8, 16, 32, 64};
        double axis_start_db = -14.0;
        double axis_stop_db = 14.0;
        double axis_step_db = 0.25;
        long trials = 100000;
        double target_ber = 1e-3;
        double gain_tolerance_db = 0.3;
        double z_limit = 4.0; // allowed N=1 deviation from Q(sqrt(2 SNR)) in standard errors
        std::uint64_t seed = 1;
    };

    struct MrcReport
    {
        BerSweep sweep;
        std::vector<double> crossing_db;
        std::vector<double> doubling_gain_db; // between consecutive antenna counts
        double n1_max_z = 0.0;
        bool pass = false;
    };

    MrcReport run_mrc_suite(const MrcOptions &opt = {});

    // ---------------------------------------------------------------------------------------------
    // Dataset generation

    struct DatasetOptions
    {
        std::uint64_t seed = 1;
        int samples_override = -1; // > 0 replaces the scenario's samples_per_height
        std::optional<CombinerConfig> front_end;
        double input_power_dbm = -45.0;
    };

    struct DatasetFile
    {
        std::filesystem::path path;
        double height_m = 0.0;
        std::uint64_t records = 0;
    };

    // One CSID file per height plus manifest.json in out_dir
    std::vector<DatasetFile> generate_dataset(const Scenario &sc, const OfdmConfig &ofdm,
                                              const std::filesystem::path &out_dir, const DatasetOptions &opt = {});
} // namespace sounder

#endif
