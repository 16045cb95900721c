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

#ifndef SOUNDER_PROPAGATION_HPP
#define SOUNDER_PROPAGATION_HPP

#include "sounder/types.hpp"
#include "sounder/waveform.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sounder
{
    // ---------------------------------------------------------------------------------------------
    // Link budget

    struct LinkBudget
    {
        double p_tx_dbm = 33.0;
        double g_tx_db = 3.0;
        double g_rx_db = 3.0;
        double amp_rx_db = 20.0;
        double h_tx_m = 1.0;
        double h_rx_m = 1.0;
        double min_input_dbm = -77.0;
        double max_input_dbm = -36.0;
        double target_snr_db = 20.0;

        // Subtracted from the tolerable path loss. The default is calibrated so that the remaining
        // defaults give the 2.1 km coverage radius of the reference setup (PL_BP = 132.9 dB).
        double margin_db = -6.9;

        void validate() const;
    };

    // PL_BP = P_TX + G_TX + G_RX + Amp_RX - (min_input + target_snr - 10) - margin
    double tolerable_path_loss_db(const LinkBudget &lb);

    // d = sqrt(h_TX h_RX) / 10^(-PL / 40)
    double coverage_radius_for_path_loss(double path_loss_db, double h_tx_m, double h_rx_m);

    double max_coverage_radius(const LinkBudget &lb);

    // Crossover of the free-space and two-ray asymptotes, 4 pi h_TX h_RX / lambda
    double breakpoint_distance(const LinkBudget &lb, double carrier_hz);

    // Dual-slope model: free space up to the breakpoint, 40 dB/decade beyond, continuous at the breakpoint
    double breakpoint_path_loss(double d_m, const LinkBudget &lb, double carrier_hz);

    // ---------------------------------------------------------------------------------------------
    // Scenario

    enum class LinkTag
    {
        LoS,
        NLoS
    };

    std::string to_string(LinkTag tag);
    LinkTag link_tag_from_string(const std::string &s);

    struct Room
    {
        Vec3 min = Vec3::Zero();
        Vec3 max = Vec3(20.0, 12.0, 3.0);
        double reflection = 0.7; // amplitude coefficient of every face

        bool contains(const Vec3 &p) const
        {
            return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
        }
    };

    // Interior wall, floor to ceiling, blocks the direct ray
    struct Wall
    {
        Eigen::Vector2d from = Eigen::Vector2d::Zero();
        Eigen::Vector2d to = Eigen::Vector2d::Zero();
    };

    struct ArraySpec
    {
        Vec3 center = Vec3(0.3, 6.0, 1.5);
        int rows = 8;
        int cols = 8;
        double spacing_m = 0.0; // 0 = half a wavelength at the carrier
        Vec3 row_axis = Vec3::UnitZ();
        Vec3 col_axis = Vec3::UnitY();
        std::string polarization = "horizontal"; // metadata

        int n_antennas() const { return rows * cols; }

        // Antenna a = r * cols + c
        Eigen::Matrix3Xd positions(double carrier_hz) const;
    };

    struct PathSpec
    {
        std::string name;
        LinkTag tag = LinkTag::LoS;
        std::vector<Eigen::Vector2d> vertices;

        double length() const;
        Eigen::Vector2d point_at(double arc_m) const;
    };

    struct Scenario
    {
        std::string name = "scenario";
        Room room;
        std::vector<Wall> walls;
        ArraySpec array;
        std::vector<PathSpec> paths;
        std::vector<double> heights_m = {0.5, 1.0, 1.5};
        double grid_spacing_m = 2.0;
        int samples_per_height = 2000; // 0 = path length / point spacing + 1
        double point_spacing_m = 0.0;  // 0 = half a wavelength
        double jitter_sigma_m = 0.03;
        double jitter_limit_m = 0.10;
        int max_reflection_order = 2;
        double sample_interval_s = 0.1;

        // Receiver noise floor: SNR of a single free-space ray at reference_distance_m
        double snr_db = 25.0;
        double reference_distance_m = 5.0;

        void validate(double carrier_hz) const;
        double noise_power(double carrier_hz) const;
    };

    // Built-in office layouts: open LoS area next to the array, NLoS hallway behind a wall
    Scenario default_los_scenario();
    Scenario default_nlos_scenario();

    // ---------------------------------------------------------------------------------------------
    // Channel state

    struct CsiMatrix
    {
        Eigen::MatrixXcd h; // [n_ant x n_active_subcarriers]
        double carrier_hz = 0.0;

        Eigen::Index n_antennas() const { return h.rows(); }
        Eigen::Index n_subcarriers() const { return h.cols(); }
    };

    struct Ray
    {
        Vec3 source;       // image position
        double gain = 1.0; // product of reflection coefficients
        int order = 0;
    };

    // Image sources of the room box up to max_order reflections
    std::vector<Ray> image_sources(const Room &room, const Vec3 &tx, int max_order);

    // True if the straight segment a-b crosses an interior wall
    bool segment_blocked(const std::vector<Wall> &walls, const Vec3 &a, const Vec3 &b);

    // Image-source multipath, h[a, k] = sum_r G_r lambda_k / (4 pi d_r) exp(-j 2 pi d_r / lambda_k)
    CsiMatrix generate_csi(const Scenario &sc, const OfdmConfig &cfg, const Vec3 &p);

    struct TrajectoryPoint
    {
        int path_index = 0;
        int height_index = 0;
        Vec3 position = Vec3::Zero(); // surveyed ground truth (stored tag)
        Vec3 actual = Vec3::Zero();   // transmitter location, within jitter_limit_m of the tag
        double timestamp_s = 0.0;
    };

    // Walks every path at every height; paths shorter than the requested sample count are walked back
    // and forth at the nominal spacing.
    std::vector<TrajectoryPoint> generate_trajectory(const Scenario &sc, double carrier_hz, std::uint64_t seed);

    // Per-antenna received frame: circular per-symbol channel on the active subcarriers plus complex
    // white Gaussian noise. snr_db refers to the mean received power per active subcarrier;
    // +infinity disables the noise.
    std::vector<ComplexWaveform> apply_channel(const ComplexWaveform &w, const CsiMatrix &csi, const OfdmConfig &cfg,
                                               double snr_db, std::uint64_t seed);

    // Same, with an absolute noise variance per sample shared by all antennas
    std::vector<ComplexWaveform> apply_channel_with_noise_power(const ComplexWaveform &w, const CsiMatrix &csi,
                                                                const OfdmConfig &cfg, double noise_power,
                                                                std::uint64_t seed);
} // namespace sounder

#endif
