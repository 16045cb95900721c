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

#ifndef SOUNDER_TYPES_HPP
#define SOUNDER_TYPES_HPP

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <vector>

namespace sounder
{
    using cdouble = std::complex<double>;
    using Bits = std::vector<std::uint8_t>;
    using Vec3 = Eigen::Vector3d;

    inline constexpr double kSpeedOfLight = 299792458.0;
    inline constexpr double kPi = 3.14159265358979323846;
    inline constexpr double kLoadOhms = 50.0;

    // Time-domain complex envelope. A real-valued signal (ADC composite) keeps zero imaginary parts.
    struct ComplexWaveform
    {
        double sample_rate_hz = 0.0;
        double center_offset_hz = 0.0; // 0 = baseband
        double occupied_bw_hz = 0.0;   // 0 = unknown, treated as a line at center_offset_hz
        Eigen::VectorXcd samples;

        void validate() const;
        double mean_power() const { return samples.size() ? samples.squaredNorm() / double(samples.size()) : 0.0; }
    };

    inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
    inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

    // dBm at a 50 Ohm input -> RMS volts
    inline double dbm_to_vrms(double dbm) { return std::sqrt(1e-3 * db_to_linear(dbm) * kLoadOhms); }
} // namespace sounder

#endif
