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

#ifndef SOUNDER_METRICS_HPP
#define SOUNDER_METRICS_HPP

#include "sounder/receiver.hpp"
#include "sounder/types.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sounder
{
    // ---------------------------------------------------------------------------------------------
    // Stability

    struct CorrelationResult
    {
        double delta = 0.0;
        Eigen::Index used = 0;     // subcarriers in the average
        Eigen::Index excluded = 0; // zero-norm columns skipped
    };

    // Per subcarrier column k: |a_k^H b_k| / (||a_k|| ||b_k||), averaged over the subcarriers.
    // Rows are antennas. Columns where either vector vanishes are skipped and counted.
    template <typename DerivedA, typename DerivedB>
    CorrelationResult correlation_detail(const Eigen::MatrixBase<DerivedA> &a, const Eigen::MatrixBase<DerivedB> &b)
    {
        if (a.rows() != b.rows() || a.cols() != b.cols())
            throw std::invalid_argument("correlation_coefficient: dimension mismatch");
        CorrelationResult r;
        double sum = 0.0;
        for (Eigen::Index k = 0; k < a.cols(); ++k)
        {
            const double na = std::real(a.col(k).dot(a.col(k)));
            const double nb = std::real(b.col(k).dot(b.col(k)));
            if (!(na > 0.0) || !(nb > 0.0))
            {
                ++r.excluded;
                continue;
            }
            sum += std::abs(a.col(k).dot(b.col(k))) / std::sqrt(na * nb);
            ++r.used;
        }
        if (r.used == 0)
            throw std::invalid_argument("correlation_coefficient: every subcarrier has a zero channel vector");
        r.delta = sum / double(r.used);
        return r;
    }

    template <typename DerivedA, typename DerivedB>
    double correlation_coefficient(const Eigen::MatrixBase<DerivedA> &a, const Eigen::MatrixBase<DerivedB> &b)
    {
        return correlation_detail(a, b).delta;
    }

    inline double correlation_coefficient(const CsiMatrix &a, const CsiMatrix &b)
    {
        return correlation_detail(a.h, b.h).delta;
    }

    struct CorrelationSeries
    {
        Eigen::VectorXd delta_t_s;
        Eigen::VectorXd delta_h;
        Eigen::Index excluded_subcarriers = 0; // summed over the series
    };

    // Correlation between records[ref_index] and every later record
    CorrelationSeries stability_series(const std::vector<ChannelEstimate> &records, std::size_t ref_index = 0);

    // ---------------------------------------------------------------------------------------------
    // SNR distribution

    struct EmpiricalCdf
    {
        Eigen::VectorXd values;     // distinct sorted values
        Eigen::VectorXd cumulative; // P(X <= values[i])

        double operator()(double x) const;
        double mean = 0.0;
        Eigen::Index count = 0;
    };

    EmpiricalCdf empirical_cdf(std::vector<double> samples);

    // Over every antenna of every record
    EmpiricalCdf snr_cdf(const std::vector<ChannelEstimate> &records);

    // ---------------------------------------------------------------------------------------------
    // Maximum ratio combining

    // (h^H y) / ||h||^2, the signal coefficient after combining is one
    template <typename DerivedH, typename DerivedY>
    cdouble mrc_combine(const Eigen::MatrixBase<DerivedH> &h_hat, const Eigen::MatrixBase<DerivedY> &y)
    {
        if (h_hat.size() != y.size())
            throw std::invalid_argument("mrc_combine: dimension mismatch");
        const double energy = h_hat.squaredNorm();
        if (!(energy > 0.0))
            throw std::invalid_argument("mrc_combine: zero channel vector");
        return h_hat.dot(y) / energy;
    }

    // Static per-branch channel coefficients. Branch SNR = axis SNR * |h_a|^2.
    struct ChannelSource
    {
        Eigen::VectorXcd branches;

        static ChannelSource equal_snr(int n_antennas);
        static ChannelSource from_branch_snr_db(const Eigen::Ref<const Eigen::VectorXd> &offsets_db);

        // One subcarrier column of a CSI matrix, normalized to unit mean branch power
        static ChannelSource from_csi(const CsiMatrix &csi, Eigen::Index subcarrier);

        // Branch indices sorted by ascending power (stable)
        std::vector<Eigen::Index> ascending_order() const;
    };

    struct BerCurve
    {
        int n_antennas = 0;
        Eigen::VectorXd snr_axis_db; // per-branch Eb/N0 of a unit-gain branch
        Eigen::VectorXd ber;
        Eigen::VectorXd bit_errors;
        double bits_per_point = 0.0;
    };

    struct BerSweepOptions
    {
        long trials = 100000; // QPSK symbols per point
        std::uint64_t seed = 1;
        double target_ber = 1e-3;
    };

    struct BerSweep
    {
        std::vector<BerCurve> curves;
        std::vector<std::string> warnings;
    };

    // For each antenna count N the N weakest branches are combined (ascending-SNR selection), QPSK
    // symbols are sent over AWGN branches, MRC-combined with perfect CSI and hard-demapped. Once a
    // point sees no bit error the rest of the axis is reported as zero.
    BerSweep ber_sweep(const std::vector<int> &n_antennas_list, const Eigen::Ref<const Eigen::VectorXd> &snr_axis_db,
                       const ChannelSource &source, const BerSweepOptions &opt = {});

    // Axis value where the curve crosses target_ber, log-linear interpolation; NaN if it never does
    double ber_crossing_db(const BerCurve &curve, double target_ber);

    // Q(x) = 0.5 erfc(x / sqrt 2)
    inline double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

    // ---------------------------------------------------------------------------------------------
    // Positioning error

    struct PositionErrorStats
    {
        double mean_distance_error_m = 0.0;
        Eigen::VectorXd errors_m;        // sorted, doubles as the empirical CDF support
        Eigen::VectorXd cdf;             // (i + 1) / n
        Eigen::VectorXi histogram;       // counts per bin
        double bin_width_m = 0.1;
    };

    // Columns are positions (3 x n)
    PositionErrorStats position_error_stats(const Eigen::Ref<const Eigen::Matrix3Xd> &truth,
                                            const Eigen::Ref<const Eigen::Matrix3Xd> &predicted,
                                            double bin_width_m = 0.1);
} // namespace sounder

#endif
