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

#include "sounder/metrics.hpp"
#include "sounder/detail_seed.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

namespace sounder
{
    CorrelationSeries stability_series(const std::vector<ChannelEstimate> &records, std::size_t ref_index)
    {
        if (ref_index >= records.size())
            throw std::invalid_argument("stability_series: reference index out of range");
        const auto n = Eigen::Index(records.size() - ref_index);
        CorrelationSeries s;
        s.delta_t_s.resize(n);
        s.delta_h.resize(n);
        const auto &ref = records[ref_index];
        for (Eigen::Index i = 0; i < n; ++i)
        {
            const auto &rec = records[ref_index + std::size_t(i)];
            const auto r = correlation_detail(ref.csi.h, rec.csi.h);
            s.delta_t_s[i] = rec.timestamp_s - ref.timestamp_s;
            s.delta_h[i] = r.delta;
            s.excluded_subcarriers += r.excluded;
        }
        return s;
    }

    EmpiricalCdf empirical_cdf(std::vector<double> samples)
    {
        if (samples.empty())
            throw std::invalid_argument("empirical_cdf: no samples");
        for (double v : samples)
            if (!std::isfinite(v))
                throw std::invalid_argument("empirical_cdf: non-finite sample");
        std::sort(samples.begin(), samples.end());
        std::vector<double> vals, cum;
        const double n = double(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i)
        {
            if (i + 1 < samples.size() && samples[i + 1] == samples[i])
                continue;
            vals.push_back(samples[i]);
            cum.push_back(double(i + 1) / n);
        }
        EmpiricalCdf c;
        c.values = Eigen::Map<Eigen::VectorXd>(vals.data(), Eigen::Index(vals.size()));
        c.cumulative = Eigen::Map<Eigen::VectorXd>(cum.data(), Eigen::Index(cum.size()));
        c.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
        c.count = Eigen::Index(samples.size());
        return c;
    }

    double EmpiricalCdf::operator()(double x) const
    {
        const auto *first = values.data(), *last = values.data() + values.size();
        const auto it = std::upper_bound(first, last, x);
        return it == first ? 0.0 : cumulative[(it - first) - 1];
    }

    EmpiricalCdf snr_cdf(const std::vector<ChannelEstimate> &records)
    {
        std::vector<double> all;
        for (const auto &r : records)
            for (Eigen::Index a = 0; a < r.snr_per_antenna_db.size(); ++a)
                if (std::isfinite(r.snr_per_antenna_db[a]))
                    all.push_back(r.snr_per_antenna_db[a]);
        return empirical_cdf(std::move(all));
    }

    ChannelSource ChannelSource::equal_snr(int n_antennas)
    {
        if (n_antennas < 1)
            throw std::invalid_argument("ChannelSource: need at least one antenna");
        return {Eigen::VectorXcd::Ones(n_antennas)};
    }

    ChannelSource ChannelSource::from_branch_snr_db(const Eigen::Ref<const Eigen::VectorXd> &offsets_db)
    {
        if (offsets_db.size() < 1 || !offsets_db.allFinite())
            throw std::invalid_argument("ChannelSource: branch offsets must be finite and non-empty");
        ChannelSource s;
        s.branches = offsets_db.unaryExpr([](double d) { return cdouble(std::pow(10.0, d / 20.0), 0.0); });
        return s;
    }

    ChannelSource ChannelSource::from_csi(const CsiMatrix &csi, Eigen::Index subcarrier)
    {
        if (subcarrier < 0 || subcarrier >= csi.h.cols())
            throw std::invalid_argument("ChannelSource: subcarrier out of range");
        ChannelSource s;
        s.branches = csi.h.col(subcarrier);
        const double p = s.branches.squaredNorm() / double(s.branches.size());
        if (!(p > 0.0))
            throw std::invalid_argument("ChannelSource: zero channel column");
        s.branches /= std::sqrt(p);
        return s;
    }

    std::vector<Eigen::Index> ChannelSource::ascending_order() const
    {
        std::vector<Eigen::Index> idx(std::size_t(branches.size()));
        std::iota(idx.begin(), idx.end(), Eigen::Index(0));
        std::stable_sort(idx.begin(), idx.end(),
                         [&](Eigen::Index a, Eigen::Index b) { return std::norm(branches[a]) < std::norm(branches[b]); });
        return idx;
    }

    BerSweep ber_sweep(const std::vector<int> &n_antennas_list, const Eigen::Ref<const Eigen::VectorXd> &snr_axis_db,
                       const ChannelSource &source, const BerSweepOptions &opt)
    {
        if (opt.trials < 1)
            throw std::invalid_argument("ber_sweep: trials must be positive");
        if (snr_axis_db.size() < 1 || !snr_axis_db.allFinite())
            throw std::invalid_argument("ber_sweep: empty or non-finite SNR axis");
        for (Eigen::Index i = 1; i < snr_axis_db.size(); ++i)
            if (!(snr_axis_db[i] > snr_axis_db[i - 1]))
                throw std::invalid_argument("ber_sweep: SNR axis must be strictly increasing");
        const auto order = source.ascending_order();
        BerSweep out;
        const double bits = 2.0 * double(opt.trials);
        if (opt.target_ber > 0.0 && opt.target_ber * bits < 100.0)
            out.warnings.push_back("ber_sweep: " + std::to_string(opt.trials) +
                                   " trials resolve BER down to about " + std::to_string(1.0 / bits) +
                                   ", too coarse for a target of " + std::to_string(opt.target_ber));

        for (int n : n_antennas_list)
        {
            if (n < 1 || n > source.branches.size())
                throw std::invalid_argument("ber_sweep: antenna count " + std::to_string(n) + " out of range");
            Eigen::VectorXcd h(n);
            for (int a = 0; a < n; ++a)
                h[a] = source.branches[order[std::size_t(a)]];

            BerCurve c;
            c.n_antennas = n;
            c.snr_axis_db = snr_axis_db;
            c.ber = Eigen::VectorXd::Zero(snr_axis_db.size());
            c.bit_errors = Eigen::VectorXd::Zero(snr_axis_db.size());
            c.bits_per_point = bits;

            Eigen::VectorXcd y(n), g(n);
            for (Eigen::Index p = 0; p < snr_axis_db.size(); ++p)
            {
                std::mt19937_64 rng(detail::mix_seed(opt.seed, std::uint64_t(n), std::uint64_t(p)));
                std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
                const double amp = std::sqrt(2.0 * db_to_linear(snr_axis_db[p]));
                g = h * amp;
                long errors = 0;
                for (long t = 0; t < opt.trials; ++t)
                {
                    const std::uint64_t r = rng();
                    const int b0 = int(r & 1u), b1 = int((r >> 1) & 1u);
                    const cdouble s((1 - 2 * b0) * M_SQRT1_2, (1 - 2 * b1) * M_SQRT1_2);
                    for (int a = 0; a < n; ++a)
                        y[a] = g[a] * s + cdouble(gauss(rng), gauss(rng));
                    const cdouble z = mrc_combine(g, y);
                    errors += int(z.real() < 0.0) != b0;
                    errors += int(z.imag() < 0.0) != b1;
                }
                c.bit_errors[p] = double(errors);
                c.ber[p] = double(errors) / bits;
                if (errors == 0)
                    break;
            }
            out.curves.push_back(std::move(c));
        }
        return out;
    }

    double ber_crossing_db(const BerCurve &curve, double target_ber)
    {
        if (!(target_ber > 0.0 && target_ber < 1.0))
            throw std::invalid_argument("ber_crossing_db: target must lie in (0, 1)");
        const auto &x = curve.snr_axis_db;
        const auto &y = curve.ber;
        for (Eigen::Index i = 0; i + 1 < x.size(); ++i)
        {
            if (y[i] >= target_ber && y[i + 1] < target_ber)
            {
                const double l0 = std::log10(y[i]);
                // a zero count sits one error below the resolution of the point
                const double y1 = y[i + 1] > 0.0 ? y[i + 1] : 0.5 / curve.bits_per_point;
                const double l1 = std::log10(y1);
                const double lt = std::log10(target_ber);
                return x[i] + (lt - l0) / (l1 - l0) * (x[i + 1] - x[i]);
            }
        }
        return std::numeric_limits<double>::quiet_NaN();
    }

    PositionErrorStats position_error_stats(const Eigen::Ref<const Eigen::Matrix3Xd> &truth,
                                            const Eigen::Ref<const Eigen::Matrix3Xd> &predicted, double bin_width_m)
    {
        if (truth.cols() != predicted.cols() || truth.cols() == 0)
            throw std::invalid_argument("position_error_stats: need matching, non-empty position sets");
        if (!(bin_width_m > 0.0))
            throw std::invalid_argument("position_error_stats: bin width must be positive");
        if (!truth.allFinite() || !predicted.allFinite())
            throw std::invalid_argument("position_error_stats: non-finite position");
        PositionErrorStats s;
        s.bin_width_m = bin_width_m;
        s.errors_m = (truth - predicted).colwise().norm().transpose();
        s.mean_distance_error_m = s.errors_m.mean();
        std::sort(s.errors_m.data(), s.errors_m.data() + s.errors_m.size());
        const auto n = s.errors_m.size();
        s.cdf = Eigen::VectorXd::LinSpaced(n, 1.0, double(n)) / double(n);
        const auto n_bins = Eigen::Index(std::floor(s.errors_m[n - 1] / bin_width_m)) + 1;
        s.histogram = Eigen::VectorXi::Zero(n_bins);
        for (Eigen::Index i = 0; i < n; ++i)
            ++s.histogram[std::min(n_bins - 1, Eigen::Index(std::floor(s.errors_m[i] / bin_width_m)))];
        return s;
    }
} // namespace sounder
