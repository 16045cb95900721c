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

#include "sounder/rf_chain.hpp"
#include "sounder/detail_fft.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sounder
{
    namespace
    {
        double kaiser_beta(double atten_db)
        {
            if (atten_db > 50.0)
                return 0.1102 * (atten_db - 8.7);
            if (atten_db >= 21.0)
                return 0.5842 * std::pow(atten_db - 21.0, 0.4) + 0.07886 * (atten_db - 21.0);
            return 0.0;
        }

        double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x); }

        Eigen::VectorXd windowed_sinc(int n_taps, double cutoff_hz, double center_hz, double fs, double beta)
        {
            Eigen::VectorXd h(n_taps);
            const double mid = 0.5 * (n_taps - 1);
            const double i0_beta = std::cyl_bessel_i(0.0, beta);
            for (int n = 0; n < n_taps; ++n)
            {
                const double m = n - mid;
                const double r = m / mid;
                const double w = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
                double v = 2.0 * cutoff_hz / fs * sinc(2.0 * cutoff_hz / fs * m);
                if (center_hz > 0.0)
                    v *= 2.0 * std::cos(2.0 * kPi * center_hz / fs * m);
                h[n] = w * v;
            }
            return h;
        }

        // Zero-phase amplitude on an n_fft grid, bins 0 .. n_fft/2
        Eigen::VectorXd dense_amplitude(const Eigen::VectorXd &taps, Eigen::Index n_fft)
        {
            Eigen::VectorXcd padded = Eigen::VectorXcd::Zero(n_fft);
            padded.head(taps.size()) = taps.cast<cdouble>();
            const Eigen::VectorXcd spec = detail::fft(padded);
            const double gd = 0.5 * double(taps.size() - 1);
            Eigen::VectorXd amp(n_fft / 2 + 1);
            for (Eigen::Index k = 0; k < amp.size(); ++k)
                amp[k] = (spec[k] * std::polar(1.0, 2.0 * kPi * double(k) * gd / double(n_fft))).real();
            return amp;
        }

        struct Measured
        {
            double stop_atten_db;
            double ripple_db;
        };

        Measured measure(const Eigen::VectorXd &taps, const FilterSpec &spec, double fs)
        {
            Eigen::Index n_fft = 16384;
            while (n_fft < 16 * taps.size())
                n_fft *= 2;
            const Eigen::VectorXd amp = dense_amplitude(taps, n_fft);
            const double df = fs / double(n_fft);
            const double stop_lo = spec.pass_lo_hz - spec.transition_hz;
            const double stop_hi = spec.pass_hi_hz + spec.transition_hz;
            double worst_stop = 0.0, ripple = 0.0;
            for (Eigen::Index k = 0; k < amp.size(); ++k)
            {
                const double f = double(k) * df;
                if ((spec.pass_lo_hz > 0.0 && f <= stop_lo) || f >= stop_hi)
                    worst_stop = std::max(worst_stop, std::abs(amp[k]));
                else if (f >= std::max(0.0, spec.pass_lo_hz) && f <= spec.pass_hi_hz)
                    ripple = std::max(ripple, std::abs(20.0 * std::log10(std::abs(amp[k]))));
            }
            const double atten = worst_stop > 0.0 ? -20.0 * std::log10(worst_stop) : std::numeric_limits<double>::infinity();
            return {atten, ripple};
        }
    } // namespace

    Eigen::VectorXd detail::zero_phase_grid(const Eigen::VectorXd &taps, Eigen::Index n_fft)
    {
        return dense_amplitude(taps, n_fft);
    }

    FilterTaps design_subband_filter(const FilterSpec &spec, double fs)
    {
        if (!(fs > 0.0))
            throw std::invalid_argument("design_subband_filter: sample rate must be positive");
        if (!(spec.transition_hz > 0.0))
            throw std::invalid_argument("design_subband_filter: transition width must be positive");
        if (!(spec.stop_atten_db >= 20.0))
            throw std::invalid_argument("design_subband_filter: stopband attenuation must be at least 20 dB");
        if (!(spec.pass_hi_hz > spec.pass_lo_hz))
            throw std::invalid_argument("design_subband_filter: empty passband");

        FilterTaps out;
        out.sample_rate_hz = fs;
        out.pass_lo_hz = spec.pass_lo_hz;
        out.pass_hi_hz = spec.pass_hi_hz;

        if (spec.pass_lo_hz <= 0.0 && spec.pass_hi_hz >= 0.5 * fs)
        {
            out.taps = Eigen::VectorXd::Ones(1);
            out.achieved_stop_atten_db = std::numeric_limits<double>::infinity();
            return out;
        }
        if (spec.pass_hi_hz + spec.transition_hz > 0.5 * fs)
            throw std::invalid_argument("design_subband_filter: upper stopband edge beyond Nyquist");
        if (spec.pass_lo_hz > 0.0 && spec.pass_lo_hz - spec.transition_hz < 0.0)
            throw std::invalid_argument("design_subband_filter: lower stopband edge below DC");

        const bool lowpass = spec.pass_lo_hz <= 0.0;
        const double center = lowpass ? 0.0 : 0.5 * (spec.pass_lo_hz + spec.pass_hi_hz);
        const double half_width = lowpass ? spec.pass_hi_hz : 0.5 * (spec.pass_hi_hz - spec.pass_lo_hz);
        const double cutoff = half_width + 0.5 * spec.transition_hz;
        const double beta = kaiser_beta(spec.stop_atten_db);

        const double dw = 2.0 * kPi * spec.transition_hz / fs;
        int n_taps = static_cast<int>(std::ceil((spec.stop_atten_db - 7.95) / (2.285 * dw))) + 1;
        n_taps |= 1; // odd length, integer group delay

        Measured m{};
        for (;;)
        {
            if (n_taps > spec.max_taps)
            {
                const int n_max = std::max(1, spec.max_taps % 2 ? spec.max_taps : spec.max_taps - 1);
                Eigen::VectorXd h = windowed_sinc(n_max, cutoff, center, fs, beta);
                const Measured best = measure(h, spec, fs);
                throw std::invalid_argument("design_subband_filter: " + std::to_string(spec.stop_atten_db) +
                                            " dB not reachable within " + std::to_string(spec.max_taps) +
                                            " taps, achieved " + std::to_string(best.stop_atten_db) + " dB");
            }
            out.taps = windowed_sinc(n_taps, cutoff, center, fs, beta);
            const double gain = zero_phase_response(out, Eigen::VectorXd::Constant(1, center))[0];
            out.taps /= gain;
            m = measure(out.taps, spec, fs);
            if (m.stop_atten_db >= spec.stop_atten_db)
                break;
            n_taps += std::max(2, 2 * (n_taps / 40));
        }
        out.group_delay_samples = 0.5 * double(out.taps.size() - 1);
        out.achieved_stop_atten_db = m.stop_atten_db;
        out.passband_ripple_db = m.ripple_db;
        return out;
    }

    Eigen::VectorXd zero_phase_response(const FilterTaps &filter, const Eigen::Ref<const Eigen::VectorXd> &freqs_hz)
    {
        const Eigen::Index n = filter.taps.size();
        const Eigen::Index mid = (n - 1) / 2;
        Eigen::VectorXd out(freqs_hz.size());
        for (Eigen::Index i = 0; i < freqs_hz.size(); ++i)
        {
            const double w = 2.0 * kPi * freqs_hz[i] / (filter.sample_rate_hz > 0.0 ? filter.sample_rate_hz : 1.0);
            double acc = filter.taps[mid];
            for (Eigen::Index m = 1; m <= mid; ++m)
                acc += 2.0 * filter.taps[mid + m] * std::cos(w * double(m));
            out[i] = acc;
        }
        return out;
    }

    Eigen::VectorXd power_response(const FilterTaps &filter, Eigen::Index n_points)
    {
        if (n_points < 2)
            throw std::invalid_argument("power_response: need at least 2 points");
        const Eigen::VectorXd amp = dense_amplitude(filter.taps, 2 * n_points);
        return amp.head(n_points).array().square().matrix();
    }

    Eigen::MatrixXd isolation_from_responses(const Eigen::Ref<const Eigen::MatrixXd> &power,
                                             const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> &drive_band)
    {
        const Eigen::Index nb = power.rows();
        if (nb < 2)
            throw std::invalid_argument("subband_isolation: need at least 2 subbands");
        if (drive_band.rows() != nb || drive_band.cols() != power.cols())
            throw std::invalid_argument("subband_isolation: drive mask shape mismatch");

        Eigen::MatrixXd iso(nb, nb);
        for (Eigen::Index i = 0; i < nb; ++i)
        {
            const Eigen::ArrayXd mask = drive_band.row(i).cast<double>().transpose();
            const double own = (power.row(i).transpose().array() * mask).sum();
            if (!(own > 0.0))
                throw std::invalid_argument("subband_isolation: subband " + std::to_string(i) + " passes no power");
            for (Eigen::Index j = 0; j < nb; ++j)
            {
                const double leak = (power.row(j).transpose().array() * mask).sum();
                iso(i, j) = leak > 0.0 ? std::max(kIsolationFloorDb, 10.0 * std::log10(leak / own)) : kIsolationFloorDb;
            }
            iso(i, i) = 0.0;
        }
        return iso;
    }

    Eigen::MatrixXd subband_isolation(const std::vector<FilterTaps> &filters, double fs)
    {
        const Eigen::Index nb = Eigen::Index(filters.size());
        const Eigen::Index n_points = 1 << 17;
        const double df = 0.5 * fs / double(n_points);
        Eigen::MatrixXd power(nb, n_points);
        Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> band(nb, n_points);
        for (Eigen::Index i = 0; i < nb; ++i)
        {
            const auto &f = filters[std::size_t(i)];
            if (std::abs(f.sample_rate_hz - fs) > 1e-6 * fs)
                throw std::invalid_argument("subband_isolation: filter sample rate mismatch");
            power.row(i) = power_response(f, n_points).transpose();
            for (Eigen::Index k = 0; k < n_points; ++k)
            {
                const double fr = double(k) * df;
                band(i, k) = fr >= f.pass_lo_hz && fr <= f.pass_hi_hz;
            }
        }
        return isolation_from_responses(power, band);
    }

    double wilkinson_loss_db(int n_ant)
    {
        if (n_ant < 1 || (n_ant & (n_ant - 1)) != 0)
            throw std::invalid_argument("wilkinson_loss_db: antenna count must be a power of two, got " +
                                        std::to_string(n_ant));
        return 3.0 * std::log2(double(n_ant));
    }

    ComplexWaveform mix(const ComplexWaveform &w, double shift_hz)
    {
        w.validate();
        const double new_center = w.center_offset_hz + shift_hz;
        if (std::abs(new_center) + 0.5 * w.occupied_bw_hz > 0.5 * w.sample_rate_hz * (1.0 + 1e-12))
            throw std::invalid_argument("mix: shifted band exceeds Nyquist (" + std::to_string(new_center) + " Hz)");

        ComplexWaveform out = w;
        out.center_offset_hz = new_center;
        const double cycles_per_sample = shift_hz / w.sample_rate_hz;
        for (Eigen::Index n = 0; n < out.samples.size(); ++n)
        {
            const double turns = cycles_per_sample * double(n);
            out.samples[n] *= std::polar(1.0, 2.0 * kPi * (turns - std::floor(turns)));
        }
        return out;
    }

    UniformQuantizer::UniformQuantizer(double vpp, double bits) : clip_range_vpp(vpp), enob(bits)
    {
        if (!(bits > 0.0))
            throw std::invalid_argument("UniformQuantizer: enob must be positive");
        if (!(vpp > 0.0))
            throw std::invalid_argument("UniformQuantizer: clip range must be positive");
        levels_ = std::max<std::int64_t>(2, 2 * std::llround(0.5 * std::pow(2.0, bits)));
        step_ = vpp / double(levels_);
    }

    ComplexWaveform clip_and_quantize(const ComplexWaveform &w, double clip_range_vpp, double enob)
    {
        w.validate();
        if (w.samples.imag().cwiseAbs().maxCoeff() != 0.0)
            throw std::invalid_argument("clip_and_quantize: composite must be real-valued");
        const UniformQuantizer q(clip_range_vpp, enob);
        ComplexWaveform out = w;
        out.samples.real() = q.apply(w.samples.real().array()).matrix();
        return out;
    }
} // namespace sounder
