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
#include "sounder/detail_seed.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace sounder
{
    FilterSpec CombinerConfig::chain_filter_spec(const ChainConfig &chain) const
    {
        FilterSpec spec;
        spec.pass_lo_hz = chain.if_center_hz - passband_half_width_hz;
        spec.pass_hi_hz = chain.if_center_hz + passband_half_width_hz;
        spec.transition_hz = transition_hz;
        spec.stop_atten_db = stop_atten_db;
        spec.max_taps = max_filter_taps;
        return spec;
    }

    void CombinerConfig::validate() const
    {
        if (chains.empty())
            throw std::invalid_argument("CombinerConfig: no chains");
        if (n_adc_channels < 1)
            throw std::invalid_argument("CombinerConfig: need at least one ADC channel");
        if (!(adc_sample_rate_hz > 0.0))
            throw std::invalid_argument("CombinerConfig: ADC sample rate must be positive");
        if (quantize && (!(clip_range_vpp > 0.0) || !(enob > 0.0)))
            throw std::invalid_argument("CombinerConfig: clip range and ENoB must be positive");
        if (!(passband_half_width_hz > 0.0) || !(transition_hz > 0.0))
            throw std::invalid_argument("CombinerConfig: filter widths must be positive");
        for (const auto &c : chains)
            if (!std::isfinite(c.lo_phase_rad) || !std::isfinite(c.gain_db))
                throw std::invalid_argument("CombinerConfig: non-finite gain or LO phase on antenna " +
                                            std::to_string(c.antenna_index));

        const double nyquist = 0.5 * adc_sample_rate_hz;
        std::set<int> antennas;
        int n_boards = 0;
        for (const auto &c : chains)
        {
            if (c.adc_channel < 0 || c.adc_channel >= n_adc_channels)
                throw std::invalid_argument("CombinerConfig: chain " + std::to_string(c.antenna_index) +
                                            " assigned to missing ADC channel " + std::to_string(c.adc_channel));
            if (c.if_center_hz - passband_half_width_hz - transition_hz <= 0.0 ||
                c.if_center_hz + passband_half_width_hz + transition_hz >= nyquist)
                throw std::invalid_argument("CombinerConfig: chain " + std::to_string(c.antenna_index) +
                                            " passband leaves the ADC Nyquist zone");
            if (!antennas.insert(c.antenna_index).second)
                throw std::invalid_argument("CombinerConfig: duplicate antenna index " + std::to_string(c.antenna_index));
            n_boards = std::max(n_boards, c.board_index + 1);
        }
        if (*antennas.begin() != 0 || *antennas.rbegin() != n_antennas() - 1)
            throw std::invalid_argument("CombinerConfig: antenna indices must be 0 .. M-1");
        if (antennas_per_board * n_boards < n_antennas())
            throw std::invalid_argument("CombinerConfig: boards cannot host all antennas");

        // Distinct chains on one ADC must not overlap: each stopband edge may touch, not cross, a neighbour's passband.
        const double min_spacing = 2.0 * passband_half_width_hz + transition_hz;
        for (std::size_t i = 0; i < chains.size(); ++i)
            for (std::size_t j = i + 1; j < chains.size(); ++j)
                if (chains[i].adc_channel == chains[j].adc_channel &&
                    std::abs(chains[i].if_center_hz - chains[j].if_center_hz) < min_spacing * (1.0 - 1e-9))
                    throw std::invalid_argument("CombinerConfig: overlapping passbands for antennas " +
                                                std::to_string(chains[i].antenna_index) + " and " +
                                                std::to_string(chains[j].antenna_index));
    }

    CombinerConfig default_combiner(int n_antennas, int n_adc_channels, double subband_spacing_hz, double first_if_hz,
                                    std::uint64_t lo_phase_seed)
    {
        if (n_antennas < 1 || n_adc_channels < 1)
            throw std::invalid_argument("default_combiner: counts must be positive");
        CombinerConfig cfg;
        cfg.n_adc_channels = n_adc_channels;
        cfg.transition_hz = subband_spacing_hz - 2.0 * cfg.passband_half_width_hz;
        const int per_adc = (n_antennas + n_adc_channels - 1) / n_adc_channels;
        for (int a = 0; a < n_antennas; ++a)
        {
            ChainConfig c;
            c.antenna_index = a;
            c.adc_channel = a / per_adc;
            const int slot = a % per_adc;
            c.if_center_hz = first_if_hz + slot * subband_spacing_hz;
            c.subband_index = slot % cfg.n_subbands;
            c.board_index = a / cfg.antennas_per_board;
            c.lo_phase_rad = 2.0 * kPi * double(detail::mix_seed(lo_phase_seed, std::uint64_t(a)) >> 11) * 0x1.0p-53;
            cfg.chains.push_back(c);
        }
        return cfg;
    }

    FrontEnd::FrontEnd(CombinerConfig cfg, double baseband_rate_hz, Eigen::Index baseband_length)
        : cfg_(std::move(cfg)), baseband_rate_hz_(baseband_rate_hz), baseband_length_(baseband_length)
    {
        cfg_.validate();
        if (!(baseband_rate_hz > 0.0) || baseband_length < 2)
            throw std::invalid_argument("FrontEnd: invalid baseband rate or length");
        const double r = cfg_.adc_sample_rate_hz / baseband_rate_hz;
        ratio_ = static_cast<int>(std::lround(r));
        if (ratio_ < 2 || std::abs(r - ratio_) > 1e-9 * r)
            throw std::invalid_argument("FrontEnd: ADC rate must be an integer multiple (>= 2) of the baseband rate");

        const Eigen::Index m = adc_length();
        const double df = cfg_.adc_sample_rate_hz / double(m);
        const Eigen::Index l = baseband_length_;

        by_adc_.assign(std::size_t(cfg_.n_adc_channels), {});
        chain_of_antenna_.assign(cfg_.chains.size(), 0);
        for (std::size_t i = 0; i < cfg_.chains.size(); ++i)
        {
            const auto &chain = cfg_.chains[i];
            const long bin = std::lround(chain.if_center_hz / df);
            if_bin_.push_back(bin);
            if (bin - l / 2 <= 0 || bin + l / 2 >= m / 2)
                throw std::invalid_argument("FrontEnd: chain window leaves the positive Nyquist band");

            ChainConfig realized = chain;
            realized.if_center_hz = double(bin) * df;
            filters_.push_back(design_subband_filter(cfg_.chain_filter_spec(realized), cfg_.adc_sample_rate_hz));

            Eigen::VectorXd resp(l);
            if (filters_.back().taps.size() <= m)
            {
                const Eigen::VectorXd grid = detail::zero_phase_grid(filters_.back().taps, m);
                for (Eigen::Index b = 0; b < l; ++b)
                    resp[b] = grid[bin + detail::signed_bin(b, l)];
            }
            else
            {
                Eigen::VectorXd freqs(l);
                for (Eigen::Index b = 0; b < l; ++b)
                    freqs[b] = double(bin + detail::signed_bin(b, l)) * df;
                resp = zero_phase_response(filters_.back(), freqs);
            }
            responses_.push_back(std::move(resp));
            by_adc_[std::size_t(chain.adc_channel)].push_back(i);
            chain_of_antenna_[std::size_t(chain.antenna_index)] = i;
        }
    }

    double FrontEnd::realized_if_hz(std::size_t chain) const
    {
        return double(if_bin_.at(chain)) * cfg_.adc_sample_rate_hz / double(adc_length());
    }

    std::vector<ComplexWaveform> FrontEnd::combine(const std::vector<ComplexWaveform> &per_antenna) const
    {
        if (per_antenna.size() != cfg_.chains.size())
            throw std::invalid_argument("combine_chains: " + std::to_string(per_antenna.size()) + " waveforms for " +
                                        std::to_string(cfg_.chains.size()) + " chains");
        const Eigen::Index l = baseband_length_;
        const Eigen::Index m = adc_length();
        const double half_sqrt2 = std::sqrt(0.5);

        std::vector<ComplexWaveform> out;
        for (int c = 0; c < cfg_.n_adc_channels; ++c)
        {
            Eigen::VectorXcd spectrum = Eigen::VectorXcd::Zero(m);
            for (const std::size_t i : by_adc_[std::size_t(c)])
            {
                const auto &chain = cfg_.chains[i];
                const auto &w = per_antenna[std::size_t(chain.antenna_index)];
                if (w.samples.size() != l || std::abs(w.sample_rate_hz - baseband_rate_hz_) > 1e-9 * baseband_rate_hz_)
                    throw std::invalid_argument("combine_chains: antenna " + std::to_string(chain.antenna_index) +
                                                " waveform does not match the front-end rate/length");
                const cdouble gain = std::polar(std::pow(10.0, (chain.gain_db + cfg_.common_gain_db) / 20.0) * ratio_,
                                                chain.lo_phase_rad);
                const Eigen::VectorXcd s = detail::fft(w.samples);
                const Eigen::VectorXd &h = responses_[i];
                for (Eigen::Index b = 0; b < l; ++b)
                {
                    const long pos = if_bin_[i] + detail::signed_bin(b, l);
                    const cdouble a = half_sqrt2 * gain * h[b] * s[b];
                    spectrum[pos] += a;
                    spectrum[m - pos] += std::conj(a);
                }
            }
            ComplexWaveform y;
            y.sample_rate_hz = cfg_.adc_sample_rate_hz;
            y.occupied_bw_hz = cfg_.adc_sample_rate_hz;
            y.samples = detail::ifft(spectrum);
            y.samples.imag().setZero();
            out.push_back(std::move(y));
        }
        return out;
    }

    std::vector<ComplexWaveform> FrontEnd::digitize(const std::vector<ComplexWaveform> &adc_streams) const
    {
        if (!cfg_.quantize)
            return adc_streams;
        std::vector<ComplexWaveform> out;
        out.reserve(adc_streams.size());
        for (const auto &s : adc_streams)
            out.push_back(clip_and_quantize(s, cfg_.clip_range_vpp, cfg_.enob));
        return out;
    }

    std::vector<ComplexWaveform> FrontEnd::split(const std::vector<ComplexWaveform> &adc_streams) const
    {
        if (adc_streams.size() != std::size_t(cfg_.n_adc_channels))
            throw std::invalid_argument("split_subbands: expected " + std::to_string(cfg_.n_adc_channels) +
                                        " ADC streams, got " + std::to_string(adc_streams.size()));
        const Eigen::Index l = baseband_length_;
        const Eigen::Index m = adc_length();
        const double sqrt2 = std::sqrt(2.0);

        std::vector<ComplexWaveform> out(cfg_.chains.size());
        for (int c = 0; c < cfg_.n_adc_channels; ++c)
        {
            const auto &stream = adc_streams[std::size_t(c)];
            if (std::abs(stream.sample_rate_hz - cfg_.adc_sample_rate_hz) > 1e-9 * cfg_.adc_sample_rate_hz)
                throw std::invalid_argument("split_subbands: ADC stream sample rate mismatch");
            if (stream.samples.size() != m)
                throw std::invalid_argument("split_subbands: ADC stream length mismatch");
            Eigen::VectorXcd real_stream = stream.samples.real().cast<cdouble>();
            const Eigen::VectorXcd spectrum = detail::fft(real_stream);
            for (const std::size_t i : by_adc_[std::size_t(c)])
            {
                const Eigen::VectorXd &h = responses_[i];
                const cdouble derotate = std::polar(sqrt2 / ratio_, -cfg_.chains[i].lo_phase_rad);
                Eigen::VectorXcd base(l);
                for (Eigen::Index b = 0; b < l; ++b)
                    base[b] = spectrum[if_bin_[i] + detail::signed_bin(b, l)] * (derotate * h[b]);
                ComplexWaveform w;
                w.sample_rate_hz = baseband_rate_hz_;
                w.occupied_bw_hz = 2.0 * cfg_.passband_half_width_hz;
                w.samples = detail::ifft(base);
                out[std::size_t(cfg_.chains[i].antenna_index)] = std::move(w);
            }
        }
        return out;
    }

    std::vector<ComplexWaveform> combine_chains(const std::vector<ComplexWaveform> &per_antenna,
                                                const CombinerConfig &cfg)
    {
        if (per_antenna.empty())
            throw std::invalid_argument("combine_chains: no input waveforms");
        const FrontEnd fe(cfg, per_antenna.front().sample_rate_hz, per_antenna.front().samples.size());
        return fe.combine(per_antenna);
    }

    std::vector<SqnrPoint> sqnr_sweep(const CombinerConfig &cfg, const OfdmConfig &ofdm,
                                      const std::vector<double> &powers_dbm, const std::vector<double> &enobs,
                                      const SqnrOptions &opt)
    {
        if (opt.trials < 1)
            throw std::invalid_argument("sqnr_sweep: trial count must be positive");
        if (powers_dbm.empty() || enobs.empty())
            throw std::invalid_argument("sqnr_sweep: empty power or ENoB list");
        for (const double e : enobs)
            if (!(e > 0.0))
                throw std::invalid_argument("sqnr_sweep: ENoB must be positive");

        const FrontEnd fe(cfg, ofdm.sample_rate_hz(), ofdm.frame_length());
        const int n_ant = cfg.n_antennas();
        const std::size_t n_pts = powers_dbm.size() * enobs.size();

        // accumulated signal and error power per (power, enob) point and antenna
        std::vector<Eigen::VectorXd> sig(n_pts, Eigen::VectorXd::Zero(n_ant));
        std::vector<Eigen::VectorXd> err(n_pts, Eigen::VectorXd::Zero(n_ant));

        for (int t = 0; t < opt.trials; ++t)
        {
            std::vector<ComplexWaveform> tx;
            for (int a = 0; a < n_ant; ++a)
            {
                Frame f = build_frame(ofdm, {}, detail::mix_seed(opt.seed, std::uint64_t(t), std::uint64_t(a)));
                f.waveform.samples /= std::sqrt(f.waveform.mean_power()); // 1 V rms
                tx.push_back(std::move(f.waveform));
            }
            const auto unit = fe.combine(tx);
            const auto unit_ref = fe.split(unit);

            for (std::size_t ip = 0; ip < powers_dbm.size(); ++ip)
            {
                const double vrms = dbm_to_vrms(powers_dbm[ip]);
                for (std::size_t ie = 0; ie < enobs.size(); ++ie)
                {
                    const UniformQuantizer q(cfg.clip_range_vpp, enobs[ie]);
                    std::vector<ComplexWaveform> error_streams = unit;
                    for (auto &s : error_streams)
                    {
                        const Eigen::ArrayXd y = s.samples.real().array() * vrms;
                        s.samples.real() = (q.apply(y) - y).matrix();
                    }
                    const auto e = fe.split(error_streams);
                    const std::size_t k = ip * enobs.size() + ie;
                    for (int a = 0; a < n_ant; ++a)
                    {
                        sig[k][a] += unit_ref[std::size_t(a)].samples.squaredNorm() * vrms * vrms;
                        err[k][a] += e[std::size_t(a)].samples.squaredNorm();
                    }
                }
            }
        }

        std::vector<SqnrPoint> out;
        for (std::size_t ip = 0; ip < powers_dbm.size(); ++ip)
            for (std::size_t ie = 0; ie < enobs.size(); ++ie)
            {
                const std::size_t k = ip * enobs.size() + ie;
                SqnrPoint p;
                p.power_dbm = powers_dbm[ip];
                p.enob = enobs[ie];
                p.per_antenna_db = (sig[k].array() / err[k].array()).log10() * 10.0;
                p.sqnr_db = p.per_antenna_db.mean();
                out.push_back(std::move(p));
            }
        return out;
    }

    Eigen::MatrixXd sqnr_per_antenna(const CombinerConfig &cfg, const OfdmConfig &ofdm, double input_power_dbm,
                                     const std::vector<double> &enobs, const SqnrOptions &opt)
    {
        const auto pts = sqnr_sweep(cfg, ofdm, {input_power_dbm}, enobs, opt);
        Eigen::MatrixXd table(Eigen::Index(enobs.size()), cfg.n_antennas());
        for (std::size_t i = 0; i < pts.size(); ++i)
            table.row(Eigen::Index(i)) = pts[i].per_antenna_db.transpose();
        return table;
    }
} // namespace sounder
