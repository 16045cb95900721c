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

#include "sounder/experiments.hpp"
#include "sounder/detail_seed.hpp"
#include "sounder/scenario_io.hpp"

#include <json.hpp>

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <stdexcept>

namespace sounder
{
    namespace
    {
        // Scale to the requested per-antenna input power, run the ADC front end and undo the scaling
        std::vector<ComplexWaveform> through_front_end(std::vector<ComplexWaveform> rx, const CombinerConfig &cfg,
                                                       const OfdmConfig &ofdm, double input_power_dbm)
        {
            double mean_power = 0.0;
            for (const auto &w : rx)
                mean_power += w.mean_power();
            mean_power /= double(rx.size());
            if (!(mean_power > 0.0))
                throw std::invalid_argument("front end: received signal has zero power");
            const double gain = dbm_to_vrms(input_power_dbm) / std::sqrt(mean_power);
            for (auto &w : rx)
                w.samples *= gain;
            const FrontEnd fe(cfg, ofdm.sample_rate_hz(), ofdm.frame_length());
            auto out = fe.split(fe.digitize(fe.combine(rx)));
            for (auto &w : out)
            {
                w.samples /= gain;
                w.occupied_bw_hz = ofdm.occupied_bw_hz();
            }
            return out;
        }

        std::vector<SymbolGrid> demodulate_all(const std::vector<ComplexWaveform> &rx, const OfdmConfig &ofdm)
        {
            std::vector<SymbolGrid> grids;
            grids.reserve(rx.size());
            for (const auto &w : rx)
                grids.push_back(ofdm_demodulate(w, ofdm));
            return grids;
        }

        CsiMatrix first_antennas(CsiMatrix csi, int n)
        {
            if (n < 1 || n > csi.h.rows())
                throw std::invalid_argument("antenna count " + std::to_string(n) + " exceeds the array");
            csi.h = csi.h.topRows(n).eval();
            return csi;
        }
    } // namespace

    ChannelEstimate measure_snapshot(const Frame &frame, const OfdmConfig &ofdm, const CsiMatrix &csi,
                                     const SnapshotOptions &opt, double timestamp_s)
    {
        auto rx = opt.noise_power >= 0.0
                      ? apply_channel_with_noise_power(frame.waveform, csi, ofdm, opt.noise_power, opt.seed)
                      : apply_channel(frame.waveform, csi, ofdm, opt.snr_db, opt.seed);
        if (opt.front_end)
            rx = through_front_end(std::move(rx), *opt.front_end, ofdm, opt.input_power_dbm);
        return estimate_csi(demodulate_all(rx, ofdm), frame.grid, csi.carrier_hz, timestamp_s);
    }

    LoopbackResult run_loopback(const Scenario &sc, const OfdmConfig &ofdm, const LoopbackOptions &opt)
    {
        LoopbackResult r;
        Scenario channel = sc;
        channel.max_reflection_order = opt.max_reflection_order;
        r.truth = first_antennas(generate_csi(channel, ofdm, opt.tx_position), opt.n_antennas);

        const Frame frame = build_frame(ofdm, encode_position(opt.tx_position), detail::mix_seed(opt.seed, 1));
        CombinerConfig cfg = default_combiner(opt.n_antennas);
        cfg.quantize = opt.quantize;
        cfg.enob = opt.enob;

        auto rx = apply_channel(frame.waveform, r.truth, ofdm, opt.snr_db, detail::mix_seed(opt.seed, 2));
        rx = through_front_end(std::move(rx), cfg, ofdm, opt.input_power_dbm);
        const auto grids = demodulate_all(rx, ofdm);
        r.estimate = estimate_csi(grids, frame.grid, r.truth.carrier_hz, 0.0);
        r.evm_snr_db = r.estimate.snr_per_antenna_db;

        const Bits sent = grid_payload_bits(frame.grid);
        r.payload_bits = sent.size();
        for (std::size_t a = 0; a < grids.size(); ++a)
        {
            const Bits got = decode_payload(grids[a], r.estimate.csi.h.row(Eigen::Index(a)).transpose());
            for (std::size_t i = 0; i < sent.size(); ++i)
                r.bit_errors += got[i] != sent[i];
            if (a == 0)
                r.decoded_position = decode_position(Bits(got.begin(), got.begin() + kPositionBits));
        }
        r.csi_nmse = (r.estimate.csi.h - r.truth.h).squaredNorm() / r.truth.h.squaredNorm();
        return r;
    }

    StabilityReport run_stability_suite(const Scenario &sc, const OfdmConfig &ofdm, const StabilityOptions &opt)
    {
        if (!(opt.duration_s > 0.0) || !(opt.interval_s > 0.0) || opt.moving_points < 2)
            throw std::invalid_argument("stability suite: invalid record length");
        if (sc.paths.empty())
            throw std::invalid_argument("stability suite: scenario has no path for the moving record");
        StabilityReport rep;
        rep.wavelength_m = kSpeedOfLight / ofdm.carrier_hz;
        const Frame frame = build_frame(ofdm, {}, detail::mix_seed(opt.seed, 11));

        SnapshotOptions snap;
        snap.snr_db = opt.snr_db;

        const CsiMatrix fixed = generate_csi(sc, ofdm, opt.static_position);
        std::vector<ChannelEstimate> still;
        const auto n_static = Eigen::Index(std::floor(opt.duration_s / opt.interval_s + 1e-9)) + 1;
        for (Eigen::Index i = 0; i < n_static; ++i)
        {
            snap.seed = detail::mix_seed(opt.seed, 12, std::uint64_t(i));
            still.push_back(measure_snapshot(frame, ofdm, fixed, snap, double(i) * opt.interval_s));
        }
        rep.static_series = stability_series(still, 0);
        rep.static_min = rep.static_series.delta_h.tail(n_static - 1).minCoeff();

        std::vector<ChannelEstimate> moving;
        const auto &path = sc.paths.front();
        const double step = 0.5 * rep.wavelength_m;
        const Eigen::Vector2d start = path.point_at(0.0);
        rep.moving_displacement_m.resize(opt.moving_points);
        for (int i = 0; i < opt.moving_points; ++i)
        {
            const Eigen::Vector2d xy = path.point_at(std::fmod(i * step, path.length()));
            const Vec3 p(xy.x(), xy.y(), opt.static_position.z());
            rep.moving_displacement_m[i] = (xy - start).norm();
            snap.seed = detail::mix_seed(opt.seed, 13, std::uint64_t(i));
            moving.push_back(measure_snapshot(frame, ofdm, generate_csi(sc, ofdm, p), snap, i * sc.sample_interval_s));
        }
        rep.moving_series = stability_series(moving, 0);
        rep.moving_max_beyond = 0.0;
        bool any_beyond = false;
        for (int i = 0; i < opt.moving_points; ++i)
            if (rep.moving_displacement_m[i] >= opt.moving_threshold_wavelengths * rep.wavelength_m)
            {
                rep.moving_max_beyond = std::max(rep.moving_max_beyond, rep.moving_series.delta_h[i]);
                any_beyond = true;
            }

        const Eigen::MatrixXcd &a = still.front().csi.h;
        const Eigen::MatrixXcd &b = moving.back().csi.h;
        rep.self_exact = correlation_coefficient(a, a) == 1.0;
        rep.symmetric_exact = correlation_coefficient(a, b) == correlation_coefficient(b, a);
        const cdouble g = std::polar(0.37, 1.1);
        rep.scale_deviation = std::abs(correlation_coefficient(a, (g * a).eval()) - 1.0);

        std::mt19937_64 rng(detail::mix_seed(opt.seed, 14));
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::MatrixXcd z(a.rows(), a.rows());
        for (Eigen::Index i = 0; i < z.size(); ++i)
            z(i) = cdouble(normal(rng), normal(rng));
        const Eigen::MatrixXcd u = Eigen::HouseholderQR<Eigen::MatrixXcd>(z).householderQ();
        rep.rotation_deviation = std::abs(correlation_coefficient((u * a).eval(), (u * b).eval()) -
                                          correlation_coefficient(a, b));

        rep.pass = rep.static_min > 0.8 && any_beyond && rep.moving_max_beyond < 0.5 && rep.self_exact &&
                   rep.symmetric_exact && rep.scale_deviation < 1e-12 && rep.rotation_deviation < 1e-12;
        return rep;
    }

    IsolationReport run_isolation_suite(const CombinerConfig &cfg, const OfdmConfig &ofdm, int n_subbands)
    {
        const FrontEnd fe(cfg, ofdm.sample_rate_hz(), ofdm.frame_length());
        const auto &chains = fe.chains_on(0);
        if (n_subbands < 2 || std::size_t(n_subbands) > chains.size())
            throw std::invalid_argument("isolation suite: ADC channel 0 hosts " + std::to_string(chains.size()) +
                                        " chains, " + std::to_string(n_subbands) + " requested");
        std::vector<FilterTaps> filters;
        for (int i = 0; i < n_subbands; ++i)
            filters.push_back(fe.chain_filter(chains[std::size_t(i)]));

        IsolationReport rep;
        const double fs = cfg.adc_sample_rate_hz;
        rep.isolation_db = subband_isolation(filters, fs);

        const Eigen::Index n_points = 1 << 17;
        const double df = 0.5 * fs / double(n_points);
        rep.separation_db = Eigen::MatrixXd::Zero(n_subbands, n_subbands);
        std::vector<Eigen::VectorXd> power;
        for (const auto &f : filters)
            power.push_back(power_response(f, n_points));
        auto band_stat = [&](const Eigen::VectorXd &p, const FilterTaps &band, bool peak) {
            double acc = 0.0;
            Eigen::Index n = 0;
            for (Eigen::Index k = 0; k < n_points; ++k)
            {
                const double f = double(k) * df;
                if (f < band.pass_lo_hz || f > band.pass_hi_hz)
                    continue;
                acc = peak ? std::max(acc, p[k]) : acc + p[k];
                ++n;
            }
            return peak ? acc : acc / double(std::max<Eigen::Index>(n, 1));
        };
        rep.worst_isolation_db = -std::numeric_limits<double>::infinity();
        rep.min_separation_db = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n_subbands; ++i)
        {
            const double own = band_stat(power[std::size_t(i)], filters[std::size_t(i)], false);
            for (int j = 0; j < n_subbands; ++j)
            {
                if (i == j)
                    continue;
                const double leak = band_stat(power[std::size_t(i)], filters[std::size_t(j)], true);
                rep.separation_db(i, j) = leak > 0.0 ? 10.0 * std::log10(own / leak) : -kIsolationFloorDb;
                rep.min_separation_db = std::min(rep.min_separation_db, rep.separation_db(i, j));
                rep.worst_isolation_db = std::max(rep.worst_isolation_db, rep.isolation_db(i, j));
            }
        }
        rep.pass = rep.worst_isolation_db <= -30.0 && rep.min_separation_db >= 20.0;
        return rep;
    }

    MrcReport run_mrc_suite(const MrcOptions &opt)
    {
        if (opt.antenna_counts.empty() || !(opt.axis_step_db > 0.0) || !(opt.axis_stop_db > opt.axis_start_db))
            throw std::invalid_argument("mrc suite: invalid antenna list or axis");
        const auto n_axis = Eigen::Index(std::floor((opt.axis_stop_db - opt.axis_start_db) / opt.axis_step_db + 1e-9)) + 1;
        const Eigen::VectorXd axis = Eigen::VectorXd::LinSpaced(n_axis, opt.axis_start_db,
                                                                opt.axis_start_db + double(n_axis - 1) * opt.axis_step_db);
        const int n_max = *std::max_element(opt.antenna_counts.begin(), opt.antenna_counts.end());

        BerSweepOptions bo;
        bo.trials = opt.trials;
        bo.seed = opt.seed;
        bo.target_ber = opt.target_ber;

        MrcReport rep;
        rep.sweep = ber_sweep(opt.antenna_counts, axis, ChannelSource::equal_snr(n_max), bo);
        bool ok = rep.sweep.warnings.empty();
        for (const auto &c : rep.sweep.curves)
        {
            rep.crossing_db.push_back(ber_crossing_db(c, opt.target_ber));
            ok = ok && std::isfinite(rep.crossing_db.back());
        }
        for (std::size_t i = 0; i + 1 < rep.crossing_db.size(); ++i)
        {
            const double gain = rep.crossing_db[i] - rep.crossing_db[i + 1];
            rep.doubling_gain_db.push_back(gain);
            const bool doubling = opt.antenna_counts[i + 1] == 2 * opt.antenna_counts[i];
            ok = ok && doubling && std::abs(gain - 10.0 * std::log10(2.0)) <= opt.gain_tolerance_db;
        }

        bool have_n1 = false;
        for (const auto &c : rep.sweep.curves)
        {
            if (c.n_antennas != 1)
                continue;
            have_n1 = true;
            for (Eigen::Index p = 0; p < c.ber.size(); ++p)
            {
                const double q = q_function(std::sqrt(2.0 * db_to_linear(c.snr_axis_db[p])));
                if (q * c.bits_per_point < 10.0)
                    break;
                const double se = std::sqrt(q * (1.0 - q) / c.bits_per_point);
                rep.n1_max_z = std::max(rep.n1_max_z, std::abs(c.ber[p] - q) / se);
            }
        }
        rep.pass = ok && have_n1 && rep.n1_max_z <= opt.z_limit;
        return rep;
    }

    std::vector<DatasetFile> generate_dataset(const Scenario &sc_in, const OfdmConfig &ofdm,
                                              const std::filesystem::path &out_dir, const DatasetOptions &opt)
    {
        Scenario sc = sc_in;
        if (opt.samples_override > 0)
            sc.samples_per_height = opt.samples_override;
        const double carrier = ofdm.carrier_hz;
        const auto points = generate_trajectory(sc, carrier, opt.seed);
        std::filesystem::create_directories(out_dir);

        SnapshotOptions snap;
        snap.noise_power = sc.noise_power(carrier);
        snap.front_end = opt.front_end;
        snap.input_power_dbm = opt.input_power_dbm;
        const std::uint64_t pilot_seed = detail::mix_seed(opt.seed, 21);

        std::vector<DatasetFile> files;
        nlohmann::json manifest;
        manifest["scenario"] = sc.name;
        manifest["seed"] = opt.seed;
        manifest["carrier_hz"] = carrier;
        manifest["bandwidth_hz"] = ofdm.bandwidth_hz;
        manifest["n_antennas"] = sc.array.n_antennas();
        manifest["n_subcarriers"] = ofdm.n_active();
        manifest["mode"] = opt.front_end ? "front-end" : "baseband";
        manifest["files"] = nlohmann::json::array();

        for (std::size_t hi = 0; hi < sc.heights_m.size(); ++hi)
        {
            CsidHeader h;
            h.carrier_hz = carrier;
            h.bandwidth_hz = ofdm.bandwidth_hz;
            h.n_ant = std::uint32_t(sc.array.n_antennas());
            h.n_sub = std::uint32_t(ofdm.n_active());
            h.array_descriptor = array_descriptor(sc.array, carrier);
            h.height_m = sc.heights_m[hi];
            bool all_los = true, all_nlos = true;
            for (const auto &p : sc.paths)
            {
                all_los = all_los && p.tag == LinkTag::LoS;
                all_nlos = all_nlos && p.tag == LinkTag::NLoS;
            }
            h.scenario = all_los ? ScenarioKind::LoS : (all_nlos ? ScenarioKind::NLoS : ScenarioKind::Unspecified);

            char name[64];
            std::snprintf(name, sizeof name, "_h%03ld.csid", std::lround(100.0 * sc.heights_m[hi]));
            DatasetFile file{out_dir / (sc.name + name), sc.heights_m[hi], 0};
            CsidWriter writer(file.path, h);
            std::uint64_t index = 0;
            for (const auto &tp : points)
            {
                if (tp.height_index != int(hi))
                    continue;
                const Frame frame = build_frame(ofdm, encode_position(tp.position), pilot_seed);
                snap.seed = detail::mix_seed(opt.seed, 22 + hi, index);
                const double t = double(index) * sc.sample_interval_s;
                const auto est = measure_snapshot(frame, ofdm, generate_csi(sc, ofdm, tp.actual), snap, t);
                TaggedCsiRecord rec;
                rec.timestamp_s = t;
                rec.position_m = tp.position;
                rec.snr_db = est.snr_per_antenna_db.cast<float>();
                rec.csi = est.csi.h.cast<std::complex<float>>();
                writer.write(rec);
                ++index;
            }
            file.records = writer.close();
            manifest["files"].push_back({{"file", file.path.filename().string()},
                                         {"height_m", file.height_m},
                                         {"records", file.records},
                                         {"scenario_kind", int(h.scenario)}});
            files.push_back(file);
        }
        std::ofstream(out_dir / "manifest.json") << manifest.dump(2) << '\n';
        return files;
    }
} // namespace sounder
