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

#include "sounder/propagation.hpp"
#include "sounder/detail_fft.hpp"
#include "sounder/detail_seed.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace sounder
{
    void LinkBudget::validate() const
    {
        if (!(min_input_dbm < max_input_dbm))
            throw std::invalid_argument("LinkBudget: min_input_dbm must be below max_input_dbm");
        if (!(h_tx_m > 0.0) || !(h_rx_m > 0.0))
            throw std::invalid_argument("LinkBudget: antenna heights must be positive");
    }

    double tolerable_path_loss_db(const LinkBudget &lb)
    {
        lb.validate();
        return lb.p_tx_dbm + lb.g_tx_db + lb.g_rx_db + lb.amp_rx_db - (lb.min_input_dbm + lb.target_snr_db - 10.0) -
               lb.margin_db;
    }

    double coverage_radius_for_path_loss(double path_loss_db, double h_tx_m, double h_rx_m)
    {
        if (!(h_tx_m > 0.0) || !(h_rx_m > 0.0))
            throw std::invalid_argument("coverage_radius: antenna heights must be positive");
        return std::sqrt(h_tx_m * h_rx_m) / std::pow(10.0, -path_loss_db / 40.0);
    }

    double max_coverage_radius(const LinkBudget &lb)
    {
        const double pl = tolerable_path_loss_db(lb);
        if (!(pl > 0.0))
            throw std::invalid_argument("max_coverage_radius: tolerable path loss must be positive, got " +
                                        std::to_string(pl) + " dB");
        return coverage_radius_for_path_loss(pl, lb.h_tx_m, lb.h_rx_m);
    }

    double breakpoint_distance(const LinkBudget &lb, double carrier_hz)
    {
        return 4.0 * kPi * lb.h_tx_m * lb.h_rx_m * carrier_hz / kSpeedOfLight;
    }

    double breakpoint_path_loss(double d_m, const LinkBudget &lb, double carrier_hz)
    {
        if (!(d_m > 0.0))
            throw std::invalid_argument("breakpoint_path_loss: distance must be positive");
        if (!(carrier_hz > 0.0))
            throw std::invalid_argument("breakpoint_path_loss: carrier must be positive");
        const double d_bp = breakpoint_distance(lb, carrier_hz);
        const auto fspl = [&](double d) { return 20.0 * std::log10(4.0 * kPi * d * carrier_hz / kSpeedOfLight); };
        if (d_m <= d_bp)
            return fspl(d_m);
        return fspl(d_bp) + 40.0 * std::log10(d_m / d_bp);
    }

    std::string to_string(LinkTag tag) { return tag == LinkTag::LoS ? "LoS" : "NLoS"; }

    LinkTag link_tag_from_string(const std::string &s)
    {
        if (s == "LoS" || s == "los" || s == "LOS")
            return LinkTag::LoS;
        if (s == "NLoS" || s == "nlos" || s == "NLOS")
            return LinkTag::NLoS;
        throw std::invalid_argument("unknown link tag '" + s + "'");
    }

    Eigen::Matrix3Xd ArraySpec::positions(double carrier_hz) const
    {
        const double sp = spacing_m > 0.0 ? spacing_m : 0.5 * kSpeedOfLight / carrier_hz;
        Eigen::Matrix3Xd pos(3, n_antennas());
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                pos.col(r * cols + c) = center + (r - 0.5 * (rows - 1)) * sp * row_axis.normalized() +
                                        (c - 0.5 * (cols - 1)) * sp * col_axis.normalized();
        return pos;
    }

    double PathSpec::length() const
    {
        double len = 0.0;
        for (std::size_t i = 1; i < vertices.size(); ++i)
            len += (vertices[i] - vertices[i - 1]).norm();
        return len;
    }

    Eigen::Vector2d PathSpec::point_at(double arc_m) const
    {
        double remaining = std::max(0.0, arc_m);
        for (std::size_t i = 1; i < vertices.size(); ++i)
        {
            const Eigen::Vector2d seg = vertices[i] - vertices[i - 1];
            const double len = seg.norm();
            if (remaining <= len && len > 0.0)
                return vertices[i - 1] + seg * (remaining / len);
            remaining -= len;
        }
        return vertices.back();
    }

    void Scenario::validate(double carrier_hz) const
    {
        if (!(room.max.array() > room.min.array()).all())
            throw std::invalid_argument("Scenario: degenerate room box");
        if (array.rows < 1 || array.cols < 1)
            throw std::invalid_argument("Scenario: empty antenna array");
        const Eigen::Matrix3Xd ant = array.positions(carrier_hz);
        for (Eigen::Index a = 0; a < ant.cols(); ++a)
            if (!room.contains(ant.col(a)))
                throw std::invalid_argument("Scenario: antenna " + std::to_string(a) + " outside the room");
        for (const auto &p : paths)
        {
            if (p.vertices.size() < 2)
                throw std::invalid_argument("Scenario: path '" + p.name + "' needs at least 2 vertices");
            for (const auto &v : p.vertices)
                for (const double h : heights_m)
                    if (!room.contains(Vec3(v.x(), v.y(), h)))
                        throw std::invalid_argument("Scenario: path '" + p.name + "' leaves the room");
        }
        if (!(grid_spacing_m > 0.0) || samples_per_height < 0 || jitter_sigma_m < 0.0 || jitter_limit_m < 0.0)
            throw std::invalid_argument("Scenario: invalid trajectory parameters");
        if (max_reflection_order < 0 || max_reflection_order > 2)
            throw std::invalid_argument("Scenario: reflection order must be 0, 1 or 2");
    }

    double Scenario::noise_power(double carrier_hz) const
    {
        const double lambda = kSpeedOfLight / carrier_hz;
        const double amp = lambda / (4.0 * kPi * reference_distance_m);
        return amp * amp / db_to_linear(snr_db);
    }

    Scenario default_los_scenario()
    {
        Scenario sc;
        sc.name = "office-los";
        sc.walls.push_back({Eigen::Vector2d(10.0, 0.0), Eigen::Vector2d(10.0, 9.0)});
        PathSpec p;
        p.name = "los";
        p.tag = LinkTag::LoS;
        p.vertices = {{3.0, 2.0}, {8.5, 2.0}, {8.5, 10.0}, {3.0, 10.0}, {3.0, 2.5}};
        sc.paths.push_back(p);
        return sc;
    }

    Scenario default_nlos_scenario()
    {
        Scenario sc = default_los_scenario();
        sc.name = "office-nlos";
        sc.paths.clear();
        PathSpec p;
        p.name = "nlos";
        p.tag = LinkTag::NLoS;
        p.vertices = {{12.5, 1.0}, {18.5, 1.0}, {18.5, 7.5}, {12.5, 7.5}, {12.5, 1.5}};
        sc.paths.push_back(p);
        return sc;
    }

    std::vector<Ray> image_sources(const Room &room, const Vec3 &tx, int max_order)
    {
        // Per axis: (coordinate, reflections) for the direct, single and double bounce images
        struct AxisImage
        {
            double coord;
            int order;
        };
        std::array<std::vector<AxisImage>, 3> axis;
        for (int d = 0; d < 3; ++d)
        {
            const double lo = room.min[d], hi = room.max[d], p = tx[d], span = 2.0 * (hi - lo);
            axis[std::size_t(d)] = {{p, 0}, {2.0 * lo - p, 1}, {2.0 * hi - p, 1}, {p + span, 2}, {p - span, 2}};
        }
        std::vector<Ray> rays;
        for (const auto &ix : axis[0])
            for (const auto &iy : axis[1])
                for (const auto &iz : axis[2])
                {
                    const int order = ix.order + iy.order + iz.order;
                    if (order > max_order)
                        continue;
                    rays.push_back({Vec3(ix.coord, iy.coord, iz.coord), std::pow(room.reflection, order), order});
                }
        return rays;
    }

    bool segment_blocked(const std::vector<Wall> &walls, const Vec3 &a, const Vec3 &b)
    {
        const auto cross = [](const Eigen::Vector2d &u, const Eigen::Vector2d &v) { return u.x() * v.y() - u.y() * v.x(); };
        const Eigen::Vector2d p = a.head<2>(), r = b.head<2>() - a.head<2>();
        for (const auto &w : walls)
        {
            const Eigen::Vector2d q = w.from, s = w.to - w.from;
            const double denom = cross(r, s);
            if (denom == 0.0)
                continue;
            const double t = cross(q - p, s) / denom;
            const double u = cross(q - p, r) / denom;
            if (t > 0.0 && t < 1.0 && u >= 0.0 && u <= 1.0)
                return true;
        }
        return false;
    }

    CsiMatrix generate_csi(const Scenario &sc, const OfdmConfig &cfg, const Vec3 &p)
    {
        cfg.validate();
        if (!sc.room.contains(p))
            throw std::invalid_argument("generate_csi: position outside the room");
        const Eigen::Matrix3Xd ant = sc.array.positions(cfg.carrier_hz);
        const auto rays = image_sources(sc.room, p, sc.max_reflection_order);
        const int na = cfg.n_active();

        Eigen::ArrayXd inv_f(na);
        for (int k = 0; k < na; ++k)
            inv_f[k] = 1.0 / cfg.subcarrier_frequency_hz(k);
        const double f0 = cfg.subcarrier_frequency_hz(0);
        const double df = cfg.subcarrier_spacing_hz();
        constexpr int kResync = 128; // exact phasor every kResync subcarriers

        CsiMatrix csi;
        csi.carrier_hz = cfg.carrier_hz;
        csi.h = Eigen::MatrixXcd::Zero(ant.cols(), na);
        for (Eigen::Index a = 0; a < ant.cols(); ++a)
        {
            const Vec3 rx = ant.col(a);
            for (const auto &ray : rays)
            {
                if (ray.order == 0 && segment_blocked(sc.walls, p, rx))
                    continue;
                const double d = (ray.source - rx).norm();
                const double amp = ray.gain * kSpeedOfLight / (4.0 * kPi * d);
                const double turns0 = d * f0 / kSpeedOfLight;
                const double turns_step = d * df / kSpeedOfLight;
                const cdouble step = std::polar(1.0, -2.0 * kPi * (turns_step - std::floor(turns_step)));
                cdouble phasor;
                for (int k = 0; k < na; ++k)
                {
                    if (k % kResync == 0)
                    {
                        const double turns = turns0 + turns_step * k;
                        phasor = std::polar(1.0, -2.0 * kPi * (turns - std::floor(turns)));
                    }
                    csi.h(a, k) += amp * inv_f[k] * phasor;
                    phasor *= step;
                }
            }
        }
        return csi;
    }

    std::vector<TrajectoryPoint> generate_trajectory(const Scenario &sc, double carrier_hz, std::uint64_t seed)
    {
        sc.validate(carrier_hz);
        const double spacing = sc.point_spacing_m > 0.0 ? sc.point_spacing_m : 0.5 * kSpeedOfLight / carrier_hz;
        std::vector<TrajectoryPoint> out;
        for (std::size_t pi = 0; pi < sc.paths.size(); ++pi)
        {
            const auto &path = sc.paths[pi];
            const double len = path.length();
            const int n = sc.samples_per_height > 0 ? sc.samples_per_height
                                                    : static_cast<int>(std::floor(len / spacing + 1e-9)) + 1;
            for (std::size_t hi = 0; hi < sc.heights_m.size(); ++hi)
            {
                std::mt19937_64 rng(detail::mix_seed(seed, pi, hi));
                std::normal_distribution<double> normal(0.0, 1.0);
                for (int i = 0; i < n; ++i)
                {
                    // back-and-forth walk at constant spacing
                    double s = i * spacing;
                    if (len > 0.0)
                    {
                        s = std::fmod(s, 2.0 * len);
                        if (s > len)
                            s = 2.0 * len - s;
                    }
                    // Surveyed markers sit on every vertex and every grid_spacing_m in between, so
                    // interpolating between them reproduces the polyline.
                    const Eigen::Vector2d xy = path.point_at(s);
                    TrajectoryPoint tp;
                    tp.path_index = int(pi);
                    tp.height_index = int(hi);
                    tp.position = Vec3(xy.x(), xy.y(), sc.heights_m[hi]);
                    tp.timestamp_s = i * sc.sample_interval_s;
                    Vec3 jitter = Vec3::Zero();
                    if (sc.jitter_sigma_m > 0.0 && sc.jitter_limit_m > 0.0)
                    {
                        do
                            jitter = Vec3(normal(rng), normal(rng), normal(rng)) * sc.jitter_sigma_m;
                        while (jitter.norm() > sc.jitter_limit_m);
                    }
                    tp.actual = tp.position + jitter;
                    if (!sc.room.contains(tp.actual))
                        tp.actual = tp.actual.cwiseMax(sc.room.min).cwiseMin(sc.room.max);
                    out.push_back(tp);
                }
            }
        }
        return out;
    }

    namespace
    {
        std::vector<ComplexWaveform> apply_channel_impl(const ComplexWaveform &w, const CsiMatrix &csi,
                                                        const OfdmConfig &cfg, double snr_db, double noise_power,
                                                        std::uint64_t seed)
        {
            cfg.validate();
            w.validate();
            if (csi.h.cols() != cfg.n_active())
                throw std::invalid_argument("apply_channel: CSI has " + std::to_string(csi.h.cols()) +
                                            " subcarriers, configuration " + std::to_string(cfg.n_active()));
            const Eigen::Index len = cfg.symbol_length();
            if (w.samples.size() % len != 0)
                throw std::invalid_argument("apply_channel: waveform is not a whole number of OFDM symbols");

            const int n = cfg.n_subcarriers;
            const int cp = cfg.cp_length();
            const int na = cfg.n_active();
            const Eigen::Index n_sym = w.samples.size() / len;

            std::vector<Eigen::VectorXcd> spectra;
            for (Eigen::Index s = 0; s < n_sym; ++s)
                spectra.push_back(detail::fft(w.samples.segment(s * len + cp, n)));

            std::vector<ComplexWaveform> out;
            Eigen::VectorXcd shaped(n);
            for (Eigen::Index a = 0; a < csi.h.rows(); ++a)
            {
                ComplexWaveform rx = w;
                double rx_power = 0.0; // unitary-domain power per active subcarrier
                for (Eigen::Index s = 0; s < n_sym; ++s)
                {
                    shaped.setZero();
                    for (int k = 0; k < na; ++k)
                    {
                        const int bin = cfg.fft_bin(k);
                        shaped[bin] = spectra[std::size_t(s)][bin] * csi.h(a, k);
                        rx_power += std::norm(shaped[bin]) / n;
                    }
                    const Eigen::VectorXcd body = detail::ifft(shaped);
                    auto seg = rx.samples.segment(s * len, len);
                    seg.head(cp) = body.tail(cp);
                    seg.tail(n) = body;
                }
                rx_power /= double(n_sym * na);

                const double sigma2 = std::isfinite(snr_db) ? rx_power / db_to_linear(snr_db) : noise_power;
                if (sigma2 > 0.0)
                {
                    std::mt19937_64 rng(detail::mix_seed(seed, std::uint64_t(a)));
                    std::normal_distribution<double> normal(0.0, std::sqrt(0.5 * sigma2));
                    for (auto &x : rx.samples)
                        x += cdouble(normal(rng), normal(rng));
                }
                out.push_back(std::move(rx));
            }
            return out;
        }
    } // namespace

    std::vector<ComplexWaveform> apply_channel(const ComplexWaveform &w, const CsiMatrix &csi, const OfdmConfig &cfg,
                                               double snr_db, std::uint64_t seed)
    {
        if (std::isnan(snr_db))
            throw std::invalid_argument("apply_channel: SNR is NaN");
        return apply_channel_impl(w, csi, cfg, snr_db, 0.0, seed);
    }

    std::vector<ComplexWaveform> apply_channel_with_noise_power(const ComplexWaveform &w, const CsiMatrix &csi,
                                                                const OfdmConfig &cfg, double noise_power,
                                                                std::uint64_t seed)
    {
        if (!(noise_power >= 0.0))
            throw std::invalid_argument("apply_channel: noise power must be non-negative");
        return apply_channel_impl(w, csi, cfg, std::numeric_limits<double>::infinity(), noise_power, seed);
    }
} // namespace sounder
