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

#include "sounder/receiver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sounder
{
    namespace
    {
        double clamp_db(double db) { return std::clamp(std::isnan(db) ? -kSnrCeilingDb : db, -kSnrCeilingDb, kSnrCeilingDb); }

        cdouble nearest(const Eigen::Ref<const Eigen::VectorXcd> &constellation, cdouble z)
        {
            Eigen::Index best = 0;
            (constellation.array() - z).abs2().minCoeff(&best);
            return constellation[best];
        }

        // pilot count and mean pilot energy per subcarrier
        void pilot_stats(const SymbolGrid &pilots, Eigen::VectorXd &count, Eigen::VectorXd &energy)
        {
            count = Eigen::VectorXd::Zero(pilots.n_active());
            energy = Eigen::VectorXd::Zero(pilots.n_active());
            for (Eigen::Index s = 0; s < pilots.n_ofdm_symbols(); ++s)
                for (Eigen::Index k = 0; k < pilots.n_active(); ++k)
                    if (pilots.pilot_mask(s, k))
                    {
                        count[k] += 1.0;
                        energy[k] += std::norm(pilots.symbols(s, k));
                    }
        }
    } // namespace

    std::vector<ComplexWaveform> split_subbands(const std::vector<ComplexWaveform> &adc_streams,
                                                const CombinerConfig &cfg, const OfdmConfig &ofdm)
    {
        if (adc_streams.size() != std::size_t(cfg.n_adc_channels))
            throw std::invalid_argument("split_subbands: stream count does not match the ADC channel count");
        for (const auto &s : adc_streams)
            if (std::abs(s.sample_rate_hz - cfg.adc_sample_rate_hz) > 1e-9 * cfg.adc_sample_rate_hz)
                throw std::invalid_argument("split_subbands: ADC stream sample rate mismatch");
        const double r = cfg.adc_sample_rate_hz / ofdm.sample_rate_hz();
        const auto ratio = Eigen::Index(std::llround(r));
        if (ratio < 1 || adc_streams.front().samples.size() % ratio != 0)
            throw std::invalid_argument("split_subbands: stream length is not a multiple of the decimation ratio");
        const FrontEnd fe(cfg, ofdm.sample_rate_hz(), adc_streams.front().samples.size() / ratio);
        return fe.split(adc_streams);
    }

    ChannelEstimate estimate_csi(const std::vector<SymbolGrid> &grids, const SymbolGrid &pilots, double carrier_hz,
                                 double timestamp_s)
    {
        if (grids.empty())
            throw std::invalid_argument("estimate_csi: no antenna grids");
        Eigen::VectorXd count, energy;
        pilot_stats(pilots, count, energy);
        if (count.size() == 0 || count.minCoeff() < 1.0)
            throw std::invalid_argument("estimate_csi: pilot mask leaves a subcarrier without pilots");

        const Eigen::Index n_sub = pilots.n_active();
        ChannelEstimate est;
        est.timestamp_s = timestamp_s;
        est.csi.carrier_hz = carrier_hz;
        est.csi.h = Eigen::MatrixXcd::Zero(Eigen::Index(grids.size()), n_sub);
        est.snr_per_antenna_db = Eigen::VectorXd::Zero(Eigen::Index(grids.size()));

        for (std::size_t a = 0; a < grids.size(); ++a)
        {
            const auto &g = grids[a];
            if (g.n_active() != n_sub || g.n_ofdm_symbols() < pilots.n_ofdm_symbols())
                throw std::invalid_argument("estimate_csi: grid of antenna " + std::to_string(a) +
                                            " does not match the pilot layout");
            for (Eigen::Index s = 0; s < pilots.n_ofdm_symbols(); ++s)
                for (Eigen::Index k = 0; k < n_sub; ++k)
                    if (pilots.pilot_mask(s, k))
                    {
                        const cdouble p = pilots.symbols(s, k);
                        if (p == cdouble(0.0))
                            throw std::invalid_argument("estimate_csi: zero pilot symbol on subcarrier " +
                                                        std::to_string(k));
                        est.csi.h(Eigen::Index(a), k) += g.symbols(s, k) / p / count[k];
                    }
            const Eigen::Index n_data = (g.pilot_mask == false).count();
            est.snr_per_antenna_db[Eigen::Index(a)] =
                n_data >= 100 ? measure_snr_db(g, est.csi.h.row(Eigen::Index(a)).transpose(), pilots)
                              : std::numeric_limits<double>::quiet_NaN();
        }
        return est;
    }

    Eigen::VectorXd evm_snr(const Eigen::Ref<const Eigen::MatrixXcd> &equalized,
                            const Eigen::Ref<const Eigen::VectorXcd> &constellation)
    {
        return evm_snr(equalized, constellation, Eigen::MatrixXd::Ones(equalized.rows(), equalized.cols()));
    }

    Eigen::VectorXd evm_snr(const Eigen::Ref<const Eigen::MatrixXcd> &equalized,
                            const Eigen::Ref<const Eigen::VectorXcd> &constellation,
                            const Eigen::Ref<const Eigen::MatrixXd> &weights)
    {
        if (equalized.size() == 0)
            throw std::invalid_argument("evm_snr: empty symbol set");
        if (equalized.cols() < 100)
            throw std::invalid_argument("evm_snr: need at least 100 symbols per antenna, got " +
                                        std::to_string(equalized.cols()));
        if (constellation.size() == 0)
            throw std::invalid_argument("evm_snr: empty reference constellation");
        if (weights.rows() != equalized.rows() || weights.cols() != equalized.cols())
            throw std::invalid_argument("evm_snr: weight shape mismatch");

        Eigen::VectorXd out(equalized.rows());
        for (Eigen::Index a = 0; a < equalized.rows(); ++a)
        {
            double err = 0.0, ref = 0.0;
            for (Eigen::Index i = 0; i < equalized.cols(); ++i)
            {
                const cdouble d = nearest(constellation, equalized(a, i));
                err += weights(a, i) * std::norm(equalized(a, i) - d);
                ref += weights(a, i) * std::norm(d);
            }
            if (!(ref > 0.0))
                out[a] = -kSnrCeilingDb;
            else
                out[a] = clamp_db(err > 0.0 ? 10.0 * std::log10(ref / err) : kSnrCeilingDb);
        }
        return out;
    }

    double measure_snr_db(const SymbolGrid &grid, const Eigen::Ref<const Eigen::VectorXcd> &h_hat,
                          const SymbolGrid &pilots)
    {
        Eigen::VectorXd count, energy;
        pilot_stats(pilots, count, energy);

        std::vector<cdouble> eq;
        std::vector<double> w;
        double pilot_noise_factor = 0.0; // sum of w / sum_p |p|^2, the LS estimate noise relative to data noise
        for (Eigen::Index s = 0; s < grid.n_ofdm_symbols(); ++s)
            for (Eigen::Index k = 0; k < grid.n_active(); ++k)
            {
                if (grid.pilot_mask(s, k))
                    continue;
                const double g = std::norm(h_hat[k]);
                eq.push_back(g > 0.0 ? grid.symbols(s, k) / h_hat[k] : cdouble(0.0));
                w.push_back(g);
                pilot_noise_factor += energy[k] > 0.0 ? g / energy[k] : 0.0;
            }
        if (eq.size() < 100)
            throw std::invalid_argument("measure_snr_db: need at least 100 data symbols");
        const Eigen::Map<const Eigen::RowVectorXcd> eq_row(eq.data(), Eigen::Index(eq.size()));
        const Eigen::Map<const Eigen::RowVectorXd> w_row(w.data(), Eigen::Index(w.size()));
        const double raw = evm_snr(eq_row, qpsk_constellation(), w_row)[0];
        if (std::abs(raw) >= kSnrCeilingDb)
            return raw;

        // Error on an equalized symbol = data noise + d * pilot-estimate noise; QPSK data has |d| = 1.
        const double wsum = Eigen::Map<const Eigen::VectorXd>(w.data(), Eigen::Index(w.size())).sum();
        const double inflation = 1.0 + (wsum > 0.0 ? pilot_noise_factor / wsum : 0.0);
        return clamp_db(raw + 10.0 * std::log10(inflation));
    }

    Bits decode_payload(const SymbolGrid &grid, const Eigen::Ref<const Eigen::VectorXcd> &h_hat)
    {
        if (h_hat.size() != grid.n_active())
            throw std::invalid_argument("decode_payload: channel length mismatch");
        SymbolGrid eq = grid;
        for (Eigen::Index s = 0; s < grid.n_ofdm_symbols(); ++s)
            for (Eigen::Index k = 0; k < grid.n_active(); ++k)
                eq.symbols(s, k) = h_hat[k] != cdouble(0.0) ? grid.symbols(s, k) / h_hat[k] : cdouble(0.0);
        return grid_payload_bits(eq);
    }
} // namespace sounder
