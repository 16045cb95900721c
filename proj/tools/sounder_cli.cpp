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

#include "sounder/dataset.hpp"
#include "sounder/experiments.hpp"
#include "sounder/propagation.hpp"
#include "sounder/rf_chain.hpp"
#include "sounder/scenario_io.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace sounder;
namespace fs = std::filesystem;

namespace
{
    std::string fmt(const char *f, double v)
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, f, v);
        return buf;
    }

    fs::path default_out_dir()
    {
        const char *env = std::getenv("SOUNDER_OUT_DIR");
        return env && *env ? fs::path(env) : fs::path(".");
    }

    // Writes to out_path, or stdout when empty
    void emit(const std::string &text, const std::string &out_path)
    {
        if (out_path.empty())
        {
            std::cout << text;
            return;
        }
        const fs::path p(out_path);
        if (p.has_parent_path())
            fs::create_directories(p.parent_path());
        std::ofstream f(p, std::ios::binary);
        if (!f)
            throw std::runtime_error("cannot write " + out_path);
        f << text;
    }

    int summary(const std::string &command, const std::vector<std::pair<std::string, bool>> &checks)
    {
        int failed = 0;
        for (const auto &[name, ok] : checks)
        {
            std::cerr << (ok ? "PASS " : "FAIL ") << name << '\n';
            failed += ok ? 0 : 1;
        }
        std::cout << "SUMMARY command=" << command << " status=" << (failed ? "FAIL" : "PASS")
                  << " checks=" << checks.size() << " failed=" << failed << '\n';
        return failed ? 1 : 0;
    }

    std::vector<double> parse_sweep(const std::string &spec)
    {
        std::vector<double> parts;
        std::stringstream ss(spec);
        std::string item;
        while (std::getline(ss, item, ':'))
        {
            std::size_t used = 0;
            const double v = std::stod(item, &used);
            if (used != item.size())
                throw std::invalid_argument("bad number '" + item + "'");
            parts.push_back(v);
        }
        if (parts.size() == 1)
            return parts;
        if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0])
            throw std::invalid_argument("power sweep must be VALUE or START:STOP:STEP with STOP >= START, STEP > 0");
        std::vector<double> out;
        const auto n = long(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9)) + 1;
        for (long i = 0; i < n; ++i)
            out.push_back(parts[0] + double(i) * parts[2]);
        return out;
    }

    bool unimodal(const std::vector<double> &y)
    {
        std::size_t i = 1;
        while (i < y.size() && y[i] >= y[i - 1])
            ++i;
        while (i < y.size() && y[i] <= y[i - 1])
            ++i;
        return i == y.size();
    }
} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Frequency-multiplexed Massive MIMO channel sounder model"};
    app.require_subcommand(1);
    std::uint64_t seed = 1;
    app.add_option("--seed", seed, "Global random seed")->capture_default_str();

    // sqnr
    auto *sqnr = app.add_subcommand("sqnr", "SQNR per antenna versus input power (CSV: power_dbm,enob,sqnr_db)");
    std::vector<double> enobs = {6.0, 7.8, 10.0, 12.0};
    std::string sweep = "-90:-20:5";
    int antennas = 64, trials = 10;
    std::string sqnr_out;
    sqnr->add_option("--enob", enobs, "ENoB list")->capture_default_str()->delimiter(',');
    sqnr->add_option("--power-sweep", sweep, "Per-antenna input power in dBm, VALUE or START:STOP:STEP")
        ->capture_default_str();
    sqnr->add_option("--antennas", antennas, "Number of antennas")->capture_default_str()->check(CLI::Range(1, 64));
    sqnr->add_option("--trials", trials, "Frames per power point")->capture_default_str()->check(CLI::PositiveNumber);
    sqnr->add_option("--out", sqnr_out, "CSV output file (default stdout)");

    // linkbudget
    auto *link = app.add_subcommand("linkbudget", "Tolerable path loss and coverage radius");
    LinkBudget lb;
    double plbp = std::nan("");
    link->add_option("--p-tx", lb.p_tx_dbm, "Transmit power dBm")->capture_default_str();
    link->add_option("--g-tx", lb.g_tx_db, "Transmit antenna gain dB")->capture_default_str();
    link->add_option("--g-rx", lb.g_rx_db, "Receive antenna gain dB")->capture_default_str();
    link->add_option("--amp-rx", lb.amp_rx_db, "Receive amplifier gain dB")->capture_default_str();
    link->add_option("--h-tx", lb.h_tx_m, "Transmitter height m")->capture_default_str();
    link->add_option("--h-rx", lb.h_rx_m, "Receiver height m")->capture_default_str();
    link->add_option("--min-input", lb.min_input_dbm, "Minimum ADC input power dBm")->capture_default_str();
    link->add_option("--max-input", lb.max_input_dbm, "Maximum ADC input power dBm")->capture_default_str();
    link->add_option("--target-snr", lb.target_snr_db, "Target SNR dB")->capture_default_str();
    link->add_option("--margin", lb.margin_db, "Margin dB")->capture_default_str();
    link->add_option("--plbp", plbp, "Use this path loss in dB instead of the budget");

    // gen-dataset
    auto *gen = app.add_subcommand("gen-dataset", "Generate position-tagged CSID files and a manifest");
    std::string scenario_file, preset = "los", gen_out;
    int samples = -1;
    bool front_end = false;
    gen->add_option("--scenario", scenario_file, "Scenario JSON file")->check(CLI::ExistingFile);
    gen->add_option("--preset", preset, "Built-in scenario when no file is given")
        ->check(CLI::IsMember({"los", "nlos"}))
        ->capture_default_str();
    gen->add_option("--out", gen_out, "Output directory (default $SOUNDER_OUT_DIR or .)");
    gen->add_option("--samples", samples, "Records per height (overrides the scenario)")->check(CLI::PositiveNumber);
    gen->add_flag("--front-end", front_end, "Route every snapshot through the combiner and ADC model");

    // verify
    auto *verify = app.add_subcommand("verify", "Run a verification suite (CSV + pass/fail summary)");
    std::string suite, verify_out;
    long mrc_trials = 100000;
    verify->add_option("--suite", suite, "Suite")->required()->check(CLI::IsMember({"stability", "isolation", "mrc"}));
    verify->add_option("--out", verify_out, "CSV output file (default $SOUNDER_OUT_DIR/<suite>.csv)");
    verify->add_option("--trials", mrc_trials, "MRC symbols per point")->capture_default_str()->check(CLI::PositiveNumber);

    // export-csv
    auto *exp = app.add_subcommand("export-csv", "Flatten a CSID file to CSV");
    std::string csid_in, csv_out;
    std::vector<std::string> fields = {"timestamp", "position", "snr"};
    exp->add_option("--in", csid_in, "CSID file")->required()->check(CLI::ExistingFile);
    exp->add_option("--fields", fields, "timestamp,position,snr,csi_magphase,csi_reim")
        ->delimiter(',')
        ->capture_default_str();
    exp->add_option("--out", csv_out, "CSV output file (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try
    {
        const OfdmConfig ofdm;
        if (*sqnr)
        {
            const auto powers = parse_sweep(sweep);
            const CombinerConfig cfg = default_combiner(antennas);
            SqnrOptions so;
            so.trials = trials;
            so.seed = seed;
            const auto pts = sqnr_sweep(cfg, ofdm, powers, enobs, so);
            std::string csv = "power_dbm,enob,sqnr_db\n";
            std::map<double, std::vector<double>> curves;
            for (const auto &p : pts)
            {
                csv += fmt("%.4f", p.power_dbm) + "," + fmt("%.4f", p.enob) + "," + fmt("%.6f", p.sqnr_db) + "\n";
                curves[p.enob].push_back(p.sqnr_db);
            }
            emit(csv, sqnr_out);
            bool shape = true, order = true;
            for (const auto &[e, c] : curves)
                shape = shape && unimodal(c);
            // resolution ordering below the knee of the coarsest curve
            const auto &coarse = curves.begin()->second;
            const auto knee = std::size_t(std::max_element(coarse.begin(), coarse.end()) - coarse.begin());
            for (auto it = curves.begin(); std::next(it) != curves.end(); ++it)
                for (std::size_t i = 0; i <= knee; ++i)
                    order = order && std::next(it)->second[i] >= it->second[i];
            return summary("sqnr", {{"unimodal", shape}, {"enob_ordering", order}});
        }
        if (*link)
        {
            lb.validate();
            const double pl = std::isnan(plbp) ? tolerable_path_loss_db(lb) : plbp;
            const double d = coverage_radius_for_path_loss(pl, lb.h_tx_m, lb.h_rx_m);
            std::cout << "pl_bp_db," << fmt("%.6f", pl) << "\nd_max_m," << fmt("%.6f", d)
                      << "\nbreakpoint_m," << fmt("%.6f", breakpoint_distance(lb, ofdm.carrier_hz)) << "\n";
            return summary("linkbudget", {{"finite_radius", std::isfinite(d) && d > 0.0}});
        }
        if (*gen)
        {
            const Scenario sc = !scenario_file.empty() ? load_scenario(scenario_file)
                                : preset == "nlos"      ? default_nlos_scenario()
                                                        : default_los_scenario();
            DatasetOptions opt;
            opt.seed = seed;
            opt.samples_override = samples;
            if (front_end)
                opt.front_end = default_combiner(sc.array.n_antennas());
            const fs::path out = gen_out.empty() ? default_out_dir() : fs::path(gen_out);
            const auto files = generate_dataset(sc, ofdm, out, opt);
            const std::uint64_t expected = std::uint64_t(samples > 0 ? samples : sc.samples_per_height) * sc.paths.size();
            bool counts = true;
            std::cout << "file,height_m,records\n";
            for (const auto &f : files)
            {
                std::cout << f.path.string() << "," << fmt("%.3f", f.height_m) << "," << f.records << "\n";
                if (expected > 0)
                    counts = counts && f.records == expected;
                counts = counts && read_csid_header(f.path).record_count == f.records;
            }
            return summary("gen-dataset", {{"files_per_height", files.size() == sc.heights_m.size()},
                                           {"record_counts", counts}});
        }
        if (*verify)
        {
            const fs::path out = verify_out.empty() ? default_out_dir() / (suite + ".csv") : fs::path(verify_out);
            std::string csv;
            std::vector<std::pair<std::string, bool>> checks;
            if (suite == "stability")
            {
                StabilityOptions so;
                so.seed = seed;
                const auto rep = run_stability_suite(default_los_scenario(), ofdm, so);
                csv = "series,delta_t_s,displacement_m,delta_h\n";
                for (Eigen::Index i = 0; i < rep.static_series.delta_h.size(); ++i)
                    csv += "static," + fmt("%.3f", rep.static_series.delta_t_s[i]) + ",0," +
                           fmt("%.9f", rep.static_series.delta_h[i]) + "\n";
                for (Eigen::Index i = 0; i < rep.moving_series.delta_h.size(); ++i)
                    csv += "moving," + fmt("%.3f", rep.moving_series.delta_t_s[i]) + "," +
                           fmt("%.6f", rep.moving_displacement_m[i]) + "," + fmt("%.9f", rep.moving_series.delta_h[i]) +
                           "\n";
                checks = {{"static_delta_above_0.8", rep.static_min > 0.8},
                          {"moving_delta_below_0.5", rep.moving_max_beyond < 0.5},
                          {"self_correlation_exact", rep.self_exact},
                          {"symmetry_exact", rep.symmetric_exact},
                          {"scale_invariance", rep.scale_deviation < 1e-12},
                          {"rotation_invariance", rep.rotation_deviation < 1e-12}};
            }
            else if (suite == "isolation")
            {
                const auto rep = run_isolation_suite(default_combiner(), ofdm);
                csv = "driven,victim,isolation_db,separation_db\n";
                for (Eigen::Index i = 0; i < rep.isolation_db.rows(); ++i)
                    for (Eigen::Index j = 0; j < rep.isolation_db.cols(); ++j)
                        csv += std::to_string(i) + "," + std::to_string(j) + "," + fmt("%.4f", rep.isolation_db(i, j)) +
                               "," + fmt("%.4f", rep.separation_db(i, j)) + "\n";
                checks = {{"isolation_below_-30dB", rep.worst_isolation_db <= -30.0},
                          {"filter_separation_20dB", rep.min_separation_db >= 20.0}};
            }
            else
            {
                MrcOptions mo;
                mo.seed = seed;
                mo.trials = mrc_trials;
                const auto rep = run_mrc_suite(mo);
                for (const auto &w : rep.sweep.warnings)
                    std::cerr << "warning: " << w << '\n';
                csv = "n_antennas,snr_db,ber\n";
                for (const auto &c : rep.sweep.curves)
                    for (Eigen::Index p = 0; p < c.ber.size(); ++p)
                        csv += std::to_string(c.n_antennas) + "," + fmt("%.4f", c.snr_axis_db[p]) + "," +
                               fmt("%.6e", c.ber[p]) + "\n";
                bool gains = rep.doubling_gain_db.size() + 1 == rep.crossing_db.size();
                for (std::size_t i = 0; i < rep.doubling_gain_db.size(); ++i)
                {
                    std::cerr << "doubling " << rep.sweep.curves[i].n_antennas << "->" << rep.sweep.curves[i + 1].n_antennas
                              << ": " << fmt("%.3f", rep.doubling_gain_db[i]) << " dB\n";
                    gains = gains && std::abs(rep.doubling_gain_db[i] - 10.0 * std::log10(2.0)) <= mo.gain_tolerance_db;
                }
                checks = {{"doubling_gain_3dB", gains},
                          {"single_antenna_matches_q_function", rep.n1_max_z <= mo.z_limit}};
            }
            emit(csv, out.string());
            return summary("verify-" + suite, checks);
        }
        if (*exp)
        {
            std::ostringstream os;
            export_csv(os, read_csid(csid_in), fields);
            emit(os.str(), csv_out);
            return 0;
        }
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
