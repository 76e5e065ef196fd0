// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver: Monte-Carlo SNR sweeps, convergence traces, duality
// audits and beamformer factorization dumps.
//
// Exit codes: 0 success, 2 configuration error, 1 numerical failure.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "hybeam/baselines.hpp"
#include "hybeam/experiments.hpp"
#include "hybeam/factorization.hpp"
#include "hybeam/serialize.hpp"

namespace {

using hybeam::io::json;

struct CommonOptions {
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed_override;
  bool as_json = false;
  bool no_half_prefactor = false;
  unsigned threads = 0;
};

void add_common(CLI::App* cmd, CommonOptions* opts) {
  cmd->add_option("--config", opts->config_path, "Scenario config file (JSON)");
  cmd->add_option("--out", opts->out_path, "Output path (default: stdout)");
  cmd->add_option("--seed", opts->seed_override, "Override the scenario base seed");
  cmd->add_flag("--json", opts->as_json, "Emit the JSON mirror with full traces");
  cmd->add_flag("--no-half-prefactor", opts->no_half_prefactor,
                "Report rates without the 1/2 prefactor");
  cmd->add_option("--threads", opts->threads, "Worker threads (default: hardware)");
}

hybeam::sim::Scenario load_scenario(const CommonOptions& opts) {
  hybeam::sim::Scenario scenario;
  if (!opts.config_path.empty()) {
    std::ifstream in(opts.config_path);
    if (!in) throw std::invalid_argument("cannot open config file: " + opts.config_path);
    json j;
    in >> j;
    scenario = hybeam::io::scenario_from_json(j);
  } else {
    scenario.dims = hybeam::make_dims(4, 16, 4, 1);
    scenario.snr_grid_db = {-10, -5, 0, 5, 10, 15, 20};
    scenario.n_trials = 10;
  }
  if (opts.seed_override.has_value()) scenario.base_seed = *opts.seed_override;
  hybeam::sim::validate_scenario(scenario);
  return scenario;
}

void write_output(const CommonOptions& opts, const std::string& text) {
  if (opts.out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(opts.out_path);
  if (!out) throw std::runtime_error("cannot open output path: " + opts.out_path);
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

int run_sweep_cmd(const CommonOptions& opts, const std::string& overlay_path) {
  const auto scenario = load_scenario(opts);
  std::vector<hybeam::sim::CurveRecord> overlay;
  if (!overlay_path.empty()) {
    const auto stem_begin = overlay_path.find_last_of("/\\") + 1;
    const auto stem_end = overlay_path.find_last_of('.');
    const std::string stem = overlay_path.substr(
        stem_begin, stem_end == std::string::npos ? std::string::npos : stem_end - stem_begin);
    overlay = hybeam::io::overlay_from_csv(read_file(overlay_path), stem);
  }

  hybeam::sim::SweepDetail detail;
  auto curves = hybeam::sim::run_sweep(scenario, opts.as_json ? &detail : nullptr, opts.threads);
  const double scale = opts.no_half_prefactor ? 2.0 : 1.0;
  for (auto& c : curves) {
    c.mean_sum_rate *= scale;
    c.std_err *= scale;
  }
  curves.insert(curves.end(), overlay.begin(), overlay.end());

  if (opts.as_json) {
    json trials = json::array();
    for (const auto& t : detail.trials) {
      json entry{{"scheme", t.scheme},     {"snr_db", t.snr_db},
                 {"trial", t.trial},       {"seed", t.seed},
                 {"sum_rate", t.sum_rate * scale}, {"iters_used", t.iters_used},
                 {"converged", t.converged}};
      if (!t.objective_trace.empty()) {
        auto trace = t.objective_trace;
        for (auto& v : trace) v *= scale;
        entry["objective_trace"] = trace;
      }
      trials.push_back(std::move(entry));
    }
    json curves_json = json::array();
    for (const auto& c : curves)
      curves_json.push_back({{"scheme", c.scheme},
                             {"snr_db", c.snr_db},
                             {"mean_sum_rate", c.mean_sum_rate},
                             {"std_err", c.std_err},
                             {"n_trials", c.n_trials}});
    const json out{{"scenario", hybeam::io::scenario_to_json(scenario)},
                   {"curves", curves_json},
                   {"trials", trials}};
    write_output(opts, out.dump(2) + "\n");
  } else {
    write_output(opts, hybeam::io::curves_to_csv(curves));
  }
  return 0;
}

int run_converge_cmd(const CommonOptions& opts, double snr_db) {
  const auto scenario = load_scenario(opts);
  const auto traces = hybeam::sim::run_convergence(scenario, snr_db, opts.threads);
  const double scale = opts.no_half_prefactor ? 2.0 : 1.0;

  if (opts.as_json) {
    json traces_json = json::array();
    for (const auto& t : traces) {
      auto series = t.objective_per_iter;
      for (auto& v : series) v *= scale;
      traces_json.push_back({{"objective_per_iter", series},
                             {"converged", t.converged},
                             {"iters_used", t.iters_used},
                             {"duality_gap", t.duality_gap}});
    }
    const json out{{"scenario", hybeam::io::scenario_to_json(scenario)},
                   {"snr_db", snr_db},
                   {"traces", traces_json}};
    write_output(opts, out.dump(2) + "\n");
  } else {
    std::string csv = "trial,step,objective\n";
    char buffer[64];
    for (std::size_t trial = 0; trial < traces.size(); ++trial)
      for (std::size_t step = 0; step < traces[trial].objective_per_iter.size(); ++step) {
        std::snprintf(buffer, sizeof(buffer), "%zu,%zu,%.12g\n", trial, step,
                      traces[trial].objective_per_iter[step] * scale);
        csv += buffer;
      }
    write_output(opts, csv);
  }
  return 0;
}

int run_duality_cmd(const CommonOptions& opts, double snr_db) {
  const auto scenario = load_scenario(opts);
  const auto reports = hybeam::sim::run_duality_check(scenario, snr_db, opts.threads);
  json reports_json = json::array();
  for (const auto& r : reports) reports_json.push_back(hybeam::io::report_to_json(r));
  const json out{{"scenario", hybeam::io::scenario_to_json(scenario)},
                 {"snr_db", snr_db},
                 {"reports", reports_json}};
  write_output(opts, out.dump(2) + "\n");
  return 0;
}

int run_factorize_cmd(const CommonOptions& opts, double snr_db, hybeam::Index n_rf, int bits,
                      int trial) {
  auto scenario = load_scenario(opts);
  const std::uint64_t seed = scenario.base_seed + static_cast<std::uint64_t>(trial);
  const auto h = hybeam::channel::sample_channel<double>(
      scenario.dims.num_users, scenario.dims.bs_antennas, scenario.dims.user_antennas,
      scenario.paths, seed);
  const double power = hybeam::sim::snr_db_to_power(snr_db);
  const auto solved = hybeam::optimizer::solve(h, scenario.dims, power, scenario.solver);

  if (n_rf <= 0)
    n_rf = scenario.factorization.has_value() && scenario.factorization->n_rf > 0
               ? scenario.factorization->n_rf
               : scenario.dims.bs_rf_chains;
  if (bits < 0) bits = scenario.factorization.has_value() ? scenario.factorization->bits : 0;

  auto f_v = hybeam::hybrid::factor(solved.precoder.matrix, n_rf);
  if (bits > 0) f_v = hybeam::hybrid::quantize_phases(f_v, bits, solved.precoder.matrix);
  std::vector<hybeam::hybrid::HybridFactor<double>> f_w;
  json combiners = json::array();
  for (const auto& wk : solved.combiners.per_user) {
    auto f = hybeam::hybrid::factor(wk, scenario.dims.user_rf_chains);
    if (bits > 0) f = hybeam::hybrid::quantize_phases(f, bits, wk);
    combiners.push_back(hybeam::io::factor_to_json(f));
    f_w.push_back(std::move(f));
  }

  const double scale = opts.no_half_prefactor ? 2.0 : 1.0;
  const double unfactored = solved.trace.objective_per_iter.back();
  const double factored = hybeam::hybrid::rate_with_factors(h, f_v, f_w, solved.covariances);
  const auto vq = f_v.reconstruct();
  const double gram_deviation =
      (vq.adjoint() * vq - hybeam::CMat<double>::Identity(vq.cols(), vq.cols())).norm();

  const json out{{"scenario", hybeam::io::scenario_to_json(scenario)},
                 {"snr_db", snr_db},
                 {"seed", seed},
                 {"n_rf", n_rf},
                 {"bits", bits},
                 {"precoder_factor", hybeam::io::factor_to_json(f_v)},
                 {"combiner_factors", combiners},
                 {"sum_rate_unfactored", unfactored * scale},
                 {"sum_rate_factored", factored * scale},
                 {"precoder_gram_deviation", gram_deviation}};
  write_output(opts, out.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid beamforming sum-rate experiments"};
  app.require_subcommand(1);

  CommonOptions sweep_opts, converge_opts, duality_opts, factorize_opts;
  std::string overlay_path;
  double converge_snr = 10.0, duality_snr = 10.0, factorize_snr = 10.0;
  hybeam::Index factorize_n_rf = 0;
  int factorize_bits = -1;
  int factorize_trial = 0;

  auto* sweep = app.add_subcommand("sweep", "Average sum rate versus SNR");
  add_common(sweep, &sweep_opts);
  sweep->add_option("--overlay", overlay_path,
                    "CSV overlay curve (header row, columns snr_db,sum_rate)");

  auto* converge = app.add_subcommand("converge", "Objective trace per iteration");
  add_common(converge, &converge_opts);
  converge->add_option("--snr-db", converge_snr, "Operating SNR in dB");

  auto* duality = app.add_subcommand("duality", "Uplink/downlink duality audit");
  add_common(duality, &duality_opts);
  duality->add_option("--snr-db", duality_snr, "Operating SNR in dB");

  auto* factorize = app.add_subcommand("factorize", "Analog/digital beamformer factors");
  add_common(factorize, &factorize_opts);
  factorize->add_option("--snr-db", factorize_snr, "Operating SNR in dB");
  factorize->add_option("--n-rf", factorize_n_rf, "Transmit RF chains for the split");
  factorize->add_option("--bits", factorize_bits, "Phase shifter bits (0: unquantized)");
  factorize->add_option("--trial", factorize_trial, "Trial index (seed = base_seed + trial)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sweep->parsed()) return run_sweep_cmd(sweep_opts, overlay_path);
    if (converge->parsed()) return run_converge_cmd(converge_opts, converge_snr);
    if (duality->parsed()) return run_duality_cmd(duality_opts, duality_snr);
    return run_factorize_cmd(factorize_opts, factorize_snr, factorize_n_rf, factorize_bits,
                             factorize_trial);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
