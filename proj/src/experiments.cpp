// SPDX-License-Identifier: Apache-2.0
#include "hybeam/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

#include "hybeam/baselines.hpp"
#include "hybeam/channel.hpp"
#include "hybeam/factorization.hpp"

namespace hybeam::sim {

namespace {

constexpr double kMinSnrDb = -60.0;

const std::set<std::string>& known_schemes() {
  static const std::set<std::string> schemes{"proposed", "identity_cov", "fully_digital"};
  return schemes;
}

/// Runs fn(0..n-1) on a small worker pool; results must be written to
/// per-index slots so the outcome does not depend on scheduling.
void parallel_for(int n, unsigned threads, const std::function<void(int)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max(1, n)));
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

struct TrialOutput {
  std::vector<TrialRecord> records;  // fixed (snr, scheme) order within a trial
};

/// Rates for every (snr, scheme) pair of one trial, on one sampled channel.
TrialOutput run_trial(const Scenario& scenario, int trial) {
  const std::uint64_t seed = scenario.base_seed + static_cast<std::uint64_t>(trial);
  const auto h = channel::sample_channel<double>(
      scenario.dims.num_users, scenario.dims.bs_antennas, scenario.dims.user_antennas,
      scenario.paths, seed);

  const bool wants_proposed =
      std::find(scenario.schemes.begin(), scenario.schemes.end(), "proposed") !=
      scenario.schemes.end();
  const bool wants_factored = wants_proposed && scenario.factorization.has_value();

  TrialOutput out;
  for (double snr_db : scenario.snr_grid_db) {
    const double power = snr_db_to_power(snr_db);

    std::optional<optimizer::SolveResult<double>> solved;
    if (wants_proposed)
      solved = optimizer::solve(h, scenario.dims, power, scenario.solver);

    for (const auto& scheme : scenario.schemes) {
      TrialRecord record;
      record.scheme = scheme;
      record.snr_db = snr_db;
      record.trial = trial;
      record.seed = seed;
      if (scheme == "proposed") {
        record.sum_rate = solved->trace.objective_per_iter.back();
        record.iters_used = solved->trace.iters_used;
        record.converged = solved->trace.converged;
        record.objective_trace = solved->trace.objective_per_iter;
      } else if (scheme == "identity_cov") {
        const auto base =
            baselines::identity_covariance_rate(h, scenario.dims, power, scenario.solver);
        record.sum_rate = base.sum_rate;
        record.iters_used = static_cast<int>(base.details.at("iters"));
        record.converged = base.details.at("converged") != 0.0;
      } else {  // fully_digital
        const auto mode = scenario.dims.num_users == 1
                              ? baselines::CapacityMode::point_to_point
                              : baselines::CapacityMode::mac_sum_capacity;
        record.sum_rate = baselines::fully_digital_capacity(h, power, mode).sum_rate;
      }
      out.records.push_back(std::move(record));
    }

    if (wants_factored) {
      const auto& config = *scenario.factorization;
      const Index n_rf = config.n_rf > 0 ? config.n_rf : scenario.dims.bs_rf_chains;
      auto f_v = hybrid::factor(solved->precoder.matrix, n_rf);
      if (config.bits > 0) f_v = hybrid::quantize_phases(f_v, config.bits, solved->precoder.matrix);
      std::vector<hybrid::HybridFactor<double>> f_w;
      f_w.reserve(solved->combiners.per_user.size());
      for (const auto& wk : solved->combiners.per_user) {
        auto f = hybrid::factor(wk, scenario.dims.user_rf_chains);
        if (config.bits > 0) f = hybrid::quantize_phases(f, config.bits, wk);
        f_w.push_back(std::move(f));
      }
      TrialRecord record;
      record.scheme = "proposed_factored";
      record.snr_db = snr_db;
      record.trial = trial;
      record.seed = seed;
      record.sum_rate = hybrid::rate_with_factors(h, f_v, f_w, solved->covariances);
      record.iters_used = solved->trace.iters_used;
      record.converged = solved->trace.converged;
      out.records.push_back(std::move(record));
    }
  }
  return out;
}

}  // namespace

void validate_scenario(const Scenario& scenario) {
  scenario.dims.validate();
  if (scenario.paths < 1) throw std::invalid_argument("scenario: path count must be >= 1");
  if (scenario.snr_grid_db.empty()) throw std::invalid_argument("scenario: empty SNR grid");
  if (scenario.n_trials < 1) throw std::invalid_argument("scenario: n_trials must be >= 1");
  if (scenario.schemes.empty()) throw std::invalid_argument("scenario: no schemes selected");
  for (const auto& scheme : scenario.schemes)
    if (known_schemes().count(scheme) == 0)
      throw std::invalid_argument("scenario: unknown scheme label '" + scheme + "'");
  if (scenario.factorization.has_value()) {
    const auto& f = *scenario.factorization;
    if (f.n_rf > 0 && f.n_rf < 2 * scenario.dims.total_streams())
      throw std::invalid_argument("scenario: factorization needs two RF chains per stream");
    if (f.bits < 0) throw std::invalid_argument("scenario: negative phase resolution");
  }
}

double snr_db_to_power(double snr_db) {
  return std::pow(10.0, std::max(snr_db, kMinSnrDb) / 10.0);
}

std::vector<CurveRecord> run_sweep(const Scenario& scenario, SweepDetail* detail,
                                   unsigned threads) {
  validate_scenario(scenario);

  std::vector<TrialOutput> outputs(scenario.n_trials);
  parallel_for(scenario.n_trials, threads,
               [&](int trial) { outputs[trial] = run_trial(scenario, trial); });

  std::vector<std::string> ordered_schemes = scenario.schemes;
  if (scenario.factorization.has_value() &&
      std::find(ordered_schemes.begin(), ordered_schemes.end(), "proposed") !=
          ordered_schemes.end())
    ordered_schemes.push_back("proposed_factored");

  std::vector<CurveRecord> curves;
  for (const auto& scheme : ordered_schemes) {
    for (double snr_db : scenario.snr_grid_db) {
      // Accumulate in trial-index order for reproducible floating sums.
      std::vector<double> values;
      values.reserve(scenario.n_trials);
      for (const auto& output : outputs)
        for (const auto& record : output.records)
          if (record.scheme == scheme && record.snr_db == snr_db)
            values.push_back(record.sum_rate);

      CurveRecord curve;
      curve.scheme = scheme;
      curve.snr_db = snr_db;
      curve.n_trials = static_cast<int>(values.size());
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= static_cast<double>(values.size());
      curve.mean_sum_rate = mean;
      if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        curve.std_err = std::sqrt(ss / static_cast<double>(values.size() - 1)) /
                        std::sqrt(static_cast<double>(values.size()));
      }
      curves.push_back(std::move(curve));
    }
  }

  if (detail != nullptr) {
    detail->trials.clear();
    for (auto& output : outputs)
      for (auto& record : output.records) detail->trials.push_back(std::move(record));
  }
  return curves;
}

std::vector<optimizer::SolveTrace<double>> run_convergence(const Scenario& scenario,
                                                           double snr_db, unsigned threads) {
  validate_scenario(scenario);
  const double power = snr_db_to_power(snr_db);
  std::vector<optimizer::SolveTrace<double>> traces(scenario.n_trials);
  parallel_for(scenario.n_trials, threads, [&](int trial) {
    const std::uint64_t seed = scenario.base_seed + static_cast<std::uint64_t>(trial);
    const auto h = channel::sample_channel<double>(
        scenario.dims.num_users, scenario.dims.bs_antennas, scenario.dims.user_antennas,
        scenario.paths, seed);
    traces[trial] = optimizer::solve(h, scenario.dims, power, scenario.solver).trace;
  });
  return traces;
}

std::vector<duality::DualityReport<double>> run_duality_check(const Scenario& scenario,
                                                              double snr_db, unsigned threads) {
  if (scenario.n_trials == 0) return {};
  validate_scenario(scenario);
  const double power = snr_db_to_power(snr_db);
  std::vector<duality::DualityReport<double>> reports(scenario.n_trials);
  parallel_for(scenario.n_trials, threads, [&](int trial) {
    const std::uint64_t seed = scenario.base_seed + static_cast<std::uint64_t>(trial);
    const auto h = channel::sample_channel<double>(
        scenario.dims.num_users, scenario.dims.bs_antennas, scenario.dims.user_antennas,
        scenario.paths, seed);
    const auto solved = optimizer::solve(h, scenario.dims, power, scenario.solver);
    std::vector<Index> truncated;
    const auto bc = duality::mac_to_bc(h, solved.precoder, solved.combiners, solved.covariances,
                                       &truncated, scenario.solver.rank_tol);
    auto report =
        duality::verify_duality(h, solved.precoder, solved.combiners, solved.covariances, bc);
    report.truncated_users = std::move(truncated);
    reports[trial] = std::move(report);
  });
  return reports;
}

}  // namespace hybeam::sim
