// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hybeam/duality.hpp"
#include "hybeam/optimizer.hpp"
#include "hybeam/types.hpp"

// Monte-Carlo drivers: SNR sweeps, convergence traces and duality audits.
// Trials are paired across schemes (seed = base_seed + trial index) and
// aggregation is done in trial order, so outputs are reproducible
// byte-for-byte on a given platform.
namespace hybeam::sim {

struct FactorizationConfig {
  Index n_rf = 0;  // transmit RF chains used for the analog/digital split
  int bits = 0;    // phase-shifter resolution; 0 keeps phases unquantized
};

struct Scenario {
  SystemDims dims;
  Index paths = 15;  // scatterers per user
  std::vector<double> snr_grid_db;
  int n_trials = 100;
  std::uint64_t base_seed = 1;
  std::vector<std::string> schemes{"proposed", "identity_cov", "fully_digital"};
  std::optional<FactorizationConfig> factorization;
  optimizer::SolveOptions<double> solver;
};

struct CurveRecord {
  std::string scheme;
  double snr_db = 0.0;
  double mean_sum_rate = 0.0;
  double std_err = 0.0;
  int n_trials = 0;
};

struct TrialRecord {
  std::string scheme;
  double snr_db = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  double sum_rate = 0.0;
  int iters_used = 0;
  bool converged = true;
  std::vector<double> objective_trace;  // populated for the optimized scheme
};

struct SweepDetail {
  std::vector<TrialRecord> trials;
};

/// Throws std::invalid_argument on malformed scenarios (unknown scheme
/// labels, empty grids, bad counts) before any computation starts.
void validate_scenario(const Scenario& scenario);

/// SNR (dB) to linear power with unit-variance noise; floors the grid at
/// -60 dB so vanishing-power points stay finite.
double snr_db_to_power(double snr_db);

std::vector<CurveRecord> run_sweep(const Scenario& scenario, SweepDetail* detail = nullptr,
                                   unsigned threads = 0);

std::vector<optimizer::SolveTrace<double>> run_convergence(const Scenario& scenario,
                                                           double snr_db, unsigned threads = 0);

std::vector<duality::DualityReport<double>> run_duality_check(const Scenario& scenario,
                                                              double snr_db,
                                                              unsigned threads = 0);

}  // namespace hybeam::sim
