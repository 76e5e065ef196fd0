// SPDX-License-Identifier: Apache-2.0
#include "hybeam/serialize.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace hybeam::io {

namespace {

std::string format_double(double v) {
  char buffer[48];
  std::snprintf(buffer, sizeof(buffer), "%.12g", v);
  return buffer;
}

}  // namespace

json matrix_to_json(const CMat<double>& m) {
  json entries = json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      entries.push_back({m(i, j).real(), m(i, j).imag()});
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"entries", entries}};
}

CMat<double> matrix_from_json(const json& j) {
  const Index rows = j.at("rows").get<Index>();
  const Index cols = j.at("cols").get<Index>();
  const auto& entries = j.at("entries");
  if (static_cast<Index>(entries.size()) != rows * cols)
    throw std::invalid_argument("matrix_from_json: entry count mismatch");
  CMat<double> m(rows, cols);
  Index flat = 0;
  for (Index i = 0; i < rows; ++i)
    for (Index j2 = 0; j2 < cols; ++j2, ++flat)
      m(i, j2) = Complex<double>(entries[flat][0].get<double>(), entries[flat][1].get<double>());
  return m;
}

json channel_to_json(const channel::ChannelSet<double>& set) {
  json users = json::array();
  for (Index k = 0; k < set.num_users(); ++k) {
    const auto& paths = set.path_sets[k];
    json gains = json::array();
    for (Index l = 0; l < paths.count(); ++l)
      gains.push_back({paths.gains(l).real(), paths.gains(l).imag()});
    users.push_back({{"matrix", matrix_to_json(set.per_user[k])},
                     {"angles_of_departure",
                      std::vector<double>(paths.angles_of_departure.begin(),
                                          paths.angles_of_departure.end())},
                     {"angles_of_arrival",
                      std::vector<double>(paths.angles_of_arrival.begin(),
                                          paths.angles_of_arrival.end())},
                     {"gains", gains}});
  }
  return json{{"num_users", set.num_users()},
              {"rx_antennas", set.rx_antennas()},
              {"tx_antennas", set.tx_antennas()},
              {"seed", set.seed},
              {"users", users}};
}

json factor_to_json(const hybrid::HybridFactor<double>& f) {
  json phases = json::array();
  for (Index i = 0; i < f.analog_phases.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < f.analog_phases.cols(); ++j) row.push_back(f.analog_phases(i, j));
    phases.push_back(row);
  }
  return json{{"analog_phases_rad", phases},
              {"digital", matrix_to_json(f.digital)},
              {"reconstruction_error", f.reconstruction_error}};
}

json report_to_json(const duality::DualityReport<double>& report) {
  return json{{"per_user_rate_gap",
               std::vector<double>(report.per_user_rate_gap.begin(),
                                   report.per_user_rate_gap.end())},
              {"power_bc", report.power_bc},
              {"power_mac", report.power_mac},
              {"max_gap", report.max_gap},
              {"truncated_users", report.truncated_users}};
}

json scenario_to_json(const sim::Scenario& s) {
  json j{{"dims",
          {{"num_users", s.dims.num_users},
           {"bs_antennas", s.dims.bs_antennas},
           {"user_antennas", s.dims.user_antennas},
           {"streams_per_user", s.dims.streams_per_user},
           {"bs_rf_chains", s.dims.bs_rf_chains},
           {"user_rf_chains", s.dims.user_rf_chains}}},
         {"paths", s.paths},
         {"snr_grid_db", s.snr_grid_db},
         {"n_trials", s.n_trials},
         {"base_seed", s.base_seed},
         {"schemes", s.schemes},
         {"solver",
          {{"max_outer_iters", s.solver.max_outer_iters},
           {"objective_tol", s.solver.objective_tol},
           {"inner_waterfill_iters", s.solver.inner_waterfill_iters},
           {"rank_tol", s.solver.rank_tol}}}};
  if (s.factorization.has_value())
    j["factorization"] = {{"n_rf", s.factorization->n_rf}, {"bits", s.factorization->bits}};
  return j;
}

sim::Scenario scenario_from_json(const json& j) {
  sim::Scenario s;
  const auto& dims = j.at("dims");
  s.dims.num_users = dims.at("num_users").get<Index>();
  s.dims.bs_antennas = dims.at("bs_antennas").get<Index>();
  s.dims.user_antennas = dims.at("user_antennas").get<Index>();
  s.dims.streams_per_user = dims.at("streams_per_user").get<Index>();
  s.dims.bs_rf_chains = dims.value("bs_rf_chains", Index(2) * s.dims.total_streams());
  s.dims.user_rf_chains = dims.value("user_rf_chains", Index(2) * s.dims.streams_per_user);

  s.paths = j.value("paths", Index(15));
  s.snr_grid_db = j.value("snr_grid_db", std::vector<double>{});
  s.n_trials = j.value("n_trials", 100);
  s.base_seed = j.value("base_seed", std::uint64_t(1));
  s.schemes = j.value("schemes",
                      std::vector<std::string>{"proposed", "identity_cov", "fully_digital"});
  if (j.contains("factorization") && !j.at("factorization").is_null()) {
    sim::FactorizationConfig f;
    f.n_rf = j.at("factorization").value("n_rf", Index(0));
    f.bits = j.at("factorization").value("bits", 0);
    s.factorization = f;
  }
  if (j.contains("solver")) {
    const auto& solver = j.at("solver");
    s.solver.max_outer_iters = solver.value("max_outer_iters", s.solver.max_outer_iters);
    s.solver.objective_tol = solver.value("objective_tol", s.solver.objective_tol);
    s.solver.inner_waterfill_iters =
        solver.value("inner_waterfill_iters", s.solver.inner_waterfill_iters);
    s.solver.rank_tol = solver.value("rank_tol", s.solver.rank_tol);
  }
  return s;
}

std::string curves_to_csv(const std::vector<sim::CurveRecord>& records) {
  std::string out = "scheme,snr_db,mean_sum_rate,std_err,n_trials\n";
  for (const auto& r : records) {
    out += r.scheme;
    out += ',';
    out += format_double(r.snr_db);
    out += ',';
    out += format_double(r.mean_sum_rate);
    out += ',';
    out += format_double(r.std_err);
    out += ',';
    out += std::to_string(r.n_trials);
    out += '\n';
  }
  return out;
}

std::vector<sim::CurveRecord> overlay_from_csv(const std::string& text,
                                               const std::string& scheme_name) {
  std::vector<sim::CurveRecord> records;
  std::istringstream stream(text);
  std::string line;
  bool header = true;
  while (std::getline(stream, line)) {
    if (line.empty()) continue;
    if (header) {  // one header row expected
      header = false;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("overlay_from_csv: expected snr_db,sum_rate rows");
    sim::CurveRecord r;
    r.scheme = scheme_name;
    r.snr_db = std::stod(line.substr(0, comma));
    r.mean_sum_rate = std::stod(line.substr(comma + 1));
    r.std_err = 0.0;
    r.n_trials = 0;
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace hybeam::io
