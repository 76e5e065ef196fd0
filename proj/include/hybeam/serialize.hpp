// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "hybeam/channel.hpp"
#include "hybeam/duality.hpp"
#include "hybeam/experiments.hpp"
#include "hybeam/factorization.hpp"

// JSON/CSV views of the public artifacts. Complex entries are serialized as
// [re, im] pairs in row-major order; analog beamformers as phase arrays in
// radians.
namespace hybeam::io {

using json = nlohmann::json;

json matrix_to_json(const CMat<double>& m);
CMat<double> matrix_from_json(const json& j);

json channel_to_json(const channel::ChannelSet<double>& set);
json factor_to_json(const hybrid::HybridFactor<double>& f);
json report_to_json(const duality::DualityReport<double>& report);

json scenario_to_json(const sim::Scenario& scenario);
sim::Scenario scenario_from_json(const json& j);

/// Fixed schema: scheme,snr_db,mean_sum_rate,std_err,n_trials.
std::string curves_to_csv(const std::vector<sim::CurveRecord>& records);

/// Overlay curves: one header row, columns snr_db,sum_rate.
std::vector<sim::CurveRecord> overlay_from_csv(const std::string& text,
                                               const std::string& scheme_name);

}  // namespace hybeam::io
