// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "hybeam/kernels.hpp"
#include "hybeam/optimizer.hpp"
#include "hybeam/rates.hpp"
#include "hybeam/types.hpp"

// Reference schemes the optimized design is compared against.
namespace hybeam::baselines {

template <typename Real>
struct BaselineResult {
  std::string name;
  Real sum_rate = Real(0);
  std::map<std::string, Real> details;
};

enum class CapacityMode { point_to_point, mac_sum_capacity };

/// Equal-power reference: the precoder/combiner updates run as in the full
/// solver, but every covariance stays frozen at (P/N_s) * I. Stops under the
/// solver's stopping rule and reports the resulting uplink sum rate.
template <typename Real>
BaselineResult<Real> identity_covariance_rate(const channel::ChannelSet<Real>& h,
                                              const SystemDims& dims, Real budget,
                                              const optimizer::SolveOptions<Real>& opts = {}) {
  dims.validate();
  if (budget < Real(0))
    throw std::invalid_argument("identity_covariance_rate: negative power budget");

  BaselineResult<Real> out;
  out.name = "identity_cov";
  if (budget == Real(0)) {
    out.details["iters"] = Real(0);
    return out;
  }

  const auto point = optimizer::equal_power_point(h, dims, budget, opts);
  out.sum_rate = rates::mac_sum_rate(h, point.precoder, point.combiners, point.covariances);
  out.details["iters"] = static_cast<Real>(point.trace.iters_used);
  out.details["converged"] = point.trace.converged ? Real(1) : Real(0);
  return out;
}

/// Unconstrained-hardware capacity references. point_to_point (single user):
/// waterfilling over the squared singular values of the channel.
/// mac_sum_capacity: shared-budget iterative waterfilling over the raw
/// channels with full M x M covariances, the upper bound for any d-stream
/// hybrid design.
template <typename Real>
BaselineResult<Real> fully_digital_capacity(const channel::ChannelSet<Real>& h, Real budget,
                                            CapacityMode mode, Real rank_tol = Real(1e-9)) {
  if (budget < Real(0)) throw std::invalid_argument("fully_digital_capacity: negative budget");
  BaselineResult<Real> out;
  out.name = "fully_digital";

  if (mode == CapacityMode::point_to_point) {
    if (h.num_users() != 1)
      throw std::invalid_argument("fully_digital_capacity: point_to_point requires one user");
    const auto svd = kernels::reduced_svd(h.per_user.front(), rank_tol);
    out.details["modes"] = static_cast<Real>(svd.rank());
    if (svd.rank() == 0 || budget == Real(0)) return out;
    const RVec<Real> gains = svd.singular_values.array().square();
    const RVec<Real> powers = kernels::waterfill(gains, budget);
    Real rate = Real(0);
    for (Index i = 0; i < gains.size(); ++i)
      rate += std::log2(Real(1) + gains(i) * powers(i)) / Real(2);
    out.sum_rate = rate;
    return out;
  }

  optimizer::IwfOptions<Real> iwf;
  iwf.max_cycles = 500;
  iwf.objective_tol = Real(1e-13);
  iwf.rank_tol = rank_tol;
  const auto covs = optimizer::sum_power_waterfilling(h.per_user, budget, iwf);
  out.sum_rate = optimizer::coupled_objective(h.per_user, covs);
  return out;
}

}  // namespace hybeam::baselines
