// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "hybeam/kernels.hpp"
#include "hybeam/rates.hpp"
#include "hybeam/types.hpp"

// Uplink-to-downlink covariance transformation. Given semi-unitary
// beamformers, every uplink covariance set maps to a downlink set achieving
// the same per-user rates with the same total power.
namespace hybeam::duality {

template <typename Real>
struct DualityReport {
  RVec<Real> per_user_rate_gap;  // |R_bc_j - R_mac_j| per user
  Real power_bc = Real(0);       // sum of downlink covariance traces
  Real power_mac = Real(0);      // sum of uplink covariance traces
  Real max_gap = Real(0);
  std::vector<Index> truncated_users;  // users whose covariance rank exceeded
                                       // the whitened channel rank
};

/// Transforms uplink covariances to downlink covariances, user by user in
/// increasing index order (user j's interference whitener depends on the
/// already-transformed covariances of users 0..j-1). Per user the recipe is:
/// whiten the effective channel on both sides, take its reduced SVD
/// F Lambda G^H, and rotate the uplink covariance through
/// B^{-1/2} F G^H A^{+1/2} ... A^{+1/2} G F^H B^{-1/2}.
template <typename Real>
rates::BcCovarianceSet<Real> mac_to_bc(const channel::ChannelSet<Real>& h,
                                       const rates::Precoder<Real>& v,
                                       const rates::CombinerSet<Real>& w,
                                       const rates::CovarianceSet<Real>& q,
                                       std::vector<Index>* truncated = nullptr,
                                       Real rank_tol = Real(1e-9)) {
  const Index num_users = h.num_users();
  const Index ns = v.matrix.cols();
  if (static_cast<Index>(q.per_user.size()) != num_users)
    throw std::invalid_argument("mac_to_bc: covariance count does not match user count");

  rates::BcCovarianceSet<Real> out;
  out.budget = q.budget;
  out.per_user.assign(num_users, CMat<Real>::Zero(ns, ns));

  for (Index j = 0; j < num_users; ++j) {
    const CMat<Real> b = rates::mac_interference_cov(j, h, v, w, q);
    const CMat<Real> a = rates::bc_interference_cov(j, h, v, w, out);
    // Both are identity plus a Hermitian form, hence positive definite.
    if (kernels::hermitian_eig(a).values.minCoeff() <= Real(1e-10) ||
        kernels::hermitian_eig(b).values.minCoeff() <= Real(1e-10))
      throw std::runtime_error("mac_to_bc: interference covariance lost definiteness");

    const CMat<Real> b_isqrt = kernels::psd_power(b, Real(-0.5), rank_tol);
    const CMat<Real> a_isqrt = kernels::psd_power(a, Real(-0.5), rank_tol);
    const CMat<Real> a_sqrt = kernels::psd_power(a, Real(0.5), rank_tol);

    const CMat<Real> eff = rates::effective_channel(h, v, w, j);  // d x N_s
    const CMat<Real> whitened = b_isqrt * eff.adjoint() * a_isqrt;  // N_s x d
    const auto svd = kernels::reduced_svd(whitened, rank_tol);

    const Index q_rank = kernels::reduced_svd(q.per_user[j], rank_tol).rank();
    if (svd.rank() < q_rank && truncated != nullptr) truncated->push_back(j);

    const CMat<Real> rotate = b_isqrt * svd.left * svd.right.adjoint() * a_sqrt;  // N_s x d
    CMat<Real> d = rotate * q.per_user[j] * rotate.adjoint();
    out.per_user[j] = ((d + d.adjoint()) / Real(2)).eval();
  }
  return out;
}

/// Evaluates both rate stacks and both power totals for a transformed pair.
template <typename Real>
DualityReport<Real> verify_duality(const channel::ChannelSet<Real>& h,
                                   const rates::Precoder<Real>& v,
                                   const rates::CombinerSet<Real>& w,
                                   const rates::CovarianceSet<Real>& q,
                                   const rates::BcCovarianceSet<Real>& d) {
  const Index num_users = h.num_users();
  DualityReport<Real> report;
  report.per_user_rate_gap.resize(num_users);
  for (Index j = 0; j < num_users; ++j) {
    const Real r_mac = rates::mac_user_rate(j, h, v, w, q);
    const Real r_bc = rates::bc_user_rate(j, h, v, w, d);
    report.per_user_rate_gap(j) = std::abs(r_bc - r_mac);
  }
  report.power_mac = q.total_power();
  report.power_bc = d.total_power();
  report.max_gap = num_users > 0 ? report.per_user_rate_gap.maxCoeff() : Real(0);
  return report;
}

}  // namespace hybeam::duality
