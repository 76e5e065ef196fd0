// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include "hybeam/rates.hpp"
#include "hybeam/rng.hpp"
#include "hybeam/types.hpp"

// Seeded generators for test fixtures.
namespace hybeam::testing {

inline CMat<double> random_complex_matrix(RandomStream& rs, Index rows, Index cols) {
  CMat<double> m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = rs.complex_gaussian();
  return m;
}

/// Thin Q factor of a random Gaussian matrix; rows >= cols required.
inline CMat<double> random_semi_unitary(RandomStream& rs, Index rows, Index cols) {
  const CMat<double> a = random_complex_matrix(rs, rows, cols);
  Eigen::HouseholderQR<CMat<double>> qr(a);
  return qr.householderQ() * CMat<double>::Identity(rows, cols);
}

/// Random Hermitian PSD matrix scaled to the requested trace.
inline CMat<double> random_psd(RandomStream& rs, Index n, double trace) {
  const CMat<double> a = random_complex_matrix(rs, n, n + 2);
  CMat<double> p = a * a.adjoint();
  p = (p + p.adjoint()) / 2.0;
  const double t = p.real().trace();
  if (t > 0.0 && trace > 0.0) p *= trace / t;
  if (trace == 0.0) p.setZero();
  return p;
}

/// Random feasible triple: semi-unitary precoder and combiners, PSD
/// covariances with total trace exactly `budget`.
struct FeasibleTriple {
  rates::Precoder<double> precoder;
  rates::CombinerSet<double> combiners;
  rates::CovarianceSet<double> covariances;
};

inline FeasibleTriple random_feasible_triple(RandomStream& rs, const SystemDims& dims,
                                             double budget) {
  FeasibleTriple t;
  t.precoder.matrix = random_semi_unitary(rs, dims.bs_antennas, dims.total_streams());
  t.combiners.per_user.reserve(dims.num_users);
  t.covariances.per_user.reserve(dims.num_users);
  t.covariances.budget = budget;
  for (Index k = 0; k < dims.num_users; ++k) {
    t.combiners.per_user.push_back(
        random_semi_unitary(rs, dims.user_antennas, dims.streams_per_user));
    t.covariances.per_user.push_back(
        random_psd(rs, dims.streams_per_user, budget / static_cast<double>(dims.num_users)));
  }
  // Tighten the total power to the budget exactly.
  double total = t.covariances.total_power();
  if (total > 0.0)
    for (auto& q : t.covariances.per_user) q *= budget / total;
  return t;
}

}  // namespace hybeam::testing
