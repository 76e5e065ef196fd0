// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "hybeam/types.hpp"

// Numerical linear-algebra primitives shared by all modules. Contracts:
//  - singular/eigen values are always returned in descending order;
//  - rank decisions use a relative threshold sigma_i > tol * sigma_max;
//  - nominally Hermitian inputs are symmetrized before factorization.
namespace hybeam::kernels {

/// Rank-truncated SVD: m = left * diag(singular_values) * right^H, keeping
/// only singular values above rank_tol * sigma_max.
template <typename Real>
struct ReducedSvd {
  CMat<Real> left;              // m x r, semi-unitary
  RVec<Real> singular_values;   // length r, strictly positive, descending
  CMat<Real> right;             // n x r, semi-unitary

  Index rank() const { return singular_values.size(); }
};

template <typename Real>
struct HermitianEig {
  RVec<Real> values;        // descending
  CMat<Real> vectors;       // unitary, columns paired with values
};

template <typename Derived>
ReducedSvd<typename Derived::RealScalar> reduced_svd(
    const Eigen::MatrixBase<Derived>& m, typename Derived::RealScalar rank_tol) {
  using Real = typename Derived::RealScalar;
  if (rank_tol <= Real(0)) throw std::invalid_argument("reduced_svd: rank_tol must be > 0");
  CMat<Real> a = m.template cast<std::complex<Real>>();
  if (a.rows() < 1 || a.cols() < 1) throw std::invalid_argument("reduced_svd: empty matrix");
  if (!a.allFinite()) throw std::invalid_argument("reduced_svd: input has NaN/Inf entries");

  Eigen::JacobiSVD<CMat<Real>> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVec<Real>& sigma = svd.singularValues();
  const Real sigma_max = sigma.size() > 0 ? sigma(0) : Real(0);

  Index r = 0;
  while (r < sigma.size() && sigma(r) > rank_tol * sigma_max && sigma(r) > Real(0)) ++r;

  ReducedSvd<Real> out;
  out.left = svd.matrixU().leftCols(r);
  out.singular_values = sigma.head(r);
  out.right = svd.matrixV().leftCols(r);
  return out;
}

/// Eigendecomposition of a Hermitian matrix; the input is symmetrized as
/// (m + m^H)/2 to absorb roundoff from chained factorizations.
template <typename Derived>
HermitianEig<typename Derived::RealScalar> hermitian_eig(const Eigen::MatrixBase<Derived>& m) {
  using Real = typename Derived::RealScalar;
  if (m.rows() != m.cols()) throw std::invalid_argument("hermitian_eig: matrix must be square");
  CMat<Real> a = m.template cast<std::complex<Real>>();
  if (!a.allFinite()) throw std::invalid_argument("hermitian_eig: input has NaN/Inf entries");
  CMat<Real> sym = (a + a.adjoint()) / Real(2);

  Eigen::SelfAdjointEigenSolver<CMat<Real>> solver(sym);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("hermitian_eig: eigensolver failed to converge");

  HermitianEig<Real> out;
  out.values = solver.eigenvalues().reverse();          // ascending -> descending
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

/// Hermitian PSD power for exponent +1/2 or -1/2. For -1/2, eigenvalues at or
/// below tol * lambda_max are pseudo-inverted to zero. Eigenvalues below
/// -tol * lambda_max are rejected as not positive semidefinite.
template <typename Derived>
CMat<typename Derived::RealScalar> psd_power(const Eigen::MatrixBase<Derived>& m,
                                             typename Derived::RealScalar exponent,
                                             typename Derived::RealScalar tol) {
  using Real = typename Derived::RealScalar;
  if (exponent != Real(0.5) && exponent != Real(-0.5))
    throw std::invalid_argument("psd_power: exponent must be +1/2 or -1/2");
  auto eig = hermitian_eig(m);
  const Real lambda_max = eig.values.size() > 0 ? eig.values(0) : Real(0);

  RVec<Real> mapped(eig.values.size());
  for (Index i = 0; i < eig.values.size(); ++i) {
    const Real lambda = eig.values(i);
    if (lambda < -tol * std::abs(lambda_max))
      throw std::domain_error("psd_power: matrix is not positive semidefinite");
    if (exponent == Real(0.5)) {
      mapped(i) = std::sqrt(std::max(lambda, Real(0)));
    } else {
      mapped(i) = lambda > tol * lambda_max ? Real(1) / std::sqrt(lambda) : Real(0);
    }
  }
  CMat<Real> out = eig.vectors * mapped.asDiagonal() * eig.vectors.adjoint();
  return ((out + out.adjoint()) / Real(2)).eval();
}

/// Moore-Penrose pseudo-inverse via the reduced SVD.
template <typename Derived>
CMat<typename Derived::RealScalar> pseudo_inverse(const Eigen::MatrixBase<Derived>& m,
                                                  typename Derived::RealScalar tol) {
  using Real = typename Derived::RealScalar;
  auto svd = reduced_svd(m, tol);
  if (svd.rank() == 0) return CMat<Real>::Zero(m.cols(), m.rows());
  return svd.right * svd.singular_values.cwiseInverse().asDiagonal() * svd.left.adjoint();
}

/// Water-filling power allocation: p_i = max(0, mu - 1/g_i) with the level mu
/// chosen so the allocations sum to the budget. Channels with zero gain get
/// zero power. Maximizes sum_i log(1 + g_i p_i).
template <typename Derived>
RVec<typename Derived::RealScalar> waterfill(const Eigen::MatrixBase<Derived>& gains,
                                             typename Derived::RealScalar budget) {
  using Real = typename Derived::RealScalar;
  static_assert(!Eigen::NumTraits<typename Derived::Scalar>::IsComplex,
                "waterfill: gains must be real");
  const Index n = gains.size();
  if (n < 1) throw std::invalid_argument("waterfill: empty gain vector");
  RVec<Real> g = gains;
  if (!g.allFinite() || (g.array() < Real(0)).any())
    throw std::invalid_argument("waterfill: gains must be finite and nonnegative");
  if (budget < Real(0)) throw std::invalid_argument("waterfill: budget must be >= 0");

  RVec<Real> p = RVec<Real>::Zero(n);
  if (budget == Real(0)) return p;

  std::vector<Index> live;
  for (Index i = 0; i < n; ++i)
    if (g(i) > Real(0)) live.push_back(i);
  if (live.empty()) throw std::domain_error("waterfill: positive budget but all gains are zero");

  std::sort(live.begin(), live.end(), [&](Index a, Index b) { return g(a) > g(b); });

  // Shrink the active set until the water level covers its weakest channel.
  Index active = static_cast<Index>(live.size());
  Real level = Real(0);
  while (active > 0) {
    Real inv_sum = Real(0);
    for (Index i = 0; i < active; ++i) inv_sum += Real(1) / g(live[i]);
    level = (budget + inv_sum) / Real(active);
    if (level >= Real(1) / g(live[active - 1])) break;
    --active;
  }
  for (Index i = 0; i < active; ++i) {
    const Index idx = live[i];
    p(idx) = std::max(Real(0), level - Real(1) / g(idx));
  }
  return p;
}

/// log2 det of a Hermitian positive definite matrix via Cholesky.
template <typename Derived>
typename Derived::RealScalar log2_det_hpd(const Eigen::MatrixBase<Derived>& m) {
  using Real = typename Derived::RealScalar;
  CMat<Real> a = m.template cast<std::complex<Real>>();
  CMat<Real> sym = (a + a.adjoint()) / Real(2);
  Eigen::LLT<CMat<Real>> llt(sym);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("log2_det_hpd: matrix is not positive definite");
  Real acc = Real(0);
  for (Index i = 0; i < sym.rows(); ++i) acc += std::log2(std::real(llt.matrixLLT()(i, i)));
  return Real(2) * acc;
}

}  // namespace hybeam::kernels
