// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "hybeam/kernels.hpp"
#include "hybeam/rates.hpp"
#include "hybeam/types.hpp"

// Splits an overall beamformer into a constant-modulus analog matrix and a
// small digital matrix. With two RF chains per stream the split is exact:
// any complex number r*e^{i*phi} with r <= 2*c is the sum of two unit-modulus
// terms c*e^{i*(phi +/- acos(r/(2c)))}.
namespace hybeam::hybrid {

template <typename Real>
struct HybridFactor {
  RMat<Real> analog_phases;     // N x N_rf, radians in [0, 2*pi)
  CMat<Real> digital;           // N_rf x N_s
  Real reconstruction_error = Real(0);  // Frobenius distance to the target

  /// Analog matrix realized from the stored phases; entries are unit modulus.
  CMat<Real> analog() const {
    CMat<Real> a(analog_phases.rows(), analog_phases.cols());
    for (Index i = 0; i < a.rows(); ++i)
      for (Index j = 0; j < a.cols(); ++j) a(i, j) = std::polar(Real(1), analog_phases(i, j));
    return a;
  }

  CMat<Real> reconstruct() const { return analog() * digital; }
};

namespace detail {
template <typename Real>
Real wrap_phase(Real phi) {
  const Real two_pi = Real(2) * std::numbers::pi_v<Real>;
  phi = std::fmod(phi, two_pi);
  if (phi < Real(0)) phi += two_pi;
  return phi;
}
}  // namespace detail

/// Exact two-phases-per-entry factorization. Column c of the target uses
/// analog columns 2c and 2c+1 with a shared digital weight c0 (half the
/// largest entry modulus); surplus RF chains get zero digital rows.
template <typename Real>
HybridFactor<Real> factor(const CMat<Real>& target, Index n_rf) {
  const Index n = target.rows();
  const Index ns = target.cols();
  if (n < 1 || ns < 1) throw std::invalid_argument("factor: empty target");
  if (!target.allFinite()) throw std::invalid_argument("factor: target has NaN/Inf entries");
  if (n_rf < 2 * ns)
    throw std::invalid_argument("factor: need at least two RF chains per stream");

  HybridFactor<Real> out;
  out.analog_phases = RMat<Real>::Zero(n, n_rf);
  out.digital = CMat<Real>::Zero(n_rf, ns);

  const Real peak = target.cwiseAbs().maxCoeff();
  if (peak == Real(0)) {
    out.reconstruction_error = Real(0);
    return out;  // zero target: all-ones analog, zero digital
  }
  const Real c0 = peak / Real(2) * (Real(1) + Real(1e-12));

  for (Index c = 0; c < ns; ++c) {
    for (Index i = 0; i < n; ++i) {
      const Complex<Real> v = target(i, c);
      const Real phi = std::arg(v);
      const Real delta = std::acos(std::min(Real(1), std::abs(v) / (Real(2) * c0)));
      out.analog_phases(i, 2 * c) = detail::wrap_phase(phi + delta);
      out.analog_phases(i, 2 * c + 1) = detail::wrap_phase(phi - delta);
    }
    out.digital(2 * c, c) = c0;
    out.digital(2 * c + 1, c) = c0;
  }
  out.reconstruction_error = (out.reconstruct() - target).norm();
  return out;
}

/// Rounds each analog phase to the nearest point of the 2^bits uniform grid
/// on [0, 2*pi), then refits the digital part by least squares against the
/// target.
template <typename Real>
HybridFactor<Real> quantize_phases(const HybridFactor<Real>& f, int bits,
                                   const CMat<Real>& target) {
  if (bits < 1) throw std::invalid_argument("quantize_phases: bits must be >= 1");
  if (target.rows() != f.analog_phases.rows() || target.cols() != f.digital.cols())
    throw std::invalid_argument("quantize_phases: target shape mismatch");

  const Real two_pi = Real(2) * std::numbers::pi_v<Real>;
  const Real levels = std::pow(Real(2), Real(bits));
  const Real step = two_pi / levels;

  HybridFactor<Real> out;
  out.analog_phases = f.analog_phases;
  for (Index i = 0; i < out.analog_phases.rows(); ++i)
    for (Index j = 0; j < out.analog_phases.cols(); ++j) {
      Real idx = std::round(out.analog_phases(i, j) / step);
      if (idx >= levels) idx -= levels;
      out.analog_phases(i, j) = idx * step;
    }

  out.digital = kernels::pseudo_inverse(out.analog(), Real(1e-12)) * target;
  out.reconstruction_error = (out.reconstruct() - target).norm();
  return out;
}

/// Uplink sum rate evaluated through reconstructed analog*digital factors in
/// place of the overall beamformers.
template <typename Real>
Real rate_with_factors(const channel::ChannelSet<Real>& h, const HybridFactor<Real>& f_precoder,
                       const std::vector<HybridFactor<Real>>& f_combiners,
                       const rates::CovarianceSet<Real>& q) {
  if (static_cast<Index>(f_combiners.size()) != h.num_users())
    throw std::invalid_argument("rate_with_factors: combiner factor count mismatch");
  rates::Precoder<Real> v{f_precoder.reconstruct()};
  rates::CombinerSet<Real> w;
  w.per_user.reserve(f_combiners.size());
  for (const auto& f : f_combiners) w.per_user.push_back(f.reconstruct());
  return rates::mac_sum_rate(h, v, w, q);
}

}  // namespace hybeam::hybrid
