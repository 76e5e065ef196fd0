// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

#include "hybeam/channel.hpp"
#include "hybeam/kernels.hpp"
#include "hybeam/types.hpp"

// Per-user and sum rate evaluation for the downlink (interference from
// earlier-encoded users) and the dual uplink (interference from later-decoded
// users). Rates are 0.5 * log2 det expressions with unit-variance noise; the
// list order of users is the encoding/decoding order.
namespace hybeam::rates {

/// Overall transmit beamformer, N x N_s with V^H V = I.
template <typename Real>
struct Precoder {
  CMat<Real> matrix;
};

/// Per-user receive beamformers, each M x d with W^H W = I.
template <typename Real>
struct CombinerSet {
  std::vector<CMat<Real>> per_user;
};

/// Uplink transmit covariances, one d x d Hermitian PSD block per user,
/// under a shared trace budget.
template <typename Real>
struct CovarianceSet {
  std::vector<CMat<Real>> per_user;
  Real budget = Real(0);
  bool degenerate = false;  // set when every effective channel was zero

  Real total_power() const {
    Real p = Real(0);
    for (const auto& q : per_user) p += q.real().trace();
    return p;
  }
};

/// Downlink signal covariances, one N_s x N_s Hermitian PSD block per user.
template <typename Real>
struct BcCovarianceSet {
  std::vector<CMat<Real>> per_user;
  Real budget = Real(0);

  Real total_power() const {
    Real p = Real(0);
    for (const auto& d : per_user) p += d.real().trace();
    return p;
  }
};

namespace detail {

template <typename Real>
void check_shapes(const channel::ChannelSet<Real>& h, const Precoder<Real>& v,
                  const CombinerSet<Real>& w) {
  const Index k = h.num_users();
  if (k < 1) throw std::invalid_argument("rates: empty channel set");
  if (static_cast<Index>(w.per_user.size()) != k)
    throw std::invalid_argument("rates: combiner count does not match user count");
  if (v.matrix.rows() != h.tx_antennas())
    throw std::invalid_argument("rates: precoder rows do not match transmit antennas");
  for (Index j = 0; j < k; ++j) {
    if (h.per_user[j].rows() != h.rx_antennas() || h.per_user[j].cols() != h.tx_antennas())
      throw std::invalid_argument("rates: ragged channel matrices");
    if (w.per_user[j].rows() != h.rx_antennas())
      throw std::invalid_argument("rates: combiner rows do not match receive antennas");
  }
}

/// Uplink signal covariance seen at the transmit array:
/// sum over the given users of H_k^H W_k Q_k W_k^H H_k, symmetrized.
template <typename Real>
CMat<Real> uplink_cov(const channel::ChannelSet<Real>& h, const CombinerSet<Real>& w,
                      const CovarianceSet<Real>& q, Index first, Index last) {
  const Index n = h.tx_antennas();
  CMat<Real> s = CMat<Real>::Zero(n, n);
  for (Index k = first; k < last; ++k) {
    const CMat<Real> lifted = w.per_user[k] * q.per_user[k] * w.per_user[k].adjoint();
    s.noalias() += h.per_user[k].adjoint() * lifted * h.per_user[k];
  }
  return ((s + s.adjoint()) / Real(2)).eval();
}

}  // namespace detail

/// Effective channel of user k as seen through the beamformers, d x N_s.
template <typename Real>
CMat<Real> effective_channel(const channel::ChannelSet<Real>& h, const Precoder<Real>& v,
                             const CombinerSet<Real>& w, Index k) {
  return w.per_user[k].adjoint() * h.per_user[k] * v.matrix;
}

/// Uplink interference-plus-noise covariance of user j (N_s x N_s):
/// V^H V plus the contributions of users j+1..K-1. Users are 0-indexed.
template <typename Real>
CMat<Real> mac_interference_cov(Index j, const channel::ChannelSet<Real>& h,
                                const Precoder<Real>& v, const CombinerSet<Real>& w,
                                const CovarianceSet<Real>& q) {
  detail::check_shapes(h, v, w);
  if (static_cast<Index>(q.per_user.size()) != h.num_users())
    throw std::invalid_argument("rates: covariance count does not match user count");
  if (j < 0 || j >= h.num_users()) throw std::invalid_argument("rates: user index out of range");
  CMat<Real> b = v.matrix.adjoint() * v.matrix;
  b += v.matrix.adjoint() * detail::uplink_cov(h, w, q, j + 1, h.num_users()) * v.matrix;
  return ((b + b.adjoint()) / Real(2)).eval();
}

template <typename Real>
Real mac_user_rate(Index j, const channel::ChannelSet<Real>& h, const Precoder<Real>& v,
                   const CombinerSet<Real>& w, const CovarianceSet<Real>& q) {
  const CMat<Real> b = mac_interference_cov(j, h, v, w, q);
  const CMat<Real> g = effective_channel(h, v, w, j);  // d x N_s
  CMat<Real> signal = g.adjoint() * q.per_user[j] * g;
  signal = (signal + signal.adjoint()) / Real(2);
  return (kernels::log2_det_hpd((b + signal).eval()) - kernels::log2_det_hpd(b)) / Real(2);
}

/// Uplink sum rate 0.5 * log2 |I + V^H (sum_k H_k^H W_k Q_k W_k^H H_k) V|;
/// requires a semi-unitary precoder, under which it telescopes to the sum of
/// the per-user rates.
template <typename Real>
Real mac_sum_rate(const channel::ChannelSet<Real>& h, const Precoder<Real>& v,
                  const CombinerSet<Real>& w, const CovarianceSet<Real>& q) {
  detail::check_shapes(h, v, w);
  if (static_cast<Index>(q.per_user.size()) != h.num_users())
    throw std::invalid_argument("rates: covariance count does not match user count");
  const Index ns = v.matrix.cols();
  CMat<Real> inner = CMat<Real>::Identity(ns, ns);
  inner += v.matrix.adjoint() * detail::uplink_cov(h, w, q, 0, h.num_users()) * v.matrix;
  return kernels::log2_det_hpd(inner) / Real(2);
}

/// Downlink interference-plus-noise covariance of user j (d x d):
/// W_j^H W_j plus the contributions of users 0..j-1.
template <typename Real>
CMat<Real> bc_interference_cov(Index j, const channel::ChannelSet<Real>& h,
                               const Precoder<Real>& v, const CombinerSet<Real>& w,
                               const BcCovarianceSet<Real>& d) {
  detail::check_shapes(h, v, w);
  if (static_cast<Index>(d.per_user.size()) != h.num_users())
    throw std::invalid_argument("rates: covariance count does not match user count");
  if (j < 0 || j >= h.num_users()) throw std::invalid_argument("rates: user index out of range");
  const Index ns = v.matrix.cols();
  CMat<Real> earlier = CMat<Real>::Zero(ns, ns);
  for (Index l = 0; l < j; ++l) earlier += d.per_user[l];
  const CMat<Real> hv = h.per_user[j] * v.matrix;  // M x N_s
  CMat<Real> a = w.per_user[j].adjoint() * w.per_user[j];
  a += w.per_user[j].adjoint() * hv * earlier * hv.adjoint() * w.per_user[j];
  return ((a + a.adjoint()) / Real(2)).eval();
}

template <typename Real>
Real bc_user_rate(Index j, const channel::ChannelSet<Real>& h, const Precoder<Real>& v,
                  const CombinerSet<Real>& w, const BcCovarianceSet<Real>& d) {
  const CMat<Real> a = bc_interference_cov(j, h, v, w, d);
  const CMat<Real> hv = h.per_user[j] * v.matrix;
  CMat<Real> signal = w.per_user[j].adjoint() * hv * d.per_user[j] * hv.adjoint() * w.per_user[j];
  signal = (signal + signal.adjoint()) / Real(2);
  return (kernels::log2_det_hpd((a + signal).eval()) - kernels::log2_det_hpd(a)) / Real(2);
}

template <typename Real>
Real bc_sum_rate(const channel::ChannelSet<Real>& h, const Precoder<Real>& v,
                 const CombinerSet<Real>& w, const BcCovarianceSet<Real>& d) {
  Real total = Real(0);
  for (Index j = 0; j < h.num_users(); ++j) total += bc_user_rate(j, h, v, w, d);
  return total;
}

}  // namespace hybeam::rates
