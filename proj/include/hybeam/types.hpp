// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <vector>

namespace hybeam {

using Index = Eigen::Index;

template <typename Real>
using Complex = std::complex<Real>;

/// Dense dynamic-size complex matrix, the working type of every module.
template <typename Real>
using CMat = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Real>
using CVec = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;

template <typename Real>
using RMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Real>
using RVec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

/// System dimensioning shared by the rate, optimizer and experiment layers.
/// The total stream count is always num_users * streams_per_user.
struct SystemDims {
  Index num_users = 1;         // K
  Index bs_antennas = 1;       // N, transmit array size
  Index user_antennas = 1;     // M, per-user array size
  Index streams_per_user = 1;  // d
  Index bs_rf_chains = 2;      // must be >= 2 * total_streams()
  Index user_rf_chains = 2;    // must be >= 2 * streams_per_user

  Index total_streams() const { return num_users * streams_per_user; }

  void validate() const {
    if (num_users < 1 || bs_antennas < 1 || user_antennas < 1 || streams_per_user < 1)
      throw std::invalid_argument("SystemDims: all counts must be >= 1");
    if (streams_per_user > user_antennas || streams_per_user > bs_antennas)
      throw std::invalid_argument("SystemDims: streams_per_user must not exceed min(antennas)");
    if (total_streams() > bs_antennas)
      throw std::invalid_argument("SystemDims: total stream count exceeds transmit array size");
    if (bs_rf_chains < 2 * total_streams())
      throw std::invalid_argument("SystemDims: need at least two transmit RF chains per stream");
    if (user_rf_chains < 2 * streams_per_user)
      throw std::invalid_argument("SystemDims: need at least two receive RF chains per stream");
  }
};

/// Dims with the minimum RF chain counts that keep the analog/digital
/// factorization exact (two chains per stream on both ends).
inline SystemDims make_dims(Index num_users, Index bs_antennas, Index user_antennas,
                            Index streams_per_user) {
  SystemDims dims;
  dims.num_users = num_users;
  dims.bs_antennas = bs_antennas;
  dims.user_antennas = user_antennas;
  dims.streams_per_user = streams_per_user;
  dims.bs_rf_chains = 2 * dims.total_streams();
  dims.user_rf_chains = 2 * streams_per_user;
  dims.validate();
  return dims;
}

}  // namespace hybeam
