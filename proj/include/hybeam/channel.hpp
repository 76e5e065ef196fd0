// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "hybeam/rng.hpp"
#include "hybeam/types.hpp"

// Geometric multipath channel generation for uniform linear arrays. Angles
// are in radians; channels are reproducible bit-for-bit from the seed.
namespace hybeam::channel {

template <typename Real>
struct ArrayGeometry {
  Index n_elements = 1;
  Real spacing_over_wavelength = Real(0.5);  // d_a / lambda
};

template <typename Real>
struct PathSet {
  RVec<Real> angles_of_departure;  // [0, 2*pi), one per path
  RVec<Real> angles_of_arrival;    // [0, 2*pi), one per path
  CVec<Real> gains;                // complex path gains

  Index count() const { return gains.size(); }
};

template <typename Real>
struct ChannelSet {
  std::vector<CMat<Real>> per_user;      // K matrices, each M x N
  std::vector<PathSet<Real>> path_sets;  // generating parameters, K entries
  std::uint64_t seed = 0;

  Index num_users() const { return static_cast<Index>(per_user.size()); }
  Index rx_antennas() const { return per_user.empty() ? 0 : per_user.front().rows(); }
  Index tx_antennas() const { return per_user.empty() ? 0 : per_user.front().cols(); }
};

/// ULA response: element n carries phase 2*pi*(d_a/lambda)*n*sin(theta).
/// Entries are built from phases, so each has unit modulus and element 0 is
/// exactly one.
template <typename Real>
CVec<Real> steering_vector(const ArrayGeometry<Real>& geom, Real theta) {
  if (geom.n_elements < 1 || geom.spacing_over_wavelength <= Real(0))
    throw std::invalid_argument("steering_vector: invalid array geometry");
  CVec<Real> a(geom.n_elements);
  const Real step = Real(2) * std::numbers::pi_v<Real> * geom.spacing_over_wavelength *
                    std::sin(theta);
  for (Index n = 0; n < geom.n_elements; ++n)
    a(n) = std::polar(Real(1), step * static_cast<Real>(n));
  return a;
}

/// Planar response a(theta, phi) = a_h(theta) kron a_v(phi). Built from summed
/// phases so entries stay unit modulus.
template <typename Real>
CVec<Real> steering_vector_3d(const ArrayGeometry<Real>& geom_h, const ArrayGeometry<Real>& geom_v,
                              Real theta, Real phi) {
  if (geom_h.n_elements < 1 || geom_v.n_elements < 1)
    throw std::invalid_argument("steering_vector_3d: invalid array geometry");
  const Real step_h =
      Real(2) * std::numbers::pi_v<Real> * geom_h.spacing_over_wavelength * std::sin(theta);
  const Real step_v =
      Real(2) * std::numbers::pi_v<Real> * geom_v.spacing_over_wavelength * std::sin(phi);
  CVec<Real> a(geom_h.n_elements * geom_v.n_elements);
  for (Index h = 0; h < geom_h.n_elements; ++h)
    for (Index v = 0; v < geom_v.n_elements; ++v)
      a(h * geom_v.n_elements + v) =
          std::polar(Real(1), step_h * static_cast<Real>(h) + step_v * static_cast<Real>(v));
  return a;
}

/// Sum of rank-one path contributions gain_l * a_rx(aoa_l) * a_tx(aod_l)^H.
template <typename Real>
CMat<Real> channel_from_paths(const ArrayGeometry<Real>& tx, const ArrayGeometry<Real>& rx,
                              const PathSet<Real>& paths) {
  if (paths.angles_of_departure.size() != paths.count() ||
      paths.angles_of_arrival.size() != paths.count())
    throw std::invalid_argument("channel_from_paths: inconsistent path arrays");
  CMat<Real> h = CMat<Real>::Zero(rx.n_elements, tx.n_elements);
  for (Index l = 0; l < paths.count(); ++l) {
    const CVec<Real> a_rx = steering_vector(rx, paths.angles_of_arrival(l));
    const CVec<Real> a_tx = steering_vector(tx, paths.angles_of_departure(l));
    h.noalias() += paths.gains(l) * a_rx * a_tx.adjoint();
  }
  return h;
}

/// Draws K independent M x N multipath channels with L paths each. Per path,
/// departure and arrival angles are uniform on [0, 2*pi) and the gain is
/// CN(0, 1); the half-wavelength ULA spacing is implied. Draw order is fixed
/// (per user, per path: departure, arrival, gain) so a seed pins the output.
template <typename Real>
ChannelSet<Real> sample_channel(Index num_users, Index tx_antennas, Index rx_antennas,
                                Index num_paths, std::uint64_t seed) {
  if (num_users < 1 || tx_antennas < 1 || rx_antennas < 1 || num_paths < 1)
    throw std::invalid_argument("sample_channel: all counts must be >= 1");

  const ArrayGeometry<Real> tx{tx_antennas, Real(0.5)};
  const ArrayGeometry<Real> rx{rx_antennas, Real(0.5)};
  RandomStream rng(seed);

  ChannelSet<Real> out;
  out.seed = seed;
  out.per_user.reserve(num_users);
  out.path_sets.reserve(num_users);
  for (Index k = 0; k < num_users; ++k) {
    PathSet<Real> paths;
    paths.angles_of_departure.resize(num_paths);
    paths.angles_of_arrival.resize(num_paths);
    paths.gains.resize(num_paths);
    for (Index l = 0; l < num_paths; ++l) {
      paths.angles_of_departure(l) = static_cast<Real>(rng.angle());
      paths.angles_of_arrival(l) = static_cast<Real>(rng.angle());
      const auto g = rng.complex_gaussian();
      paths.gains(l) = Complex<Real>(static_cast<Real>(g.real()), static_cast<Real>(g.imag()));
    }
    out.per_user.push_back(channel_from_paths(tx, rx, paths));
    out.path_sets.push_back(std::move(paths));
  }
  return out;
}

}  // namespace hybeam::channel
