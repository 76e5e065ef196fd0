// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hybeam/duality.hpp"
#include "hybeam/kernels.hpp"
#include "hybeam/rates.hpp"
#include "hybeam/types.hpp"

// Alternating sum-rate maximizer over (covariances, precoder, combiners) in
// the dual uplink. Each of the three block updates is warm-started from the
// incumbent, so the recorded objective never decreases.
namespace hybeam::optimizer {

template <typename Real>
struct SolveOptions {
  int max_outer_iters = 50;
  Real objective_tol = Real(1e-6);     // relative change of the objective per outer iteration
  int inner_waterfill_iters = 100;     // cycle cap for the inner waterfilling loops
  Real rank_tol = Real(1e-9);          // relative singular/eigenvalue threshold
  std::uint64_t seed = 0;              // reserved; the default initialization is deterministic
};

template <typename Real>
struct SolveTrace {
  // Objective after initialization and after every block update
  // (three entries per outer iteration).
  std::vector<Real> objective_per_iter;
  bool converged = false;
  int iters_used = 0;
  Real duality_gap = Real(0);  // max per-user |R_bc - R_mac| after the transform

  /// Objective at the end of each outer iteration (every third entry).
  std::vector<Real> outer_objectives() const {
    std::vector<Real> out;
    for (std::size_t i = 3; i < objective_per_iter.size(); i += 3)
      out.push_back(objective_per_iter[i]);
    return out;
  }
};

template <typename Real>
struct SolveResult {
  rates::Precoder<Real> precoder;
  rates::CombinerSet<Real> combiners;
  rates::CovarianceSet<Real> covariances;
  SolveTrace<Real> trace;
};

template <typename Real>
struct IwfOptions {
  int max_cycles = 100;
  Real objective_tol = Real(1e-12);  // relative improvement per cycle
  Real rank_tol = Real(1e-9);
};

// --- generic iterative waterfilling over coupled vector channels ----------
//
// Both inner solvers maximize 0.5 * log2 |I + sum_k A_k^H Q_k A_k| over
// Hermitian PSD blocks Q_k, where A_k maps user k's signal space (rows) into
// the shared receive space (cols).

template <typename Real>
Real coupled_objective(const std::vector<CMat<Real>>& channels,
                       const std::vector<CMat<Real>>& covs) {
  const Index n_out = channels.front().cols();
  CMat<Real> s = CMat<Real>::Identity(n_out, n_out);
  for (std::size_t k = 0; k < channels.size(); ++k)
    s.noalias() += channels[k].adjoint() * covs[k] * channels[k];
  s = (s + s.adjoint()) / Real(2);
  return kernels::log2_det_hpd(s) / Real(2);
}

namespace detail {

template <typename Real>
struct ModeSet {
  CMat<Real> basis;  // n_k x r, orthonormal columns
  RVec<Real> gains;  // squared singular values of the whitened channel
};

// Eigenmodes of user k's channel after whitening by the interference of all
// other users. max_rank <= 0 keeps every above-threshold mode.
template <typename Real>
ModeSet<Real> whitened_modes(const std::vector<CMat<Real>>& channels,
                             const std::vector<CMat<Real>>& covs, std::size_t k, Real rank_tol,
                             Index max_rank) {
  const Index n_out = channels.front().cols();
  CMat<Real> z = CMat<Real>::Identity(n_out, n_out);
  for (std::size_t j = 0; j < channels.size(); ++j) {
    if (j == k) continue;
    z.noalias() += channels[j].adjoint() * covs[j] * channels[j];
  }
  z = (z + z.adjoint()) / Real(2);
  const CMat<Real> whitened = kernels::psd_power(z, Real(-0.5), rank_tol) * channels[k].adjoint();
  auto svd = kernels::reduced_svd(whitened, rank_tol);
  Index r = svd.rank();
  if (max_rank > 0) r = std::min(r, max_rank);
  ModeSet<Real> modes;
  modes.basis = svd.right.leftCols(r);
  modes.gains = svd.singular_values.head(r).array().square();
  return modes;
}

template <typename Real>
std::vector<CMat<Real>> blend(const std::vector<CMat<Real>>& a, const std::vector<CMat<Real>>& b,
                              Real weight_b) {
  std::vector<CMat<Real>> out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k)
    out[k] = (Real(1) - weight_b) * a[k] + weight_b * b[k];
  return out;
}

}  // namespace detail

/// Shared-budget iterative waterfilling: cyclically refresh each user's
/// whitened eigenmodes, then re-split the whole budget across the pooled
/// mode set. A candidate that would lower the objective is pulled back
/// toward the incumbent (the feasible set is convex), which keeps the
/// iteration monotone. Returns covariances with total trace equal to the
/// budget; all-zero covariances when every channel is zero.
template <typename Real>
std::vector<CMat<Real>> sum_power_waterfilling(const std::vector<CMat<Real>>& channels,
                                               Real budget, const IwfOptions<Real>& opts,
                                               const std::vector<CMat<Real>>* warm = nullptr) {
  const std::size_t num_users = channels.size();
  if (num_users == 0) throw std::invalid_argument("sum_power_waterfilling: no channels");
  if (budget < Real(0)) throw std::invalid_argument("sum_power_waterfilling: negative budget");

  std::vector<CMat<Real>> covs(num_users);
  for (std::size_t k = 0; k < num_users; ++k) {
    covs[k] = warm != nullptr ? (*warm)[k]
                              : CMat<Real>::Zero(channels[k].rows(), channels[k].rows());
  }
  if (budget == Real(0)) {
    for (auto& q : covs) q.setZero();
    return covs;
  }

  std::vector<detail::ModeSet<Real>> modes(num_users);
  for (std::size_t k = 0; k < num_users; ++k)
    modes[k] = detail::whitened_modes(channels, covs, k, opts.rank_tol, 0);

  Real f_cur = coupled_objective(channels, covs);
  for (int cycle = 0; cycle < opts.max_cycles; ++cycle) {
    const Real f_cycle_start = f_cur;
    for (std::size_t k = 0; k < num_users; ++k) {
      modes[k] = detail::whitened_modes(channels, covs, k, opts.rank_tol, 0);

      Index total_modes = 0;
      for (const auto& m : modes) total_modes += m.gains.size();
      if (total_modes == 0) {
        for (auto& q : covs) q.setZero();
        return covs;  // every channel is zero; caller flags the degenerate case
      }
      RVec<Real> pooled(total_modes);
      Index offset = 0;
      for (const auto& m : modes) {
        pooled.segment(offset, m.gains.size()) = m.gains;
        offset += m.gains.size();
      }
      const RVec<Real> powers = kernels::waterfill(pooled, budget);

      std::vector<CMat<Real>> candidate(num_users);
      offset = 0;
      for (std::size_t j = 0; j < num_users; ++j) {
        const Index r = modes[j].gains.size();
        candidate[j] =
            modes[j].basis * powers.segment(offset, r).asDiagonal() * modes[j].basis.adjoint();
        candidate[j] = ((candidate[j] + candidate[j].adjoint()) / Real(2)).eval();
        offset += r;
      }

      for (Real alpha = Real(1); alpha >= Real(1.0 / 1024.0); alpha /= Real(2)) {
        const std::vector<CMat<Real>> trial =
            alpha == Real(1) ? candidate : detail::blend(covs, candidate, alpha);
        const Real f_trial = coupled_objective(channels, trial);
        if (f_trial >= f_cur) {
          covs = trial;
          f_cur = f_trial;
          break;
        }
      }
    }
    if (f_cur - f_cycle_start <= opts.objective_tol * std::max(Real(1), std::abs(f_cur))) break;
  }
  return covs;
}

/// Fixed per-user budgets with an optional rank cap. Every block update is
/// the exact maximizer of its subproblem (waterfilling over the strongest
/// max_rank whitened modes), so the sweep is monotone without safeguards.
template <typename Real>
std::vector<CMat<Real>> per_user_waterfilling(const std::vector<CMat<Real>>& channels,
                                              const RVec<Real>& budgets, Index max_rank,
                                              const IwfOptions<Real>& opts,
                                              const std::vector<CMat<Real>>* warm = nullptr) {
  const std::size_t num_users = channels.size();
  if (num_users == 0) throw std::invalid_argument("per_user_waterfilling: no channels");
  if (static_cast<Index>(num_users) != budgets.size())
    throw std::invalid_argument("per_user_waterfilling: budget count mismatch");

  std::vector<CMat<Real>> covs(num_users);
  for (std::size_t k = 0; k < num_users; ++k) {
    covs[k] = warm != nullptr ? (*warm)[k]
                              : CMat<Real>::Zero(channels[k].rows(), channels[k].rows());
  }

  Real f_cur = coupled_objective(channels, covs);
  for (int cycle = 0; cycle < opts.max_cycles; ++cycle) {
    for (std::size_t k = 0; k < num_users; ++k) {
      const Index n_k = channels[k].rows();
      if (budgets(k) <= Real(0)) {
        covs[k] = CMat<Real>::Zero(n_k, n_k);
        continue;
      }
      const auto modes = detail::whitened_modes(channels, covs, k, opts.rank_tol, max_rank);
      if (modes.gains.size() == 0) {
        // Dead channel: park the budget on arbitrary directions so the
        // trace constraint stays tight. Contributes nothing to the rate.
        const Index r = max_rank > 0 ? std::min(max_rank, n_k) : n_k;
        covs[k] = CMat<Real>::Zero(n_k, n_k);
        covs[k].diagonal().head(r).setConstant(budgets(k) / static_cast<Real>(r));
        continue;
      }
      const RVec<Real> powers = kernels::waterfill(modes.gains, budgets(k));
      covs[k] = modes.basis * powers.asDiagonal() * modes.basis.adjoint();
      covs[k] = ((covs[k] + covs[k].adjoint()) / Real(2)).eval();
    }
    const Real f_next = coupled_objective(channels, covs);
    const Real gain = f_next - f_cur;
    f_cur = f_next;
    if (gain <= opts.objective_tol * std::max(Real(1), std::abs(f_cur))) break;
  }
  return covs;
}

// --- the three block updates ----------------------------------------------

/// Step 1: optimal uplink covariances for fixed beamformers, via shared-budget
/// iterative waterfilling over the effective channels W_k^H H_k V. Warm-started
/// from `warm` (or the uniform split) so the objective cannot drop below it.
template <typename Real>
rates::CovarianceSet<Real> step1_covariances(const channel::ChannelSet<Real>& h,
                                             const rates::Precoder<Real>& v,
                                             const rates::CombinerSet<Real>& w, Real budget,
                                             const SolveOptions<Real>& opts = {},
                                             const rates::CovarianceSet<Real>* warm = nullptr) {
  if (budget < Real(0)) throw std::invalid_argument("step1_covariances: negative power budget");
  rates::detail::check_shapes(h, v, w);
  const Index num_users = h.num_users();
  const Index d = w.per_user.front().cols();
  const Index ns = v.matrix.cols();

  std::vector<CMat<Real>> effective(num_users);
  Real total_energy = Real(0);
  for (Index k = 0; k < num_users; ++k) {
    effective[k] = rates::effective_channel(h, v, w, k);
    total_energy += effective[k].squaredNorm();
  }

  rates::CovarianceSet<Real> out;
  out.budget = budget;
  if (total_energy == Real(0)) {
    out.per_user.assign(num_users, CMat<Real>::Zero(d, d));
    out.degenerate = true;
    return out;
  }

  std::vector<CMat<Real>> warm_covs;
  warm_covs.reserve(num_users);
  if (warm != nullptr) {
    if (static_cast<Index>(warm->per_user.size()) != num_users)
      throw std::invalid_argument("step1_covariances: warm start has wrong user count");
    warm_covs = warm->per_user;
  } else {
    for (Index k = 0; k < num_users; ++k)
      warm_covs.push_back(budget / static_cast<Real>(ns) * CMat<Real>::Identity(d, d));
  }

  IwfOptions<Real> iwf;
  iwf.max_cycles = opts.inner_waterfill_iters;
  iwf.rank_tol = opts.rank_tol;
  out.per_user = sum_power_waterfilling(effective, budget, iwf, &warm_covs);
  return out;
}

/// Step 2: optimal semi-unitary precoder for fixed combiners and covariances.
/// The stationary construction (G_a G_a^H)^+ G_a collapses to the leading
/// eigenbasis of the uplink signal covariance, padded with the orthonormal
/// completion when the numerical rank falls short of the stream count.
template <typename Real>
rates::Precoder<Real> step2_precoder(const channel::ChannelSet<Real>& h,
                                     const rates::CombinerSet<Real>& w,
                                     const rates::CovarianceSet<Real>& q,
                                     const SystemDims& dims) {
  const CMat<Real> s = rates::detail::uplink_cov(h, w, q, 0, h.num_users());
  if (s.norm() == Real(0))
    throw std::runtime_error("step2_precoder: zero signal covariance, no transmit direction");
  const auto eig = kernels::hermitian_eig(s);
  return rates::Precoder<Real>{eig.vectors.leftCols(dims.total_streams())};
}

/// Step 3: optimal combiners for a fixed precoder. Solves the lifted
/// covariance problem over the channels H_k V with fixed per-user budgets
/// tr(Q_k) and rank cap d (power goes to each user's d strongest modes), then
/// eigen-factors the lifted covariances into exactly semi-unitary combiners
/// and diagonal d x d covariances.
template <typename Real>
std::pair<rates::CombinerSet<Real>, rates::CovarianceSet<Real>> step3_combiners(
    const channel::ChannelSet<Real>& h, const rates::Precoder<Real>& v,
    const rates::CovarianceSet<Real>& q, const SystemDims& dims, const SolveOptions<Real>& opts = {},
    const rates::CombinerSet<Real>* warm = nullptr) {
  const Index num_users = h.num_users();
  const Index m = h.rx_antennas();
  const Index d = dims.streams_per_user;
  if (static_cast<Index>(q.per_user.size()) != num_users)
    throw std::invalid_argument("step3_combiners: covariance count mismatch");

  std::vector<CMat<Real>> lifted_channels(num_users);
  RVec<Real> budgets(num_users);
  for (Index k = 0; k < num_users; ++k) {
    lifted_channels[k] = h.per_user[k] * v.matrix;  // M x N_s
    budgets(k) = std::max(Real(0), q.per_user[k].real().trace());
  }

  std::vector<CMat<Real>> warm_lifted;
  if (warm != nullptr) {
    if (static_cast<Index>(warm->per_user.size()) != num_users)
      throw std::invalid_argument("step3_combiners: warm start has wrong user count");
    warm_lifted.reserve(num_users);
    for (Index k = 0; k < num_users; ++k) {
      CMat<Real> lifted = warm->per_user[k] * q.per_user[k] * warm->per_user[k].adjoint();
      warm_lifted.push_back(((lifted + lifted.adjoint()) / Real(2)).eval());
    }
  }

  IwfOptions<Real> iwf;
  iwf.max_cycles = opts.inner_waterfill_iters;
  iwf.rank_tol = opts.rank_tol;
  const std::vector<CMat<Real>> lifted = per_user_waterfilling(
      lifted_channels, budgets, d, iwf, warm != nullptr ? &warm_lifted : nullptr);

  rates::CombinerSet<Real> combiners;
  rates::CovarianceSet<Real> covs;
  combiners.per_user.resize(num_users);
  covs.per_user.resize(num_users);
  covs.budget = q.budget;
  for (Index k = 0; k < num_users; ++k) {
    if (budgets(k) <= Real(0)) {
      combiners.per_user[k] = CMat<Real>::Identity(m, m).leftCols(d);
      covs.per_user[k] = CMat<Real>::Zero(d, d);
      continue;
    }
    const auto eig = kernels::hermitian_eig(lifted[k]);
    combiners.per_user[k] = eig.vectors.leftCols(d);
    RVec<Real> top = eig.values.head(d).cwiseMax(Real(0));
    const Real trace = top.sum();
    if (trace > Real(0)) top *= budgets(k) / trace;  // wash out truncation residue
    covs.per_user[k] = CMat<Real>::Zero(d, d);
    covs.per_user[k].diagonal() = top.template cast<Complex<Real>>();
  }
  return {std::move(combiners), std::move(covs)};
}

// --- full alternating loop --------------------------------------------------

/// Deterministic initialization: precoder from the leading right singular
/// vectors of the stacked channel, combiners from the leading left singular
/// vectors of each effective channel, uniform covariances.
template <typename Real>
SolveResult<Real> initial_point(const channel::ChannelSet<Real>& h, const SystemDims& dims,
                                Real budget) {
  const Index num_users = dims.num_users;
  const Index ns = dims.total_streams();
  CMat<Real> stacked(num_users * dims.user_antennas, dims.bs_antennas);
  for (Index k = 0; k < num_users; ++k)
    stacked.middleRows(k * dims.user_antennas, dims.user_antennas) = h.per_user[k];
  Eigen::JacobiSVD<CMat<Real>> svd(stacked, Eigen::ComputeThinV);

  SolveResult<Real> point;
  point.precoder.matrix = svd.matrixV().leftCols(ns);
  point.combiners.per_user.resize(num_users);
  point.covariances.per_user.resize(num_users);
  point.covariances.budget = budget;
  for (Index k = 0; k < num_users; ++k) {
    const CMat<Real> through = h.per_user[k] * point.precoder.matrix;
    Eigen::JacobiSVD<CMat<Real>> user_svd(through, Eigen::ComputeThinU);
    point.combiners.per_user[k] = user_svd.matrixU().leftCols(dims.streams_per_user);
    point.covariances.per_user[k] =
        budget / static_cast<Real>(ns) *
        CMat<Real>::Identity(dims.streams_per_user, dims.streams_per_user);
  }
  return point;
}

namespace detail {

/// The alternating loop from a given feasible state; the trace is rebuilt
/// from the state's own objective and stays nondecreasing.
template <typename Real>
SolveResult<Real> run_alternating_loop(const channel::ChannelSet<Real>& h,
                                       const SystemDims& dims, Real budget,
                                       const SolveOptions<Real>& opts, SolveResult<Real> state) {
  auto objective = [&]() {
    return rates::mac_sum_rate(h, state.precoder, state.combiners, state.covariances);
  };
  state.trace = {};
  state.trace.objective_per_iter.push_back(objective());
  Real f_prev = state.trace.objective_per_iter.back();

  for (int it = 1; it <= opts.max_outer_iters; ++it) {
    state.covariances = step1_covariances(h, state.precoder, state.combiners, budget, opts,
                                          &state.covariances);
    state.trace.objective_per_iter.push_back(objective());

    state.precoder = step2_precoder(h, state.combiners, state.covariances, dims);
    state.trace.objective_per_iter.push_back(objective());

    auto [combiners, covariances] =
        step3_combiners(h, state.precoder, state.covariances, dims, opts, &state.combiners);
    state.combiners = std::move(combiners);
    state.covariances = std::move(covariances);
    const Real f_now = objective();
    state.trace.objective_per_iter.push_back(f_now);

    state.trace.iters_used = it;
    if (std::abs(f_now - f_prev) <= opts.objective_tol * std::max(Real(1), std::abs(f_now))) {
      state.trace.converged = true;
      break;
    }
    f_prev = f_now;
  }
  return state;
}

}  // namespace detail

/// Best beamformer pair reachable with covariances frozen at the uniform
/// split: alternates the precoder and combiner updates only and returns the
/// best visited iterate. Serves both as the equal-power reference scheme and
/// as a second start for the full solver (the greedy covariance step can
/// defund a user so early that its beamformers never recover; this start
/// keeps every user matched).
template <typename Real>
SolveResult<Real> equal_power_point(const channel::ChannelSet<Real>& h, const SystemDims& dims,
                                    Real budget, const SolveOptions<Real>& opts = {}) {
  SolveResult<Real> state = initial_point(h, dims, budget);
  const rates::CovarianceSet<Real> frozen = state.covariances;

  auto objective = [&]() {
    return rates::mac_sum_rate(h, state.precoder, state.combiners, frozen);
  };

  SolveResult<Real> best = state;
  Real f_best = objective();
  Real f_prev = f_best;
  best.trace.objective_per_iter.push_back(f_prev);

  for (int it = 1; it <= opts.max_outer_iters; ++it) {
    state.precoder = step2_precoder(h, state.combiners, frozen, dims);
    auto [combiners, ignored] =
        step3_combiners(h, state.precoder, frozen, dims, opts, &state.combiners);
    state.combiners = std::move(combiners);

    const Real f_now = objective();
    best.trace.objective_per_iter.push_back(f_now);
    best.trace.iters_used = it;
    if (f_now > f_best) {
      f_best = f_now;
      best.precoder = state.precoder;
      best.combiners = state.combiners;
    }
    if (std::abs(f_now - f_prev) <= opts.objective_tol * std::max(Real(1), std::abs(f_now))) {
      best.trace.converged = true;
      break;
    }
    f_prev = f_now;
  }
  best.covariances = frozen;
  return best;
}

/// Full solver. Runs the alternating loop from the channel-aligned start.
/// If (and only if) that run ends below the equal-power reference point --
/// the greedy covariance step can defund a user so early that its
/// beamformers never recover -- the loop is restarted from the reference
/// point, whose monotone continuation cannot fall below it. The result
/// therefore never trails the equal-power scheme on the same channel.
template <typename Real>
SolveResult<Real> solve(const channel::ChannelSet<Real>& h, const SystemDims& dims, Real budget,
                        const SolveOptions<Real>& opts = {}) {
  dims.validate();
  if (budget <= Real(0)) throw std::invalid_argument("solve: power budget must be > 0");
  if (h.num_users() != dims.num_users || h.rx_antennas() != dims.user_antennas ||
      h.tx_antennas() != dims.bs_antennas)
    throw std::invalid_argument("solve: channel set does not match dims");

  SolveResult<Real> winner =
      detail::run_alternating_loop(h, dims, budget, opts, initial_point(h, dims, budget));

  SolveResult<Real> reference = equal_power_point(h, dims, budget, opts);
  const Real reference_value =
      rates::mac_sum_rate(h, reference.precoder, reference.combiners, reference.covariances);
  if (winner.trace.objective_per_iter.back() < reference_value - Real(1e-9)) {
    SolveResult<Real> refined =
        detail::run_alternating_loop(h, dims, budget, opts, std::move(reference));
    if (refined.trace.objective_per_iter.back() > winner.trace.objective_per_iter.back())
      winner = std::move(refined);
  }

  const auto bc = duality::mac_to_bc(h, winner.precoder, winner.combiners, winner.covariances,
                                     nullptr, opts.rank_tol);
  winner.trace.duality_gap =
      duality::verify_duality(h, winner.precoder, winner.combiners, winner.covariances, bc)
          .max_gap;
  return winner;
}

}  // namespace hybeam::optimizer
