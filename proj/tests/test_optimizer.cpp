// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hybeam/channel.hpp"
#include "hybeam/kernels.hpp"
#include "hybeam/optimizer.hpp"
#include "hybeam/rates.hpp"
#include "test_support.hpp"

using namespace hybeam;

namespace {

channel::ChannelSet<double> random_channels(RandomStream& rs, const SystemDims& dims) {
  channel::ChannelSet<double> h;
  for (Index k = 0; k < dims.num_users; ++k) {
    h.per_user.push_back(
        testing::random_complex_matrix(rs, dims.user_antennas, dims.bs_antennas));
    h.path_sets.push_back({});
  }
  return h;
}

double spectral_norm_sq(const CMat<double>& m) {
  const auto svd = kernels::reduced_svd(m, 1e-12);
  return svd.rank() > 0 ? svd.singular_values(0) * svd.singular_values(0) : 0.0;
}

/// Waterfilling capacity restricted to the strongest `streams` channel modes.
double rank_limited_capacity(const CMat<double>& h, double power, Index streams) {
  const auto svd = kernels::reduced_svd(h, 1e-12);
  const Index r = std::min(streams, svd.rank());
  const RVec<double> gains = svd.singular_values.head(r).array().square();
  const RVec<double> alloc = kernels::waterfill(gains, power);
  double rate = 0.0;
  for (Index i = 0; i < r; ++i) rate += 0.5 * std::log2(1.0 + gains(i) * alloc(i));
  return rate;
}

}  // namespace

TEST_CASE("step1: single scalar user takes the whole budget") {
  channel::ChannelSet<double> h;
  h.per_user.push_back(2.0 * CMat<double>::Ones(1, 1));
  h.path_sets.push_back({});
  rates::Precoder<double> v{CMat<double>::Ones(1, 1)};
  rates::CombinerSet<double> w{{CMat<double>::Ones(1, 1)}};

  const auto q = optimizer::step1_covariances(h, v, w, 5.0);
  CHECK(q.per_user[0](0, 0).real() == doctest::Approx(5.0).epsilon(1e-10));
  CHECK_FALSE(q.degenerate);
}

TEST_CASE("step1: orthogonal users split the budget by pooled waterfilling") {
  channel::ChannelSet<double> h;
  h.per_user.push_back((CMat<double>(1, 2) << 2.0, 0.0).finished());
  h.per_user.push_back((CMat<double>(1, 2) << 0.0, 1.0).finished());
  h.path_sets.resize(2);
  rates::Precoder<double> v{CMat<double>::Identity(2, 2)};
  rates::CombinerSet<double> w{{CMat<double>::Ones(1, 1), CMat<double>::Ones(1, 1)}};

  const auto q = optimizer::step1_covariances(h, v, w, 1.0);
  // Effective gains 4 and 1; same split as plain waterfilling of the pool.
  CHECK(q.per_user[0](0, 0).real() == doctest::Approx(0.875).epsilon(1e-8));
  CHECK(q.per_user[1](0, 0).real() == doctest::Approx(0.125).epsilon(1e-8));
  CHECK(std::abs(q.total_power() - 1.0) <= 1e-8);
}

TEST_CASE("step1: dead system returns zero covariances with the flag set") {
  channel::ChannelSet<double> h;
  h.per_user.push_back(CMat<double>::Zero(2, 4));
  h.path_sets.resize(1);
  rates::Precoder<double> v{CMat<double>::Identity(4, 2)};
  rates::CombinerSet<double> w{{CMat<double>::Identity(2, 2)}};

  const auto q = optimizer::step1_covariances(h, v, w, 3.0);
  CHECK(q.degenerate);
  for (const auto& qk : q.per_user) CHECK(qk.norm() == 0.0);
}

TEST_CASE("step1: negative budget is rejected") {
  RandomStream rs(70);
  const auto dims = make_dims(2, 4, 2, 1);
  const auto h = random_channels(rs, dims);
  const auto t = testing::random_feasible_triple(rs, dims, 1.0);
  CHECK_THROWS_AS(
      (void)optimizer::step1_covariances(h, t.precoder, t.combiners, -1.0),
      std::invalid_argument);
}

TEST_CASE("step1: tight budget and no objective regression from the warm start") {
  RandomStream rs(71);
  const auto dims = make_dims(3, 8, 3, 2);
  const auto h = random_channels(rs, dims);
  const auto t = testing::random_feasible_triple(rs, dims, 6.0);

  const double f_warm = rates::mac_sum_rate(h, t.precoder, t.combiners, t.covariances);
  const auto q =
      optimizer::step1_covariances(h, t.precoder, t.combiners, 6.0, {}, &t.covariances);
  CHECK(std::abs(q.total_power() - 6.0) <= 1e-8 * 6.0);
  const double f_out = rates::mac_sum_rate(h, t.precoder, t.combiners, q);
  CHECK(f_out >= f_warm - 1e-9);
}

TEST_CASE("step2: returns the leading eigenbasis, semi-unitary and aligned") {
  RandomStream rs(72);
  const auto dims = make_dims(2, 8, 3, 2);
  const auto h = random_channels(rs, dims);
  const auto t = testing::random_feasible_triple(rs, dims, 4.0);

  const auto v = optimizer::step2_precoder(h, t.combiners, t.covariances, dims);
  const Index ns = dims.total_streams();
  CHECK((v.matrix.adjoint() * v.matrix - CMat<double>::Identity(ns, ns)).norm() <= 1e-8);

  // The compressed covariance V^H S V carries the top eigenvalues of S.
  const CMat<double> s = rates::detail::uplink_cov(h, t.combiners, t.covariances, 0, 2);
  const auto eig_full = kernels::hermitian_eig(s);
  const auto eig_comp = kernels::hermitian_eig((v.matrix.adjoint() * s * v.matrix).eval());
  for (Index i = 0; i < ns; ++i)
    CHECK(eig_comp.values(i) == doctest::Approx(eig_full.values(i)).epsilon(1e-9));
}

TEST_CASE("step2: rank-one signal covariance pins the first column") {
  RandomStream rs(73);
  const auto dims = make_dims(1, 6, 1, 1);
  channel::ChannelSet<double> h;
  h.per_user.push_back(testing::random_complex_matrix(rs, 1, 6));
  h.path_sets.resize(1);
  rates::CombinerSet<double> w{{CMat<double>::Ones(1, 1)}};
  rates::CovarianceSet<double> q{{2.0 * CMat<double>::Ones(1, 1)}, 2.0};

  const auto v = optimizer::step2_precoder(h, w, q, dims);
  const CVec<double> direction = h.per_user[0].adjoint().col(0).normalized();
  CHECK(std::abs(std::abs((v.matrix.col(0).adjoint() * direction)(0, 0)) - 1.0) <= 1e-9);
}

TEST_CASE("step2: zero signal covariance is degenerate") {
  const auto dims = make_dims(1, 4, 2, 1);
  channel::ChannelSet<double> h;
  h.per_user.push_back(CMat<double>::Zero(2, 4));
  h.path_sets.resize(1);
  rates::CombinerSet<double> w{{CMat<double>::Identity(2, 1)}};
  rates::CovarianceSet<double> q{{CMat<double>::Ones(1, 1)}, 1.0};
  CHECK_THROWS_AS((void)optimizer::step2_precoder(h, w, q, dims), std::runtime_error);
}

TEST_CASE("step3: square case produces a unitary combiner and keeps budgets") {
  RandomStream rs(74);
  const auto dims = make_dims(2, 6, 2, 2);
  const auto h = random_channels(rs, dims);
  const auto t = testing::random_feasible_triple(rs, dims, 3.0);

  const auto [w, q] = optimizer::step3_combiners(h, t.precoder, t.covariances, dims);
  for (Index k = 0; k < dims.num_users; ++k) {
    CHECK((w.per_user[k].adjoint() * w.per_user[k] - CMat<double>::Identity(2, 2)).norm() <=
          1e-8);
    const double budget_in = t.covariances.per_user[k].real().trace();
    CHECK(q.per_user[k].real().trace() == doctest::Approx(budget_in).epsilon(1e-10));
  }
}

TEST_CASE("step3: rank-one channel beats a one-degree beam sweep") {
  RandomStream rs(75);
  const auto dims = make_dims(1, 2, 2, 1);
  channel::ChannelSet<double> h;
  h.per_user.push_back(testing::random_complex_matrix(rs, 2, 2));
  h.path_sets.resize(1);
  const rates::Precoder<double> v{testing::random_semi_unitary(rs, 2, 1)};
  const double power = 4.0;
  rates::CovarianceSet<double> q{{power * CMat<double>::Ones(1, 1)}, power};

  const auto [w, q_out] = optimizer::step3_combiners(h, v, q, dims);
  const double solved = rates::mac_sum_rate(h, v, w, q_out);

  const CMat<double> c = h.per_user[0] * v.matrix;  // 2 x 1 effective channel
  double best = 0.0;
  const double deg = std::numbers::pi / 180.0;
  for (int ti = 0; ti <= 90; ++ti)
    for (int pi_i = 0; pi_i < 360; ++pi_i) {
      CVec<double> beam(2);
      beam(0) = std::cos(ti * deg);
      beam(1) = std::polar(std::sin(ti * deg), pi_i * deg);
      const double gain = std::norm((beam.adjoint() * c)(0, 0));
      best = std::max(best, 0.5 * std::log2(1.0 + power * gain));
    }
  CHECK(solved >= best - 1e-3);
  CHECK(q_out.per_user[0].real().trace() == doctest::Approx(power));
}

TEST_CASE("step3: zero per-user budget falls back to identity columns") {
  RandomStream rs(76);
  const auto dims = make_dims(2, 6, 3, 1);
  const auto h = random_channels(rs, dims);
  const auto t = testing::random_feasible_triple(rs, dims, 1.0);
  auto q = t.covariances;
  q.per_user[1].setZero();

  const auto [w, q_out] = optimizer::step3_combiners(h, t.precoder, q, dims);
  CHECK((w.per_user[1] - CMat<double>::Identity(3, 3).leftCols(1)).norm() == 0.0);
  CHECK(q_out.per_user[1].norm() == 0.0);
}

TEST_CASE("solve: monotone trace, feasibility and duality gap") {
  RandomStream rs(77);
  const auto dims = make_dims(2, 8, 3, 2);
  for (std::uint64_t seed : {101u, 102u, 103u}) {
    const auto h = channel::sample_channel<double>(dims.num_users, dims.bs_antennas,
                                                   dims.user_antennas, 6, seed);
    const double power = 10.0;
    const auto result = optimizer::solve(h, dims, power);

    const auto& trace = result.trace.objective_per_iter;
    REQUIRE(trace.size() >= 4);
    for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] >= trace[i - 1] - 1e-9);

    const Index ns = dims.total_streams();
    CHECK((result.precoder.matrix.adjoint() * result.precoder.matrix -
           CMat<double>::Identity(ns, ns))
              .norm() <= 1e-8);
    for (const auto& wk : result.combiners.per_user)
      CHECK((wk.adjoint() * wk - CMat<double>::Identity(2, 2)).norm() <= 1e-8);
    CHECK(std::abs(result.covariances.total_power() - power) <= 1e-8 * power);
    CHECK(result.trace.duality_gap <= 1e-6);
    CHECK(result.trace.converged);
  }
}

TEST_CASE("solve: vanishing power keeps the rate under the linear bound") {
  RandomStream rs(78);
  const auto dims = make_dims(2, 6, 2, 1);
  const auto h = channel::sample_channel<double>(2, 6, 2, 5, 55);
  const double power = 1e-8;
  const auto result = optimizer::solve(h, dims, power);
  double top = 0.0;
  for (const auto& hk : h.per_user) top = std::max(top, spectral_norm_sq(hk));
  CHECK(result.trace.objective_per_iter.back() <= 0.5 * power * top / std::numbers::ln2 + 1e-12);
  CHECK(result.trace.objective_per_iter.back() >= 0.0);
}

TEST_CASE("solve: rejects invalid inputs") {
  RandomStream rs(79);
  const auto dims = make_dims(2, 6, 2, 1);
  const auto h = channel::sample_channel<double>(2, 6, 2, 5, 56);
  CHECK_THROWS_AS((void)optimizer::solve(h, dims, 0.0), std::invalid_argument);
  const auto wrong = channel::sample_channel<double>(2, 5, 2, 5, 56);
  CHECK_THROWS_AS((void)optimizer::solve(wrong, dims, 1.0), std::invalid_argument);
}

TEST_CASE("solve: single user approaches the stream-limited waterfilling capacity") {
  const auto dims = make_dims(1, 16, 3, 2);
  double gap_total = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto h = channel::sample_channel<double>(1, 16, 3, 15, seed);
    const double power = 100.0;  // 20 dB
    const auto result = optimizer::solve(h, dims, power);
    const double limited = rank_limited_capacity(h.per_user[0], power, 2);
    CHECK(result.trace.objective_per_iter.back() <= limited + 1e-6);
    gap_total += (limited - result.trace.objective_per_iter.back()) / limited;
  }
  CHECK(gap_total / 10.0 <= 0.02);
}

TEST_CASE("solve: converges quickly on the multi-user reference shape") {
  const auto dims = make_dims(4, 16, 4, 1);
  int reached = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto h = channel::sample_channel<double>(4, 16, 4, 15, seed);
    const auto result = optimizer::solve(h, dims, 10.0);
    const auto outer = result.trace.outer_objectives();
    REQUIRE(!outer.empty());
    const double final = outer.back();
    const std::size_t cutoff = std::min<std::size_t>(20, outer.size());
    if (outer[cutoff - 1] >= 0.99 * final) ++reached;
  }
  CHECK(reached >= 8);
}
