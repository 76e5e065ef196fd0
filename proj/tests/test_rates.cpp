// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hybeam/channel.hpp"
#include "hybeam/kernels.hpp"
#include "hybeam/rates.hpp"
#include "test_support.hpp"

using namespace hybeam;

namespace {

channel::ChannelSet<double> random_channels(RandomStream& rs, const SystemDims& dims) {
  channel::ChannelSet<double> h;
  h.seed = 0;
  for (Index k = 0; k < dims.num_users; ++k) {
    h.per_user.push_back(
        testing::random_complex_matrix(rs, dims.user_antennas, dims.bs_antennas));
    h.path_sets.push_back({});
  }
  return h;
}

rates::CovarianceSet<double> zero_covariances(const SystemDims& dims) {
  rates::CovarianceSet<double> q;
  q.budget = 0.0;
  q.per_user.assign(dims.num_users,
                    CMat<double>::Zero(dims.streams_per_user, dims.streams_per_user));
  return q;
}

}  // namespace

TEST_CASE("mac_interference_cov: the last user sees only noise") {
  RandomStream rs(2);
  const auto dims = make_dims(3, 8, 2, 1);
  const auto h = random_channels(rs, dims);
  const auto t = testing::random_feasible_triple(rs, dims, 4.0);

  const CMat<double> b_last =
      rates::mac_interference_cov(dims.num_users - 1, h, t.precoder, t.combiners, t.covariances);
  CHECK((b_last - CMat<double>::Identity(3, 3)).norm() <= 1e-8);

  const auto q0 = zero_covariances(dims);
  for (Index j = 0; j < dims.num_users; ++j) {
    const CMat<double> b = rates::mac_interference_cov(j, h, t.precoder, t.combiners, q0);
    CHECK((b - CMat<double>::Identity(3, 3)).norm() <= 1e-8);
  }
}

TEST_CASE("mac_interference_cov: interference term is positive semidefinite") {
  RandomStream rs(4);
  const auto dims = make_dims(2, 6, 3, 2);
  const auto h = random_channels(rs, dims);
  const auto t = testing::random_feasible_triple(rs, dims, 2.0);
  const CMat<double> b = rates::mac_interference_cov(0, h, t.precoder, t.combiners, t.covariances);
  const auto eig = kernels::hermitian_eig((b - CMat<double>::Identity(4, 4)).eval());
  CHECK(eig.values.minCoeff() >= -1e-10);
}

TEST_CASE("mac rates: scalar channel reduces to the log law") {
  channel::ChannelSet<double> h;
  h.per_user.push_back(CMat<double>::Ones(1, 1));
  h.path_sets.push_back({});
  rates::Precoder<double> v{CMat<double>::Ones(1, 1)};
  rates::CombinerSet<double> w{{CMat<double>::Ones(1, 1)}};
  const double power = 3.7;
  rates::CovarianceSet<double> q;
  q.budget = power;
  q.per_user.push_back(power * CMat<double>::Ones(1, 1));

  const double expected = 0.5 * std::log2(1.0 + power);
  CHECK(rates::mac_user_rate(0, h, v, w, q) == doctest::Approx(expected));
  CHECK(rates::mac_sum_rate(h, v, w, q) == doctest::Approx(expected));
  CHECK(rates::bc_user_rate(0, h, v, w,
                            rates::BcCovarianceSet<double>{{power * CMat<double>::Ones(1, 1)},
                                                           power}) == doctest::Approx(expected));
}

TEST_CASE("mac rates: zero covariance gives zero rate") {
  RandomStream rs(6);
  const auto dims = make_dims(2, 5, 2, 1);
  const auto h = random_channels(rs, dims);
  const auto t = testing::random_feasible_triple(rs, dims, 1.0);
  const auto q0 = zero_covariances(dims);
  for (Index j = 0; j < dims.num_users; ++j)
    CHECK(rates::mac_user_rate(j, h, t.precoder, t.combiners, q0) == doctest::Approx(0.0));
  CHECK(rates::mac_sum_rate(h, t.precoder, t.combiners, q0) == doctest::Approx(0.0));
}

TEST_CASE("mac rates: per-user rates telescope to the sum rate") {
  RandomStream rs(8);
  for (int rep = 0; rep < 6; ++rep) {
    const Index users = 2 + static_cast<Index>(rs.bits() % 3);
    const auto dims = make_dims(users, 8, 3, 2);
    const auto h = random_channels(rs, dims);
    const auto t = testing::random_feasible_triple(rs, dims, 5.0);

    double per_user_total = 0.0;
    for (Index j = 0; j < users; ++j)
      per_user_total += rates::mac_user_rate(j, h, t.precoder, t.combiners, t.covariances);
    const double sum = rates::mac_sum_rate(h, t.precoder, t.combiners, t.covariances);
    CHECK(std::abs(per_user_total - sum) <= 1e-9 * std::max(1.0, sum));
  }
}

TEST_CASE("mac_sum_rate: monotone in the covariance loading") {
  RandomStream rs(10);
  const auto dims = make_dims(2, 6, 3, 2);
  const auto h = random_channels(rs, dims);
  auto t = testing::random_feasible_triple(rs, dims, 2.0);
  const double before = rates::mac_sum_rate(h, t.precoder, t.combiners, t.covariances);
  t.covariances.per_user[0] += 0.3 * CMat<double>::Identity(2, 2);
  const double after = rates::mac_sum_rate(h, t.precoder, t.combiners, t.covariances);
  CHECK(after >= before - 1e-12);
}

TEST_CASE("bc_interference_cov: first user is interference-free") {
  RandomStream rs(12);
  const auto dims = make_dims(3, 8, 2, 1);
  const auto h = random_channels(rs, dims);
  const auto t = testing::random_feasible_triple(rs, dims, 3.0);

  rates::BcCovarianceSet<double> d;
  d.budget = 3.0;
  for (Index k = 0; k < dims.num_users; ++k)
    d.per_user.push_back(testing::random_psd(rs, dims.total_streams(), 1.0));

  const CMat<double> a0 = rates::bc_interference_cov(0, h, t.precoder, t.combiners, d);
  CHECK((a0 - CMat<double>::Identity(1, 1)).norm() <= 1e-8);

  for (Index j = 0; j < dims.num_users; ++j) {
    const CMat<double> a = rates::bc_interference_cov(j, h, t.precoder, t.combiners, d);
    const auto eig = kernels::hermitian_eig(
        (a - CMat<double>::Identity(dims.streams_per_user, dims.streams_per_user)).eval());
    CHECK(eig.values.minCoeff() >= -1e-10);
  }
}

TEST_CASE("bc rates: zero covariances give zero sum rate") {
  RandomStream rs(14);
  const auto dims = make_dims(2, 5, 2, 1);
  const auto h = random_channels(rs, dims);
  const auto t = testing::random_feasible_triple(rs, dims, 1.0);
  rates::BcCovarianceSet<double> d;
  d.budget = 0.0;
  d.per_user.assign(dims.num_users,
                    CMat<double>::Zero(dims.total_streams(), dims.total_streams()));
  CHECK(rates::bc_sum_rate(h, t.precoder, t.combiners, d) == doctest::Approx(0.0));
}

TEST_CASE("power accounting: a semi-unitary precoder preserves traces") {
  RandomStream rs(16);
  const auto dims = make_dims(3, 9, 3, 1);
  const auto t = testing::random_feasible_triple(rs, dims, 1.0);
  double through = 0.0;
  double direct = 0.0;
  for (Index k = 0; k < dims.num_users; ++k) {
    const CMat<double> d = testing::random_psd(rs, dims.total_streams(), 0.7 + 0.1 * double(k));
    through += (t.precoder.matrix * d * t.precoder.matrix.adjoint()).real().trace();
    direct += d.real().trace();
  }
  CHECK(std::abs(through - direct) <= 1e-9 * std::max(1.0, direct));
}

TEST_CASE("rates: dimension mismatches are rejected") {
  RandomStream rs(18);
  const auto dims = make_dims(2, 6, 2, 1);
  const auto h = random_channels(rs, dims);
  auto t = testing::random_feasible_triple(rs, dims, 1.0);

  auto bad = t.covariances;
  bad.per_user.pop_back();
  CHECK_THROWS_AS((void)rates::mac_sum_rate(h, t.precoder, t.combiners, bad),
                  std::invalid_argument);

  rates::Precoder<double> wrong{testing::random_semi_unitary(rs, 5, 2)};
  CHECK_THROWS_AS((void)rates::mac_sum_rate(h, wrong, t.combiners, t.covariances),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)rates::mac_user_rate(7, h, t.precoder, t.combiners, t.covariances),
                  std::invalid_argument);
}
