#include <doctest.h>

#include <limits>
#include <random>

#include "kmdr/error.hpp"
#include "kmdr/kaplan_meier.hpp"
#include "support.hpp"

using namespace kmdr;

namespace {

KaplanMeierWeights km_of(std::vector<double> y, std::vector<int> d, Index k = 1) {
  const auto n = static_cast<Index>(y.size());
  Eigen::MatrixXd x(n, k);
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < k; ++c) x(i, c) = 0.1 + 0.4 * static_cast<double>(i);
  return km_weights(order_sample(CensoredSample(
      Eigen::Map<Eigen::VectorXd>(y.data(), n), Eigen::Map<Eigen::VectorXi>(d.data(), n), x)));
}

}  // namespace

TEST_CASE("km_weights hand-computed cases") {
  SUBCASE("n=3, delta=(1,0,1)") {
    const auto km = km_of({1, 2, 3}, {1, 0, 1});
    CHECK(km.w()(0) == doctest::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(km.w()(1) == 0.0);
    CHECK(km.w()(2) == doctest::Approx(2.0 / 3).epsilon(1e-15));
  }
  SUBCASE("no censoring gives exactly 1/n") {
    const auto km = km_of({4, 1, 3, 2}, {1, 1, 1, 1});
    for (Index i = 0; i < 4; ++i) CHECK(km.w()(i) == 0.25);
  }
  SUBCASE("mass lost to a final censored point") {
    const auto km = km_of({1, 2}, {1, 0});
    CHECK(km.w()(0) == doctest::Approx(0.5));
    CHECK(km.w()(1) == 0.0);
    CHECK(km.total() == doctest::Approx(0.5));
  }
}

TEST_CASE("km_cdf") {
  const auto km = km_of({1, 2, 3}, {1, 0, 1});
  CHECK(km_cdf(km, 0.5) == 0.0);
  CHECK(km_cdf(km, 2.5) == doctest::Approx(1.0 / 3));
  CHECK(km_cdf(km, 3.0) == doctest::Approx(km.total()));
  CHECK(km_cdf(km, std::numeric_limits<double>::infinity()) == doctest::Approx(1.0));
  CHECK(km_cdf(km, -std::numeric_limits<double>::infinity()) == 0.0);
  CHECK_THROWS_AS(km_cdf(km, std::numeric_limits<double>::quiet_NaN()), ValidationError);
}

TEST_CASE("km_multivariate") {
  const double inf = std::numeric_limits<double>::infinity();
  const auto km = km_of({1, 2, 3}, {1, 0, 1});  // x = 0.1, 0.5, 0.9
  const double all[] = {inf};
  CHECK(km_multivariate(km, 2.5, all) == doctest::Approx(km_cdf(km, 2.5)));
  const double below_third[] = {0.6};
  CHECK(km_multivariate(km, inf, below_third) == doctest::Approx(1.0 / 3));
  const double two[] = {1.0, 1.0};
  CHECK_THROWS_AS(km_multivariate(km, 1.0, two), ValidationError);

  const auto full = km_of({1, 2, 3, 4}, {1, 1, 1, 1});  // x = 0.1, 0.5, 0.9, 1.3
  const double half[] = {0.7};
  CHECK(km_multivariate(full, inf, half) == doctest::Approx(0.5));
}

TEST_CASE("km weights and cdf agree with the product formula on random samples") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 200; ++rep) {
    const bool ties = rep % 2 == 1;
    const auto s = oracle::random_sample(rng, 5 + rep % 60, 1, 1.5, ties);
    const auto km = km_weights(order_sample(s));
    std::vector<int> ds(static_cast<std::size_t>(s.n()));
    for (Index i = 0; i < s.n(); ++i) ds[static_cast<std::size_t>(i)] = km.ordered().delta(i);
    const auto w = oracle::km_weights_product(ds);
    double sum = 0.0;
    for (Index i = 0; i < s.n(); ++i) {
      REQUIRE(km.w()(i) == doctest::Approx(w[static_cast<std::size_t>(i)]).epsilon(1e-12));
      REQUIRE(km.w()(i) >= 0.0);
      if (km.ordered().delta(i) == 0) REQUIRE(km.w()(i) == 0.0);
      sum += km.w()(i);
    }
    REQUIRE(sum <= 1.0 + 1e-12);
    if (km.ordered().delta(s.n() - 1) == 1) REQUIRE(sum == doctest::Approx(1.0).epsilon(1e-12));
    for (Index i = 0; i < s.n(); ++i) {
      const double t = s.y()(i);
      REQUIRE(std::abs(km_cdf(km, t) - oracle::km_cdf_product(s.y(), s.delta(), t)) <= 1e-12);
    }
  }
}

TEST_CASE("uncensored km_cdf is the empirical cdf") {
  std::mt19937_64 rng(8);
  const auto s = oracle::random_sample(rng, 37, 1, 0.0);
  const auto km = km_weights(order_sample(s));
  for (Index i = 0; i < s.n(); ++i) {
    const double t = s.y()(i);
    const double ecdf = static_cast<double>((s.y().array() <= t).count()) / 37.0;
    CHECK(std::abs(km_cdf(km, t) - ecdf) <= 1e-15);
  }
}
