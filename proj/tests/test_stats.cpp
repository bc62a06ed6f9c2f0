#include <cpme/rng.hpp>
#include <cpme/stats.hpp>

#include <doctest.h>

#include <cmath>

using namespace cpme;

TEST_SUITE("stats") {
  TEST_CASE("normal distribution") {
    CHECK(normal_cdf(0.0) == 0.5);
    CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
    CHECK(normal_cdf(-3.0) == doctest::Approx(0.0013498980316301).epsilon(1e-10));
    for (double p : {1e-10, 0.01, 0.3, 0.5, 0.8, 0.999}) CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-10));
    CHECK_THROWS_AS(normal_quantile(0.0), ConfigError);
    CHECK_THROWS_AS(normal_quantile(1.0), ConfigError);
  }

  TEST_CASE("Wilson interval") {
    const auto half = wilson_interval(5, 10);
    CHECK(half.low == doctest::Approx(0.2365931).epsilon(1e-6));
    CHECK(half.high == doctest::Approx(0.7634069).epsilon(1e-6));
    const auto none = wilson_interval(0, 10);
    CHECK(none.low == 0.0);
    CHECK(none.high == doctest::Approx(0.2775328).epsilon(1e-6));
    const auto all = wilson_interval(10, 10);
    CHECK(all.high == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(all.low == doctest::Approx(1.0 - none.high).epsilon(1e-12));
    CHECK_THROWS_AS(wilson_interval(3, 2), ConfigError);
    CHECK_THROWS_AS(wilson_interval(0, 0), ConfigError);
  }

  TEST_CASE("mean interval") {
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    CHECK(mean(v) == 2.5);
    CHECK(sample_sd(v) == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-15));
    const auto ci = mean_interval(v);
    CHECK(ci.low == doctest::Approx(2.5 - 1.959963984540054 * std::sqrt(5.0 / 3.0) / 2.0).epsilon(1e-14));
    const auto single = mean_interval({7.0});
    CHECK(single.low == 7.0);
    CHECK(single.high == 7.0);
    CHECK_THROWS_AS(mean({}), ConfigError);
  }

  TEST_CASE("Kolmogorov distribution") {
    CHECK(kolmogorov_sf(0.0) == 1.0);
    CHECK(kolmogorov_sf(1.3580986) == doctest::Approx(0.05).epsilon(1e-5));
    CHECK(kolmogorov_sf(1.6276236) == doctest::Approx(0.01).epsilon(1e-4));
    CHECK(kolmogorov_sf(0.5) == doctest::Approx(0.9639452).epsilon(1e-6));
    double prev = 1.0;
    for (double x = 0.1; x < 3.0; x += 0.05) {
      CHECK(kolmogorov_sf(x) <= prev);
      prev = kolmogorov_sf(x);
    }
  }

  TEST_CASE("KS test against N(0, 1)") {
    std::vector<double> q;
    for (int i = 1; i <= 50; ++i) q.push_back(normal_quantile((i - 0.5) / 50.0));
    const auto exact = ks_test_normal(q);
    CHECK(exact.distance == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(exact.p_value == 1.0);

    Rng rng(1);
    std::vector<double> draws, shifted;
    for (int i = 0; i < 2000; ++i) {
      draws.push_back(rng.normal());
      shifted.push_back(rng.normal() + 0.5);
    }
    CHECK(ks_test_normal(draws).p_value > 0.001);
    CHECK(ks_test_normal(shifted).p_value < 1e-10);
    CHECK_THROWS_AS(ks_test_normal({}), ConfigError);
  }
}
