#include "oracles.hpp"

#include <cpme/policy.hpp>
#include <cpme/scenarios.hpp>

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

using namespace cpme;

namespace {

std::shared_ptr<const ItemCatalog> catalog(Index M, Index d, int K, std::uint64_t seed) {
  auto c = std::make_shared<ItemCatalog>();
  Rng rng(seed);
  c->features.resize(M, d);
  for (Index i = 0; i < M; ++i)
    for (Index j = 0; j < d; ++j) c->features(i, j) = rng.normal();
  c->list_length = K;
  return c;
}

Matrix users(Index N, Index d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix U(N, d);
  for (Index i = 0; i < N; ++i)
    for (Index j = 0; j < d; ++j) U(i, j) = rng.normal();
  return U;
}

// Every ordered K-list of distinct items from 0..M-1.
void all_lists(Index M, int K, ItemList& prefix, std::vector<ItemList>& out) {
  if (static_cast<int>(prefix.size()) == K) {
    out.push_back(prefix);
    return;
  }
  for (int i = 0; i < M; ++i) {
    if (std::find(prefix.begin(), prefix.end(), i) != prefix.end()) continue;
    prefix.push_back(i);
    all_lists(M, K, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace

TEST_SUITE("policies") {
  TEST_CASE("Gaussian densities") {
    Vector x = Vector::Constant(3, 0.7);
    CHECK(policy_density(GaussianLinear{Vector::Zero(3), 1.0}, 0.0, x) == doctest::Approx(0.3989422804014327));
    const GaussianLinear g{Vector::Constant(3, 0.2), 1.0};
    const GaussianMixture twin{{{0.5, g.w, 1.0}, {0.5, g.w, 1.0}}};
    for (double a : {-3.0, -0.4, 0.0, 0.42, 2.5}) {
      CHECK(policy_density(twin, a, x) == doctest::Approx(policy_density(g, a, x)).epsilon(1e-15));
      CHECK(policy_density(g, a, x) == doctest::Approx(oracle::phi(a - 0.42)).epsilon(1e-14));
    }
  }

  TEST_CASE("continuous densities integrate to one") {
    Vector x(2);
    x << 0.3, -1.2;
    Vector w(2);
    w << 0.5, 0.25;
    const std::vector<Policy> ps = {
        GaussianLinear{w, 0.7},
        GaussianMixture{{{0.3, w, 0.5}, {0.7, -w, 1.5}}},
        LogisticLinear{w, 0.55},
        UniformAction{-2.0, 1.0},
    };
    for (const auto& p : ps) {
      // 6 sd either side of the mean covers every family here to well below 1e-6.
      const double mass = oracle::simpson([&](double a) { return policy_density(p, a, x); }, -15.0, 15.0, 60000);
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
    }
  }

  TEST_CASE("Gaussian sampler mean") {
    Vector x(3);
    x << 1.0, -0.5, 2.0;
    Vector w(3);
    w << 0.3, 0.6, -0.1;
    const GaussianLinear g{w, 1.0};
    Rng rng(77);
    double s = 0.0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) s += std::get<double>(sample_action(g, x, rng));
    CHECK(std::abs(s / draws - x.dot(w)) < 0.02);
  }

  TEST_CASE("batched and single draws agree") {
    Vector x = Vector::Constant(2, 0.4);
    const std::vector<Policy> ps = {GaussianLinear{Vector::Ones(2), 1.0}, LogisticLinear{Vector::Ones(2), 0.5},
                                    GaussianMixture{{{0.5, Vector::Ones(2), 1.0}, {0.5, -Vector::Ones(2), 2.0}}},
                                    UniformAction{0, 3}, DiscreteActions{{-1, 0, 2}, {0.2, 0.5, 0.3}}};
    for (const auto& p : ps) {
      Rng a(5), b(5);
      const auto batch = sample_actions(p, x, 50, a);
      for (const auto& v : batch) CHECK(v == sample_action(p, x, b));
    }
  }

  TEST_CASE("invalid parameters") {
    CHECK_THROWS_AS(validate_policy(GaussianLinear{Vector::Ones(2), 0.0}), ConfigError);
    CHECK_THROWS_AS(validate_policy(GaussianMixture{{{0.4, Vector::Ones(2), 1.0}, {0.4, Vector::Ones(2), 1.0}}}),
                    ConfigError);
    CHECK_THROWS_AS(validate_policy(UniformAction{1.0, 1.0}), ConfigError);
    CHECK_THROWS_AS(validate_policy(DiscreteActions{{0, 1}, {0.5, 0.6}}), ConfigError);
    Rng rng(1);
    CHECK_THROWS_AS(sample_action(GaussianLinear{Vector::Ones(2), 0.0}, Vector::Ones(2), rng), ConfigError);
  }

  TEST_CASE("multinomial list masses") {
    // Equal item features: every ordered list is equally likely.
    auto flat = std::make_shared<ItemCatalog>();
    flat->features = Matrix::Ones(3, 2);
    flat->list_length = 2;
    const Matrix U = users(2, 2, 1);
    const MultinomialList eq(U, U, flat);
    std::vector<ItemList> lists;
    ItemList prefix;
    all_lists(3, 2, prefix, lists);
    CHECK(lists.size() == 6);
    double total = 0.0;
    for (const auto& l : lists) {
      const double p = policy_density(eq, l, U.row(0).transpose());
      CHECK(p == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
      total += p;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
  }

  TEST_CASE("multinomial list masses sum to one and match sequential selection") {
    for (Index M : {3, 4, 5, 6}) {
      for (int K : {1, 2, 3}) {
        const auto cat = catalog(M, 3, K, static_cast<std::uint64_t>(M * 10 + K));
        const Matrix U = users(3, 3, 9);
        const MultinomialList pol(U, U, cat);
        std::vector<ItemList> lists;
        ItemList prefix;
        all_lists(M, K, prefix, lists);
        for (Index u = 0; u < U.rows(); ++u) {
          const Vector x = U.row(u).transpose();
          double total = 0.0;
          for (const auto& l : lists) {
            // Product of without-replacement selection probabilities.
            std::vector<double> sc(static_cast<std::size_t>(M));
            for (Index i = 0; i < M; ++i) sc[static_cast<std::size_t>(i)] = std::exp(cat->features.row(i).dot(x));
            double p = 1.0, remaining = 0.0;
            for (double s : sc) remaining += s;
            for (int item : l) {
              p *= sc[static_cast<std::size_t>(item)] / remaining;
              remaining -= sc[static_cast<std::size_t>(item)];
            }
            const double got = policy_density(pol, l, x);
            CHECK(got == doctest::Approx(p).epsilon(1e-12));
            total += got;
          }
          CHECK(std::abs(total - 1.0) <= 1e-12);
        }
      }
    }
  }

  TEST_CASE("multinomial draws never repeat an item and follow the masses") {
    const auto cat = catalog(4, 2, 2, 3);
    const Matrix U = users(1, 2, 4);
    const MultinomialList pol(U, U, cat);
    const Vector x = U.row(0).transpose();
    Rng rng(8);
    std::map<ItemList, int> counts;
    const int draws = 40000;
    for (int i = 0; i < draws; ++i) {
      const auto l = std::get<ItemList>(sample_action(pol, x, rng));
      CHECK(std::set<int>(l.begin(), l.end()).size() == l.size());
      ++counts[l];
    }
    for (const auto& [l, c] : counts) {
      const double p = policy_density(pol, l, x);
      CHECK(std::abs(c / double(draws) - p) < 5.0 * std::sqrt(p * (1 - p) / draws) + 1e-4);
    }
    const auto sup = enumerate_support(pol, x);
    REQUIRE(sup.has_value());
    CHECK(sup->size() == 12);
  }

  TEST_CASE("multinomial list rejects unknown users and bad lists") {
    const auto cat = catalog(4, 2, 2, 3);
    const Matrix U = users(2, 2, 4);
    const MultinomialList pol(U, U, cat);
    CHECK_THROWS_AS(policy_density(pol, ItemList{0, 1}, Vector::Constant(2, 99.0)), ConfigError);
    CHECK_THROWS_AS(policy_density(pol, ItemList{0, 7}, U.row(0).transpose()), ConfigError);
    CHECK_THROWS_AS(policy_density(pol, 0.5, U.row(0).transpose()), ConfigError);
    CHECK_THROWS_AS(policy_density(GaussianLinear{Vector::Ones(2), 1.0}, ItemList{0, 1}, Vector::Ones(2)), ConfigError);
  }

  TEST_CASE("discrete support enumeration") {
    const DiscreteActions d{{-1.0, 0.5, 2.0}, {0.25, 0.5, 0.25}};
    const auto sup = enumerate_support(d, Vector::Zero(1));
    REQUIRE(sup.has_value());
    double total = 0.0;
    for (const auto& [a, p] : *sup) {
      CHECK(policy_density(d, a, Vector::Zero(1)) == p);
      total += p;
    }
    CHECK(total == 1.0);
    CHECK_FALSE(enumerate_support(GaussianLinear{Vector::Ones(1), 1.0}, Vector::Zero(1)).has_value());
  }
}
