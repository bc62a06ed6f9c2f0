#include "fixtures.hpp"
#include "oracles.hpp"

#include <cpme/herding.hpp>
#include <cpme/metrics.hpp>
#include <cpme/reference.hpp>

#include <doctest.h>

#include <sstream>

using namespace cpme;

namespace {

Vector draws(Index n, Rng& rng, double shift = 0.0) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = rng.normal() + shift;
  return v;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("unbiased MMD matches the double sums") {
    Rng rng(1);
    for (Index m = 2; m <= 8; ++m) {
      const Vector a = draws(m, rng), b = draws(10 - m, rng, 0.5);
      CHECK(mmd2_unbiased(a, b, KernelSpec::gaussian(0.9)) ==
            doctest::Approx(oracle::mmd2_brute(a, b, 0.9)).epsilon(1e-12));
      CHECK(mmd2_unbiased(a, b, KernelSpec::gaussian(0.9)) ==
            doctest::Approx(reference::mmd2_unbiased(a, b, KernelSpec::gaussian(0.9))).epsilon(1e-12));
    }
    Vector two(2);
    two << 0.0, 1.0;
    const double k = oracle::gauss1(0.0, 1.0, 1.0);
    // Identical samples: 2k/2 + 2k/2 - 2(2 + 2k)/4 = k - 1.
    CHECK(mmd2_unbiased(two, two, KernelSpec::gaussian(1.0)) == doctest::Approx(k - 1.0).epsilon(1e-15));
    CHECK_THROWS_AS(mmd2_unbiased(Vector::Zero(1), two, KernelSpec::gaussian(1.0)), ConfigError);
  }

  TEST_CASE("unbiased MMD is symmetric and permutation invariant") {
    Rng rng(2);
    const Vector a = draws(30, rng), b = draws(25, rng, 1.0);
    const auto k = KernelSpec::gaussian(1.0);
    CHECK(mmd2_unbiased(a, b, k) == doctest::Approx(mmd2_unbiased(b, a, k)).epsilon(1e-13));
    Vector r = a.reverse();
    CHECK(mmd2_unbiased(r, b, k) == doctest::Approx(mmd2_unbiased(a, b, k)).epsilon(1e-13));
    CHECK(mmd2_unbiased(a, b, k) > mmd2_unbiased(a, draws(25, rng), k));
  }

  TEST_CASE("embedding distance") {
    Rng rng(3);
    const auto k = KernelSpec::gaussian(0.7);
    std::vector<EmbeddingFunctional> es;
    for (int t = 0; t < 6; ++t) {
      EmbeddingFunctional e{draws(5, rng), draws(5, rng), k};
      es.push_back(e);
    }
    for (const auto& a : es) {
      CHECK(mmd_between_embeddings(a, a) < 1e-6);
      for (const auto& b : es)
        for (const auto& c : es) CHECK(mmd_between_embeddings(a, c) <= mmd_between_embeddings(a, b) + mmd_between_embeddings(b, c) + 1e-8);
    }
    // Matches the squared distance of samples written as embeddings with V-statistic weights.
    const Vector s1 = draws(4, rng), s2 = draws(3, rng);
    const auto e1 = empirical_embedding(std::vector<double>(s1.begin(), s1.end()), k);
    const auto e2 = empirical_embedding(std::vector<double>(s2.begin(), s2.end()), k);
    double v = 0.0;
    for (Index i = 0; i < 4; ++i)
      for (Index j = 0; j < 4; ++j) v += oracle::gauss1(s1[i], s1[j], 0.7) / 16.0;
    for (Index i = 0; i < 3; ++i)
      for (Index j = 0; j < 3; ++j) v += oracle::gauss1(s2[i], s2[j], 0.7) / 9.0;
    for (Index i = 0; i < 4; ++i)
      for (Index j = 0; j < 3; ++j) v -= 2.0 * oracle::gauss1(s1[i], s2[j], 0.7) / 12.0;
    CHECK(mmd_between_embeddings(e1, e2) == doctest::Approx(std::sqrt(v)).epsilon(1e-10));
    EmbeddingFunctional other = e2;
    other.kY = KernelSpec::gaussian(0.8);
    CHECK_THROWS_AS(mmd_between_embeddings(e1, other), ConfigError);
  }

  TEST_CASE("Wasserstein-1") {
    Vector a(3), b(3);
    a << 0.0, 1.0, 2.0;
    b << 2.5, 0.5, 1.5;
    CHECK(wasserstein1d(a, b) == doctest::Approx(0.5));
    CHECK(wasserstein1d(a, a) == 0.0);

    Vector one(1), two(2);
    one << 0.0;
    two << 1.0, 3.0;
    CHECK(wasserstein1d(one, two) == doctest::Approx(2.0));
    Vector c(2), d(3);
    c << 0.0, 1.0;
    d << 0.0, 0.0, 1.0;
    // Quantiles differ on (1/2, 2/3] by 1.
    CHECK(wasserstein1d(c, d) == doctest::Approx(1.0 / 6.0).epsilon(1e-14));

    Rng rng(4);
    const Vector s1 = draws(17, rng), s2 = draws(11, rng, 0.3);
    CHECK(wasserstein1d(s1, s2) == doctest::Approx(wasserstein1d(s2, s1)).epsilon(1e-14));
    const Vector shifted1 = s1.array() + 2.0, shifted2 = s2.array() + 2.0;
    CHECK(wasserstein1d(shifted1, shifted2) == doctest::Approx(wasserstein1d(s1, s2)).epsilon(1e-12));
    CHECK(wasserstein1d(shifted1, s2) <= wasserstein1d(s1, s2) + 2.0 + 1e-12);
    CHECK(wasserstein1d(shifted1, s1) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS(wasserstein1d(Vector(0), s1), ConfigError);

    const auto rep = compare_samples(s1, s2, KernelSpec::gaussian(1.0));
    CHECK(rep.m1 == 17);
    CHECK(rep.m2 == 11);
    CHECK(rep.wasserstein1 == wasserstein1d(s1, s2));
  }

  TEST_CASE("OPE readings agree with the embeddings") {
    const auto d = fixture::toy(60, 3, 5);
    const auto kA = KernelSpec::gaussian(1.0), kX = KernelSpec::gaussian(2.0);
    const auto m = fit_cme(d, kA, kX, KernelSpec::linear(), 1e-3);
    const PropensitySource prop = fit_propensity(d);
    const GaussianLinear pi{Vector::Constant(3, 0.2), 1.0};
    Rng a(1), b(1), c(2), e(2);
    const double dm = ope_dm(m, d, pi, 8, a);
    const double chi_pi = plugin_embedding(m, policy_weight_vector_resample(m, pi, b, 8)).linear_reading();
    CHECK(dm == doctest::Approx(chi_pi).epsilon(1e-8));
    const double dr = ope_dr(m, d, pi, prop, 8, c);
    const double chi_dr = dr_embedding(m, prop, d, pi, 8, e).linear_reading();
    CHECK(dr == doctest::Approx(chi_dr).epsilon(1e-8));
  }

  TEST_CASE("DM by independent kernel ridge regression") {
    const DiscreteActions pi{{-1.0, 0.5}, {0.3, 0.7}};
    const auto d = fixture::discrete_toy(6, 2, DiscreteActions{{-1.0, 0.5, 2.0}, {0.3, 0.3, 0.4}}, 6);
    const double lam = 0.05;
    const auto m = fit_cme(d, KernelSpec::gaussian(0.9), KernelSpec::gaussian(1.3), KernelSpec::linear(), lam);
    const Matrix A = fixture::actions(d);
    const Matrix K = oracle::product_gauss(A, d.X, A, d.X, 0.9, 1.3);
    double expect = 0.0;
    for (Index i = 0; i < 6; ++i)
      for (std::size_t s = 0; s < 2; ++s) {
        Matrix aq(1, 1);
        aq << pi.values[s];
        const Matrix Kq = oracle::product_gauss(A, d.X, aq, d.X.row(i), 0.9, 1.3);
        expect += pi.probs[s] * oracle::krr_predict(K, Kq, d.Y, lam)[0] / 6.0;
      }
    Rng rng(1);
    CHECK(ope_dm(m, d, pi, 1, rng) == doctest::Approx(expect).epsilon(1e-10));
  }

  TEST_CASE("wIPS") {
    const DiscreteActions logging{{0.0, 1.0}, {0.5, 0.5}};
    const auto d = fixture::discrete_toy(40, 1, logging, 7);
    const PropensitySource prop = KnownPropensity{logging, 1e-3};
    CHECK(ope_wips(d, logging, prop) == doctest::Approx(d.Y.mean()).epsilon(1e-14));
    const auto one = d.slice(0, 1);
    CHECK(ope_wips(one, DiscreteActions{{0.0, 1.0}, {0.9, 0.1}}, prop) == doctest::Approx(one.Y[0]).epsilon(1e-15));
    CHECK_THROWS_AS(ope_wips(d, DiscreteActions{{5.0}, {1.0}}, prop), NumericalError);
  }

  TEST_CASE("wIPS is close to the true value with known propensities") {
    // x ~ N(0, 1), a ~ N(x, 1), y = a + x + N(0, 0.1^2); target a ~ N(0.5 x, 1).
    // True value E[0.5 x + x] = 0.
    const Index n = 100000;
    Rng rng(8);
    LoggedDataset d;
    d.X.resize(n, 1);
    d.Y.resize(n);
    const GaussianLinear logging{Vector::Ones(1), 1.0}, target{Vector::Constant(1, 0.5), 1.0};
    for (Index i = 0; i < n; ++i) {
      d.X(i, 0) = rng.normal();
      const Vector x = d.X.row(i).transpose();
      d.A.push_back(sample_action(logging, x, rng));
      d.Y[i] = std::get<double>(d.A.back()) + x[0] + 0.1 * rng.normal();
    }
    const PropensitySource prop = KnownPropensity{logging, 1e-300};
    const auto w = importance_weights(d, target, prop).w;
    const double est = ope_wips(d, target, prop);
    // Delta-method standard error of the ratio estimator.
    const Vector r = (d.Y.array() - est) * w.array() / w.mean();
    const double se = std::sqrt(r.squaredNorm() / static_cast<double>(n)) / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(est) < 2.0 * se);
  }

  TEST_CASE("unit weights collapse to the sample mean") {
    // On-policy with a near-interpolating fit: DM, DR and wIPS all read the
    // sample mean of the logged outcomes.
    const DiscreteActions pi0{{0.0}, {1.0}};
    const auto d = fixture::discrete_toy(30, 1, pi0, 9, 0.0);
    const auto m = fit_cme(d, KernelSpec::gaussian(1.0), KernelSpec::gaussian(0.5), KernelSpec::linear(), 1e-10);
    const PropensitySource prop = KnownPropensity{pi0, 1e-3};
    Rng a(1), b(2);
    CHECK(ope_wips(d, pi0, prop) == doctest::Approx(d.Y.mean()).epsilon(1e-14));
    CHECK(ope_dm(m, d, pi0, 1, a) == doctest::Approx(d.Y.mean()).epsilon(1e-6));
    CHECK(ope_dr(m, d, pi0, prop, 1, b) == doctest::Approx(d.Y.mean()).epsilon(1e-6));
  }

  TEST_CASE("DR with a zero outcome model is the IPS mean") {
    const DiscreteActions logging{{0.0, 1.0}, {0.4, 0.6}}, target{{0.0, 1.0}, {0.7, 0.3}};
    auto d = fixture::discrete_toy(20, 1, logging, 10);
    const auto m = fit_cme(d, KernelSpec::gaussian(1.0), KernelSpec::gaussian(1.0), KernelSpec::linear(), 1e12);
    const PropensitySource prop = KnownPropensity{logging, 1e-3};
    const Vector w = importance_weights(d, target, prop).w;
    Rng rng(1);
    CHECK(ope_dr(m, d, target, prop, 1, rng) == doctest::Approx(w.dot(d.Y) / 20.0).epsilon(1e-9));
    const auto other = fixture::discrete_toy(20, 1, logging, 11);
    CHECK_THROWS_AS(ope_dr(m, other, target, prop, 1, rng), ConfigError);
  }

  TEST_CASE("metric CSV") {
    std::ostringstream out;
    write_metric_csv(out, {{"s", "dr", "mse", 0.5, 0.25, 0.75}});
    CHECK(out.str() == "scenario,method,metric,value,ci_low,ci_high\ns,dr,mse,0.5,0.25,0.75\n");
  }
}
