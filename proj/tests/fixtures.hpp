#pragma once

#include <cpme/dataset.hpp>
#include <cpme/policy.hpp>
#include <cpme/rng.hpp>

#include <cmath>

namespace fixture {

using cpme::Index;
using cpme::Matrix;
using cpme::Vector;

/// Scalar-action toy: x ~ N(0, I_d), a ~ N(x^T w, 1), y = sin(a) + x_0 + noise.
inline cpme::LoggedDataset toy(Index n, Index d, std::uint64_t seed, double noise = 0.1) {
  cpme::Rng rng(seed, 0x746f79ULL);
  cpme::LoggedDataset data;
  data.X.resize(n, d);
  data.Y.resize(n);
  for (Index i = 0; i < n; ++i) {
    double xw = 0.0;
    for (Index k = 0; k < d; ++k) {
      data.X(i, k) = rng.normal();
      xw += data.X(i, k) / std::sqrt(static_cast<double>(d));
    }
    const double a = xw + rng.normal();
    data.A.emplace_back(a);
    data.Y[i] = std::sin(a) + data.X(i, 0) + noise * rng.normal();
  }
  return data;
}

inline Matrix actions(const cpme::LoggedDataset& d) {
  Matrix A(d.size(), 1);
  for (Index i = 0; i < d.size(); ++i) A(i, 0) = std::get<double>(d.A[static_cast<std::size_t>(i)]);
  return A;
}

/// Rows with actions drawn from a finite support, y = a + x_0 + noise.
inline cpme::LoggedDataset discrete_toy(Index n, Index d, const cpme::Policy& logging, std::uint64_t seed,
                                        double noise = 0.1) {
  cpme::Rng rng(seed, 0x646973ULL);
  cpme::LoggedDataset data;
  data.X.resize(n, d);
  data.Y.resize(n);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < d; ++k) data.X(i, k) = rng.normal();
    const cpme::Vector x = data.X.row(i).transpose();
    data.A.push_back(cpme::sample_action(logging, x, rng));
    data.Y[i] = std::get<double>(data.A.back()) + data.X(i, 0) + noise * rng.normal();
  }
  return data;
}

}  // namespace fixture
