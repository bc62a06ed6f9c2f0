#include "vector_exp.hpp"

#include <cmath>

namespace cpme::detail {

#ifdef CPME_HAVE_LIBMVEC
// This file alone is compiled with -ffast-math so that the loop below is
// vectorized through libmvec. Nothing else lives here.
void exp_inplace(double* v, Index n) {
#pragma omp simd
  for (Index i = 0; i < n; ++i) v[i] = std::exp(v[i]);
}
#else
void exp_inplace(double* v, Index n) {
  Eigen::Map<Eigen::ArrayXd> a(v, n);
  a = a.exp();
}
#endif

}  // namespace cpme::detail
