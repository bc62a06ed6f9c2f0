#pragma once

// Straightforward single-threaded implementations of the parallel kernels.
// They are kept as oracles for the unit tests and as the baseline in the
// benchmark; none of them is used by the estimators.

#include "cpme/embedding.hpp"
#include "cpme/herding.hpp"

#include <vector>

namespace cpme::reference {

/// Entry-by-entry eval_kernel loop.
GramMatrix gram(const KernelSpec& spec, const Matrix& W1, const Matrix& W2);

GramMatrix product_gram(const KernelSpec& kA, const KernelSpec& kX, const Matrix& A1, const Matrix& X1,
                        const Matrix& A2, const Matrix& X2);

/// Kbar[j, i] = kX(X_j, x_i) sum_s w_s kA(A_j, a_is) by direct summation.
Matrix policy_kernel_means(const CmeModel& m, const PolicyAtoms& atoms);

/// Same permutations as cpme::permutation_statistics, double-sum statistic.
std::vector<double> permutation_statistics(const Vector& d, const GramMatrix& K, Index n_perm, std::uint64_t seed);

/// Unbiased weighted MMD^2 as the explicit sum over i != j.
double weighted_mmd2(const Vector& d, const GramMatrix& K);

/// Unbiased MMD^2 as explicit double sums.
double mmd2_unbiased(const Vector& s1, const Vector& s2, const KernelSpec& k);

/// Herding by evaluating herd_objective at every grid point at every step.
std::vector<double> herd(const EmbeddingFunctional& chi, const HerdConfig& cfg);

}  // namespace cpme::reference
