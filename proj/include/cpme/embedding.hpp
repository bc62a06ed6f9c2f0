#pragma once

#include "cpme/nuisance.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace cpme {

/// chi(y) = sum_j coeffs_j k_Y(atoms_j, y): an element of the outcome RKHS
/// in atom/coefficient form.
struct EmbeddingFunctional {
  Vector atoms;
  Vector coeffs;
  KernelSpec kY;

  Index size() const { return atoms.size(); }
  void validate() const;
  double operator()(double y) const;
  /// chi at every entry of ys (parallel over ys).
  Vector evaluate(const Vector& ys) const;
  /// ||chi||^2 = c^T K_YY c.
  double squared_norm() const;
  /// sum_j c_j y_j: the reading of chi under a linear outcome kernel.
  double linear_reading() const { return coeffs.dot(atoms); }
};

/// CSV `atom,coeff` with a one-line sidecar file `<path>.kernel` holding the
/// outcome kernel (for example `kY = gaussian(0.5)`).
void write_embedding_csv(std::ostream& out, const EmbeddingFunctional& e);
void write_embedding(const std::string& path, const EmbeddingFunctional& e);
EmbeddingFunctional read_embedding(const std::string& path);

/// Actions representing pi(.|x_i) for each query row: exact support with
/// probabilities for enumerable policies, otherwise equally weighted draws.
/// Rows with bitwise-identical covariates share one draw set.
struct PolicyAtoms {
  Matrix features;                 ///< action features of all atoms, one per row
  Vector weights;                  ///< per atom; sums to 1 within a group
  std::vector<Index> group_begin;  ///< atoms of group g: [group_begin[g], group_begin[g+1])
  std::vector<Index> row_group;    ///< query row -> group
  Matrix group_X;                  ///< covariates of each group

  Index groups() const { return group_X.rows(); }
  Index rows() const { return static_cast<Index>(row_group.size()); }
};

enum class AtomMode {
  Auto,       ///< enumerate when the support is small, otherwise sample
  Enumerate,  ///< exact support; ConfigError if not enumerable
  Sample,     ///< always draw
};

PolicyAtoms policy_atoms(const Policy& policy, const Matrix& X, const ActionSpace& space, Index draws, Rng& rng,
                         AtomMode mode = AtomMode::Auto, std::size_t max_support = 4096);

/// Kernel means Kbar (n_train x rows):
///   Kbar[j, i] = kX(X_j, x_i) * sum_s w_s kA(A_j, a_is),
/// i.e. column i is the training-side kernel vector integrated over pi(.|x_i).
/// Parallel over groups; the result does not depend on the thread count.
Matrix policy_kernel_means(const CmeModel& m, const PolicyAtoms& atoms);

/// pi(a_i|x_i) / pi0_hat(a_i|x_i), optionally clipped.
struct ImportanceWeights {
  Vector w;
  Index clipped = 0;   ///< entries reduced to the cap
  Index above_warn = 0;  ///< entries above the warning threshold
};

struct WeightOptions {
  std::optional<double> clip;  ///< cap on importance weights; none by default
  double warn_above = 1e4;
};

ImportanceWeights importance_weights(const LoggedDataset& data, const Policy& policy, const PropensitySource& prop,
                                     const WeightOptions& opts = {});

/// Right-hand sides for the plug-in solve (all divided by n).
Vector policy_weight_vector_discrete(const CmeModel& m, const Policy& policy);
Vector policy_weight_vector_resample(const CmeModel& m, const Policy& policy, Rng& rng, Index draws = 1);
Vector policy_weight_vector_ips(const CmeModel& m, const Policy& policy, const PropensitySource& prop,
                                const WeightOptions& opts = {}, ImportanceWeights* info = nullptr);

/// coeffs = (K + n lambda I)^{-1} rhs over the training outcomes.
EmbeddingFunctional plugin_embedding(const CmeModel& m, const Vector& rhs);

/// One-step doubly robust embedding on the training rows of `m`:
///   c = (1/n) [ W - (K + n lambda I)^{-1} K W + (K + n lambda I)^{-1} Kbar 1 ].
/// Policy integrals use mc_draws draws per row (exact for enumerable policies).
EmbeddingFunctional dr_embedding(const CmeModel& m, const PropensitySource& prop, const LoggedDataset& data,
                                 const Policy& policy, Index mc_draws, Rng& rng, const WeightOptions& opts = {});

/// Per-sample coefficients of the EIF difference phi_{pi,pi'}(y_i, a_i, x_i)
/// over the training outcomes.
struct EifAtoms {
  Vector atoms;  ///< training outcomes
  Matrix rows;   ///< n x n; row i = coefficients of phi_i
  Vector w_diff; ///< (pi - pi') / pi0_hat at (a_i, x_i)
};

struct EifOptions {
  Index mc_draws = 32;
  /// Use one draw set for both policies (common random numbers). With equal
  /// policies the rows then vanish exactly.
  bool shared_draws = false;
  WeightOptions weights;
};

EifAtoms eif_difference_atoms(const CmeModel& m, const PropensitySource& prop, const LoggedDataset& data,
                              const Policy& pi, const Policy& pi2, Rng& rng, const EifOptions& opts = {});

/// The same rows kept factored as diag(w_diff) + (R^{-1} M)^T, with R the
/// regularized CME system. Products with the rows then take one solve.
/// Holds a pointer to the model, which must outlive it.
struct EifFactors {
  const CmeModel* cme = nullptr;
  Vector atoms;
  Vector w_diff;
  Matrix M;

  Vector apply(const Vector& v) const;  ///< rows * v
  Vector column_mean() const;           ///< mean of the rows
  Matrix rows() const;
};

/// Draws exactly as eif_difference_atoms, so rows() equals its `rows`.
EifFactors eif_difference_factors(const CmeModel& m, const PropensitySource& prop, const LoggedDataset& data,
                                  const Policy& pi, const Policy& pi2, Rng& rng, const EifOptions& opts = {});

}  // namespace cpme
