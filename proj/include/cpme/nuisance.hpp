#pragma once

#include "cpme/dataset.hpp"
#include "cpme/kernels.hpp"
#include "cpme/policy.hpp"

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

namespace cpme {

/// Conditional mean embedding mu(a, x) = sum_i beta_i(a, x) phi_Y(y_i) fitted
/// by kernel ridge regression with feature-map targets.
///
/// beta(a, x) = (K + n lambda I)^{-1} k(a, x), where K is the product
/// (action x covariate) Gram of the training pairs. Only the Cholesky
/// factor is kept; no inverse is formed.
class CmeModel {
 public:
  /// Fits on the given training rows. Accepts any n >= 1 so that models can
  /// be assembled by hand; use fit_cme for the validated entry point.
  CmeModel(const LoggedDataset& train, KernelSpec kA, KernelSpec kX, KernelSpec kY, double lambda);

  Index size() const { return train_.size(); }
  double lambda() const { return lambda_; }
  const KernelSpec& kA() const { return kA_; }
  const KernelSpec& kX() const { return kX_; }
  const KernelSpec& kY() const { return kY_; }
  const ActionSpace& space() const { return train_.space; }
  const LoggedDataset& train_data() const { return train_; }

  const Matrix& train_X() const { return train_.X; }
  const Matrix& train_A() const { return A_; }  ///< action features, n x p
  const Vector& train_Y() const { return train_.Y; }
  const GramMatrix& gram_A() const { return KA_; }
  const GramMatrix& gram_X() const { return KX_; }
  const GramMatrix& gram() const { return K_; }  ///< KA o KX

  /// (K + n lambda I)^{-1} rhs, column by column.
  Matrix solve(const Matrix& rhs) const;
  Vector solve(const Vector& rhs) const;

  /// Product-kernel vectors between the training pairs and query pairs
  /// (columns): n x q.
  GramMatrix cross_gram(const Matrix& A_query, const Matrix& X_query) const;

  /// beta for each query pair: n x q.
  Matrix weights(const Matrix& A_query, const Matrix& X_query) const;

  /// True when `data` holds exactly the training rows (same order).
  bool trained_on(const LoggedDataset& data) const;

 private:
  LoggedDataset train_;
  Matrix A_;
  KernelSpec kA_, kX_, kY_;
  double lambda_;
  GramMatrix KA_, KX_, K_;
  Eigen::LLT<Matrix> llt_;
};

/// Validated fit: n >= 2 and lambda > 0.
CmeModel fit_cme(const LoggedDataset& data, const KernelSpec& kA, const KernelSpec& kX, const KernelSpec& kY,
                 double lambda);

/// beta(a, x) for a single query.
Vector cme_weights(const CmeModel& m, const Action& a, const Eigen::Ref<const Vector>& x);

/// Gaussian propensity N(x^T w_hat, sd^2) with a density floor.
struct PropensityModel {
  Vector w_hat;
  double sd = 1.0;
  double floor = 1e-3;
  bool rank_deficient = false;  ///< true if the minimum-norm fallback was used
};

/// OLS of the action on the covariates (no intercept), sd fixed to 1.
PropensityModel fit_propensity(const LoggedDataset& data, double floor = 1e-3);

/// max(N(a; x^T w_hat, sd^2), floor).
double propensity_density(const PropensityModel& m, const Action& a, const Eigen::Ref<const Vector>& x);

/// Logging policy known exactly (simulation studies), with the same floor.
struct KnownPropensity {
  Policy policy;
  double floor = 1e-3;
};

using PropensitySource = std::variant<PropensityModel, KnownPropensity>;

double propensity_density(const PropensitySource& p, const Action& a, const Eigen::Ref<const Vector>& x);

struct CvResult {
  double lambda = 0.0;
  std::vector<double> grid;  ///< deduplicated, ascending
  std::vector<double> loss;  ///< mean held-out loss per grid entry
};

/// K-fold selection of lambda by held-out RKHS loss
///   sum_hold k(y, y) - 2 beta^T k_Y(Y_train, y) + beta^T K_Y beta.
/// Folds come from a permutation seeded by `seed`; ties go to larger lambda.
CvResult select_lambda_cv(const LoggedDataset& data, const KernelSpec& kA, const KernelSpec& kX,
                          const KernelSpec& kY, std::vector<double> grid, int folds, std::uint64_t seed);

/// lambda grid 10^lo, 10^(lo+1), ..., 10^hi.
std::vector<double> log10_grid(int lo, int hi);

/// Gaussian kA and kX with per-factor median-heuristic lengthscales.
std::pair<KernelSpec, KernelSpec> median_heuristic_kernels(const LoggedDataset& data);

/// Model-selection settings shared by every estimator that fits nuisances.
struct NuisanceConfig {
  std::vector<double> lambda_grid = log10_grid(-4, 0);
  int cv_folds = 3;
  std::optional<double> lambda;  ///< fixed lambda; skips cross-validation
  double propensity_floor = 1e-3;
};

struct FittedNuisances {
  CmeModel cme;
  std::optional<PropensityModel> propensity;  ///< fitted when actions are scalar
  CvResult cv;
};

/// Median-heuristic kA, kX on `data`, lambda by CV (or fixed), CME fit, and
/// the OLS propensity model for scalar actions.
FittedNuisances fit_nuisances(const LoggedDataset& data, const KernelSpec& kY, const NuisanceConfig& cfg,
                              std::uint64_t cv_seed);

}  // namespace cpme
