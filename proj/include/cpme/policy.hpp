#pragma once

#include "cpme/rng.hpp"
#include "cpme/types.hpp"

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace cpme {

/// Ordered recommendation list: K distinct item indices into a catalog.
using ItemList = std::vector<int>;

/// One logged action: a real treatment, or an ordered list of items.
using Action = std::variant<double, ItemList>;

struct ItemCatalog {
  Matrix features;  ///< M x d, one item per row
  int list_length = 1;

  Index size() const { return features.rows(); }
  Index dim() const { return features.cols(); }
};

/// Maps actions to the feature vectors fed to the action kernel.
///
/// Continuous actions embed as the scalar itself. Item lists embed as the
/// concatenation of their K item feature vectors (dimension K * d).
class ActionSpace {
 public:
  ActionSpace() = default;
  explicit ActionSpace(std::shared_ptr<const ItemCatalog> catalog) : catalog_(std::move(catalog)) {}

  bool continuous() const { return catalog_ == nullptr; }
  const ItemCatalog* catalog() const { return catalog_.get(); }
  const std::shared_ptr<const ItemCatalog>& catalog_ptr() const { return catalog_; }
  Index feature_dim() const;
  void features_into(const Action& a, double* out) const;
  Matrix feature_matrix(const std::vector<Action>& actions) const;
  /// Throws ConfigError if the action does not belong to this space.
  void check(const Action& a) const;

 private:
  std::shared_ptr<const ItemCatalog> catalog_;
};

// ---------------------------------------------------------------------------
// Policy families

/// a | x ~ N(x^T w, sd^2).
struct GaussianLinear {
  Vector w;
  double sd = 1.0;
};

/// a | x ~ sum_k weight_k N(x^T w_k, sd_k^2).
struct GaussianMixture {
  struct Component {
    double weight = 1.0;
    Vector w;
    double sd = 1.0;
  };
  std::vector<Component> components;
};

/// a | x ~ Logistic(location x^T w, scale).
struct LogisticLinear {
  Vector w;
  double scale = 1.0;
};

/// a ~ U(lo, hi), independent of x.
struct UniformAction {
  double lo = 0.0;
  double hi = 1.0;
};

/// Finitely supported real actions with context-free probabilities.
struct DiscreteActions {
  std::vector<double> values;
  std::vector<double> probs;
};

/// Ordered K-lists drawn without replacement; item l is chosen with
/// probability proportional to exp(b_u^T v_l) among the remaining items,
/// where b_u is the parameter row of user u.
///
/// Covariate vectors are matched against the stored user table to find u,
/// so the policy is only defined on the users it was built for.
class MultinomialList {
 public:
  MultinomialList(Matrix user_params, Matrix users, std::shared_ptr<const ItemCatalog> catalog);

  const Matrix& user_params() const { return params_; }
  const Matrix& users() const { return users_; }
  const ItemCatalog& catalog() const { return *catalog_; }
  const std::shared_ptr<const ItemCatalog>& catalog_ptr() const { return catalog_; }
  int list_length() const { return catalog_->list_length; }

  /// Row index of the user whose features equal x exactly.
  Index user_of(const Eigen::Ref<const Vector>& x) const;
  /// Unnormalized item scores exp(b_u^T v_l - max) for user u.
  Vector item_scores(Index user) const;

  friend bool operator==(const MultinomialList& a, const MultinomialList& b);

 private:
  Matrix params_;
  Matrix users_;
  std::shared_ptr<const ItemCatalog> catalog_;
  std::unordered_map<std::string, Index> lookup_;
};

using Policy =
    std::variant<GaussianLinear, GaussianMixture, LogisticLinear, UniformAction, DiscreteActions, MultinomialList>;

bool operator==(const GaussianLinear& a, const GaussianLinear& b);
bool operator==(const GaussianMixture& a, const GaussianMixture& b);
bool operator==(const LogisticLinear& a, const LogisticLinear& b);
bool operator==(const UniformAction& a, const UniformAction& b);
bool operator==(const DiscreteActions& a, const DiscreteActions& b);

/// Checks family invariants (positive scales, weights summing to 1, ...).
void validate_policy(const Policy& p);
std::string policy_name(const Policy& p);

/// Density (continuous families) or probability mass (discrete families).
double policy_density(const Policy& p, const Action& a, const Eigen::Ref<const Vector>& x);

Action sample_action(const Policy& p, const Eigen::Ref<const Vector>& x, Rng& rng);
/// `count` draws at one x; the same sequence as `count` calls of sample_action.
std::vector<Action> sample_actions(const Policy& p, const Eigen::Ref<const Vector>& x, Index count, Rng& rng);

/// Conditional mean of a real-valued policy, when defined.
std::optional<double> policy_mean(const Policy& p, const Eigen::Ref<const Vector>& x);

/// Full support with probabilities if the policy is discrete and has at
/// most max_support atoms at x; std::nullopt otherwise.
std::optional<std::vector<std::pair<Action, double>>> enumerate_support(
    const Policy& p, const Eigen::Ref<const Vector>& x, std::size_t max_support = 4096);

}  // namespace cpme
