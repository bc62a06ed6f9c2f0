#include "cpme/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <numeric>

namespace cpme {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343818684758586311649;

inline double normal_pdf(double a, double mean, double sd) {
  const double z = (a - mean) / sd;
  return kInvSqrt2Pi / sd * std::exp(-0.5 * z * z);
}

std::string key_of(const Eigen::Ref<const Vector>& x) {
  std::string key(static_cast<std::size_t>(x.size()) * sizeof(double), '\0');
  for (Index k = 0; k < x.size(); ++k) {
    const double v = x[k];
    std::memcpy(key.data() + k * sizeof(double), &v, sizeof(double));
  }
  return key;
}

double real_action(const Action& a, const char* family) {
  if (const double* v = std::get_if<double>(&a)) return *v;
  throw ConfigError(std::string("policy ") + family + " does not accept item-list actions");
}

double linear_mean(const Vector& w, const Eigen::Ref<const Vector>& x) {
  require(w.size() == x.size(), "policy: covariate dimension mismatch");
  return w.dot(x);
}

// Probability of drawing the ordered list without replacement.
double list_probability(const Vector& scores, const ItemList& list) {
  double remaining = scores.sum();
  double prob = 1.0;
  for (std::size_t k = 0; k < list.size(); ++k) {
    const int item = list[k];
    if (std::find(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(k), item) !=
        list.begin() + static_cast<std::ptrdiff_t>(k))
      return 0.0;
    prob *= scores[item] / remaining;
    remaining -= scores[item];
  }
  return prob;
}

void enumerate_lists(const Vector& scores, int K, ItemList& prefix, std::vector<char>& used, double prob,
                     double remaining, std::vector<std::pair<Action, double>>& out) {
  if (static_cast<int>(prefix.size()) == K) {
    out.emplace_back(prefix, prob);
    return;
  }
  for (Index l = 0; l < scores.size(); ++l) {
    if (used[l]) continue;
    used[l] = 1;
    prefix.push_back(static_cast<int>(l));
    enumerate_lists(scores, K, prefix, used, prob * scores[l] / remaining, remaining - scores[l], out);
    prefix.pop_back();
    used[l] = 0;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// ActionSpace

Index ActionSpace::feature_dim() const {
  return continuous() ? 1 : catalog_->dim() * catalog_->list_length;
}

void ActionSpace::check(const Action& a) const {
  if (continuous()) {
    const double* v = std::get_if<double>(&a);
    require(v != nullptr, "action space is continuous but action is an item list");
    require(std::isfinite(*v), "non-finite action");
    return;
  }
  const ItemList* list = std::get_if<ItemList>(&a);
  require(list != nullptr, "action space holds item lists but action is a real value");
  require(static_cast<int>(list->size()) == catalog_->list_length, "item list has the wrong length");
  for (std::size_t k = 0; k < list->size(); ++k) {
    const int item = (*list)[k];
    require(item >= 0 && item < catalog_->size(), "item index out of range");
    for (std::size_t j = 0; j < k; ++j) require((*list)[j] != item, "item list repeats an item");
  }
}

void ActionSpace::features_into(const Action& a, double* out) const {
  if (continuous()) {
    *out = std::get<double>(a);
    return;
  }
  const auto& list = std::get<ItemList>(a);
  const Index d = catalog_->dim();
  for (std::size_t k = 0; k < list.size(); ++k)
    for (Index c = 0; c < d; ++c) out[static_cast<Index>(k) * d + c] = catalog_->features(list[k], c);
}

Matrix ActionSpace::feature_matrix(const std::vector<Action>& actions) const {
  const Index p = feature_dim();
  Matrix F(p, static_cast<Index>(actions.size()));
  for (std::size_t i = 0; i < actions.size(); ++i) features_into(actions[i], F.col(static_cast<Index>(i)).data());
  return F.transpose();
}

// ---------------------------------------------------------------------------
// MultinomialList

MultinomialList::MultinomialList(Matrix user_params, Matrix users, std::shared_ptr<const ItemCatalog> catalog)
    : params_(std::move(user_params)), users_(std::move(users)), catalog_(std::move(catalog)) {
  require(catalog_ != nullptr, "MultinomialList: missing item catalog");
  require(params_.rows() == users_.rows() && params_.rows() > 0, "MultinomialList: user table mismatch");
  require(params_.cols() == catalog_->dim(), "MultinomialList: parameter/item dimension mismatch");
  require(catalog_->list_length >= 1 && catalog_->list_length <= catalog_->size(),
          "MultinomialList: list length must be in [1, M]");
  for (Index u = 0; u < users_.rows(); ++u) lookup_.emplace(key_of(users_.row(u).transpose()), u);
}

Index MultinomialList::user_of(const Eigen::Ref<const Vector>& x) const {
  auto it = lookup_.find(key_of(x));
  if (it == lookup_.end()) throw ConfigError("MultinomialList: covariate vector is not a known user");
  return it->second;
}

Vector MultinomialList::item_scores(Index user) const {
  Vector logits = catalog_->features * params_.row(user).transpose();
  const double mx = logits.maxCoeff();
  return (logits.array() - mx).exp().matrix();
}

bool operator==(const MultinomialList& a, const MultinomialList& b) {
  return a.params_ == b.params_ && a.users_ == b.users_ &&
         (a.catalog_ == b.catalog_ ||
          (a.catalog_->features == b.catalog_->features && a.catalog_->list_length == b.catalog_->list_length));
}

bool operator==(const GaussianLinear& a, const GaussianLinear& b) { return a.sd == b.sd && a.w == b.w; }
bool operator==(const GaussianMixture& a, const GaussianMixture& b) {
  if (a.components.size() != b.components.size()) return false;
  for (std::size_t k = 0; k < a.components.size(); ++k) {
    const auto &ca = a.components[k], &cb = b.components[k];
    if (ca.weight != cb.weight || ca.sd != cb.sd || ca.w != cb.w) return false;
  }
  return true;
}
bool operator==(const LogisticLinear& a, const LogisticLinear& b) { return a.scale == b.scale && a.w == b.w; }
bool operator==(const UniformAction& a, const UniformAction& b) { return a.lo == b.lo && a.hi == b.hi; }
bool operator==(const DiscreteActions& a, const DiscreteActions& b) {
  return a.values == b.values && a.probs == b.probs;
}

// ---------------------------------------------------------------------------

void validate_policy(const Policy& p) {
  std::visit(overloaded{
                 [](const GaussianLinear& g) {
                   require(g.sd > 0.0 && std::isfinite(g.sd), "GaussianLinear: sd must be > 0");
                   require(g.w.allFinite(), "GaussianLinear: non-finite weights");
                 },
                 [](const GaussianMixture& m) {
                   require(!m.components.empty(), "GaussianMixture: no components");
                   double total = 0.0;
                   for (const auto& c : m.components) {
                     require(c.weight >= 0.0, "GaussianMixture: negative weight");
                     require(c.sd > 0.0 && std::isfinite(c.sd), "GaussianMixture: sd must be > 0");
                     require(c.w.size() == m.components.front().w.size(), "GaussianMixture: dimension mismatch");
                     total += c.weight;
                   }
                   require(std::abs(total - 1.0) <= 1e-12, "GaussianMixture: weights must sum to 1");
                 },
                 [](const LogisticLinear& l) {
                   require(l.scale > 0.0 && std::isfinite(l.scale), "LogisticLinear: scale must be > 0");
                 },
                 [](const UniformAction& u) { require(u.lo < u.hi, "UniformAction: lo must be < hi"); },
                 [](const DiscreteActions& d) {
                   require(!d.values.empty() && d.values.size() == d.probs.size(),
                           "DiscreteActions: values/probs mismatch");
                   double total = 0.0;
                   for (double q : d.probs) {
                     require(q >= 0.0, "DiscreteActions: negative probability");
                     total += q;
                   }
                   require(std::abs(total - 1.0) <= 1e-12, "DiscreteActions: probabilities must sum to 1");
                 },
                 [](const MultinomialList&) {},
             },
             p);
}

std::string policy_name(const Policy& p) {
  return std::visit(overloaded{
                        [](const GaussianLinear&) { return std::string("gaussian-linear"); },
                        [](const GaussianMixture&) { return std::string("gaussian-mixture"); },
                        [](const LogisticLinear&) { return std::string("logistic-linear"); },
                        [](const UniformAction&) { return std::string("uniform"); },
                        [](const DiscreteActions&) { return std::string("discrete"); },
                        [](const MultinomialList&) { return std::string("multinomial-list"); },
                    },
                    p);
}

double policy_density(const Policy& p, const Action& a, const Eigen::Ref<const Vector>& x) {
  return std::visit(
      overloaded{
          [&](const GaussianLinear& g) {
            return normal_pdf(real_action(a, "GaussianLinear"), linear_mean(g.w, x), g.sd);
          },
          [&](const GaussianMixture& m) {
            const double v = real_action(a, "GaussianMixture");
            double dens = 0.0;
            for (const auto& c : m.components) dens += c.weight * normal_pdf(v, linear_mean(c.w, x), c.sd);
            return dens;
          },
          [&](const LogisticLinear& l) {
            const double z = (real_action(a, "LogisticLinear") - linear_mean(l.w, x)) / l.scale;
            const double e = std::exp(-std::abs(z));
            return e / (l.scale * (1.0 + e) * (1.0 + e));
          },
          [&](const UniformAction& u) {
            const double v = real_action(a, "UniformAction");
            return (v >= u.lo && v <= u.hi) ? 1.0 / (u.hi - u.lo) : 0.0;
          },
          [&](const DiscreteActions& d) {
            const double v = real_action(a, "DiscreteActions");
            double mass = 0.0;
            for (std::size_t k = 0; k < d.values.size(); ++k)
              if (d.values[k] == v) mass += d.probs[k];
            return mass;
          },
          [&](const MultinomialList& m) {
            const ItemList* list = std::get_if<ItemList>(&a);
            if (list == nullptr) throw ConfigError("MultinomialList does not accept real-valued actions");
            require(static_cast<int>(list->size()) == m.list_length(), "MultinomialList: wrong list length");
            for (int item : *list) require(item >= 0 && item < m.catalog().size(), "item index out of range");
            return list_probability(m.item_scores(m.user_of(x)), *list);
          },
      },
      p);
}

std::vector<Action> sample_actions(const Policy& p, const Eigen::Ref<const Vector>& x, Index count, Rng& rng) {
  require(count >= 0, "sample_actions: count must be >= 0");
  std::vector<Action> out;
  out.reserve(static_cast<std::size_t>(count));
  // Per-row quantities are computed once; the draws themselves are
  // identical to `count` successive single draws.
  std::visit(
      overloaded{
          [&](const GaussianLinear& g) {
            require(g.sd > 0.0, "GaussianLinear: sd must be > 0");
            const double mean = linear_mean(g.w, x);
            for (Index s = 0; s < count; ++s) out.emplace_back(rng.normal(mean, g.sd));
          },
          [&](const GaussianMixture& m) {
            std::vector<double> means;
            for (const auto& c : m.components) means.push_back(linear_mean(c.w, x));
            for (Index s = 0; s < count; ++s) {
              const double u = rng.uniform();
              double acc = 0.0;
              std::size_t chosen = m.components.size() - 1;
              for (std::size_t k = 0; k < m.components.size(); ++k) {
                acc += m.components[k].weight;
                if (u < acc) {
                  chosen = k;
                  break;
                }
              }
              out.emplace_back(rng.normal(means[chosen], m.components[chosen].sd));
            }
          },
          [&](const LogisticLinear& l) {
            const double mean = linear_mean(l.w, x);
            for (Index s = 0; s < count; ++s) out.emplace_back(rng.logistic(mean, l.scale));
          },
          [&](const UniformAction& u) {
            for (Index s = 0; s < count; ++s) out.emplace_back(rng.uniform(u.lo, u.hi));
          },
          [&](const DiscreteActions& d) {
            for (Index s = 0; s < count; ++s) {
              const double u = rng.uniform();
              double acc = 0.0;
              std::size_t pick = d.values.size() - 1;
              for (std::size_t k = 0; k < d.values.size(); ++k) {
                acc += d.probs[k];
                if (u < acc) {
                  pick = k;
                  break;
                }
              }
              out.emplace_back(d.values[pick]);
            }
          },
          [&](const MultinomialList& m) {
            const Vector base = m.item_scores(m.user_of(x));
            const int K = m.list_length();
            for (Index s = 0; s < count; ++s) {
              Vector scores = base;
              ItemList list;
              list.reserve(static_cast<std::size_t>(K));
              for (int k = 0; k < K; ++k) {
                const double target = rng.uniform() * scores.sum();
                double acc = 0.0;
                Index pick = -1;
                for (Index l = 0; l < scores.size(); ++l) {
                  if (scores[l] <= 0.0) continue;
                  acc += scores[l];
                  pick = l;
                  if (target < acc) break;
                }
                list.push_back(static_cast<int>(pick));
                scores[pick] = 0.0;
              }
              out.emplace_back(std::move(list));
            }
          },
      },
      p);
  return out;
}

Action sample_action(const Policy& p, const Eigen::Ref<const Vector>& x, Rng& rng) {
  return std::move(sample_actions(p, x, 1, rng).front());
}

std::optional<double> policy_mean(const Policy& p, const Eigen::Ref<const Vector>& x) {
  return std::visit(overloaded{
                        [&](const GaussianLinear& g) -> std::optional<double> { return linear_mean(g.w, x); },
                        [&](const GaussianMixture& m) -> std::optional<double> {
                          double mean = 0.0;
                          for (const auto& c : m.components) mean += c.weight * linear_mean(c.w, x);
                          return mean;
                        },
                        [&](const LogisticLinear& l) -> std::optional<double> { return linear_mean(l.w, x); },
                        [&](const UniformAction& u) -> std::optional<double> { return 0.5 * (u.lo + u.hi); },
                        [&](const DiscreteActions& d) -> std::optional<double> {
                          double mean = 0.0;
                          for (std::size_t k = 0; k < d.values.size(); ++k) mean += d.values[k] * d.probs[k];
                          return mean;
                        },
                        [&](const MultinomialList&) -> std::optional<double> { return std::nullopt; },
                    },
                    p);
}

std::optional<std::vector<std::pair<Action, double>>> enumerate_support(const Policy& p,
                                                                        const Eigen::Ref<const Vector>& x,
                                                                        std::size_t max_support) {
  using Support = std::vector<std::pair<Action, double>>;
  if (const auto* d = std::get_if<DiscreteActions>(&p)) {
    if (d->values.size() > max_support) return std::nullopt;
    Support out;
    for (std::size_t k = 0; k < d->values.size(); ++k) out.emplace_back(d->values[k], d->probs[k]);
    return out;
  }
  if (const auto* m = std::get_if<MultinomialList>(&p)) {
    const auto M = static_cast<std::size_t>(m->catalog().size());
    const int K = m->list_length();
    std::size_t count = 1;
    for (int k = 0; k < K; ++k) {
      count *= (M - static_cast<std::size_t>(k));
      if (count > max_support) return std::nullopt;
    }
    const Vector scores = m->item_scores(m->user_of(x));
    Support out;
    out.reserve(count);
    ItemList prefix;
    std::vector<char> used(M, 0);
    enumerate_lists(scores, K, prefix, used, 1.0, scores.sum(), out);
    return out;
  }
  return std::nullopt;
}

}  // namespace cpme
