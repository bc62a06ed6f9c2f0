#include "cpme/embedding.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace cpme {

void EmbeddingFunctional::validate() const {
  require(atoms.size() == coeffs.size(), "embedding: atoms and coefficients differ in length");
  require(atoms.allFinite() && coeffs.allFinite(), "embedding: non-finite atom or coefficient");
  kY.validate();
}

double EmbeddingFunctional::operator()(double y) const {
  double s = 0.0;
  for (Index j = 0; j < size(); ++j)
    s += coeffs[j] * eval_kernel(kY, std::span<const double>(&atoms[j], 1), std::span<const double>(&y, 1));
  return s;
}

Vector EmbeddingFunctional::evaluate(const Vector& ys) const {
  if (size() == 0) return Vector::Zero(ys.size());
  return gram(kY, Matrix(ys), Matrix(atoms)) * coeffs;
}

double EmbeddingFunctional::squared_norm() const {
  if (size() == 0) return 0.0;
  return coeffs.dot(gram(kY, Matrix(atoms)) * coeffs);
}

void write_embedding_csv(std::ostream& out, const EmbeddingFunctional& e) {
  out << "atom,coeff\n";
  for (Index j = 0; j < e.size(); ++j) out << format_double(e.atoms[j]) << ',' << format_double(e.coeffs[j]) << '\n';
}

void write_embedding(const std::string& path, const EmbeddingFunctional& e) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_embedding_csv(out, e);
  std::ofstream side(path + ".kernel", std::ios::binary);
  if (!side) throw std::runtime_error("cannot open '" + path + ".kernel' for writing");
  side << "kY = " << to_string(e.kY) << '\n';
}

EmbeddingFunctional read_embedding(const std::string& path) {
  std::ifstream side(path + ".kernel");
  if (!side) throw ConfigError("missing kernel sidecar '" + path + ".kernel'");
  std::string line;
  std::getline(side, line);
  const std::string prefix = "kY = ";
  if (line.rfind(prefix, 0) != 0) throw ConfigError("malformed kernel sidecar '" + path + ".kernel'");

  EmbeddingFunctional e;
  e.kY = parse_kernel_spec(line.substr(prefix.size()));
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open embedding '" + path + "'");
  if (!std::getline(in, line) || line != "atom,coeff") throw ConfigError(path + " line 1: expected header 'atom,coeff'");
  std::vector<double> atoms, coeffs;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument("missing comma");
      std::size_t used = 0;
      atoms.push_back(std::stod(line.substr(0, comma), &used));
      coeffs.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw ConfigError(path + " line " + std::to_string(line_no) + ": cannot parse '" + line + "'");
    }
  }
  e.atoms = Eigen::Map<Vector>(atoms.data(), static_cast<Index>(atoms.size()));
  e.coeffs = Eigen::Map<Vector>(coeffs.data(), static_cast<Index>(coeffs.size()));
  e.validate();
  return e;
}

PolicyAtoms policy_atoms(const Policy& policy, const Matrix& X, const ActionSpace& space, Index draws, Rng& rng,
                         AtomMode mode, std::size_t max_support) {
  require(X.rows() >= 1, "policy_atoms: no query rows");
  PolicyAtoms out;
  const Index p = space.feature_dim();
  const auto n = static_cast<std::size_t>(X.rows());
  out.row_group.resize(n);

  std::unordered_map<std::string, Index> seen;
  std::vector<Index> first_row;
  for (Index i = 0; i < X.rows(); ++i) {
    const Vector x = X.row(i).transpose();
    std::string key(reinterpret_cast<const char*>(x.data()), sizeof(double) * static_cast<std::size_t>(x.size()));
    auto [it, inserted] = seen.emplace(std::move(key), static_cast<Index>(first_row.size()));
    if (inserted) first_row.push_back(i);
    out.row_group[static_cast<std::size_t>(i)] = it->second;
  }

  const auto groups = static_cast<Index>(first_row.size());
  out.group_X.resize(groups, X.cols());
  std::vector<double> feats;  // atom-major, p values per atom
  std::vector<double> weights;
  const auto pz = static_cast<std::size_t>(p);
  out.group_begin.push_back(0);
  for (Index g = 0; g < groups; ++g) {
    const Vector x = X.row(first_row[static_cast<std::size_t>(g)]).transpose();
    out.group_X.row(g) = x.transpose();
    std::optional<std::vector<std::pair<Action, double>>> support;
    if (mode != AtomMode::Sample) support = enumerate_support(policy, x, max_support);
    if (support) {
      for (const auto& [a, prob] : *support) {
        feats.resize(feats.size() + pz);
        space.features_into(a, feats.data() + feats.size() - pz);
        weights.push_back(prob);
      }
    } else {
      if (mode == AtomMode::Enumerate) throw ConfigError("policy is not enumerable on this action space");
      require(draws >= 1, "mc_draws must be >= 1 for a non-enumerable policy");
      for (const Action& a : sample_actions(policy, x, draws, rng)) {
        feats.resize(feats.size() + pz);
        space.features_into(a, feats.data() + feats.size() - pz);
        weights.push_back(1.0 / static_cast<double>(draws));
      }
    }
    out.group_begin.push_back(static_cast<Index>(weights.size()));
  }
  out.features = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      feats.data(), static_cast<Index>(weights.size()), p);
  out.weights = Eigen::Map<const Vector>(weights.data(), static_cast<Index>(weights.size()));
  return out;
}

Matrix policy_kernel_means(const CmeModel& m, const PolicyAtoms& atoms) {
  require(atoms.group_X.cols() == m.train_X().cols(), "policy_kernel_means: covariate dimension mismatch");
  require(atoms.features.cols() == m.train_A().cols(), "policy_kernel_means: action dimension mismatch");
  const Index n = m.size();
  const Index G = atoms.groups();
  const GramMatrix KX = gram(m.kX(), m.train_X(), atoms.group_X);
  Matrix col(n, G);
#pragma omp parallel for schedule(dynamic, 4)
  for (Index g = 0; g < G; ++g) {
    const Index b = atoms.group_begin[static_cast<std::size_t>(g)];
    const Index e = atoms.group_begin[static_cast<std::size_t>(g) + 1];
    col.col(g) = kernel_mean(m.kA(), m.train_A(), atoms.features.middleRows(b, e - b), atoms.weights.segment(b, e - b));
  }
  col.array() *= KX.array();
  Matrix out(n, atoms.rows());
  for (Index i = 0; i < atoms.rows(); ++i) out.col(i) = col.col(atoms.row_group[static_cast<std::size_t>(i)]);
  return out;
}

ImportanceWeights importance_weights(const LoggedDataset& data, const Policy& policy, const PropensitySource& prop,
                                     const WeightOptions& opts) {
  if (opts.clip) require(*opts.clip > 0.0, "importance weight clip must be > 0");
  ImportanceWeights out;
  out.w.resize(data.size());
  for (Index i = 0; i < data.size(); ++i) {
    const Vector x = data.X.row(i).transpose();
    const Action& a = data.A[static_cast<std::size_t>(i)];
    const double denom = propensity_density(prop, a, x);
    if (!(denom > 0.0)) throw NumericalError("importance weight: propensity density is not positive");
    double w = policy_density(policy, a, x) / denom;
    if (!std::isfinite(w)) throw NumericalError("importance weight overflow");
    if (w > opts.warn_above) ++out.above_warn;
    if (opts.clip && w > *opts.clip) {
      w = *opts.clip;
      ++out.clipped;
    }
    out.w[i] = w;
  }
  return out;
}

Vector policy_weight_vector_discrete(const CmeModel& m, const Policy& policy) {
  Rng unused(0);
  const auto atoms = policy_atoms(policy, m.train_X(), m.space(), 0, unused, AtomMode::Enumerate);
  return policy_kernel_means(m, atoms).rowwise().sum() / static_cast<double>(m.size());
}

Vector policy_weight_vector_resample(const CmeModel& m, const Policy& policy, Rng& rng, Index draws) {
  require(draws >= 1, "resample: draws must be >= 1");
  const auto atoms = policy_atoms(policy, m.train_X(), m.space(), draws, rng, AtomMode::Sample);
  return policy_kernel_means(m, atoms).rowwise().sum() / static_cast<double>(m.size());
}

Vector policy_weight_vector_ips(const CmeModel& m, const Policy& policy, const PropensitySource& prop,
                                const WeightOptions& opts, ImportanceWeights* info) {
  auto iw = importance_weights(m.train_data(), policy, prop, opts);
  Vector rhs = m.gram() * iw.w / static_cast<double>(m.size());
  if (info) *info = std::move(iw);
  return rhs;
}

EmbeddingFunctional plugin_embedding(const CmeModel& m, const Vector& rhs) {
  require(rhs.size() == m.size(), "plugin_embedding: rhs length must equal n");
  return {m.train_Y(), m.solve(rhs), m.kY()};
}

EmbeddingFunctional dr_embedding(const CmeModel& m, const PropensitySource& prop, const LoggedDataset& data,
                                 const Policy& policy, Index mc_draws, Rng& rng, const WeightOptions& opts) {
  require(m.trained_on(data), "dr_embedding: data must be the rows the CME was fitted on");
  const auto n = static_cast<double>(m.size());
  const Vector W = importance_weights(data, policy, prop, opts).w;
  const auto atoms = policy_atoms(policy, data.X, data.space, mc_draws, rng);
  const Matrix Kbar = policy_kernel_means(m, atoms);
  const Vector rhs = Kbar.rowwise().sum() - m.gram() * W;
  return {m.train_Y(), (W + m.solve(rhs)) / n, m.kY()};
}

EifFactors eif_difference_factors(const CmeModel& m, const PropensitySource& prop, const LoggedDataset& data,
                                  const Policy& pi, const Policy& pi2, Rng& rng, const EifOptions& opts) {
  require(m.trained_on(data), "eif_difference_factors: data must be the rows the CME was fitted on");
  const Index n = m.size();
  EifFactors out;
  out.cme = &m;
  out.atoms = m.train_Y();
  out.w_diff.resize(n);
  for (Index i = 0; i < n; ++i) {
    const Vector x = data.X.row(i).transpose();
    const Action& a = data.A[static_cast<std::size_t>(i)];
    const double denom = propensity_density(prop, a, x);
    if (!(denom > 0.0)) throw NumericalError("eif_difference_atoms: propensity density is not positive");
    double w = (policy_density(pi, a, x) - policy_density(pi2, a, x)) / denom;
    if (!std::isfinite(w)) throw NumericalError("eif_difference_atoms: non-finite importance weight");
    if (opts.weights.clip) w = std::clamp(w, -*opts.weights.clip, *opts.weights.clip);
    out.w_diff[i] = w;
  }

  const Rng base = rng.split(rng());
  Rng r1 = base.split(1);
  Rng r2 = opts.shared_draws ? base.split(1) : base.split(2);
  const Matrix Kbar1 = policy_kernel_means(m, policy_atoms(pi, data.X, data.space, opts.mc_draws, r1));
  const Matrix Kbar2 = policy_kernel_means(m, policy_atoms(pi2, data.X, data.space, opts.mc_draws, r2));

  // Row i: w_i e_i - w_i beta(a_i, x_i) + betabar_pi(x_i) - betabar_pi'(x_i).
  out.M = Kbar1 - Kbar2;
  out.M.noalias() -= m.gram() * out.w_diff.asDiagonal();
  return out;
}

Vector EifFactors::apply(const Vector& v) const {
  require(v.size() == w_diff.size(), "EifFactors::apply: length mismatch");
  Vector out = M.transpose() * cme->solve(v);
  out.array() += w_diff.array() * v.array();
  return out;
}

Vector EifFactors::column_mean() const {
  const Vector ones = Vector::Ones(M.cols());
  return (w_diff + cme->solve(Vector(M * ones))) / static_cast<double>(M.cols());
}

Matrix EifFactors::rows() const {
  Matrix r = cme->solve(M).transpose();
  r.diagonal() += w_diff;
  return r;
}

EifAtoms eif_difference_atoms(const CmeModel& m, const PropensitySource& prop, const LoggedDataset& data,
                              const Policy& pi, const Policy& pi2, Rng& rng, const EifOptions& opts) {
  const EifFactors f = eif_difference_factors(m, prop, data, pi, pi2, rng, opts);
  return {f.atoms, f.rows(), f.w_diff};
}

}  // namespace cpme
