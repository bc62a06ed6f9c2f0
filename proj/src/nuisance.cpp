#include "cpme/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace cpme {

CmeModel::CmeModel(const LoggedDataset& train, KernelSpec kA, KernelSpec kX, KernelSpec kY, double lambda)
    : train_(train),
      A_(train.action_features()),
      kA_(kA),
      kX_(kX),
      kY_(kY),
      lambda_(lambda) {
  require(size() >= 1, "fit_cme: empty training set");
  require(std::isfinite(lambda) && lambda > 0.0, "fit_cme: lambda must be > 0");
  kA_.validate();
  kX_.validate();
  kY_.validate();
  KA_ = cpme::gram(kA_, A_);
  KX_ = cpme::gram(kX_, train_.X);
  K_ = KA_.cwiseProduct(KX_);
  Matrix reg = K_;
  reg.diagonal().array() += static_cast<double>(size()) * lambda_;
  llt_.compute(reg);
  if (llt_.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "fit_cme: Cholesky factorization of (K + n lambda I) failed (n = " << size() << ", lambda = " << lambda_
        << ", diagonal range [" << reg.diagonal().minCoeff() << ", " << reg.diagonal().maxCoeff() << "])";
    throw NumericalError(msg.str());
  }
}

Matrix CmeModel::solve(const Matrix& rhs) const {
  require(rhs.rows() == size(), "CmeModel::solve: rhs has wrong row count");
  Matrix out = llt_.solve(rhs);
  if (!out.allFinite()) throw NumericalError("CmeModel::solve: non-finite solution");
  return out;
}

Vector CmeModel::solve(const Vector& rhs) const {
  require(rhs.size() == size(), "CmeModel::solve: rhs has wrong length");
  Vector out = llt_.solve(rhs);
  if (!out.allFinite()) throw NumericalError("CmeModel::solve: non-finite solution");
  return out;
}

GramMatrix CmeModel::cross_gram(const Matrix& A_query, const Matrix& X_query) const {
  return product_gram(kA_, kX_, A_, train_.X, A_query, X_query);
}

Matrix CmeModel::weights(const Matrix& A_query, const Matrix& X_query) const {
  return solve(Matrix(cross_gram(A_query, X_query)));
}

bool CmeModel::trained_on(const LoggedDataset& data) const {
  return data.size() == size() && data.X == train_.X && data.Y == train_.Y && data.A == train_.A;
}

CmeModel fit_cme(const LoggedDataset& data, const KernelSpec& kA, const KernelSpec& kX, const KernelSpec& kY,
                 double lambda) {
  require(data.size() >= 2, "fit_cme: n >= 2 required");
  require(std::isfinite(lambda) && lambda > 0.0, "fit_cme: lambda must be > 0");
  data.validate();
  return CmeModel(data, kA, kX, kY, lambda);
}

Vector cme_weights(const CmeModel& m, const Action& a, const Eigen::Ref<const Vector>& x) {
  require(x.size() == m.train_X().cols(), "cme_weights: covariate dimension mismatch");
  m.space().check(a);
  Matrix af(1, m.space().feature_dim());
  m.space().features_into(a, af.data());
  return m.weights(af, x.transpose());
}

PropensityModel fit_propensity(const LoggedDataset& data, double floor) {
  require(data.space.continuous(), "fit_propensity: continuous scalar actions required");
  require(data.size() > data.dim(), "fit_propensity: n > d required");
  require(floor > 0.0, "fit_propensity: floor must be > 0");
  Vector a(data.size());
  for (Index i = 0; i < data.size(); ++i) a[i] = std::get<double>(data.A[static_cast<std::size_t>(i)]);

  PropensityModel m;
  m.floor = floor;
  Eigen::ColPivHouseholderQR<Matrix> qr(data.X);
  if (qr.rank() == data.dim()) {
    m.w_hat = qr.solve(a);
  } else {
    m.rank_deficient = true;
    m.w_hat = Eigen::CompleteOrthogonalDecomposition<Matrix>(data.X).solve(a);
  }
  return m;
}

double propensity_density(const PropensityModel& m, const Action& a, const Eigen::Ref<const Vector>& x) {
  const double* v = std::get_if<double>(&a);
  require(v != nullptr, "propensity_density: scalar action required");
  require(x.size() == m.w_hat.size(), "propensity_density: covariate dimension mismatch");
  const double z = (*v - x.dot(m.w_hat)) / m.sd;
  const double dens = std::exp(-0.5 * z * z) / (m.sd * std::sqrt(2.0 * std::numbers::pi));
  return std::max(dens, m.floor);
}

double propensity_density(const PropensitySource& p, const Action& a, const Eigen::Ref<const Vector>& x) {
  if (const auto* model = std::get_if<PropensityModel>(&p)) return propensity_density(*model, a, x);
  const auto& known = std::get<KnownPropensity>(p);
  return std::max(policy_density(known.policy, a, x), known.floor);
}

namespace {

// Truncation of the outcome Gram in cross-validation. The dropped part has
// trace below n * 1e-13, far under any loss gap that decides the grid.
constexpr double kCvRankTolerance = 1e-13;

}  // namespace

std::vector<double> log10_grid(int lo, int hi) {
  require(lo <= hi, "log10_grid: lo must be <= hi");
  std::vector<double> g;
  for (int e = lo; e <= hi; ++e) g.push_back(std::pow(10.0, e));
  return g;
}

CvResult select_lambda_cv(const LoggedDataset& data, const KernelSpec& kA, const KernelSpec& kX,
                          const KernelSpec& kY, std::vector<double> grid, int folds, std::uint64_t seed) {
  require(!grid.empty(), "select_lambda_cv: empty lambda grid");
  require(folds >= 2, "select_lambda_cv: folds must be >= 2");
  for (double l : grid) require(std::isfinite(l) && l > 0.0, "select_lambda_cv: lambda values must be > 0");
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  CvResult res;
  res.grid = grid;
  res.loss.assign(grid.size(), 0.0);
  if (grid.size() == 1) {
    res.lambda = grid.front();
    return res;
  }
  const Index n = data.size();
  require(n >= 2 * folds, "select_lambda_cv: fold size < 1 (need n >= 2 * folds)");

  std::vector<Index> perm(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  Rng rng(seed, 0x63765f666f6c6473ULL);
  shuffle(perm.begin(), perm.end(), rng);

  const Matrix A = data.action_features();
  const bool linear_y = kY.family == KernelFamily::Linear;
  // Full Grams once; each fold takes submatrices.
  const GramMatrix Kall = gram(kA, A).cwiseProduct(gram(kX, data.X));
  // Outcome Gram as U U^T; the loss then needs solves with rank(U)
  // right-hand sides instead of one per holdout point.
  Matrix U;
  if (!linear_y) U = pivoted_cholesky(gram(kY, Matrix(data.Y)), kCvRankTolerance);
  for (int f = 0; f < folds; ++f) {
    std::vector<Index> tr, ho;
    for (Index p = 0; p < n; ++p) (p % folds == f ? ho : tr).push_back(perm[static_cast<std::size_t>(p)]);
    const auto ntr = static_cast<Index>(tr.size());
    const auto nho = static_cast<Index>(ho.size());
    const Vector ytr = data.Y(tr);
    const Vector yho = data.Y(ho);
    const GramMatrix K = Kall(tr, tr);
    const GramMatrix Kc = Kall(tr, ho);
    Matrix Utr, Uho;
    double offset = 0.0;
    if (!linear_y) {
      Utr = U(tr, Eigen::all);
      Uho = U(ho, Eigen::all);
      for (Index h = 0; h < nho; ++h)
        offset += eval_kernel(kY, std::span<const double>(&yho[h], 1), std::span<const double>(&yho[h], 1)) -
                  Uho.row(h).squaredNorm();
    }
    for (std::size_t g = 0; g < grid.size(); ++g) {
      Matrix reg = K;
      reg.diagonal().array() += static_cast<double>(ntr) * grid[g];
      Eigen::LLT<Matrix> llt(reg);
      if (llt.info() != Eigen::Success) throw NumericalError("select_lambda_cv: factorization failed");
      double loss = 0.0;
      if (linear_y) {
        // Linear k_Y: the RKHS loss is the squared prediction error.
        const Vector pred = Kc.transpose() * llt.solve(ytr);
        loss = (yho - pred).squaredNorm();
      } else {
        // sum_h k(y_h, y_h) - 2 B_h^T KYc_h + B_h^T KY B_h with B = R^{-1} Kc.
        const Matrix P = llt.solve(Utr);
        loss = offset + (Uho - Kc.transpose() * P).squaredNorm();
      }
      res.loss[g] += loss / static_cast<double>(n);
    }
  }

  std::size_t best = grid.size() - 1;
  for (std::size_t g = grid.size() - 1; g-- > 0;)
    if (res.loss[g] < res.loss[best]) best = g;
  res.lambda = grid[best];
  return res;
}

std::pair<KernelSpec, KernelSpec> median_heuristic_kernels(const LoggedDataset& data) {
  return {KernelSpec::gaussian(median_heuristic(data.action_features())), KernelSpec::gaussian(median_heuristic(data.X))};
}

FittedNuisances fit_nuisances(const LoggedDataset& data, const KernelSpec& kY, const NuisanceConfig& cfg,
                              std::uint64_t cv_seed) {
  const auto [kA, kX] = median_heuristic_kernels(data);
  CvResult cv;
  if (cfg.lambda) {
    cv.lambda = *cfg.lambda;
    cv.grid = {*cfg.lambda};
  } else {
    cv = select_lambda_cv(data, kA, kX, kY, cfg.lambda_grid, cfg.cv_folds, cv_seed);
  }
  std::optional<PropensityModel> prop;
  if (data.space.continuous()) prop = fit_propensity(data, cfg.propensity_floor);
  return {fit_cme(data, kA, kX, kY, cv.lambda), std::move(prop), std::move(cv)};
}

}  // namespace cpme
