#pragma once

#include "cpme/policy.hpp"
#include "cpme/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace cpme {

/// n logged triples (x_i, a_i, y_i) collected under a logging policy.
struct LoggedDataset {
  Matrix X;               ///< n x d covariates
  std::vector<Action> A;  ///< n actions
  Vector Y;               ///< n outcomes
  ActionSpace space;

  Index size() const { return Y.size(); }
  Index dim() const { return X.cols(); }

  /// Consistent n, finite entries, and every action valid for `space`.
  void validate() const;

  /// Rows [begin, end).
  LoggedDataset slice(Index begin, Index end) const;
  LoggedDataset subset(const std::vector<Index>& rows) const;

  /// n x p matrix of action features (see ActionSpace).
  Matrix action_features() const { return space.feature_matrix(A); }
};

/// Writes `x_0..x_{d-1},a,y` (continuous) or `x_0..x_{d-1},a_0..a_{K-1},y`
/// (item lists). Floats use the shortest round-trip decimal form.
void write_dataset_csv(std::ostream& out, const LoggedDataset& data);
void write_dataset_csv(const std::string& path, const LoggedDataset& data);

/// Parses the format above. Item-list files need the catalog the indices
/// refer to. Malformed input raises ConfigError naming line and column.
LoggedDataset read_dataset_csv(std::istream& in, std::shared_ptr<const ItemCatalog> catalog = nullptr);
LoggedDataset read_dataset_csv(const std::string& path, std::shared_ptr<const ItemCatalog> catalog = nullptr);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace cpme
