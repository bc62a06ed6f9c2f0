#include "cpme/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace cpme {

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void LoggedDataset::validate() const {
  const Index n = Y.size();
  require(X.rows() == n && static_cast<Index>(A.size()) == n, "dataset: inconsistent row counts");
  require(X.allFinite() && Y.allFinite(), "dataset: non-finite covariate or outcome");
  for (const auto& a : A) space.check(a);
}

LoggedDataset LoggedDataset::slice(Index begin, Index end) const {
  require(0 <= begin && begin <= end && end <= size(), "dataset slice out of range");
  LoggedDataset out;
  out.X = X.middleRows(begin, end - begin);
  out.A.assign(A.begin() + begin, A.begin() + end);
  out.Y = Y.segment(begin, end - begin);
  out.space = space;
  return out;
}

LoggedDataset LoggedDataset::subset(const std::vector<Index>& rows) const {
  LoggedDataset out;
  const auto m = static_cast<Index>(rows.size());
  out.X.resize(m, X.cols());
  out.Y.resize(m);
  out.A.reserve(rows.size());
  for (Index r = 0; r < m; ++r) {
    const Index i = rows[static_cast<std::size_t>(r)];
    require(0 <= i && i < size(), "dataset subset index out of range");
    out.X.row(r) = X.row(i);
    out.Y[r] = Y[i];
    out.A.push_back(A[static_cast<std::size_t>(i)]);
  }
  out.space = space;
  return out;
}

void write_dataset_csv(std::ostream& out, const LoggedDataset& data) {
  const Index d = data.dim();
  for (Index k = 0; k < d; ++k) out << "x_" << k << ',';
  if (data.space.continuous()) {
    out << "a,";
  } else {
    for (int k = 0; k < data.space.catalog()->list_length; ++k) out << "a_" << k << ',';
  }
  out << "y\n";
  for (Index i = 0; i < data.size(); ++i) {
    for (Index k = 0; k < d; ++k) out << format_double(data.X(i, k)) << ',';
    const auto& a = data.A[static_cast<std::size_t>(i)];
    if (const double* v = std::get_if<double>(&a)) {
      out << format_double(*v) << ',';
    } else {
      for (int item : std::get<ItemList>(a)) out << item << ',';
    }
    out << format_double(data.Y[i]) << '\n';
  }
}

void write_dataset_csv(const std::string& path, const LoggedDataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_dataset_csv(out, data);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

[[noreturn]] void fail_at(std::size_t line, std::size_t col, const std::string& msg) {
  throw ConfigError("dataset csv line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + msg);
}

template <typename T>
T parse_field(const std::string& s, std::size_t line, std::size_t col) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) fail_at(line, col, "cannot parse '" + s + "'");
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) fail_at(line, col, "non-finite value");
  }
  return value;
}

}  // namespace

LoggedDataset read_dataset_csv(std::istream& in, std::shared_ptr<const ItemCatalog> catalog) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("dataset csv line 1, column 1: missing header");
  const auto header = split_fields(line);
  Index d = 0;
  while (d < static_cast<Index>(header.size()) && header[static_cast<std::size_t>(d)] == "x_" + std::to_string(d)) ++d;
  if (d == 0) fail_at(1, 1, "expected covariate columns x_0, x_1, ...");
  if (header.back() != "y") fail_at(1, header.size(), "last column must be 'y'");
  const std::size_t action_cols = header.size() - static_cast<std::size_t>(d) - 1;
  bool continuous = false;
  if (action_cols == 1 && header[static_cast<std::size_t>(d)] == "a") {
    continuous = true;
  } else {
    for (std::size_t k = 0; k < action_cols; ++k)
      if (header[static_cast<std::size_t>(d) + k] != "a_" + std::to_string(k))
        fail_at(1, static_cast<std::size_t>(d) + k + 1, "expected action column a_" + std::to_string(k));
    if (action_cols == 0) fail_at(1, static_cast<std::size_t>(d) + 1, "missing action column");
    if (!catalog) throw ConfigError("dataset csv holds item lists but no item catalog was supplied");
    if (static_cast<int>(action_cols) != catalog->list_length)
      throw ConfigError("dataset csv list length does not match the item catalog");
  }

  std::vector<std::vector<double>> xs;
  std::vector<Action> actions;
  std::vector<double> ys;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size())
      fail_at(line_no, std::min(fields.size(), header.size()) + 1,
              "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
    std::vector<double> x(static_cast<std::size_t>(d));
    for (Index k = 0; k < d; ++k)
      x[static_cast<std::size_t>(k)] = parse_field<double>(fields[static_cast<std::size_t>(k)], line_no, k + 1);
    if (continuous) {
      actions.emplace_back(parse_field<double>(fields[static_cast<std::size_t>(d)], line_no, d + 1));
    } else {
      ItemList list;
      for (std::size_t k = 0; k < action_cols; ++k)
        list.push_back(parse_field<int>(fields[static_cast<std::size_t>(d) + k], line_no, d + k + 1));
      actions.emplace_back(std::move(list));
    }
    ys.push_back(parse_field<double>(fields.back(), line_no, fields.size()));
    xs.push_back(std::move(x));
  }

  LoggedDataset data;
  const auto n = static_cast<Index>(ys.size());
  data.X.resize(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < d; ++k) data.X(i, k) = xs[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  data.A = std::move(actions);
  data.Y = Eigen::Map<const Vector>(ys.data(), n);
  if (!continuous) data.space = ActionSpace(std::move(catalog));
  for (Index i = 0; i < n; ++i) {
    try {
      data.space.check(data.A[static_cast<std::size_t>(i)]);
    } catch (const ConfigError& e) {
      // +2: header line and 1-based numbering (blank lines are not counted).
      fail_at(static_cast<std::size_t>(i) + 2, static_cast<std::size_t>(d) + 1, e.what());
    }
  }
  return data;
}

LoggedDataset read_dataset_csv(const std::string& path, std::shared_ptr<const ItemCatalog> catalog) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open dataset '" + path + "'");
  return read_dataset_csv(in, std::move(catalog));
}

}  // namespace cpme
