#include "kmdr/sample_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "kmdr/error.hpp"

namespace kmdr {

CensoredSample::CensoredSample(Eigen::VectorXd y, Eigen::VectorXi delta,
                               Eigen::MatrixXd x,
                               std::vector<std::string> covariate_names)
    : y_(std::move(y)), delta_(std::move(delta)), x_(std::move(x)),
      names_(std::move(covariate_names)) {
  const Index n = y_.size();
  if (n == 0) throw EmptyInputError("empty sample");
  if (delta_.size() != n || x_.rows() != n)
    throw ValidationError("y, delta and x must have the same number of rows");
  if (!names_.empty() && static_cast<Index>(names_.size()) != x_.cols())
    throw ValidationError("covariate name count does not match x columns");
  for (Index i = 0; i < n; ++i) {
    const auto row = static_cast<std::size_t>(i + 1);
    if (!std::isfinite(y_(i))) throw ValidationError("non-finite duration", row);
    if (y_(i) < 0.0) throw ValidationError("negative duration", row);
    if (delta_(i) != 0 && delta_(i) != 1)
      throw ValidationError("event indicator must be 0 or 1", row);
    if (!x_.row(i).allFinite()) throw ValidationError("non-finite covariate", row);
  }
  if (delta_.sum() == 0) throw ValidationError("no uncensored observations");
  if (names_.empty()) {
    for (Index j = 0; j < x_.cols(); ++j) names_.push_back("x" + std::to_string(j + 1));
  }
}

CensoredSample CensoredSample::from_observations(
    std::span<const CensoredObservation> obs,
    std::vector<std::string> covariate_names) {
  if (obs.empty()) throw EmptyInputError("empty sample");
  const auto n = static_cast<Index>(obs.size());
  const auto k = static_cast<Index>(obs.front().x.size());
  Eigen::VectorXd y(n);
  Eigen::VectorXi d(n);
  Eigen::MatrixXd x(n, k);
  for (Index i = 0; i < n; ++i) {
    const auto& o = obs[static_cast<std::size_t>(i)];
    if (static_cast<Index>(o.x.size()) != k)
      throw ValidationError("covariate dimension mismatch",
                            static_cast<std::size_t>(i + 1));
    y(i) = o.y;
    d(i) = o.delta;
    for (Index j = 0; j < k; ++j) x(i, j) = o.x[static_cast<std::size_t>(j)];
  }
  return CensoredSample(std::move(y), std::move(d), std::move(x),
                        std::move(covariate_names));
}

CensoredObservation CensoredSample::observation(Index i) const {
  CensoredObservation o;
  o.y = y_(i);
  o.delta = delta_(i);
  o.x.resize(static_cast<std::size_t>(k()));
  for (Index j = 0; j < k(); ++j) o.x[static_cast<std::size_t>(j)] = x_(i, j);
  return o;
}

OrderedSample order_sample(const CensoredSample& s) {
  const Index n = s.n();
  OrderedSample out;
  out.order.resize(static_cast<std::size_t>(n));
  std::iota(out.order.begin(), out.order.end(), Index{0});
  const auto& y = s.y();
  const auto& d = s.delta();
  std::stable_sort(out.order.begin(), out.order.end(), [&](Index a, Index b) {
    if (y(a) != y(b)) return y(a) < y(b);
    return d(a) > d(b);
  });
  out.y.resize(n);
  out.delta.resize(n);
  out.x.resize(n, s.k());
  for (Index i = 0; i < n; ++i) {
    const Index src = out.order[static_cast<std::size_t>(i)];
    out.y(i) = y(src);
    out.delta(i) = d(src);
    out.x.row(i) = s.x().row(src);
  }
  return out;
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && first != last;
}

bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

}  // namespace

std::vector<std::string> csv_header(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (!is_blank(line)) {
      // strip UTF-8 byte-order mark
      if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
      return split_row(line);
    }
  }
  throw EmptyInputError("empty file " + path.string());
}

CensoredSample load_csv(const std::filesystem::path& path, const CsvColumns& cols) {
  const auto header = csv_header(path);
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t j = 0; j < header.size(); ++j) pos.emplace(header[j], j);
  auto column = [&](const std::string& name) {
    auto it = pos.find(name);
    if (it == pos.end()) throw SchemaError("missing column '" + name + "'");
    return it->second;
  };
  const std::size_t ycol = column(cols.duration);
  const std::size_t dcol = column(cols.event);
  std::vector<std::size_t> xcols;
  for (const auto& c : cols.covariates) xcols.push_back(column(c));

  std::ifstream in(path);
  std::string line;
  bool header_seen = false;
  std::size_t row = 0;
  std::vector<double> ys;
  std::vector<int> ds;
  std::vector<double> xs;
  while (std::getline(in, line)) {
    if (is_blank(line)) continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    ++row;
    const auto f = split_row(line);
    if (f.size() != header.size())
      throw ValidationError("expected " + std::to_string(header.size()) +
                                " fields, found " + std::to_string(f.size()),
                            row);
    double y = 0.0;
    if (!parse_double(f[ycol], y)) throw ValidationError("unparseable duration", row);
    if (!std::isfinite(y)) throw ValidationError("non-finite duration", row);
    if (y < 0.0) throw ValidationError("negative duration", row);
    double d = 0.0;
    if (!parse_double(f[dcol], d) || (d != 0.0 && d != 1.0))
      throw ValidationError("event indicator must be 0 or 1", row);
    ys.push_back(y);
    ds.push_back(static_cast<int>(d));
    for (auto c : xcols) {
      double v = 0.0;
      if (!parse_double(f[c], v)) throw ValidationError("unparseable covariate", row);
      if (!std::isfinite(v)) throw ValidationError("non-finite covariate", row);
      xs.push_back(v);
    }
  }
  if (ys.empty()) throw EmptyInputError("no data rows in " + path.string());

  const auto n = static_cast<Index>(ys.size());
  const auto k = static_cast<Index>(xcols.size());
  Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
  Eigen::VectorXi d = Eigen::Map<Eigen::VectorXi>(ds.data(), n);
  Eigen::MatrixXd x(n, k);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < k; ++j) x(i, j) = xs[static_cast<std::size_t>(i * k + j)];
  return CensoredSample(std::move(y), std::move(d), std::move(x), cols.covariates);
}

}  // namespace kmdr
