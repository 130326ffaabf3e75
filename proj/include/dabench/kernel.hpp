#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>

#include "dabench/common.hpp"

namespace dabench {

/// Kernel choice. An Rbf kernel with gamma <= 0 is "unresolved": fitting
/// routines replace it with the median heuristic on their fitting data.
struct KernelSpec {
  enum class Kind { Linear, Rbf };
  Kind kind = Kind::Linear;
  double gamma = 0.0;

  static KernelSpec linear() { return {Kind::Linear, 0.0}; }
  static KernelSpec rbf(double gamma = 0.0) { return {Kind::Rbf, gamma}; }

  bool resolved() const { return kind == Kind::Linear || gamma > 0.0; }
  bool operator==(const KernelSpec&) const = default;
};

inline std::string to_string(const KernelSpec& k) {
  if (k.kind == KernelSpec::Kind::Linear) return "linear";
  if (k.gamma <= 0.0) return "rbf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "rbf:%.17g", k.gamma);
  return buf;
}

/// Accepts "linear", "rbf", "gaussian" (alias of rbf) and "rbf:<gamma>".
inline KernelSpec parse_kernel(std::string_view text) {
  if (text == "linear") return KernelSpec::linear();
  if (text == "rbf" || text == "gaussian") return KernelSpec::rbf();
  for (std::string_view prefix : {"rbf:", "gaussian:"}) {
    if (text.starts_with(prefix)) {
      const std::string rest(text.substr(prefix.size()));
      char* end = nullptr;
      const double g = std::strtod(rest.c_str(), &end);
      if (end == rest.c_str() || *end != '\0' || !(g > 0.0)) {
        throw ConfigError("kernel '" + std::string(text) + "': gamma must be a positive number");
      }
      return KernelSpec::rbf(g);
    }
  }
  throw ConfigError("unknown kernel '" + std::string(text) + "'");
}

/// Median pairwise Euclidean distance between rows. At most `max_rows`
/// evenly strided rows take part.
inline double median_pairwise_distance(const Matrix& x, Eigen::Index max_rows = 1000) {
  const Eigen::Index n = x.rows();
  if (n < 2) throw DegenerateDataError("median heuristic needs at least 2 rows");
  const Eigen::Index stride = (n + max_rows - 1) / max_rows;
  std::vector<double> d;
  for (Eigen::Index i = 0; i < n; i += stride) {
    for (Eigen::Index j = i + stride; j < n; j += stride) d.push_back((x.row(i) - x.row(j)).norm());
  }
  if (d.empty()) throw DegenerateDataError("median heuristic needs at least 2 rows");
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

/// gamma = 1 / (2 median^2) for an unresolved Rbf kernel; otherwise unchanged.
inline KernelSpec resolve_kernel(KernelSpec k, const Matrix& fit_data) {
  if (k.resolved()) return k;
  const double med = median_pairwise_distance(fit_data);
  if (!(med > 0.0)) throw DegenerateDataError("median heuristic: all sampled rows coincide");
  k.gamma = 1.0 / (2.0 * med * med);
  return k;
}

inline double kernel_value(const KernelSpec& k, const auto& x, const auto& y) {
  if (k.kind == KernelSpec::Kind::Linear) return x.dot(y);
  return std::exp(-k.gamma * (x - y).squaredNorm());
}

/// G(i, j) = k(x_i, y_j).
inline Matrix gram(const Matrix& x, const Matrix& y, const KernelSpec& k) {
  if (x.cols() != y.cols()) {
    throw ShapeError("gram: feature dimensions differ (" + std::to_string(x.cols()) + " vs " +
                     std::to_string(y.cols()) + ")");
  }
  if (!k.resolved()) throw ConfigError("gram: rbf kernel needs gamma > 0");
  if (k.kind == KernelSpec::Kind::Linear) return x * y.transpose();
  Matrix g(x.rows(), y.rows());
  for (Eigen::Index j = 0; j < y.rows(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) g(i, j) = std::exp(-k.gamma * (x.row(i) - y.row(j)).squaredNorm());
  }
  return g;
}

}  // namespace dabench
