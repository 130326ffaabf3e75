#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dabench/error.hpp"

namespace dabench {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = std::size_t;
using IndexList = std::vector<Index>;
using Labels = std::vector<int>;
using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent child seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t salt) {
  return mix_seed(root ^ mix_seed(salt));
}

inline std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

/// FNV-1a over the raw bytes of a double range. Used for bitwise model audits.
inline std::uint64_t fingerprint(std::span<const double> values, std::uint64_t h = 1469598103934665603ULL) {
  for (double v : values) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(&v);
    for (std::size_t k = 0; k < sizeof(double); ++k) {
      h ^= bytes[k];
      h *= 1099511628211ULL;
    }
  }
  return h;
}

inline std::uint64_t fingerprint(const Matrix& m, std::uint64_t h = 1469598103934665603ULL) {
  return fingerprint(std::span<const double>(m.data(), static_cast<std::size_t>(m.size())), h);
}

/// Rows of `x` at `idx`, in the order given.
inline Matrix select_rows(const Matrix& x, std::span<const Index> idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(idx[i]));
  }
  return out;
}

template <class T>
std::vector<T> select(const std::vector<T>& v, std::span<const Index> idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (Index i : idx) out.push_back(v[i]);
  return out;
}

inline Matrix vstack(const Matrix& a, const Matrix& b) {
  if (a.rows() == 0) return b;
  if (b.rows() == 0) return a;
  if (a.cols() != b.cols()) throw ShapeError("vstack: column counts differ");
  Matrix out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int class_count(const Labels& y) {
  int c = 0;
  for (int v : y) c = std::max(c, v + 1);
  return c;
}

}  // namespace dabench
