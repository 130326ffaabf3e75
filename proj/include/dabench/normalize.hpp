#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>

#include "dabench/dataset.hpp"

namespace dabench {

inline constexpr double kDefaultEps = 1e-8;

/// Per-feature mean and population standard deviation.
struct FeatureStats {
  Vector mu;
  Vector sigma;
};

inline FeatureStats compute_stats(const Matrix& x) {
  if (x.rows() == 0 || x.cols() == 0) throw EmptyInputError("compute_stats: empty matrix");
  FeatureStats s;
  s.mu = x.colwise().mean().transpose();
  const Matrix centred = x.rowwise() - s.mu.transpose();
  s.sigma = (centred.array().square().colwise().sum() / static_cast<double>(x.rows())).sqrt().transpose();
  return s;
}

/// (x - mu) / max(sigma, eps), column-wise.
inline Matrix zscore(const Matrix& x, const FeatureStats& stats, double eps = kDefaultEps) {
  if (stats.mu.size() != x.cols() || stats.sigma.size() != x.cols()) {
    throw ShapeError("zscore: stats have " + std::to_string(stats.mu.size()) + " features, data has " +
                     std::to_string(x.cols()));
  }
  const Eigen::ArrayXd denom = stats.sigma.array().max(eps);
  Matrix out = x;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    out.col(j) = (x.col(j).array() - stats.mu[j]) / denom[j];
  }
  return out;
}

struct RangeStats {
  Vector mins;
  Vector maxs;
};

inline RangeStats compute_range(const Matrix& x) {
  if (x.rows() == 0 || x.cols() == 0) throw EmptyInputError("compute_range: empty matrix");
  return {x.colwise().minCoeff().transpose(), x.colwise().maxCoeff().transpose()};
}

/// (x - mins) / max(maxs - mins, eps). Values outside the fitted range are
/// not clipped.
inline Matrix minmax(const Matrix& x, const Vector& mins, const Vector& maxs, double eps = kDefaultEps) {
  if (mins.size() != x.cols() || maxs.size() != x.cols()) throw ShapeError("minmax: range length mismatch");
  const Eigen::ArrayXd span = (maxs - mins).array().max(eps);
  Matrix out = x;
  for (Eigen::Index j = 0; j < x.cols(); ++j) out.col(j) = (x.col(j).array() - mins[j]) / span[j];
  return out;
}

enum class NormStrategy { NoNorm, Z0, Z1, Z2, Z3, MinMax };

inline constexpr std::array<NormStrategy, 6> kAllStrategies = {
    NormStrategy::NoNorm, NormStrategy::Z0, NormStrategy::Z1,
    NormStrategy::Z2,     NormStrategy::Z3, NormStrategy::MinMax};

inline std::string_view to_string(NormStrategy s) {
  switch (s) {
    case NormStrategy::NoNorm: return "noNorm";
    case NormStrategy::Z0: return "Z0";
    case NormStrategy::Z1: return "Z1";
    case NormStrategy::Z2: return "Z2";
    case NormStrategy::Z3: return "Z3";
    case NormStrategy::MinMax: return "MinMax";
  }
  return "?";
}

inline NormStrategy parse_strategy(std::string_view name) {
  for (auto s : kAllStrategies) {
    if (name == to_string(s)) return s;
  }
  if (name == "none" || name == "NoNorm" || name == "nonorm") return NormStrategy::NoNorm;
  if (name == "minmax") return NormStrategy::MinMax;
  throw ConfigError("unknown normalization strategy '" + std::string(name) + "'");
}

/// Z2 and Z3 read test-side features to normalize the test domain.
inline bool is_transductive(NormStrategy s) { return s == NormStrategy::Z2 || s == NormStrategy::Z3; }

namespace detail {

inline std::map<DomainKey, IndexList> group_by_domain(std::span<const DomainKey> domains) {
  std::map<DomainKey, IndexList> out;
  for (Index i = 0; i < domains.size(); ++i) out[domains[i]].push_back(i);
  return out;
}

/// Replaces each domain block of `x` by its own z-score.
inline Matrix zscore_per_domain(const Matrix& x, std::span<const DomainKey> domains, double eps,
                                bool reject_singletons) {
  Matrix out(x.rows(), x.cols());
  for (const auto& [key, rows] : group_by_domain(domains)) {
    if (reject_singletons && rows.size() < 2) {
      throw DegenerateDomainError("test-side domain " + to_string(key) +
                                  " has a single row; its own statistics are undefined");
    }
    const Matrix block = select_rows(x, rows);
    const Matrix z = zscore(block, compute_stats(block), eps);
    for (Index r = 0; r < rows.size(); ++r) {
      out.row(static_cast<Eigen::Index>(rows[r])) = z.row(static_cast<Eigen::Index>(r));
    }
  }
  return out;
}

}  // namespace detail

/// A normalization fitted on the training side only. The test side is
/// transformed later and only its features and domain keys are read.
class FittedNormalizer {
 public:
  FittedNormalizer(NormStrategy strategy, const Matrix& train, std::span<const DomainKey> train_domains,
                   double eps = kDefaultEps)
      : strategy_(strategy), eps_(eps) {
    if (static_cast<Index>(train.rows()) != train_domains.size()) {
      throw ShapeError("normalizer: training rows and domain keys differ in length");
    }
    if (train.rows() == 0) throw EmptyInputError("normalizer: empty training set");
    switch (strategy) {
      case NormStrategy::NoNorm:
        train_out_ = train;
        break;
      case NormStrategy::Z0:
      case NormStrategy::Z3:
        pooled_ = compute_stats(train);
        train_out_ = zscore(train, pooled_, eps);
        break;
      case NormStrategy::Z1:
        pooled_ = compute_stats(train);
        train_out_ = detail::zscore_per_domain(train, train_domains, eps, false);
        break;
      case NormStrategy::Z2:
        train_out_ = detail::zscore_per_domain(train, train_domains, eps, false);
        break;
      case NormStrategy::MinMax:
        range_ = compute_range(train);
        train_out_ = minmax(train, range_.mins, range_.maxs, eps);
        break;
    }
  }

  NormStrategy strategy() const { return strategy_; }
  const Matrix& train() const { return train_out_; }
  /// Raw pooled training statistics (Z0, Z1, Z3).
  const FeatureStats& pooled_stats() const { return pooled_; }

  Matrix transform_test(const Matrix& test, std::span<const DomainKey> test_domains) const {
    if (static_cast<Index>(test.rows()) != test_domains.size()) {
      throw ShapeError("normalizer: test rows and domain keys differ in length");
    }
    if (test.cols() != train_out_.cols()) throw ShapeError("normalizer: test feature count differs");
    switch (strategy_) {
      case NormStrategy::NoNorm: return test;
      case NormStrategy::Z0:
      case NormStrategy::Z1: return zscore(test, pooled_, eps_);
      case NormStrategy::Z2:
      case NormStrategy::Z3: return detail::zscore_per_domain(test, test_domains, eps_, true);
      case NormStrategy::MinMax: return minmax(test, range_.mins, range_.maxs, eps_);
    }
    return test;
  }

 private:
  NormStrategy strategy_;
  double eps_;
  Matrix train_out_;
  FeatureStats pooled_;
  RangeStats range_;
};

struct NormalizedSplit {
  Matrix train;  // rows follow fold.train_idx
  Matrix test;   // rows follow fold.test_idx
};

inline NormalizedSplit apply_strategy(const DomainDataset& ds, const Fold& fold, NormStrategy strategy,
                                      double eps = kDefaultEps) {
  for (const auto* idx : {&fold.train_idx, &fold.test_idx}) {
    for (Index i : *idx) {
      if (i >= ds.rows()) throw ShapeError("apply_strategy: fold index out of range");
    }
  }
  const auto train_domains = select(ds.domains(), fold.train_idx);
  const auto test_domains = select(ds.domains(), fold.test_idx);
  FittedNormalizer norm(strategy, select_rows(ds.features(), fold.train_idx), train_domains, eps);
  return {norm.train(), norm.transform_test(select_rows(ds.features(), fold.test_idx), test_domains)};
}

}  // namespace dabench
