#pragma once

#include <charconv>
#include <compare>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "dabench/common.hpp"

namespace dabench {

/// Identity of a recording domain: one subject in one session.
struct DomainKey {
  int subject = 0;
  int session = 0;
  auto operator<=>(const DomainKey&) const = default;
};

inline std::string to_string(const DomainKey& k) {
  return "subject " + std::to_string(k.subject) + "/session " + std::to_string(k.session);
}

/// Feature matrix with one class label and one domain key per row.
class DomainDataset {
 public:
  DomainDataset() = default;
  DomainDataset(Matrix features, Labels labels, std::vector<DomainKey> domains,
                std::vector<std::string> feature_names = {})
      : features_(std::move(features)),
        labels_(std::move(labels)),
        domains_(std::move(domains)),
        feature_names_(std::move(feature_names)) {
    validate();
  }

  const Matrix& features() const { return features_; }
  const Labels& labels() const { return labels_; }
  const std::vector<DomainKey>& domains() const { return domains_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }

  Index rows() const { return static_cast<Index>(features_.rows()); }
  Index cols() const { return static_cast<Index>(features_.cols()); }
  int num_classes() const { return class_count(labels_); }

  /// Distinct subject ids, ascending.
  std::vector<int> subjects() const {
    std::set<int> s;
    for (const auto& d : domains_) s.insert(d.subject);
    return {s.begin(), s.end()};
  }

  /// Row indices grouped by domain, domains in ascending key order.
  std::map<DomainKey, IndexList> rows_by_domain() const {
    std::map<DomainKey, IndexList> out;
    for (Index i = 0; i < domains_.size(); ++i) out[domains_[i]].push_back(i);
    return out;
  }

  DomainDataset subset(std::span<const Index> idx) const {
    return DomainDataset(select_rows(features_, idx), select(labels_, idx), select(domains_, idx),
                         feature_names_);
  }

  /// Same rows with a replaced label vector; used by leakage audits.
  DomainDataset with_labels(Labels labels) const {
    return DomainDataset(features_, std::move(labels), domains_, feature_names_);
  }

 private:
  void validate() const {
    const auto n = static_cast<Index>(features_.rows());
    if (labels_.size() != n || domains_.size() != n) {
      throw ShapeError("dataset: features, labels and domains must have the same row count");
    }
    if (features_.cols() < 1) throw ShapeError("dataset: at least one feature column is required");
    if (!feature_names_.empty() && feature_names_.size() != static_cast<Index>(features_.cols())) {
      throw ShapeError("dataset: feature_names length does not match the feature count");
    }
    for (Index i = 0; i < n; ++i) {
      if (labels_[i] < 0) throw SchemaError("dataset: negative label at row " + std::to_string(i));
      if (domains_[i].subject < 0 || domains_[i].session < 0) {
        throw SchemaError("dataset: negative subject/session id at row " + std::to_string(i));
      }
    }
  }

  Matrix features_;
  Labels labels_;
  std::vector<DomainKey> domains_;
  std::vector<std::string> feature_names_;
};

struct Fold {
  IndexList train_idx;
  IndexList test_idx;
  std::string name;
};

// ---------------------------------------------------------------------------
// CSV ingestion

struct CsvSchema {
  std::string subject = "subject";
  std::string session = "session";
  std::string label = "label";
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline std::optional<double> parse_real(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) return std::nullopt;
  return v;
}

inline std::optional<int> parse_int(const std::string& s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

}  // namespace detail

/// Parses the ingestion CSV format. Data rows are numbered from 1 in errors.
inline DomainDataset parse_csv(std::istream& in, const CsvSchema& schema = {}) {
  std::string line;
  if (!std::getline(in, line) || line.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw EmptyInputError("csv: empty input");
  }
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);
  const auto header = detail::split_csv_line(line);

  auto find_col = [&](const std::string& name) -> std::size_t {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == name) return j;
    }
    throw SchemaError("csv: required column '" + name + "' is missing");
  };
  const std::size_t subj_col = find_col(schema.subject);
  const std::size_t sess_col = find_col(schema.session);
  const std::size_t label_col = find_col(schema.label);

  std::vector<std::size_t> feature_cols;
  std::vector<std::string> feature_names;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j != subj_col && j != sess_col && j != label_col) {
      feature_cols.push_back(j);
      feature_names.push_back(header[j]);
    }
  }
  if (feature_cols.empty()) throw SchemaError("csv: no feature columns");

  std::vector<double> values;
  Labels labels;
  std::vector<DomainKey> domains;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++row;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ParseError("csv: row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                       " cells, expected " + std::to_string(header.size()));
    }
    auto int_cell = [&](std::size_t j) {
      auto v = detail::parse_int(cells[j]);
      if (!v || *v < 0) {
        throw ParseError("csv: row " + std::to_string(row) + ", column " + header[j] +
                         ": expected a non-negative integer, got '" + cells[j] + "'");
      }
      return *v;
    };
    domains.push_back({int_cell(subj_col), int_cell(sess_col)});
    labels.push_back(int_cell(label_col));
    for (std::size_t j : feature_cols) {
      auto v = detail::parse_real(cells[j]);
      if (!v) {
        throw ParseError("csv: row " + std::to_string(row) + ", column " + header[j] +
                         ": not a number: '" + cells[j] + "'");
      }
      values.push_back(*v);
    }
  }
  if (row == 0) throw EmptyInputError("csv: no data rows");

  const auto m = static_cast<Eigen::Index>(feature_cols.size());
  Matrix x(static_cast<Eigen::Index>(row), m);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < m; ++j) x(i, j) = values[static_cast<std::size_t>(i * m + j)];
  }
  return DomainDataset(std::move(x), std::move(labels), std::move(domains), std::move(feature_names));
}

inline DomainDataset load_csv(const std::string& path, const CsvSchema& schema = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return parse_csv(in, schema);
}

inline void write_csv(std::ostream& out, const DomainDataset& ds) {
  out << "subject,session,label";
  for (Index j = 0; j < ds.cols(); ++j) {
    out << ',' << (ds.feature_names().empty() ? "f" + std::to_string(j + 1) : ds.feature_names()[j]);
  }
  out << '\n';
  char buf[32];
  for (Index i = 0; i < ds.rows(); ++i) {
    out << ds.domains()[i].subject << ',' << ds.domains()[i].session << ',' << ds.labels()[i];
    for (Index j = 0; j < ds.cols(); ++j) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf,
                                     ds.features()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      out << ',' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
    }
    out << '\n';
  }
}

inline void save_csv(const std::string& path, const DomainDataset& ds) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_csv(out, ds);
  if (!out) throw IoError("write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// Synthetic shifted domains

struct SyntheticShiftConfig {
  int n_subjects = 6;
  int n_sessions = 1;
  int n_classes = 2;
  int samples_per_class_per_domain = 100;
  int dim = 8;
  double class_separation = 4.0;
  double domain_shift_scale = 10.0;
  double domain_scale_jitter = 0.3;
  double noise_std = 1.0;
  std::uint64_t seed = 7;

  void validate() const {
    auto need = [](bool ok, const char* field, const char* rule) {
      if (!ok) throw ConfigError(std::string("synthetic config: '") + field + "' must be " + rule);
    };
    need(n_subjects >= 1, "n_subjects", ">= 1");
    need(n_sessions >= 1, "n_sessions", ">= 1");
    need(n_classes >= 1, "n_classes", ">= 1");
    need(samples_per_class_per_domain >= 1, "samples_per_class_per_domain", ">= 1");
    need(dim >= 1, "dim", ">= 1");
    need(n_classes - 1 <= dim, "n_classes", "<= dim + 1");
    need(class_separation > 0.0, "class_separation", "> 0");
    need(domain_shift_scale >= 0.0, "domain_shift_scale", ">= 0");
    need(domain_scale_jitter >= 0.0 && domain_scale_jitter < 1.0, "domain_scale_jitter", "in [0, 1)");
    need(noise_std > 0.0, "noise_std", "> 0");
  }
};

/// Per-domain affine map x -> scale .* x + shift.
struct DomainAffine {
  DomainKey key;
  Vector scale;
  Vector shift;
};

/// Class means at the vertices of a centred regular simplex with edge length
/// `separation`; row c is the mean of class c.
inline Matrix simplex_class_means(int n_classes, int dim, double separation) {
  Matrix means = Matrix::Zero(n_classes, dim);
  if (n_classes < 2) return means;
  Matrix corners = Matrix::Identity(n_classes, n_classes) * (separation / std::sqrt(2.0));
  const RowVector centroid = corners.colwise().mean();
  corners.rowwise() -= centroid;
  Eigen::JacobiSVD<Matrix> svd(corners, Eigen::ComputeFullU);
  const Matrix coords = svd.matrixU().leftCols(n_classes - 1) *
                        svd.singularValues().head(n_classes - 1).asDiagonal();
  means.leftCols(n_classes - 1) = coords;
  return means;
}

/// The affine maps `generate_synthetic` applies, in domain order.
inline std::vector<DomainAffine> synthetic_domain_maps(const SyntheticShiftConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, 1));
  std::vector<DomainAffine> maps;
  for (int s = 0; s < cfg.n_subjects; ++s) {
    for (int t = 0; t < cfg.n_sessions; ++t) {
      DomainAffine m{{s + 1, t + 1}, Vector(cfg.dim), Vector(cfg.dim)};
      for (int j = 0; j < cfg.dim; ++j) {
        m.scale[j] = uniform(rng, 1.0 - cfg.domain_scale_jitter, 1.0 + cfg.domain_scale_jitter);
      }
      for (int j = 0; j < cfg.dim; ++j) m.shift[j] = standard_normal(rng);
      const double norm = m.shift.norm();
      m.shift *= norm > 0.0 ? cfg.domain_shift_scale / norm : 0.0;
      maps.push_back(std::move(m));
    }
  }
  return maps;
}

/// Subjects and sessions are numbered from 1. Rows are ordered by domain, then
/// class, then draw.
inline DomainDataset generate_synthetic(const SyntheticShiftConfig& cfg) {
  const auto maps = synthetic_domain_maps(cfg);
  const Matrix means = simplex_class_means(cfg.n_classes, cfg.dim, cfg.class_separation);
  const Index per_domain = static_cast<Index>(cfg.n_classes) * static_cast<Index>(cfg.samples_per_class_per_domain);
  const Index n = per_domain * maps.size();

  Matrix x(static_cast<Eigen::Index>(n), cfg.dim);
  Labels labels;
  std::vector<DomainKey> domains;
  labels.reserve(n);
  domains.reserve(n);
  Rng rng(derive_seed(cfg.seed, 2));
  Eigen::Index row = 0;
  for (const auto& map : maps) {
    for (int c = 0; c < cfg.n_classes; ++c) {
      for (int k = 0; k < cfg.samples_per_class_per_domain; ++k, ++row) {
        for (int j = 0; j < cfg.dim; ++j) {
          const double raw = means(c, j) + cfg.noise_std * standard_normal(rng);
          x(row, j) = map.scale[j] * raw + map.shift[j];
        }
        labels.push_back(c);
        domains.push_back(map.key);
      }
    }
  }
  std::vector<std::string> names;
  for (int j = 0; j < cfg.dim; ++j) names.push_back("f" + std::to_string(j + 1));
  return DomainDataset(std::move(x), std::move(labels), std::move(domains), std::move(names));
}

// ---------------------------------------------------------------------------
// Splitters

/// Leave-one-subject-out: one fold per subject, ascending subject id.
inline std::vector<Fold> loso_folds(const DomainDataset& ds) {
  const auto subjects = ds.subjects();
  if (subjects.size() < 2) {
    throw ProtocolError("LOSO needs at least 2 distinct subjects, found " + std::to_string(subjects.size()));
  }
  std::vector<Fold> folds;
  for (int s : subjects) {
    Fold f;
    f.name = "test-subject-" + std::to_string(s);
    for (Index i = 0; i < ds.rows(); ++i) {
      (ds.domains()[i].subject == s ? f.test_idx : f.train_idx).push_back(i);
    }
    folds.push_back(std::move(f));
  }
  return folds;
}

/// Hold-last-session-out: per subject, the highest session id is the test
/// set and the subject's remaining sessions are the training set.
inline std::vector<Fold> hlso_folds(const DomainDataset& ds) {
  std::map<int, std::set<int>> sessions;
  for (const auto& d : ds.domains()) sessions[d.subject].insert(d.session);
  if (sessions.empty()) throw ProtocolError("HLSO on an empty dataset");
  for (const auto& [subject, ids] : sessions) {
    if (ids.size() < 2) {
      throw ProtocolError("HLSO needs >= 2 sessions per subject; subject " + std::to_string(subject) +
                          " has " + std::to_string(ids.size()));
    }
  }
  std::vector<Fold> folds;
  for (const auto& [subject, ids] : sessions) {
    const int last = *ids.rbegin();
    Fold f;
    f.name = "subject-" + std::to_string(subject) + "-session-" + std::to_string(last);
    for (Index i = 0; i < ds.rows(); ++i) {
      const auto& d = ds.domains()[i];
      if (d.subject != subject) continue;
      (d.session == last ? f.test_idx : f.train_idx).push_back(i);
    }
    folds.push_back(std::move(f));
  }
  return folds;
}

struct SplitResult {
  IndexList train_idx;
  IndexList val_idx;
};

/// Class-stratified holdout. Each class contributes ceil(fraction * n_c)
/// rows to validation (at least 1, at most n_c - 1). Both outputs ascending.
inline SplitResult stratified_split(const Labels& labels, std::span<const Index> idx, double fraction,
                                    std::uint64_t seed) {
  if (idx.empty()) throw EmptyInputError("stratified_split: empty index set");
  if (!(fraction > 0.0 && fraction < 1.0)) throw RangeError("stratified_split: fraction must be in (0,1)");
  std::map<int, IndexList> by_class;
  for (Index i : idx) by_class[labels.at(i)].push_back(i);
  Rng rng(seed);
  SplitResult out;
  for (auto& [label, rows] : by_class) {
    if (rows.size() < 2) {
      throw StratificationError("stratified_split: class " + std::to_string(label) + " has a single row");
    }
    std::shuffle(rows.begin(), rows.end(), rng);
    auto n_val = static_cast<Index>(std::ceil(fraction * static_cast<double>(rows.size()) - 1e-12));
    n_val = std::clamp<Index>(n_val, 1, rows.size() - 1);
    out.val_idx.insert(out.val_idx.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_val));
    out.train_idx.insert(out.train_idx.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_val), rows.end());
  }
  std::sort(out.train_idx.begin(), out.train_idx.end());
  std::sort(out.val_idx.begin(), out.val_idx.end());
  return out;
}

inline SplitResult stratified_split(const DomainDataset& ds, std::span<const Index> idx, double fraction,
                                    std::uint64_t seed) {
  return stratified_split(ds.labels(), idx, fraction, seed);
}

/// Per-class quotas summing to exactly `k`: floor of the proportional share,
/// remainder handed out by largest fractional part (ties to the larger
/// class, then the smaller label).
inline std::map<int, Index> stratified_quotas(const std::map<int, Index>& class_sizes, Index k) {
  Index total = 0;
  for (const auto& [c, n] : class_sizes) total += n;
  std::map<int, Index> quota;
  std::vector<std::tuple<double, Index, int>> rema;
  Index assigned = 0;
  for (const auto& [c, n] : class_sizes) {
    const double share = static_cast<double>(k) * static_cast<double>(n) / static_cast<double>(total);
    const auto base = static_cast<Index>(std::floor(share));
    quota[c] = base;
    assigned += base;
    rema.emplace_back(share - static_cast<double>(base), n, c);
  }
  std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) > std::get<1>(b);
    return std::get<2>(a) < std::get<2>(b);
  });
  for (std::size_t r = 0; assigned < k && r < rema.size(); ++r, ++assigned) {
    ++quota[std::get<2>(rema[r])];
  }
  return quota;
}

/// Keeps at most `k` rows per subject, stratified on class labels. Row order
/// of the input is preserved.
inline DomainDataset subsample_per_subject(const DomainDataset& ds, Index k, std::uint64_t seed) {
  if (k < 1) throw RangeError("subsample_per_subject: k must be >= 1");
  std::map<int, std::map<int, IndexList>> rows;
  for (Index i = 0; i < ds.rows(); ++i) rows[ds.domains()[i].subject][ds.labels()[i]].push_back(i);

  IndexList keep;
  for (auto& [subject, by_class] : rows) {
    std::map<int, Index> sizes;
    Index n = 0;
    for (const auto& [c, r] : by_class) {
      sizes[c] = r.size();
      n += r.size();
    }
    if (n <= k) {
      for (const auto& [c, r] : by_class) keep.insert(keep.end(), r.begin(), r.end());
      continue;
    }
    const auto quota = stratified_quotas(sizes, k);
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(subject)));
    for (auto& [c, r] : by_class) {
      std::shuffle(r.begin(), r.end(), rng);
      keep.insert(keep.end(), r.begin(), r.begin() + static_cast<std::ptrdiff_t>(quota.at(c)));
    }
  }
  std::sort(keep.begin(), keep.end());
  return ds.subset(keep);
}

}  // namespace dabench
