#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dabench/bench.hpp"

namespace dabench {

enum class TableFormat { Markdown, Csv };

inline TableFormat parse_table_format(std::string_view s) {
  if (s == "markdown" || s == "md") return TableFormat::Markdown;
  if (s == "csv") return TableFormat::Csv;
  throw ConfigError("unknown table format '" + std::string(s) + "' (expected markdown or csv)");
}

/// 100 * v with two decimals. printf rounds the exact binary value, so exact
/// ties go to even.
inline std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

/// "MM.MM (SS.SS)", or "FAIL".
inline std::string cell_text(const CellResult& c) {
  if (c.failed) return "FAIL";
  return percent(c.mean) + " (" + percent(c.std) + ")";
}

namespace detail {

template <class T, std::size_t N>
std::vector<T> present_in_order(const std::array<T, N>& order, const std::vector<T>& seen) {
  std::vector<T> out;
  for (auto v : order) {
    if (std::find(seen.begin(), seen.end(), v) != seen.end()) out.push_back(v);
  }
  return out;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out.flush()) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace detail

/// Rows are strategies, columns are methods (deep first), both in canonical
/// order and restricted to what the cells contain.
inline std::string render_table(const std::vector<CellResult>& cells, TableFormat format) {
  std::vector<NormStrategy> ss;
  std::vector<MethodKind> ms;
  for (const auto& c : cells) {
    ss.push_back(c.strategy);
    ms.push_back(c.method);
  }
  const auto rows = detail::present_in_order(kAllStrategies, ss);
  const auto cols = detail::present_in_order(kAllMethods, ms);
  auto find = [&](NormStrategy s, MethodKind m) -> const CellResult* {
    for (const auto& c : cells) {
      if (c.strategy == s && c.method == m) return &c;
    }
    return nullptr;
  };

  std::string out;
  if (format == TableFormat::Csv) {
    out = "strategy,method,mean,std,folds,status\n";
    for (auto s : rows) {
      for (auto m : cols) {
        const CellResult* c = find(s, m);
        if (!c) continue;
        const bool ok = !c->failed;
        out += std::string(to_string(s)) + "," + std::string(to_string(m)) + "," +
               (ok ? format_real(c->mean) : "nan") + "," + (ok ? format_real(c->std) : "nan") + "," +
               std::to_string(c->scored_folds) + "," + (ok ? "ok" : "failed") + "\n";
      }
    }
    return out;
  }

  out = "| Normalization |";
  std::string rule = "|---|";
  for (auto m : cols) {
    out += " " + std::string(to_string(m)) + " |";
    rule += "---|";
  }
  out += "\n" + rule + "\n";
  for (auto s : rows) {
    out += "| " + std::string(to_string(s)) + (is_transductive(s) ? "*" : "") + " |";
    for (auto m : cols) {
      const CellResult* c = find(s, m);
      out += " " + (c ? cell_text(*c) : std::string("-")) + " |";
    }
    out += "\n";
  }
  return out;
}

inline void emit_table(const std::vector<CellResult>& cells, TableFormat format, const std::filesystem::path& path) {
  detail::write_file(path, render_table(cells, format));
}

/// Reads the csv table back; per-fold accuracies are not stored there and stay empty.
inline std::vector<CellResult> parse_table_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("strategy,method,mean,std", 0) != 0) {
    throw SchemaError("report csv: missing header 'strategy,method,mean,std,...'");
  }
  std::vector<CellResult> cells;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string tok; std::getline(ss, tok, ',');) f.push_back(tok);
    if (f.size() < 6) throw ParseError("report csv row " + std::to_string(row) + ": expected 6 fields");
    CellResult c;
    try {
      c.strategy = parse_strategy(f[0]);
      c.method = parse_method(f[1]);
    } catch (const Error& e) {
      throw ParseError("report csv row " + std::to_string(row) + ": " + e.what());
    }
    c.failed = f[5] != "ok";
    auto real = [&](const std::string& s, const char* col) {
      try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
      } catch (const std::exception&) {
        throw ParseError("report csv row " + std::to_string(row) + ", column " + col + ": not a number");
      }
    };
    c.mean = real(f[2], "mean");
    c.std = real(f[3], "std");
    try {
      std::size_t used = 0;
      const long long n = std::stoll(f[4], &used);
      if (used != f[4].size() || n < 0) throw std::invalid_argument(f[4]);
      c.scored_folds = static_cast<std::size_t>(n);
    } catch (const std::exception&) {
      throw ParseError("report csv row " + std::to_string(row) + ", column folds: not a count");
    }
    cells.push_back(c);
  }
  return cells;
}

inline std::vector<CellResult> load_table_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return parse_table_csv(in);
}

// ---------------------------------------------------------------------------
// 2-D projection

struct Projection {
  Matrix xy;  // n x 2
  IndexList rows;
  std::vector<bool> is_test;
};

/// Normalizes with `strategy` and projects every row of the fold onto the
/// top two principal components of the combined normalized data.
inline Projection project_2d(const DomainDataset& ds, const Fold& fold, NormStrategy strategy, double eps = kDefaultEps) {
  const NormalizedSplit split = apply_strategy(ds, fold, strategy, eps);
  Projection p;
  p.rows = fold.train_idx;
  p.rows.insert(p.rows.end(), fold.test_idx.begin(), fold.test_idx.end());
  p.is_test.assign(fold.train_idx.size(), false);
  p.is_test.resize(p.rows.size(), true);
  const Matrix x = vstack(split.train, split.test);
  const Matrix centred = x.rowwise() - x.colwise().mean();
  Matrix cov = centred.transpose() * centred / static_cast<double>(std::max<Eigen::Index>(1, x.rows()));
  cov = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  const Vector ev = es.eigenvalues().reverse();
  if (ev.size() == 0 || !(ev[0] > 1e-12 * std::max(1.0, cov.cwiseAbs().maxCoeff()))) {
    throw DegenerateDataError("projection: normalized data has rank 0");
  }
  Matrix basis = Matrix::Zero(x.cols(), 2);
  const Eigen::Index k = std::min<Eigen::Index>(2, x.cols());
  basis.leftCols(k) = es.eigenvectors().rowwise().reverse().leftCols(k);
  detail::fix_column_signs(basis);
  p.xy = centred * basis;
  return p;
}

inline std::string render_projection(const DomainDataset& ds, const Projection& p) {
  std::string out = "x,y,subject,session,split,label\n";
  for (std::size_t r = 0; r < p.rows.size(); ++r) {
    const Index i = p.rows[r];
    const auto& d = ds.domains()[i];
    out += format_real(p.xy(static_cast<Eigen::Index>(r), 0)) + "," + format_real(p.xy(static_cast<Eigen::Index>(r), 1)) +
           "," + std::to_string(d.subject) + "," + std::to_string(d.session) + "," + (p.is_test[r] ? "test" : "train") +
           "," + std::to_string(ds.labels()[i]) + "\n";
  }
  return out;
}

inline void emit_projection(const DomainDataset& ds, const Fold& fold, NormStrategy strategy,
                            const std::filesystem::path& path, double eps = kDefaultEps) {
  detail::write_file(path, render_projection(ds, project_2d(ds, fold, strategy, eps)));
}

// ---------------------------------------------------------------------------
// Report directory

inline std::string render_folds_csv(const ExperimentReport& r) {
  std::string out = "fold,strategy,method,status,accuracy,fingerprint,hyperparameters,seconds,error\n";
  for (const auto& f : r.folds) {
    char fp[24];
    std::snprintf(fp, sizeof fp, "%016llx", static_cast<unsigned long long>(f.fingerprint));
    out += detail::csv_field(f.fold) + "," + std::string(to_string(f.strategy)) + "," + std::string(to_string(f.method)) +
           "," + (f.ok ? "ok" : "failed") + "," + (f.ok ? format_real(f.accuracy) : "nan") + "," + fp + "," +
           detail::csv_field(f.hyperparameters) + "," + format_real(f.seconds) + "," + detail::csv_field(f.error) + "\n";
  }
  return out;
}

inline std::string render_report_md(const ExperimentReport& r, const ExperimentConfig& cfg) {
  std::string out = "# Results\n\n";
  out += "Protocol: " + std::string(to_string(cfg.protocol)) + ", " + std::to_string(r.fold_names.size()) +
         " folds, seed " + std::to_string(cfg.seed) + ".\n";
  out += "Accuracy, mean % (std %) over folds. Columns: deep methods, then shallow methods.\n\n";
  out += render_table(r.cells, TableFormat::Markdown);
  out += "\n\\* transductive: test-side statistics are computed from the unlabeled test domain.\n";
  out += "Projection files use PCA (top two components).\n";
  std::string failures;
  for (const auto& f : r.folds) {
    if (!f.ok) failures += "- " + f.error + "\n";
  }
  if (!failures.empty()) out += "\n## Failures\n\n" + failures;
  return out;
}

}  // namespace dabench
