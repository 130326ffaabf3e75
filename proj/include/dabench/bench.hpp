#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <numeric>
#include <mutex>
#include <optional>
#include <thread>

#include "dabench/dataset.hpp"
#include "dabench/deep_da.hpp"
#include "dabench/normalize.hpp"
#include "dabench/shallow_da.hpp"
#include "dabench/svm.hpp"

namespace dabench {

enum class MethodKind { NoDaAnn, Dann, Adda, NoDaSvm, TcaSvm, KpcaSvm };

/// Deep methods first, then shallow ones: the column order of result tables.
inline constexpr std::array<MethodKind, 6> kAllMethods = {MethodKind::NoDaAnn, MethodKind::Dann,
                                                          MethodKind::Adda,    MethodKind::NoDaSvm,
                                                          MethodKind::TcaSvm,  MethodKind::KpcaSvm};

inline std::string_view to_string(MethodKind k) {
  switch (k) {
    case MethodKind::NoDaAnn: return "noDA-ANN";
    case MethodKind::Dann: return "DANN";
    case MethodKind::Adda: return "ADDA";
    case MethodKind::NoDaSvm: return "noDA-SVM";
    case MethodKind::TcaSvm: return "TCA-SVM";
    case MethodKind::KpcaSvm: return "KPCA-SVM";
  }
  return "?";
}

inline MethodKind parse_method(std::string_view name) {
  for (auto k : kAllMethods) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

inline bool is_deep(MethodKind k) { return k == MethodKind::NoDaAnn || k == MethodKind::Dann || k == MethodKind::Adda; }
inline bool uses_target(MethodKind k) { return k != MethodKind::NoDaAnn && k != MethodKind::NoDaSvm; }

/// Network layout shared by the deep methods.
struct Architecture {
  std::vector<int> extractor_layers{64};  // widths after the input; the last is the feature width
  std::vector<int> head_hidden{};         // hidden widths of predictor and domain heads
  Activation activation = Activation::ReLU;
  double leaky_slope = 0.01;

  bool operator==(const Architecture&) const = default;
};

/// One concrete method configuration.
struct MethodSpec {
  MethodKind kind = MethodKind::NoDaSvm;
  // SVM classifier
  KernelSpec kernel = KernelSpec::rbf();
  double C = 1.0;
  // TCA / KPCA projection
  KernelSpec da_kernel = KernelSpec::linear();
  Index dim = 8;
  double mu_reg = 1.0;
  // deep methods
  Architecture arch;
  double learning_rate = 1e-3;
  double lambda = 1.0;
  std::size_t adversarial_epochs = 30;
};

inline std::string join_ints(const std::vector<int>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
  return s + "]";
}

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Hyperparameters as "key=value" pairs separated by ';'.
inline std::string describe(const MethodSpec& m) {
  std::string s;
  auto add = [&](const std::string& k, const std::string& v) { s += (s.empty() ? "" : ";") + k + "=" + v; };
  if (is_deep(m.kind)) {
    add("extractor", join_ints(m.arch.extractor_layers));
    add("head_hidden", join_ints(m.arch.head_hidden));
    add("activation", std::string(to_string(m.arch.activation)));
    add("learning_rate", format_real(m.learning_rate));
    if (m.kind == MethodKind::Dann) add("lambda", format_real(m.lambda));
    if (m.kind == MethodKind::Adda) add("adversarial_epochs", std::to_string(m.adversarial_epochs));
  } else {
    add("kernel", to_string(m.kernel));
    add("C", format_real(m.C));
    if (m.kind != MethodKind::NoDaSvm) {
      add("da_kernel", to_string(m.da_kernel));
      add("dim", std::to_string(m.dim));
    }
    if (m.kind == MethodKind::TcaSvm) add("mu_reg", format_real(m.mu_reg));
  }
  return s;
}

/// Candidate values per hyperparameter. `expand` enumerates the Cartesian
/// product; the last-listed field varies fastest.
struct MethodGrid {
  MethodKind kind = MethodKind::NoDaSvm;
  std::vector<KernelSpec> kernel{KernelSpec::rbf()};
  std::vector<double> C{1.0};
  std::vector<KernelSpec> da_kernel{KernelSpec::linear()};
  std::vector<Index> dim{8};
  std::vector<double> mu_reg{1.0};
  std::vector<std::vector<int>> extractor_layers{{64}};
  std::vector<std::vector<int>> head_hidden{{}};
  std::vector<Activation> activation{Activation::ReLU};
  std::vector<double> learning_rate{1e-3};
  double leaky_slope = 0.01;
  double lambda = 1.0;
  std::size_t adversarial_epochs = 30;

  std::vector<MethodSpec> expand() const {
    std::vector<MethodSpec> out;
    MethodSpec base;
    base.kind = kind;
    base.lambda = lambda;
    base.adversarial_epochs = adversarial_epochs;
    base.arch.leaky_slope = leaky_slope;
    if (is_deep(kind)) {
      for (const auto& e : extractor_layers)
        for (const auto& h : head_hidden)
          for (auto a : activation)
            for (double lr : learning_rate) {
              MethodSpec m = base;
              m.arch.extractor_layers = e;
              m.arch.head_hidden = h;
              m.arch.activation = a;
              m.learning_rate = lr;
              out.push_back(m);
            }
    } else {
      const std::vector<KernelSpec> dk = kind == MethodKind::NoDaSvm ? std::vector<KernelSpec>{da_kernel.front()} : da_kernel;
      const std::vector<Index> dd = kind == MethodKind::NoDaSvm ? std::vector<Index>{dim.front()} : dim;
      const std::vector<double> mm = kind == MethodKind::TcaSvm ? mu_reg : std::vector<double>{mu_reg.front()};
      for (const auto& k : kernel)
        for (double c : C)
          for (const auto& d : dk)
            for (Index di : dd)
              for (double mu : mm) {
                MethodSpec m = base;
                m.kernel = k;
                m.C = c;
                m.da_kernel = d;
                m.dim = di;
                m.mu_reg = mu;
                out.push_back(m);
              }
    }
    if (out.empty()) throw ConfigError(std::string(to_string(kind)) + ": empty hyperparameter grid");
    return out;
  }
};

/// Options that apply to every method of a run.
struct HarnessOptions {
  TrainConfig train;  // learning_rate and seed are overridden per job
  double svm_tol = 1e-3;
  double grid_val_fraction = 0.1;
};

// ---------------------------------------------------------------------------
// Metrics

inline double accuracy(std::span<const int> predicted, std::span<const int> actual) {
  if (predicted.size() != actual.size()) throw ShapeError("accuracy: length mismatch");
  if (predicted.empty()) throw EmptyInputError("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == actual[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

/// Arithmetic mean and population standard deviation.
inline MeanStd aggregate(std::span<const double> values) {
  if (values.empty()) throw EmptyInputError("aggregate: no folds");
  MeanStd r;
  for (double v : values) r.mean += v;
  r.mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  r.std = std::sqrt(ss / static_cast<double>(values.size()));
  return r;
}

// ---------------------------------------------------------------------------
// Grid search

template <class T>
struct GridOutcome {
  T best;
  std::size_t best_index = 0;
  std::vector<double> scores;  // NaN for failed or unevaluated points
  std::vector<std::string> failures;
};

/// Picks the candidate with the highest score; ties go to the earliest. A
/// candidate that throws or scores non-finite counts as failed. A single
/// candidate is returned without evaluation.
template <class T, class Evaluate>
GridOutcome<T> grid_search(const std::vector<T>& candidates, Evaluate&& evaluate) {
  if (candidates.empty()) throw ConfigError("grid_search: empty grid");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  GridOutcome<T> out{candidates.front(), 0, std::vector<double>(candidates.size(), nan), {}};
  if (candidates.size() == 1) return out;
  bool found = false;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    try {
      const double s = evaluate(candidates[i]);
      if (!std::isfinite(s)) {
        out.failures.push_back("point " + std::to_string(i) + ": non-finite score");
        continue;
      }
      out.scores[i] = s;
      if (!found || s > out.scores[out.best_index]) {
        out.best_index = i;
        found = true;
      }
    } catch (const std::exception& e) {
      out.failures.push_back("point " + std::to_string(i) + ": " + e.what());
    }
  }
  if (!found) {
    std::string msg = "grid_search: all " + std::to_string(candidates.size()) + " points failed";
    for (const auto& f : out.failures) msg += "; " + f;
    throw Error("grid-search", msg);
  }
  out.best = candidates[out.best_index];
  return out;
}

// ---------------------------------------------------------------------------
// Fitting one method

/// A trained pipeline. `predict_source` serves source-side rows (validation),
/// `predict_target` serves test-side rows; they differ only for ADDA.
struct FittedMethod {
  std::function<Labels(const Matrix&)> predict_source;
  std::function<Labels(const Matrix&)> predict_target;
  std::uint64_t fingerprint = 0;
};

namespace detail {

inline MlpSpec extractor_spec(const Architecture& a, int input) {
  std::vector<int> sizes{input};
  sizes.insert(sizes.end(), a.extractor_layers.begin(), a.extractor_layers.end());
  return MlpSpec::make(sizes, a.activation, a.activation, Head::Identity, a.leaky_slope);
}

inline MlpSpec head_spec(const Architecture& a, int outputs) {
  std::vector<int> sizes{a.extractor_layers.back()};
  sizes.insert(sizes.end(), a.head_hidden.begin(), a.head_hidden.end());
  sizes.push_back(outputs);
  return MlpSpec::make(sizes, a.activation, Activation::Identity, Head::Softmax, a.leaky_slope);
}

}  // namespace detail

/// Fits `spec` on labelled source rows; domain-adaptive methods also read
/// the unlabelled target rows. Target labels are never an input.
inline FittedMethod fit_method(const MethodSpec& spec, const Matrix& xs, const Labels& ys, const Matrix& xt,
                               std::uint64_t seed, const HarnessOptions& opt) {
  FittedMethod fm;
  const SvmParams svm_params{spec.C, opt.svm_tol, 0};
  switch (spec.kind) {
    case MethodKind::NoDaSvm: {
      auto svm = std::make_shared<SvmModel>(svm_train(xs, ys, spec.kernel, svm_params));
      fm.predict_source = [svm](const Matrix& x) { return svm_predict(*svm, x); };
      fm.predict_target = fm.predict_source;
      fm.fingerprint = svm->fingerprint();
      return fm;
    }
    case MethodKind::TcaSvm: {
      auto tca = std::make_shared<TcaModel>(tca_fit(xs, xt, spec.da_kernel, spec.dim, spec.mu_reg));
      auto svm = std::make_shared<SvmModel>(svm_train(tca_transform(*tca, xs), ys, spec.kernel, svm_params));
      fm.predict_source = [tca, svm](const Matrix& x) { return svm_predict(*svm, tca_transform(*tca, x)); };
      fm.predict_target = fm.predict_source;
      fm.fingerprint = mix_seed(fingerprint(tca->projection) ^ svm->fingerprint());
      return fm;
    }
    case MethodKind::KpcaSvm: {
      auto kpca = std::make_shared<KpcaModel>(kpca_fit(vstack(xs, xt), spec.da_kernel, spec.dim));
      auto svm = std::make_shared<SvmModel>(svm_train(kpca_transform(*kpca, xs), ys, spec.kernel, svm_params));
      fm.predict_source = [kpca, svm](const Matrix& x) { return svm_predict(*svm, kpca_transform(*kpca, x)); };
      fm.predict_target = fm.predict_source;
      fm.fingerprint = mix_seed(fingerprint(kpca->alphas) ^ svm->fingerprint());
      return fm;
    }
    default: break;
  }

  TrainConfig tc = opt.train;
  tc.learning_rate = spec.learning_rate;
  tc.seed = seed;
  tc.adversarial_epochs = spec.adversarial_epochs;
  const int n_classes = class_count(ys);
  const MlpSpec ext = detail::extractor_spec(spec.arch, static_cast<int>(xs.cols()));
  const MlpSpec pred = detail::head_spec(spec.arch, n_classes);
  const std::uint64_t init_seed = derive_seed(seed, 0xC0FFEE);

  if (spec.kind == MethodKind::NoDaAnn) {
    auto m = std::make_shared<PlainModel>(train_plain(xs, ys, tc, make_plain_model(ext, pred, init_seed)).model);
    fm.predict_source = [m](const Matrix& x) { return predict(*m, x); };
    fm.predict_target = fm.predict_source;
    fm.fingerprint = m->fingerprint();
  } else if (spec.kind == MethodKind::Dann) {
    const MlpSpec dom = detail::head_spec(spec.arch, 2);
    auto m = std::make_shared<DannModel>(
        train_dann(xs, ys, xt, tc, make_dann_model(ext, pred, dom, spec.lambda, init_seed)).model);
    fm.predict_source = [m](const Matrix& x) { return predict(*m, x); };
    fm.predict_target = fm.predict_source;
    fm.fingerprint = m->fingerprint();
  } else {
    const MlpSpec dom = detail::head_spec(spec.arch, 2);
    auto m = std::make_shared<AddaModel>(train_adda(xs, ys, xt, tc, make_adda_model(ext, pred, dom, init_seed)).model);
    fm.predict_source = [m](const Matrix& x) { return predict_source(*m, x); };
    fm.predict_target = [m](const Matrix& x) { return predict_target(*m, x); };
    fm.fingerprint = m->fingerprint();
  }
  return fm;
}

// ---------------------------------------------------------------------------
// Experiment

enum class Protocol { Loso, Hlso };

inline std::string_view to_string(Protocol p) { return p == Protocol::Loso ? "loso" : "hlso"; }

inline Protocol parse_protocol(std::string_view s) {
  if (s == "loso" || s == "LOSO") return Protocol::Loso;
  if (s == "hlso" || s == "HLSO") return Protocol::Hlso;
  throw ConfigError("unknown protocol '" + std::string(s) + "' (expected loso or hlso)");
}

inline std::vector<Fold> make_folds(const DomainDataset& ds, Protocol p) {
  return p == Protocol::Loso ? loso_folds(ds) : hlso_folds(ds);
}

struct DatasetSource {
  std::optional<SyntheticShiftConfig> synthetic;
  std::string csv_path;
  std::optional<Index> subsample_per_subject;
  std::uint64_t subsample_seed = 0;
};

inline DomainDataset load_dataset(const DatasetSource& src) {
  DomainDataset ds = src.synthetic ? generate_synthetic(*src.synthetic) : load_csv(src.csv_path);
  if (src.subsample_per_subject) ds = subsample_per_subject(ds, *src.subsample_per_subject, src.subsample_seed);
  return ds;
}

struct ExperimentConfig {
  DatasetSource dataset;
  Protocol protocol = Protocol::Loso;
  std::vector<NormStrategy> strategies;
  std::vector<MethodGrid> methods;
  HarnessOptions options;
  std::uint64_t seed = 0;
  std::string output_dir = "report";
  unsigned jobs = 0;  // 0: hardware concurrency
  double eps = kDefaultEps;
  bool projections = true;

  void validate() const {
    if (strategies.empty()) throw ConfigError("experiment: 'strategies' must be nonempty");
    if (methods.empty()) throw ConfigError("experiment: 'methods' must be nonempty");
    for (const auto& m : methods) m.expand();
    options.train.validate();
  }
};

struct FoldRecord {
  std::string fold;
  NormStrategy strategy = NormStrategy::NoNorm;
  MethodKind method = MethodKind::NoDaSvm;
  bool ok = false;
  double accuracy = 0.0;
  std::uint64_t fingerprint = 0;
  std::string hyperparameters;
  std::string error;
  double seconds = 0.0;
};

struct CellResult {
  NormStrategy strategy = NormStrategy::NoNorm;
  MethodKind method = MethodKind::NoDaSvm;
  std::vector<double> fold_accuracies;
  std::size_t scored_folds = 0;  // folds that produced an accuracy
  double mean = 0.0;
  double std = 0.0;
  bool failed = false;
  double seconds = 0.0;
};

struct ExperimentReport {
  std::vector<std::string> fold_names;
  std::vector<CellResult> cells;   // strategy-major, then method, in config order
  std::vector<FoldRecord> folds;   // fold-major, then strategy, then method

  const CellResult& cell(NormStrategy s, MethodKind m) const {
    for (const auto& c : cells) {
      if (c.strategy == s && c.method == m) return c;
    }
    throw RangeError("report: no cell for (" + std::string(to_string(s)) + ", " + std::string(to_string(m)) + ")");
  }
};

namespace detail {

inline std::uint64_t job_seed(std::uint64_t root, std::size_t fold, NormStrategy s, MethodKind m) {
  return derive_seed(derive_seed(derive_seed(root, fold), static_cast<std::uint64_t>(s) + 100),
                     static_cast<std::uint64_t>(m) + 200);
}

/// Holdout accuracy of `spec` on an inner stratified split of the training side.
inline double validation_score(const MethodSpec& spec, const Matrix& xs, const Labels& ys, const Matrix& xt,
                               std::uint64_t seed, const HarnessOptions& opt) {
  IndexList all(ys.size());
  std::iota(all.begin(), all.end(), Index{0});
  const auto split = stratified_split(ys, all, opt.grid_val_fraction, derive_seed(seed, 0x5EA));
  const Matrix x_in = select_rows(xs, split.train_idx);
  const Labels y_in = select(ys, split.train_idx);
  const auto fitted = fit_method(spec, x_in, y_in, xt, derive_seed(seed, 0x5EB), opt);
  return accuracy(fitted.predict_source(select_rows(xs, split.val_idx)), select(ys, split.val_idx));
}

/// Runs every method for one (fold, strategy) pair.
inline std::vector<FoldRecord> run_group(const DomainDataset& ds, const Fold& fold, std::size_t fold_index,
                                         NormStrategy strategy, const ExperimentConfig& cfg) {
  using clock = std::chrono::steady_clock;
  std::vector<FoldRecord> out;
  for (const auto& g : cfg.methods) {
    FoldRecord r;
    r.fold = fold.name;
    r.strategy = strategy;
    r.method = g.kind;
    out.push_back(r);
  }
  auto fail_all = [&](const std::string& what) {
    for (auto& r : out) {
      r.ok = false;
      r.error = what;
    }
  };

  NormalizedSplit data;
  try {
    data = apply_strategy(ds, fold, strategy, cfg.eps);
  } catch (const std::exception& e) {
    fail_all("fold " + fold.name + ", strategy " + std::string(to_string(strategy)) + ": " + e.what());
    return out;
  }
  const Labels ys = select(ds.labels(), fold.train_idx);
  const Labels yt = select(ds.labels(), fold.test_idx);  // scoring only

  // Deep architecture: searched once under DANN (or the first deep method)
  // and shared by every deep method of this (fold, strategy).
  std::optional<Architecture> shared_arch;
  std::string arch_error;
  const MethodGrid* arch_grid = nullptr;
  for (const auto& g : cfg.methods) {
    if (g.kind == MethodKind::Dann) arch_grid = &g;
  }
  for (const auto& g : cfg.methods) {
    if (!arch_grid && is_deep(g.kind)) arch_grid = &g;
  }
  if (arch_grid) {
    const std::uint64_t s = job_seed(cfg.seed, fold_index, strategy, arch_grid->kind);
    try {
      const auto best = grid_search(arch_grid->expand(), [&](const MethodSpec& m) {
        return validation_score(m, data.train, ys, data.test, s, cfg.options);
      });
      shared_arch = best.best.arch;
    } catch (const std::exception& e) {
      arch_error = e.what();
    }
  }

  for (std::size_t k = 0; k < cfg.methods.size(); ++k) {
    const MethodGrid& g = cfg.methods[k];
    FoldRecord& rec = out[k];
    const auto t0 = clock::now();
    const std::uint64_t s = job_seed(cfg.seed, fold_index, strategy, g.kind);
    try {
      if (is_deep(g.kind) && !shared_arch) throw Error("grid-search", "architecture search failed: " + arch_error);
      std::vector<MethodSpec> candidates = g.expand();
      if (is_deep(g.kind)) {
        // Fixed architecture; only the remaining hyperparameters are searched.
        std::vector<MethodSpec> fixed;
        for (auto m : candidates) {
          m.arch = *shared_arch;
          if (std::find_if(fixed.begin(), fixed.end(), [&](const MethodSpec& f) {
                return f.learning_rate == m.learning_rate;
              }) == fixed.end()) {
            fixed.push_back(m);
          }
        }
        candidates = std::move(fixed);
      }
      const auto best = grid_search(candidates, [&](const MethodSpec& m) {
        return validation_score(m, data.train, ys, data.test, s, cfg.options);
      });
      const auto fitted = fit_method(best.best, data.train, ys, data.test, s, cfg.options);
      rec.accuracy = accuracy(fitted.predict_target(data.test), yt);
      rec.fingerprint = fitted.fingerprint;
      rec.hyperparameters = describe(best.best);
      rec.ok = true;
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = "fold " + fold.name + ", strategy " + std::string(to_string(strategy)) + ", method " +
                  std::string(to_string(g.kind)) + ": " + e.what();
    }
    rec.seconds = std::chrono::duration<double>(clock::now() - t0).count();
  }
  return out;
}

}  // namespace detail

/// Runs every (fold, strategy, method) cell. Jobs are (fold, strategy) pairs
/// and may run in parallel; results are reduced in a fixed order.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg, const DomainDataset& ds) {
  cfg.validate();
  const auto folds = make_folds(ds, cfg.protocol);
  const std::size_t n_jobs = folds.size() * cfg.strategies.size();
  std::vector<std::vector<FoldRecord>> results(n_jobs);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < n_jobs; j = next++) {
      const std::size_t f = j / cfg.strategies.size();
      const NormStrategy s = cfg.strategies[j % cfg.strategies.size()];
      results[j] = detail::run_group(ds, folds[f], f, s, cfg);
    }
  };
  unsigned threads = cfg.jobs ? cfg.jobs : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_jobs));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ExperimentReport report;
  for (const auto& f : folds) report.fold_names.push_back(f.name);
  for (auto& r : results) report.folds.insert(report.folds.end(), r.begin(), r.end());
  for (std::size_t si = 0; si < cfg.strategies.size(); ++si) {
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
      CellResult cell;
      cell.strategy = cfg.strategies[si];
      cell.method = cfg.methods[mi].kind;
      for (std::size_t f = 0; f < folds.size(); ++f) {
        const FoldRecord& r = results[f * cfg.strategies.size() + si][mi];
        cell.seconds += r.seconds;
        if (r.ok) cell.fold_accuracies.push_back(r.accuracy);
        else cell.failed = true;
      }
      cell.scored_folds = cell.fold_accuracies.size();
      if (!cell.fold_accuracies.empty()) {
        const auto ms = aggregate(cell.fold_accuracies);
        cell.mean = ms.mean;
        cell.std = ms.std;
      }
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  return run_experiment(cfg, load_dataset(cfg.dataset));
}

// ---------------------------------------------------------------------------
// DEAP-style valence discretization

enum class Valence { Negative = 0, Neutral = 1, Positive = 2 };

/// > 7 positive, (3, 7) neutral, < 3 negative. Ratings of exactly 3 or 7 are
/// left unassigned and rejected.
inline Labels deap_valence_labels(std::span<const double> ratings) {
  Labels out;
  out.reserve(ratings.size());
  for (std::size_t i = 0; i < ratings.size(); ++i) {
    const double r = ratings[i];
    if (!(r >= 1.0 && r <= 9.0)) throw RangeError("valence rating " + std::to_string(r) + " at index " + std::to_string(i) + " is outside [1, 9]");
    if (r == 3.0 || r == 7.0) throw BoundaryError("valence rating " + std::to_string(r) + " at index " + std::to_string(i) + " falls on a class boundary");
    out.push_back(static_cast<int>(r > 7.0 ? Valence::Positive : r > 3.0 ? Valence::Neutral : Valence::Negative));
  }
  return out;
}

}  // namespace dabench
