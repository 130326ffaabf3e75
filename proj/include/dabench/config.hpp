#pragma once

#include <set>

#include "dabench/report.hpp"
#include <nlohmann/json.hpp>

namespace dabench {

using Json = nlohmann::json;

namespace detail {

inline void reject_unknown(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return it.key() == a; }) == allowed.end()) {
      throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
  }
}

template <class T>
T get_field(const Json& j, const std::string& where, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(where + ": '" + key + "' has the wrong type");
  }
}

template <class T>
void read_opt(const Json& j, const std::string& where, const char* key, T& out) {
  if (j.contains(key)) out = get_field<T>(j, where, key);
}

/// A scalar or a list of scalars.
template <class T, class Convert>
void read_list(const Json& j, const std::string& where, const char* key, std::vector<T>& out, Convert conv) {
  if (!j.contains(key)) return;
  const Json& v = j.at(key);
  std::vector<T> vals;
  try {
    if (v.is_array()) {
      for (const auto& e : v) vals.push_back(conv(e));
    } else {
      vals.push_back(conv(v));
    }
  } catch (const Json::exception&) {
    throw ConfigError(where + ": '" + key + "' has the wrong type");
  } catch (const Error& e) {
    throw ConfigError(where + ": '" + key + "': " + e.what());
  }
  if (vals.empty()) throw ConfigError(where + ": '" + key + "' must not be empty");
  out = std::move(vals);
}

/// A layer list ([64, 32]) or a list of layer lists ([[16], [64]]).
inline void read_layers(const Json& j, const std::string& where, const char* key, std::vector<std::vector<int>>& out,
                        bool allow_empty_layers) {
  if (!j.contains(key)) return;
  const Json& v = j.at(key);
  std::vector<std::vector<int>> vals;
  try {
    if (v.is_number_integer()) {
      vals.push_back({v.get<int>()});
    } else if (v.is_array() && (v.empty() || v.front().is_number())) {
      vals.push_back(v.get<std::vector<int>>());
    } else if (v.is_array()) {
      for (const auto& e : v) vals.push_back(e.get<std::vector<int>>());
    } else {
      throw ConfigError(where + ": '" + key + "' has the wrong type");
    }
  } catch (const Json::exception&) {
    throw ConfigError(where + ": '" + key + "' has the wrong type");
  }
  if (vals.empty()) throw ConfigError(where + ": '" + key + "' must not be empty");
  for (const auto& layers : vals) {
    if (layers.empty() && !allow_empty_layers) throw ConfigError(where + ": '" + key + "' needs at least one layer");
    for (int w : layers) {
      if (w < 1) throw ConfigError(where + ": '" + key + "' widths must be >= 1");
    }
  }
  out = std::move(vals);
}

inline KernelSpec kernel_from_json(const Json& e) {
  if (e.is_string()) return parse_kernel(e.get<std::string>());
  if (e.is_object()) {
    const auto kind = parse_kernel(e.at("kind").get<std::string>());
    if (kind.kind == KernelSpec::Kind::Rbf && e.contains("gamma")) return KernelSpec::rbf(e.at("gamma").get<double>());
    return kind;
  }
  throw ConfigError("kernel must be a string or {kind, gamma}");
}

inline Json kernel_to_json(const KernelSpec& k) { return to_string(k); }

}  // namespace detail

inline SyntheticShiftConfig synthetic_from_json(const Json& j) {
  const std::string w = "synthetic config";
  detail::reject_unknown(j, w,
                         {"n_subjects", "n_sessions", "n_classes", "samples_per_class_per_domain", "dim", "class_separation",
                          "domain_shift_scale", "domain_scale_jitter", "noise_std", "seed"});
  SyntheticShiftConfig c;
  detail::read_opt(j, w, "n_subjects", c.n_subjects);
  detail::read_opt(j, w, "n_sessions", c.n_sessions);
  detail::read_opt(j, w, "n_classes", c.n_classes);
  detail::read_opt(j, w, "samples_per_class_per_domain", c.samples_per_class_per_domain);
  detail::read_opt(j, w, "dim", c.dim);
  detail::read_opt(j, w, "class_separation", c.class_separation);
  detail::read_opt(j, w, "domain_shift_scale", c.domain_shift_scale);
  detail::read_opt(j, w, "domain_scale_jitter", c.domain_scale_jitter);
  detail::read_opt(j, w, "noise_std", c.noise_std);
  detail::read_opt(j, w, "seed", c.seed);
  c.validate();
  return c;
}

inline Json to_json(const SyntheticShiftConfig& c) {
  return Json{{"n_subjects", c.n_subjects},
              {"n_sessions", c.n_sessions},
              {"n_classes", c.n_classes},
              {"samples_per_class_per_domain", c.samples_per_class_per_domain},
              {"dim", c.dim},
              {"class_separation", c.class_separation},
              {"domain_shift_scale", c.domain_shift_scale},
              {"domain_scale_jitter", c.domain_scale_jitter},
              {"noise_std", c.noise_std},
              {"seed", c.seed}};
}

inline MethodGrid method_from_json(const Json& j, std::size_t index) {
  const std::string w = "methods[" + std::to_string(index) + "]";
  detail::reject_unknown(j, w,
                         {"kind", "kernel", "C", "da_kernel", "dim", "mu_reg", "extractor", "head_hidden", "activation",
                          "learning_rate", "leaky_slope", "lambda", "adversarial_epochs"});
  if (!j.contains("kind")) throw ConfigError(w + ": missing 'kind'");
  MethodGrid g;
  try {
    g.kind = parse_method(detail::get_field<std::string>(j, w, "kind"));
  } catch (const ConfigError& e) {
    throw ConfigError(w + ": " + e.what());
  }
  auto num = [](const Json& e) { return e.get<double>(); };
  detail::read_list(j, w, "kernel", g.kernel, detail::kernel_from_json);
  detail::read_list(j, w, "C", g.C, num);
  detail::read_list(j, w, "da_kernel", g.da_kernel, detail::kernel_from_json);
  detail::read_list(j, w, "dim", g.dim, [](const Json& e) {
    const auto d = e.get<long long>();
    if (d < 1) throw ConfigError("must be >= 1");
    return static_cast<Index>(d);
  });
  detail::read_list(j, w, "mu_reg", g.mu_reg, num);
  detail::read_layers(j, w, "extractor", g.extractor_layers, false);
  detail::read_layers(j, w, "head_hidden", g.head_hidden, true);
  detail::read_list(j, w, "activation", g.activation, [](const Json& e) { return parse_activation(e.get<std::string>()); });
  detail::read_list(j, w, "learning_rate", g.learning_rate, num);
  detail::read_opt(j, w, "leaky_slope", g.leaky_slope);
  detail::read_opt(j, w, "lambda", g.lambda);
  detail::read_opt(j, w, "adversarial_epochs", g.adversarial_epochs);

  for (double c : g.C) {
    if (!(c > 0.0)) throw ConfigError(w + ": 'C' values must be > 0");
  }
  for (double mu : g.mu_reg) {
    if (!(mu > 0.0)) throw ConfigError(w + ": 'mu_reg' values must be > 0");
  }
  for (double lr : g.learning_rate) {
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError(w + ": 'learning_rate' values must be finite and >= 0");
  }
  if (!(g.lambda >= 0.0)) throw ConfigError(w + ": 'lambda' must be >= 0");
  for (const auto& e : g.extractor_layers) {
    if (e.size() > 3) throw ConfigError(w + ": 'extractor' allows at most 3 layers");
  }
  for (const auto& h : g.head_hidden) {
    if (h.size() > 3) throw ConfigError(w + ": 'head_hidden' allows at most 3 layers");
  }
  return g;
}

inline Json to_json(const MethodGrid& g) {
  Json j{{"kind", to_string(g.kind)}};
  auto kernels = [](const std::vector<KernelSpec>& ks) {
    Json a = Json::array();
    for (const auto& k : ks) a.push_back(detail::kernel_to_json(k));
    return a;
  };
  if (is_deep(g.kind)) {
    j["extractor"] = g.extractor_layers;
    j["head_hidden"] = g.head_hidden;
    Json acts = Json::array();
    for (auto a : g.activation) acts.push_back(to_string(a));
    j["activation"] = acts;
    j["learning_rate"] = g.learning_rate;
    j["leaky_slope"] = g.leaky_slope;
    if (g.kind == MethodKind::Dann) j["lambda"] = g.lambda;
    if (g.kind == MethodKind::Adda) j["adversarial_epochs"] = g.adversarial_epochs;
  } else {
    j["kernel"] = kernels(g.kernel);
    j["C"] = g.C;
    if (g.kind != MethodKind::NoDaSvm) {
      j["da_kernel"] = kernels(g.da_kernel);
      j["dim"] = g.dim;
    }
    if (g.kind == MethodKind::TcaSvm) j["mu_reg"] = g.mu_reg;
  }
  return j;
}

/// Parses an experiment file. Relative csv paths resolve against `base_dir`.
inline ExperimentConfig experiment_from_json(const Json& j, const std::filesystem::path& base_dir = {}) {
  const std::string w = "experiment";
  detail::reject_unknown(j, w,
                         {"dataset", "protocol", "strategies", "methods", "training", "seed", "output_dir", "jobs", "eps",
                          "projections", "svm_tol", "grid_val_fraction"});
  ExperimentConfig c;

  if (!j.contains("dataset")) throw ConfigError(w + ": missing 'dataset'");
  const Json& d = j.at("dataset");
  detail::reject_unknown(d, "dataset", {"synthetic", "csv", "subsample_per_subject", "subsample_seed"});
  if (d.contains("synthetic") == d.contains("csv")) {
    throw ConfigError("dataset: exactly one of 'synthetic' or 'csv' is required");
  }
  if (d.contains("synthetic")) {
    c.dataset.synthetic = synthetic_from_json(d.at("synthetic"));
  } else {
    std::filesystem::path p = detail::get_field<std::string>(d, "dataset", "csv");
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    c.dataset.csv_path = p.string();
  }
  if (d.contains("subsample_per_subject")) {
    const auto k = detail::get_field<long long>(d, "dataset", "subsample_per_subject");
    if (k < 1) throw ConfigError("dataset: 'subsample_per_subject' must be >= 1");
    c.dataset.subsample_per_subject = static_cast<Index>(k);
  }
  detail::read_opt(d, "dataset", "subsample_seed", c.dataset.subsample_seed);

  if (j.contains("protocol")) c.protocol = parse_protocol(detail::get_field<std::string>(j, w, "protocol"));
  if (!j.contains("strategies")) throw ConfigError(w + ": missing 'strategies'");
  detail::read_list(j, w, "strategies", c.strategies, [](const Json& e) { return parse_strategy(e.get<std::string>()); });
  if (!j.contains("methods") || !j.at("methods").is_array()) throw ConfigError(w + ": 'methods' must be a list");
  std::set<MethodKind> seen;
  for (std::size_t i = 0; i < j.at("methods").size(); ++i) {
    c.methods.push_back(method_from_json(j.at("methods")[i], i));
    if (!seen.insert(c.methods.back().kind).second) {
      throw ConfigError(w + ": method '" + std::string(to_string(c.methods.back().kind)) + "' listed twice");
    }
  }
  std::set<NormStrategy> seen_s(c.strategies.begin(), c.strategies.end());
  if (seen_s.size() != c.strategies.size()) throw ConfigError(w + ": 'strategies' lists a strategy twice");

  if (j.contains("training")) {
    const Json& t = j.at("training");
    detail::reject_unknown(t, "training", {"batch_size", "max_epochs", "patience", "val_fraction"});
    detail::read_opt(t, "training", "batch_size", c.options.train.batch_size);
    detail::read_opt(t, "training", "max_epochs", c.options.train.max_epochs);
    detail::read_opt(t, "training", "patience", c.options.train.patience);
    detail::read_opt(t, "training", "val_fraction", c.options.train.val_fraction);
  }
  detail::read_opt(j, w, "seed", c.seed);
  detail::read_opt(j, w, "output_dir", c.output_dir);
  detail::read_opt(j, w, "jobs", c.jobs);
  detail::read_opt(j, w, "eps", c.eps);
  detail::read_opt(j, w, "projections", c.projections);
  detail::read_opt(j, w, "svm_tol", c.options.svm_tol);
  detail::read_opt(j, w, "grid_val_fraction", c.options.grid_val_fraction);
  if (!(c.eps > 0.0)) throw ConfigError(w + ": 'eps' must be > 0");
  if (!(c.options.svm_tol > 0.0)) throw ConfigError(w + ": 'svm_tol' must be > 0");
  if (!(c.options.grid_val_fraction > 0.0 && c.options.grid_val_fraction < 1.0)) {
    throw ConfigError(w + ": 'grid_val_fraction' must be in (0, 1)");
  }
  c.validate();
  return c;
}

/// Echo of the effective configuration. `jobs` and `output_dir` are left out
/// so the echo does not depend on how the run was launched.
inline Json to_json(const ExperimentConfig& c) {
  Json d;
  if (c.dataset.synthetic) d["synthetic"] = to_json(*c.dataset.synthetic);
  else d["csv"] = c.dataset.csv_path;
  if (c.dataset.subsample_per_subject) {
    d["subsample_per_subject"] = *c.dataset.subsample_per_subject;
    d["subsample_seed"] = c.dataset.subsample_seed;
  }
  Json strategies = Json::array();
  for (auto s : c.strategies) strategies.push_back(to_string(s));
  Json methods = Json::array();
  for (const auto& m : c.methods) methods.push_back(to_json(m));
  return Json{{"dataset", d},
              {"protocol", to_string(c.protocol)},
              {"strategies", strategies},
              {"methods", methods},
              {"training",
               {{"batch_size", c.options.train.batch_size},
                {"max_epochs", c.options.train.max_epochs},
                {"patience", c.options.train.patience},
                {"val_fraction", c.options.train.val_fraction}}},
              {"seed", c.seed},
              {"eps", c.eps},
              {"projections", c.projections},
              {"svm_tol", c.options.svm_tol},
              {"grid_val_fraction", c.options.grid_val_fraction},
              {"projection_method", "PCA"}};
}

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
}

inline ExperimentConfig load_experiment(const std::filesystem::path& path) {
  return experiment_from_json(read_json_file(path), path.parent_path());
}

/// Writes report.md, report.csv, folds.csv, config.json and, when enabled,
/// one projection file per (strategy, fold).
inline void write_report(const std::filesystem::path& dir, const ExperimentReport& report, const ExperimentConfig& cfg,
                         const DomainDataset& ds) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  detail::write_file(dir / "report.md", render_report_md(report, cfg));
  detail::write_file(dir / "report.csv", render_table(report.cells, TableFormat::Csv));
  detail::write_file(dir / "folds.csv", render_folds_csv(report));
  detail::write_file(dir / "config.json", to_json(cfg).dump(2) + "\n");
  if (!cfg.projections) return;
  const auto folds = make_folds(ds, cfg.protocol);
  for (auto s : cfg.strategies) {
    for (const auto& f : folds) {
      const auto path = dir / ("projection_" + std::string(to_string(s)) + "_" + f.name + ".csv");
      try {
        emit_projection(ds, f, s, path, cfg.eps);
      } catch (const IoError&) {
        throw;
      } catch (const Error&) {
        // Strategies that cannot normalize this fold already show up as failed cells.
      }
    }
  }
}

}  // namespace dabench
