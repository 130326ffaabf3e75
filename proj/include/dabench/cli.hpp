#pragma once

#include <iostream>

#include "CLI11.hpp"
#include "dabench/config.hpp"

namespace dabench::cli {

/// Process exit codes.
enum ExitCode : int { kOk = 0, kConfig = 2, kIo = 3, kExperiment = 4 };

inline int exit_code_for(const Error& e) { return dynamic_cast<const IoError*>(&e) ? kIo : kConfig; }

inline SyntheticShiftConfig load_synthetic(const std::filesystem::path& path) {
  Json j = read_json_file(path);
  if (j.is_object() && j.contains("synthetic")) j = j.at("synthetic");
  return synthetic_from_json(j);
}

inline int cmd_synth(const std::string& config, const std::string& out_path, std::optional<std::uint64_t> seed,
                     std::ostream& out) {
  SyntheticShiftConfig cfg = load_synthetic(config);
  if (seed) cfg.seed = *seed;
  const DomainDataset ds = generate_synthetic(cfg);
  save_csv(out_path, ds);
  out << "rows " << ds.rows() << ", features " << ds.cols() << ", domains " << ds.rows_by_domain().size() << "\n";
  return kOk;
}

struct RunFlags {
  std::string config;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
  bool strict = false;
};

inline int cmd_run(const RunFlags& f, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg = load_experiment(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.jobs) cfg.jobs = *f.jobs;
  if (f.out_dir) cfg.output_dir = *f.out_dir;
  const DomainDataset ds = load_dataset(cfg.dataset);
  make_folds(ds, cfg.protocol);  // protocol violations are configuration errors
  const ExperimentReport report = run_experiment(cfg, ds);
  write_report(cfg.output_dir, report, cfg, ds);
  out << render_table(report.cells, TableFormat::Markdown);
  bool failed = false;
  for (const auto& r : report.folds) {
    if (!r.ok) {
      err << "failed: " << r.error << "\n";
      failed = true;
    }
  }
  return failed && f.strict ? kExperiment : kOk;
}

inline int cmd_project(const std::string& config, const std::string& strategy, const std::string& fold_name,
                       const std::string& out_path, std::ostream& out) {
  const ExperimentConfig cfg = load_experiment(config);
  const NormStrategy s = parse_strategy(strategy);
  const DomainDataset ds = load_dataset(cfg.dataset);
  const auto folds = make_folds(ds, cfg.protocol);
  for (const auto& f : folds) {
    if (f.name == fold_name) {
      emit_projection(ds, f, s, out_path, cfg.eps);
      out << "wrote " << (f.train_idx.size() + f.test_idx.size()) << " points to " << out_path << "\n";
      return kOk;
    }
  }
  std::string names;
  for (const auto& f : folds) names += (names.empty() ? "" : ", ") + f.name;
  throw ConfigError("unknown fold '" + fold_name + "' (available: " + names + ")");
}

inline int cmd_table(const std::string& report, const std::string& format, const std::string& out_path,
                     std::ostream& out) {
  const auto cells = load_table_csv(report);
  const TableFormat fmt = parse_table_format(format);
  if (out_path.empty()) out << render_table(cells, fmt);
  else emit_table(cells, fmt, out_path);
  return kOk;
}

inline int cmd_validate(const std::string& data, std::ostream& out) {
  const DomainDataset ds = load_csv(data);
  const auto by_domain = ds.rows_by_domain();
  out << "rows " << ds.rows() << ", features " << ds.cols() << ", classes " << ds.num_classes() << ", subjects "
      << ds.subjects().size() << ", domains " << by_domain.size() << "\n";
  for (const auto& [key, rows] : by_domain) {
    out << "  " << to_string(key) << ": " << rows.size() << " rows\n";
  }
  for (const auto& [key, rows] : by_domain) {
    if (rows.size() == 1) {
      out << "warning: " << to_string(key) << " has a single row; Z2 and Z3 cannot standardize it\n";
    }
  }
  const Matrix& x = ds.features();
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (x.col(j).maxCoeff() == x.col(j).minCoeff()) {
      const auto& names = ds.feature_names();
      const std::string name = static_cast<std::size_t>(j) < names.size() ? names[static_cast<std::size_t>(j)]
                                                                          : "column " + std::to_string(j + 1);
      out << "warning: feature '" << name << "' is constant\n";
    }
  }
  return kOk;
}

/// Entry point; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Normalization and domain-adaptation benchmark"};
  app.require_subcommand(1, 1);

  std::string synth_config, synth_out;
  std::optional<std::uint64_t> synth_seed;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic shifted-domain dataset as CSV");
  synth->add_option("--config", synth_config, "Generator config (JSON)")->required();
  synth->add_option("--out", synth_out, "Output CSV path")->required();
  synth->add_option("--seed", synth_seed, "Override the generator seed");

  RunFlags rf;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment and write the report directory");
  run_cmd->add_option("--config", rf.config, "Experiment config (JSON)")->required();
  run_cmd->add_option("--out", rf.out_dir, "Report directory (overrides output_dir)");
  run_cmd->add_option("--seed", rf.seed, "Override the root seed");
  run_cmd->add_option("--jobs", rf.jobs, "Parallel jobs (default: available cores)");
  run_cmd->add_flag("--strict", rf.strict, "Exit 4 when any cell failed");

  std::string proj_config, proj_strategy, proj_fold, proj_out;
  auto* project = app.add_subcommand("project", "Write the 2-D PCA projection of one fold");
  project->add_option("--config", proj_config, "Experiment config (JSON)")->required();
  project->add_option("--strategy", proj_strategy, "Normalization strategy")->required();
  project->add_option("--fold", proj_fold, "Fold name, e.g. test-subject-1")->required();
  project->add_option("--out", proj_out, "Output CSV path")->required();

  std::string table_report, table_format = "markdown", table_out;
  auto* table = app.add_subcommand("table", "Render a report.csv as a table");
  table->add_option("--report", table_report, "report.csv path")->required();
  table->add_option("--format", table_format, "markdown or csv");
  table->add_option("--out", table_out, "Output path (default: standard output)");

  std::string validate_data;
  auto* validate = app.add_subcommand("validate", "Check a dataset CSV");
  validate->add_option("--data", validate_data, "Dataset CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*synth) return cmd_synth(synth_config, synth_out, synth_seed, out);
    if (*run_cmd) return cmd_run(rf, out, err);
    if (*project) return cmd_project(proj_config, proj_strategy, proj_fold, proj_out, out);
    if (*table) return cmd_table(table_report, table_format, table_out, out);
    if (*validate) return cmd_validate(validate_data, out);
  } catch (const Error& e) {
    err << "error (" << e.kind() << "): " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExperiment;
  }
  return kConfig;
}

}  // namespace dabench::cli
