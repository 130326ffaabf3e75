#include <gtest/gtest.h>

#include <sstream>

#include "dabench/report.hpp"

using namespace dabench;

namespace {

SyntheticShiftConfig small_generator(double shift, int subjects = 4, std::uint64_t seed = 7) {
  SyntheticShiftConfig g;
  g.n_subjects = subjects;
  g.samples_per_class_per_domain = 40;
  g.dim = 4;
  g.domain_shift_scale = shift;
  g.seed = seed;
  return g;
}

MethodGrid svm_grid() { return MethodGrid{MethodKind::NoDaSvm}; }

MethodGrid shallow(MethodKind k) {
  MethodGrid g{k};
  g.dim = {4};
  return g;
}

MethodGrid deep(MethodKind k) {
  MethodGrid g{k};
  g.extractor_layers = {{16}};
  g.learning_rate = {1e-2};
  g.adversarial_epochs = 10;
  return g;
}

ExperimentConfig config(SyntheticShiftConfig gen, std::vector<NormStrategy> ss, std::vector<MethodGrid> ms) {
  ExperimentConfig c;
  c.dataset.synthetic = gen;
  c.strategies = std::move(ss);
  c.methods = std::move(ms);
  c.options.train.max_epochs = 30;
  c.options.train.patience = 10;
  c.options.train.batch_size = 32;
  c.seed = 3;
  c.jobs = 1;
  return c;
}

CellResult cell(double mean, double sd, NormStrategy s = NormStrategy::Z2, MethodKind m = MethodKind::NoDaAnn) {
  CellResult c;
  c.strategy = s;
  c.method = m;
  c.mean = mean;
  c.std = sd;
  c.fold_accuracies = {mean};
  c.scored_folds = 1;
  return c;
}

struct Toy {
  Matrix x;
  Labels y;
};

Toy separable_toy(std::uint64_t seed, Eigen::Index n = 200) {
  Rng rng(seed);
  Toy t{Matrix(n, 3), {}};
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % 2);
    for (Eigen::Index j = 0; j < 3; ++j) t.x(i, j) = standard_normal(rng) + (c ? 3.0 : -3.0);
    t.y.push_back(c);
  }
  return t;
}

}  // namespace

TEST(Accuracy, Examples) {
  const Labels a{0, 1, 1, 0, 1};
  EXPECT_EQ(accuracy(a, a), 1.0);
  const Labels flipped{1, 0, 0, 1, 0};
  EXPECT_EQ(accuracy(a, flipped), 0.0);
  const Labels four{0, 1, 1, 0, 0};
  EXPECT_DOUBLE_EQ(accuracy(a, four), 0.8);
  EXPECT_THROW(accuracy(Labels{}, Labels{}), EmptyInputError);
  EXPECT_THROW(accuracy(a, Labels{0}), ShapeError);
}

TEST(Aggregate, Examples) {
  const std::vector<double> two{0.8, 0.6};
  auto r = aggregate(two);
  EXPECT_EQ(percent(r.mean), "70.00");
  EXPECT_EQ(percent(r.std), "10.00");
  const std::vector<double> one{0.7};
  EXPECT_EQ(aggregate(one).std, 0.0);
  const std::vector<double> same{0.5, 0.5, 0.5};
  r = aggregate(same);
  EXPECT_EQ(percent(r.mean) + " (" + percent(r.std) + ")", "50.00 (0.00)");
}

TEST(GridSearch, SinglePointIsNotEvaluated) {
  int calls = 0;
  const auto out = grid_search(std::vector<int>{42}, [&](int) { return ++calls, 0.0; });
  EXPECT_EQ(out.best, 42);
  EXPECT_EQ(calls, 0);
}

TEST(GridSearch, FailuresRankLastAndTiesGoFirst) {
  const auto out = grid_search(std::vector<int>{0, 1, 2, 3}, [](int i) {
    if (i == 0) throw NumericError("diverged");
    if (i == 1) return std::numeric_limits<double>::quiet_NaN();
    return 0.5;
  });
  EXPECT_EQ(out.best_index, 2u);
  EXPECT_EQ(out.failures.size(), 2u);
  EXPECT_THROW(grid_search(std::vector<int>{0, 1}, [](int) -> double { throw NumericError("x"); }), Error);
}

TEST(GridSearch, DivergentLearningRateLoses) {
  const auto toy = separable_toy(1);
  HarnessOptions opt;
  opt.train.max_epochs = 20;
  MethodGrid g{MethodKind::NoDaAnn};
  g.extractor_layers = {{8}};
  g.learning_rate = {1e300, 1e-2};
  const auto out = grid_search(g.expand(), [&](const MethodSpec& m) {
    return detail::validation_score(m, toy.x, toy.y, toy.x, 5, opt);
  });
  EXPECT_EQ(out.best.learning_rate, 1e-2);
  EXPECT_EQ(out.failures.size(), 1u);
}

TEST(GridSearch, AnySelectedLearningRateFitsTheToy) {
  const auto toy = separable_toy(2);
  HarnessOptions opt;
  opt.train.max_epochs = 50;
  MethodGrid g{MethodKind::NoDaAnn};
  g.extractor_layers = {{8}};
  g.learning_rate = {0.1, 0.01, 0.001, 0.0001};
  const auto out = grid_search(g.expand(), [&](const MethodSpec& m) {
    return detail::validation_score(m, toy.x, toy.y, toy.x, 6, opt);
  });
  EXPECT_GE(out.scores[out.best_index], 0.95);
}

TEST(MethodGrid, ExpandsLastFieldFastest) {
  MethodGrid g{MethodKind::TcaSvm};
  g.C = {1, 10};
  g.dim = {2, 4};
  const auto specs = g.expand();
  ASSERT_EQ(specs.size(), 4u);
  EXPECT_EQ(specs[0].C, 1);
  EXPECT_EQ(specs[0].dim, 2);
  EXPECT_EQ(specs[1].C, 1);
  EXPECT_EQ(specs[1].dim, 4);
  EXPECT_EQ(specs[2].C, 10);
  for (auto k : kAllMethods) EXPECT_EQ(parse_method(to_string(k)), k);
}

TEST(Valence, Discretization) {
  const std::vector<double> r{8.0, 5.0, 1.0, 9.0};
  EXPECT_EQ(deap_valence_labels(r), (Labels{2, 1, 0, 2}));
  const std::vector<double> seven{7.0}, three{3.0}, out_of_range{0.5};
  EXPECT_THROW(deap_valence_labels(seven), BoundaryError);
  EXPECT_THROW(deap_valence_labels(three), BoundaryError);
  EXPECT_THROW(deap_valence_labels(out_of_range), RangeError);
}

TEST(Table, CellFormat) {
  EXPECT_EQ(cell_text(cell(0.8152, 0.0726)), "81.52 (7.26)");
  CellResult f = cell(0.5, 0.1);
  f.failed = true;
  EXPECT_EQ(cell_text(f), "FAIL");
}

TEST(Table, MarkdownShape) {
  const std::vector<CellResult> cells{cell(0.8152, 0.0726, NormStrategy::Z2, MethodKind::NoDaSvm),
                                      cell(0.6, 0.1, NormStrategy::Z2, MethodKind::TcaSvm)};
  const std::string md = render_table(cells, TableFormat::Markdown);
  EXPECT_EQ(md,
            "| Normalization | noDA-SVM | TCA-SVM |\n"
            "|---|---|---|\n"
            "| Z2* | 81.52 (7.26) | 60.00 (10.00) |\n");
}

TEST(Table, CsvRoundTrip) {
  std::vector<CellResult> cells{cell(0.8152, 0.0726, NormStrategy::NoNorm, MethodKind::Dann),
                                cell(1.0 / 3.0, 0.125, NormStrategy::Z1, MethodKind::KpcaSvm)};
  cells[1].failed = true;
  std::istringstream in(render_table(cells, TableFormat::Csv));
  const auto back = parse_table_csv(in);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].mean, 0.8152);
  EXPECT_EQ(back[0].std, 0.0726);
  EXPECT_EQ(back[0].method, MethodKind::Dann);
  EXPECT_EQ(back[0].scored_folds, 1u);
  EXPECT_TRUE(back[1].failed);
  EXPECT_EQ(render_table(back, TableFormat::Markdown), render_table(cells, TableFormat::Markdown));
}

TEST(Projection, RowsColumnsAndAlignedDomains) {
  // Subject 2 is an affine copy of subject 1; Z2 maps both onto the same cloud.
  Rng rng(3);
  const Eigen::Index n = 30;
  Matrix x(2 * n + 10, 3);
  Labels y;
  std::vector<DomainKey> d;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) x(i, j) = standard_normal(rng) + (i % 2 ? 2.0 : 0.0);
    x.row(n + i) = 3.0 * x.row(i).array() + 5.0;
    y.push_back(static_cast<int>(i % 2));
  }
  for (Eigen::Index i = 0; i < 10; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) x(2 * n + i, j) = standard_normal(rng);
  }
  for (Eigen::Index i = 0; i < n; ++i) y.push_back(static_cast<int>(i % 2));
  for (Eigen::Index i = 0; i < 10; ++i) y.push_back(static_cast<int>(i % 2));
  for (Eigen::Index i = 0; i < n; ++i) d.push_back({1, 1});
  for (Eigen::Index i = 0; i < n; ++i) d.push_back({2, 1});
  for (Eigen::Index i = 0; i < 10; ++i) d.push_back({3, 1});
  const DomainDataset ds(x, y, d);
  const auto fold = loso_folds(ds)[2];
  const auto p = project_2d(ds, fold, NormStrategy::Z2);
  ASSERT_EQ(p.xy.rows(), ds.rows());
  const Matrix a = p.xy.topRows(n), b = p.xy.middleRows(n, n);
  const double dist = (a.colwise().mean() - b.colwise().mean()).norm();
  const Matrix pooled = p.xy.topRows(2 * n);
  const double sd = std::sqrt((pooled.rowwise() - pooled.colwise().mean()).squaredNorm() / (2.0 * n));
  EXPECT_LT(dist, 0.1 * sd);

  const std::string csv = render_projection(ds, p);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "x,y,subject,session,split,label");
  EXPECT_EQ(static_cast<Eigen::Index>(std::count(csv.begin(), csv.end(), '\n')), ds.rows() + 1);
}

TEST(Experiment, ShapeContract) {
  const auto cfg = config(small_generator(10.0, 3), {NormStrategy::NoNorm, NormStrategy::Z2}, {svm_grid()});
  const auto r = run_experiment(cfg);
  EXPECT_EQ(r.cells.size(), 2u);
  EXPECT_EQ(r.fold_names, (std::vector<std::string>{"test-subject-1", "test-subject-2", "test-subject-3"}));
  for (const auto& c : r.cells) {
    EXPECT_FALSE(c.failed);
    EXPECT_EQ(c.fold_accuracies.size(), 3u);
  }
  EXPECT_EQ(r.folds.size(), 6u);
}

TEST(Experiment, NoShiftMakesStrategiesIndistinguishable) {
  const auto cfg = config(small_generator(0.0, 4), {NormStrategy::NoNorm, NormStrategy::Z0, NormStrategy::Z2},
                          {svm_grid()});
  const auto r = run_experiment(cfg);
  for (std::size_t i = 0; i < r.cells.size(); ++i) {
    for (std::size_t j = i + 1; j < r.cells.size(); ++j) {
      const auto& a = r.cells[i];
      const auto& b = r.cells[j];
      EXPECT_LE(std::abs(a.mean - b.mean), a.std + b.std + 1e-12)
          << to_string(a.strategy) << " vs " << to_string(b.strategy);
    }
  }
}

TEST(Experiment, StrongShiftFavorsPerDomainStandardization) {
  const auto cfg = config(small_generator(10.0, 6), {NormStrategy::NoNorm, NormStrategy::Z2},
                          {svm_grid(), shallow(MethodKind::TcaSvm)});
  const auto r = run_experiment(cfg);
  const double z2 = r.cell(NormStrategy::Z2, MethodKind::NoDaSvm).mean;
  EXPECT_GT(z2, r.cell(NormStrategy::NoNorm, MethodKind::NoDaSvm).mean + 0.20);
  EXPECT_GT(z2, r.cell(NormStrategy::NoNorm, MethodKind::TcaSvm).mean);
}

TEST(Experiment, StrongShiftDeepOrdering) {
  const auto cfg = config(small_generator(10.0, 4), {NormStrategy::NoNorm, NormStrategy::Z2},
                          {deep(MethodKind::NoDaAnn), deep(MethodKind::Dann)});
  const auto r = run_experiment(cfg);
  EXPECT_GT(r.cell(NormStrategy::Z2, MethodKind::NoDaAnn).mean, r.cell(NormStrategy::NoNorm, MethodKind::Dann).mean);
}

TEST(Experiment, ByteIdenticalReports) {
  auto cfg = config(small_generator(5.0, 3), {NormStrategy::Z1, NormStrategy::Z3},
                    {deep(MethodKind::Adda), shallow(MethodKind::KpcaSvm)});
  const auto a = run_experiment(cfg);
  cfg.jobs = 3;
  const auto b = run_experiment(cfg);
  EXPECT_EQ(render_table(a.cells, TableFormat::Csv), render_table(b.cells, TableFormat::Csv));
  for (std::size_t i = 0; i < a.folds.size(); ++i) {
    EXPECT_EQ(a.folds[i].fingerprint, b.folds[i].fingerprint);
    EXPECT_EQ(a.folds[i].hyperparameters, b.folds[i].hyperparameters);
  }
}

TEST(Experiment, TestLabelsOnlyTouchScoring) {
  auto cfg = config(small_generator(5.0, 3), {NormStrategy::Z2},
                    {svm_grid(), shallow(MethodKind::TcaSvm), deep(MethodKind::Dann)});
  cfg.methods[0].C = {0.1, 1, 10};
  const auto ds = generate_synthetic(*cfg.dataset.synthetic);
  const auto base = run_experiment(cfg, ds);
  const auto folds = loso_folds(ds);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    Labels y = ds.labels();
    for (Index i : folds[f].test_idx) y[i] = 0;
    const auto audited = run_experiment(cfg, ds.with_labels(y));
    for (std::size_t i = 0; i < base.folds.size(); ++i) {
      if (base.folds[i].fold != folds[f].name) continue;
      EXPECT_EQ(base.folds[i].fingerprint, audited.folds[i].fingerprint) << base.folds[i].fold;
      EXPECT_EQ(base.folds[i].hyperparameters, audited.folds[i].hyperparameters);
    }
  }
}

TEST(Experiment, FailingCellIsRecordedNotFatal) {
  // One row in subject 3 session 1: Z2 cannot standardize that test domain.
  const auto full = generate_synthetic(small_generator(5.0, 3));
  IndexList keep;
  bool kept_one = false;
  for (Index i = 0; i < full.rows(); ++i) {
    if (full.domains()[i].subject != 3) keep.push_back(i);
    else if (!kept_one) {
      keep.push_back(i);
      kept_one = true;
    }
  }
  const auto ds = full.subset(keep);
  const auto cfg = config(small_generator(5.0, 3), {NormStrategy::Z0, NormStrategy::Z2}, {svm_grid()});
  const auto r = run_experiment(cfg, ds);
  EXPECT_FALSE(r.cell(NormStrategy::Z0, MethodKind::NoDaSvm).failed);
  const auto& z2 = r.cell(NormStrategy::Z2, MethodKind::NoDaSvm);
  EXPECT_TRUE(z2.failed);
  EXPECT_EQ(z2.fold_accuracies.size(), 2u);
  bool named = false;
  for (const auto& f : r.folds) {
    if (!f.ok) named = f.error.find("test-subject-3") != std::string::npos && f.error.find("Z2") != std::string::npos;
  }
  EXPECT_TRUE(named);
  EXPECT_EQ(cell_text(z2), "FAIL");
}
