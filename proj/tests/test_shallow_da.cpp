#include <gtest/gtest.h>

#include "dabench/dataset.hpp"
#include "dabench/shallow_da.hpp"

using namespace dabench;

namespace {

Matrix randn(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = standard_normal(rng);
  return m;
}

Matrix rows(std::initializer_list<double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

// Two Gaussian clouds, the second translated by `shift` along a random direction.
std::pair<Matrix, Matrix> translated_pair(std::uint64_t seed, Eigen::Index n, Eigen::Index dim, double shift) {
  Rng rng(seed);
  Matrix a = randn(n, dim, rng);
  Matrix b = randn(n, dim, rng);
  Vector dir = randn(dim, 1, rng);
  dir.normalize();
  b.rowwise() += shift * dir.transpose();
  return {a, b};
}

// Reference PCA: eigenvectors of the covariance of centred data.
Matrix pca_scores(const Matrix& x, Eigen::Index k) {
  const Matrix c = x.rowwise() - x.colwise().mean();
  Eigen::SelfAdjointEigenSolver<Matrix> es(c.transpose() * c);
  return c * es.eigenvectors().rowwise().reverse().leftCols(k);
}

double abs_corr(const Vector& a, const Vector& b) {
  const Vector ac = a.array() - a.mean();
  const Vector bc = b.array() - b.mean();
  return std::abs(ac.dot(bc)) / (ac.norm() * bc.norm());
}

}  // namespace

TEST(Gram, Examples) {
  Matrix x(1, 2), y(1, 2);
  x << 1, 2;
  y << 3, 4;
  EXPECT_DOUBLE_EQ(gram(x, y, KernelSpec::linear())(0, 0), 11.0);
  EXPECT_NEAR(gram(rows({0}), rows({2}), KernelSpec::rbf(0.5))(0, 0), std::exp(-2.0), 1e-15);
  Rng rng(1);
  const Matrix z = randn(20, 3, rng);
  const Matrix k = gram(z, z, KernelSpec::rbf(0.7));
  for (Eigen::Index i = 0; i < 20; ++i) EXPECT_EQ(k(i, i), 1.0);
  EXPECT_THROW(gram(x, rows({1}), KernelSpec::linear()), ShapeError);
}

TEST(Gram, RbfIsBoundedSymmetricPsd) {
  Rng rng(2);
  for (int t = 0; t < 5; ++t) {
    const Matrix z = randn(20, 4, rng);
    const Matrix k = gram(z, z, resolve_kernel(KernelSpec::rbf(), z));
    EXPECT_GT(k.minCoeff(), 0.0);
    EXPECT_LE(k.maxCoeff(), 1.0);
    EXPECT_EQ(k, k.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(k);
    EXPECT_GT(es.eigenvalues().minCoeff(), -1e-9);
  }
}

TEST(Kernel, ParseAndMedianHeuristic) {
  EXPECT_EQ(parse_kernel("gaussian"), KernelSpec::rbf());
  EXPECT_EQ(parse_kernel("rbf:0.25"), KernelSpec::rbf(0.25));
  EXPECT_THROW(parse_kernel("poly"), ConfigError);
  // Points 0, 1, 3: pairwise distances {1, 2, 3}, median 2, gamma 1/8.
  const auto k = resolve_kernel(KernelSpec::rbf(), rows({0, 1, 3}));
  EXPECT_DOUBLE_EQ(k.gamma, 1.0 / 8.0);
}

TEST(Mmd, HandExpandedLinearCases) {
  EXPECT_EQ(mmd_sq(rows({0}), rows({2}), KernelSpec::linear()), 4.0);
  EXPECT_EQ(mmd_sq(rows({0, 2}), rows({1, 3}), KernelSpec::linear()), 1.0);
  EXPECT_THROW(mmd_sq(Matrix(0, 1), rows({1}), KernelSpec::linear()), EmptyInputError);
}

TEST(Mmd, IdentitySymmetryFloor) {
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const Matrix a = randn(15, 3, rng);
    const Matrix b = randn(12, 3, rng);
    for (const auto& k : {KernelSpec::linear(), KernelSpec::rbf(0.3)}) {
      EXPECT_NEAR(mmd_sq(a, a, k), 0.0, 1e-12);
      EXPECT_EQ(mmd_sq(a, b, k), mmd_sq(b, a, k));
      EXPECT_GE(mmd_sq(a, b, k), -1e-12);
    }
  }
}

TEST(Tca, IdenticalDomainsAlign) {
  Rng rng(6);
  const Matrix a = randn(30, 3, rng);
  for (const auto& k : {KernelSpec::linear(), KernelSpec::rbf()}) {
    const auto m = tca_fit(a, a, k, 2);
    EXPECT_LT(mmd_sq(tca_transform(m, a), tca_transform(m, a), KernelSpec::linear()), 1e-9);
    const Matrix z = tca_transform(m, m.basis);
    EXPECT_LT(mmd_sq(z.topRows(30), z.bottomRows(30), KernelSpec::linear()), 1e-9);
  }
}

TEST(Tca, TranslationShiftShrinks) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto [a, b] = translated_pair(seed, 60, 2, 10.0);
    const auto m = tca_fit(a, b, KernelSpec::linear(), 2, 1.0);
    const double raw = mmd_sq(a, b, KernelSpec::linear());
    const double proj = mmd_sq(tca_transform(m, a), tca_transform(m, b), KernelSpec::linear());
    EXPECT_LT(proj, raw);
    EXPECT_LE(proj, 0.5 * raw) << "seed " << seed;
  }
}

TEST(Tca, ShiftShrinksOnGeneratorDomains) {
  SyntheticShiftConfig cfg;
  cfg.n_subjects = 2;
  cfg.samples_per_class_per_domain = 40;
  cfg.domain_shift_scale = 5.0;
  const auto ds = generate_synthetic(cfg);
  const auto by = ds.rows_by_domain();
  const Matrix a = select_rows(ds.features(), by.begin()->second);
  const Matrix b = select_rows(ds.features(), std::next(by.begin())->second);
  const auto m = tca_fit(a, b, KernelSpec::linear(), 2);
  EXPECT_LE(mmd_sq(tca_transform(m, a), tca_transform(m, b), KernelSpec::linear()),
            0.5 * mmd_sq(a, b, KernelSpec::linear()));
}

// Projected training rows, centred, have identity scatter.
TEST(Tca, ProjectedScatterIsIdentity) {
  for (std::uint64_t seed = 20; seed < 25; ++seed) {
    const auto [a, b] = translated_pair(seed, 25, 4, 3.0);
    for (const auto& k : {KernelSpec::linear(), KernelSpec::rbf(0.3)}) {
      const auto m = tca_fit(a, b, k, 3, 0.5);
      ASSERT_EQ(m.dim(), 3);
      Matrix stacked(50, 4);
      stacked << a, b;
      const Matrix z = tca_transform(m, stacked);
      const Matrix zc = z.rowwise() - z.colwise().mean();
      EXPECT_LT((zc.transpose() * zc - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-6) << "seed " << seed;
    }
  }
}

// Linear data of rank 1 cannot support more than one transfer component.
TEST(Tca, RankDeficientKeepsFewerComponents) {
  Rng rng(31);
  const Matrix t = randn(40, 1, rng);
  Matrix x(40, 3);
  x << t, 2.0 * t, -t;
  const auto m = tca_fit(x.topRows(20), x.bottomRows(20), KernelSpec::linear(), 3);
  EXPECT_EQ(m.dim(), 1);
  EXPECT_EQ(m.eigenvalues.size(), 1);
  EXPECT_EQ(tca_transform(m, x).cols(), 1);
}

TEST(Tca, ShapesDeterminismAndErrors) {
  const auto [a, b] = translated_pair(3, 10, 3, 2.0);
  const auto m1 = tca_fit(a, b, KernelSpec::rbf(), 4);
  const auto m2 = tca_fit(a, b, KernelSpec::rbf(), 4);
  EXPECT_EQ(m1.projection, m2.projection);
  EXPECT_EQ(tca_transform(m1, a).cols(), 4);
  const Matrix empty(0, 3);
  EXPECT_EQ(tca_transform(m1, empty).rows(), 0);
  EXPECT_EQ(tca_transform(m1, empty).cols(), 4);
  const Matrix kb = gram(m1.basis, m1.basis, m1.kernel);
  EXPECT_LT((tca_transform(m1, m1.basis) - kb * m1.projection).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(tca_fit(a, b, KernelSpec::linear(), 21), ShapeError);
  EXPECT_THROW(tca_transform(m1, Matrix::Zero(2, 2)), ShapeError);
}

TEST(Kpca, LinearMatchesPcaOracle) {
  Rng rng(8);
  for (int t = 0; t < 20; ++t) {
    const Matrix x = randn(30, 5, rng);
    const auto m = kpca_fit(x, KernelSpec::linear(), 5);
    const Matrix scores = kpca_transform(m, x);
    const Matrix ref = pca_scores(x, 5);
    ASSERT_EQ(scores.cols(), 5);
    for (Eigen::Index c = 0; c < 5; ++c) EXPECT_GT(abs_corr(scores.col(c), ref.col(c)), 1.0 - 1e-9);
    // Up to sign the scores are the PCA scores themselves.
    for (Eigen::Index c = 0; c < 5; ++c) {
      const double s = scores.col(c).dot(ref.col(c)) > 0 ? 1.0 : -1.0;
      EXPECT_LT((scores.col(c) - s * ref.col(c)).cwiseAbs().maxCoeff(), 1e-8);
    }
  }
  const Matrix x = randn(10, 3, rng);
  const Matrix scores = kpca_transform(kpca_fit(x, KernelSpec::linear(), 3), x);
  const Matrix ref = pca_scores(x, 3);
  for (Eigen::Index c = 0; c < 3; ++c) EXPECT_GT(abs_corr(scores.col(c), ref.col(c)), 1.0 - 1e-9);
}

TEST(Kpca, DegenerateAndRankBound) {
  Matrix same(6, 2);
  same.rowwise() = RowVector::Constant(2, 3.0);
  EXPECT_THROW(kpca_fit(same, KernelSpec::linear(), 2), DegenerateDataError);

  Rng rng(9);
  const Matrix x = randn(12, 2, rng) * randn(2, 4, rng);  // rank 2
  const auto m = kpca_fit(x, KernelSpec::linear(), 12);
  EXPECT_LE(m.dim(), 2u);
}

TEST(Kpca, TransformConsistency) {
  Rng rng(10);
  const Matrix x = randn(15, 3, rng);
  for (const auto& k : {KernelSpec::linear(), KernelSpec::rbf()}) {
    const auto m = kpca_fit(x, k, 4);
    const Matrix train_scores = kpca_transform(m, x);
    // Training scores equal the centred-Gram eigenvector expansion.
    Matrix kc = gram(x, x, m.kernel);
    kc.rowwise() -= m.col_means.transpose();
    kc.colwise() -= m.col_means;
    kc.array() += m.total_mean;
    EXPECT_LT((train_scores - kc * m.alphas).cwiseAbs().maxCoeff(), 1e-9);
    // A duplicate of row 4 projects like row 4.
    Matrix q(2, 3);
    q.row(0) = x.row(0);
    q.row(1) = x.row(4);
    const Matrix s = kpca_transform(m, q);
    EXPECT_LT((s.row(1) - train_scores.row(4)).cwiseAbs().maxCoeff(), 1e-9);
  }
  const auto lin = kpca_fit(x, KernelSpec::linear(), 3);
  EXPECT_LT(kpca_transform(lin, Matrix(x.colwise().mean())).cwiseAbs().maxCoeff(), 1e-9);
}
