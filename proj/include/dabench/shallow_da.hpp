#pragma once

#include <algorithm>

#include <Eigen/Eigenvalues>

#include "dabench/kernel.hpp"

namespace dabench {

namespace detail {

/// Total order on matrices used to pick a canonical argument orientation.
inline bool matrix_less(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) return a.rows() < b.rows();
  if (a.cols() != b.cols()) return a.cols() < b.cols();
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

/// Flip each column so that its largest-magnitude entry is positive.
inline void fix_column_signs(Matrix& v) {
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    Eigen::Index arg = 0;
    v.col(c).cwiseAbs().maxCoeff(&arg);
    if (v(arg, c) < 0.0) v.col(c) *= -1.0;
  }
}

}  // namespace detail

/// Squared MMD between the kernel mean embeddings of two samples (biased
/// V-statistic, diagonal terms included). Symmetric in its arguments bit for
/// bit.
inline double mmd_sq(const Matrix& xs, const Matrix& xt, const KernelSpec& k) {
  if (xs.rows() == 0 || xt.rows() == 0) throw EmptyInputError("mmd_sq: empty sample");
  if (xs.cols() != xt.cols()) throw ShapeError("mmd_sq: feature dimensions differ");
  const bool swap = detail::matrix_less(xt, xs);
  const Matrix& a = swap ? xt : xs;
  const Matrix& b = swap ? xs : xt;
  const double kaa = gram(a, a, k).mean();
  const double kbb = gram(b, b, k).mean();
  const double kab = gram(a, b, k).mean();
  return (kaa + kbb) - 2.0 * kab;
}

// ---------------------------------------------------------------------------
// Transfer component analysis

inline constexpr double kTcaRelTol = 1e-10;

struct TcaModel {
  Matrix basis;       // source rows stacked over target rows
  Matrix projection;  // n_basis x dim
  Vector eigenvalues; // descending, one per kept component
  KernelSpec kernel;
  double mu_reg = 1.0;

  Index dim() const { return static_cast<Index>(projection.cols()); }
};

/// Transfer components: the top `dim` generalized eigenvectors of
///   K H K w = lambda (K L K + mu I) w
/// where K is the kernel over source and target rows, L the MMD coefficient
/// matrix and H the centring matrix. Can keep fewer than `dim` components.
inline TcaModel tca_fit(const Matrix& xs, const Matrix& xt, KernelSpec k, Index dim, double mu_reg = 1.0) {
  if (xs.rows() == 0 || xt.rows() == 0) throw EmptyInputError("tca_fit: empty source or target");
  if (xs.cols() != xt.cols()) throw ShapeError("tca_fit: source and target feature dimensions differ");
  if (!(mu_reg > 0.0)) throw RangeError("tca_fit: mu_reg must be > 0");
  const Eigen::Index ns = xs.rows();
  const Eigen::Index nt = xt.rows();
  const Eigen::Index n = ns + nt;
  if (dim < 1 || static_cast<Eigen::Index>(dim) > n) {
    throw ShapeError("tca_fit: dim must be in [1, " + std::to_string(n) + "]");
  }

  TcaModel model;
  model.basis = vstack(xs, xt);
  model.kernel = resolve_kernel(k, model.basis);
  model.mu_reg = mu_reg;
  const Matrix kmat = gram(model.basis, model.basis, model.kernel);

  // L = e e^T with e = (1/ns, ..., -1/nt, ...), so K L K = (K e)(K e)^T.
  Vector e(n);
  e.head(ns).setConstant(1.0 / static_cast<double>(ns));
  e.tail(nt).setConstant(-1.0 / static_cast<double>(nt));
  const Vector ke = kmat * e;
  Matrix lhs = ke * ke.transpose();
  lhs.diagonal().array() += mu_reg;

  // K H K = (H K)^T (H K); H K subtracts column means.
  const Matrix hk = kmat.rowwise() - kmat.colwise().mean();
  Matrix rhs = hk.transpose() * hk;
  rhs = 0.5 * (rhs + rhs.transpose());

  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(rhs, lhs, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success) throw NumericError("tca_fit: generalized eigensolver failed");

  // Scale each component so that W^T K H K W = I: the projected training
  // data has identity scatter. Components with a numerically zero
  // eigenvalue carry no variance and are dropped.
  const Vector evals = solver.eigenvalues().reverse();
  const Matrix evecs = solver.eigenvectors().rowwise().reverse();
  const double top = evals.size() ? evals[0] : 0.0;
  if (!(top > 0.0)) throw DegenerateDataError("tca_fit: the stacked data has no variance");
  Eigen::Index kept = 0;
  while (kept < static_cast<Eigen::Index>(dim) && evals[kept] > kTcaRelTol * top) ++kept;
  model.projection = evecs.leftCols(kept);
  model.eigenvalues = evals.head(kept);
  for (Eigen::Index c = 0; c < kept; ++c) {
    const Vector khk_w = rhs * model.projection.col(c);
    model.projection.col(c) /= std::sqrt(model.projection.col(c).dot(khk_w));
  }
  detail::fix_column_signs(model.projection);
  if (!model.projection.allFinite()) throw NumericError("tca_fit: non-finite projection");
  return model;
}

inline Matrix tca_transform(const TcaModel& model, const Matrix& x) {
  if (x.cols() != model.basis.cols()) throw ShapeError("tca_transform: feature dimension mismatch");
  if (x.rows() == 0) return Matrix(0, model.projection.cols());
  return gram(x, model.basis, model.kernel) * model.projection;
}

// ---------------------------------------------------------------------------
// Kernel PCA

struct KpcaModel {
  Matrix basis;
  Matrix alphas;       // n_basis x kept, eigenvectors scaled by 1/sqrt(eigenvalue)
  Vector eigenvalues;  // descending
  KernelSpec kernel;
  Vector col_means;    // column means of the training Gram matrix
  double total_mean = 0.0;

  Index dim() const { return static_cast<Index>(alphas.cols()); }
};

inline constexpr double kKpcaRelTol = 1e-10;

/// Components whose eigenvalue is below 1e-10 of the largest are dropped, so
/// the model can keep fewer than `dim` components.
inline KpcaModel kpca_fit(const Matrix& x, KernelSpec k, Index dim) {
  if (x.rows() == 0) throw EmptyInputError("kpca_fit: empty input");
  if (dim < 1 || static_cast<Eigen::Index>(dim) > x.rows()) {
    throw ShapeError("kpca_fit: dim must be in [1, " + std::to_string(x.rows()) + "]");
  }
  KpcaModel model;
  model.basis = x;
  model.kernel = resolve_kernel(k, x);
  const Matrix kmat = gram(x, x, model.kernel);
  model.col_means = kmat.colwise().mean().transpose();
  model.total_mean = kmat.mean();

  Matrix kc = kmat;
  kc.rowwise() -= model.col_means.transpose();
  kc.colwise() -= model.col_means;
  kc.array() += model.total_mean;
  kc = 0.5 * (kc + kc.transpose());

  Eigen::SelfAdjointEigenSolver<Matrix> solver(kc);
  if (solver.info() != Eigen::Success) throw NumericError("kpca_fit: eigensolver failed");
  const Vector evals = solver.eigenvalues().reverse();
  const Matrix evecs = solver.eigenvectors().rowwise().reverse();

  const double scale = std::max(kmat.cwiseAbs().maxCoeff(), 1e-300) * static_cast<double>(x.rows());
  const double lmax = evals[0];
  if (!(lmax > 1e-12 * scale)) throw DegenerateDataError("kpca_fit: centred kernel matrix has no positive spectrum");

  Eigen::Index kept = 0;
  while (kept < static_cast<Eigen::Index>(dim) && kept < evals.size() && evals[kept] > kKpcaRelTol * lmax) ++kept;
  model.eigenvalues = evals.head(kept);
  Matrix v = evecs.leftCols(kept);
  detail::fix_column_signs(v);
  model.alphas = v * model.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal();
  if (!model.alphas.allFinite()) throw NumericError("kpca_fit: non-finite coefficients");
  return model;
}

inline Matrix kpca_transform(const KpcaModel& model, const Matrix& x) {
  if (x.cols() != model.basis.cols()) throw ShapeError("kpca_transform: feature dimension mismatch");
  if (x.rows() == 0) return Matrix(0, model.alphas.cols());
  Matrix kx = gram(x, model.basis, model.kernel);
  const Vector row_means = kx.rowwise().mean();
  kx.rowwise() -= model.col_means.transpose();
  kx.colwise() -= row_means;
  kx.array() += model.total_mean;
  return kx * model.alphas;
}

}  // namespace dabench
