#pragma once

#include <limits>
#include <set>

#include "dabench/kernel.hpp"

namespace dabench {

struct SvmParams {
  double C = 1.0;
  double tol = 1e-3;
  /// Iteration cap; 0 means max(10^7, 100 n).
  std::size_t max_iter = 0;
};

/// Dual solution of one binary problem with labels in {-1, +1}.
/// Decision function f(x) = sum_i alpha_i y_i k(x_i, x) + bias.
struct BinarySvmSolution {
  Vector alpha;
  double bias = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Sequential minimal optimization on a precomputed kernel matrix, with the
/// second-order working-set selection of Fan, Chen and Lin (2005). Stops when
/// the maximal KKT violation over violating pairs falls below `tol`.
inline BinarySvmSolution smo_solve(const Matrix& k, std::span<const int> y, const SvmParams& params) {
  const auto n = static_cast<Eigen::Index>(y.size());
  if (k.rows() != n || k.cols() != n) throw ShapeError("smo_solve: kernel matrix must be n x n");
  const double c = params.C;
  if (!(c > 0.0)) throw RangeError("smo_solve: C must be > 0");
  constexpr double tau = 1e-12;
  const double inf = std::numeric_limits<double>::infinity();
  const std::size_t max_iter =
      params.max_iter ? params.max_iter : std::max<std::size_t>(10'000'000, 100 * static_cast<std::size_t>(n));

  BinarySvmSolution sol;
  sol.alpha = Vector::Zero(n);
  Vector& a = sol.alpha;
  Vector grad = Vector::Constant(n, -1.0);  // Q a - e
  auto upper = [&](Eigen::Index t) { return a[t] >= c; };
  auto lower = [&](Eigen::Index t) { return a[t] <= 0.0; };

  while (sol.iterations < max_iter) {
    // i: maximal violator in I_up.
    double gmax = -inf;
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (y[t] == 1 ? !upper(t) : !lower(t)) {
        const double v = -y[t] * grad[t];
        if (v >= gmax) {
          gmax = v;
          i = t;
        }
      }
    }
    // j: best second-order gain in I_low.
    double gmax2 = -inf;
    double best = inf;
    Eigen::Index j = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (y[t] == 1 ? !lower(t) : !upper(t)) {
        const double v = y[t] * grad[t];
        gmax2 = std::max(gmax2, v);
        const double diff = gmax + v;
        if (i >= 0 && diff > 0.0) {
          double quad = k(i, i) + k(t, t) - 2.0 * k(t, i);
          if (quad <= 0.0) quad = tau;
          const double obj = -(diff * diff) / quad;
          if (obj <= best) {
            best = obj;
            j = t;
          }
        }
      }
    }
    if (gmax + gmax2 < params.tol || i < 0 || j < 0) {
      sol.converged = true;
      break;
    }
    ++sol.iterations;

    const double ai_old = a[i];
    const double aj_old = a[j];
    const double qij = y[i] * y[j] * k(i, j);
    if (y[i] != y[j]) {
      double quad = k(i, i) + k(j, j) + 2.0 * qij;
      if (quad <= 0.0) quad = tau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0.0) {
        if (a[j] < 0.0) { a[j] = 0.0; a[i] = diff; }
      } else {
        if (a[i] < 0.0) { a[i] = 0.0; a[j] = -diff; }
      }
      if (diff > 0.0) {
        if (a[i] > c) { a[i] = c; a[j] = c - diff; }
      } else {
        if (a[j] > c) { a[j] = c; a[i] = c + diff; }
      }
    } else {
      double quad = k(i, i) + k(j, j) - 2.0 * qij;
      if (quad <= 0.0) quad = tau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > c) {
        if (a[i] > c) { a[i] = c; a[j] = sum - c; }
      } else {
        if (a[j] < 0.0) { a[j] = 0.0; a[i] = sum; }
      }
      if (sum > c) {
        if (a[j] > c) { a[j] = c; a[i] = sum - c; }
      } else {
        if (a[i] < 0.0) { a[i] = 0.0; a[j] = sum; }
      }
    }
    const double dai = a[i] - ai_old;
    const double daj = a[j] - aj_old;
    for (Eigen::Index t = 0; t < n; ++t) {
      grad[t] += y[t] * (y[i] * k(t, i) * dai + y[j] * k(t, j) * daj);
    }
  }

  // Bias: mean of -y G over free vectors, else midpoint of the feasible interval.
  double ub = inf, lb = -inf, sum_free = 0.0;
  Eigen::Index n_free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (upper(t)) {
      if (y[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y[t] == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
  sol.bias = -rho;
  return sol;
}

/// One-vs-rest kernel SVM. Column c of `dual_coefs` holds alpha_i y_i of the
/// problem "class c vs rest" over the shared support rows.
struct SvmModel {
  Matrix support_rows;
  Matrix dual_coefs;
  Vector biases;
  KernelSpec kernel;
  double C = 1.0;
  std::vector<int> classes;

  std::uint64_t fingerprint() const {
    auto h = dabench::fingerprint(support_rows);
    h = dabench::fingerprint(dual_coefs, h);
    return dabench::fingerprint(Matrix(biases), h);
  }
};

inline SvmModel svm_train(const Matrix& x, const Labels& y, KernelSpec kernel, const SvmParams& params = {}) {
  if (static_cast<Index>(x.rows()) != y.size()) throw ShapeError("svm_train: row and label counts differ");
  if (x.rows() < 2) throw DegenerateLabelsError("svm_train: need at least 2 rows");
  if (!x.allFinite()) throw NumericError("svm_train: non-finite feature values");
  const std::set<int> distinct(y.begin(), y.end());
  if (distinct.size() < 2) throw DegenerateLabelsError("svm_train: need at least 2 classes");

  SvmModel model;
  model.kernel = resolve_kernel(kernel, x);
  model.C = params.C;
  model.classes.assign(distinct.begin(), distinct.end());
  const Matrix k = gram(x, x, model.kernel);

  const auto n = x.rows();
  const auto n_cls = static_cast<Eigen::Index>(model.classes.size());
  Matrix coefs = Matrix::Zero(n, n_cls);
  model.biases.resize(n_cls);
  std::vector<int> yb(static_cast<std::size_t>(n));
  for (Eigen::Index c = 0; c < n_cls; ++c) {
    for (Eigen::Index i = 0; i < n; ++i) yb[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)] == model.classes[static_cast<std::size_t>(c)] ? 1 : -1;
    const auto sol = smo_solve(k, yb, params);
    for (Eigen::Index i = 0; i < n; ++i) coefs(i, c) = sol.alpha[i] * yb[static_cast<std::size_t>(i)];
    model.biases[c] = sol.bias;
  }

  IndexList support;
  for (Eigen::Index i = 0; i < n; ++i) {
    if ((coefs.row(i).array() != 0.0).any()) support.push_back(static_cast<Index>(i));
  }
  model.support_rows = select_rows(x, support);
  model.dual_coefs = select_rows(coefs, support);
  return model;
}

/// Rows: samples, columns: classes in `model.classes` order.
inline Matrix svm_decision_values(const SvmModel& model, const Matrix& x) {
  if (x.cols() != model.support_rows.cols()) throw ShapeError("svm_predict: feature dimension mismatch");
  Matrix f = gram(x, model.support_rows, model.kernel) * model.dual_coefs;
  f.rowwise() += model.biases.transpose();
  return f;
}

/// Argmax of the per-class decision values; ties go to the smaller class id.
inline Labels svm_predict(const SvmModel& model, const Matrix& x) {
  if (x.cols() != model.support_rows.cols()) throw ShapeError("svm_predict: feature dimension mismatch");
  Labels out;
  if (x.rows() == 0) return out;
  const Matrix f = svm_decision_values(model, x);
  out.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < f.cols(); ++c) {
      if (f(i, c) > f(i, best)) best = c;
    }
    out.push_back(model.classes[static_cast<std::size_t>(best)]);
  }
  return out;
}

}  // namespace dabench
