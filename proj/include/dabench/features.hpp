#pragma once

#include <algorithm>
#include <array>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "dabench/common.hpp"

namespace dabench {

/// Multichannel signal: rows are channels, columns are time samples.
struct SignalEpoch {
  Matrix samples;
  double fs = 0.0;

  Eigen::Index channels() const { return samples.rows(); }
  Eigen::Index length() const { return samples.cols(); }
};

struct BandSpec {
  std::string name;
  double low = 0.0;
  double high = 0.0;

  /// The whole spectrum, read without any filtering.
  static BandSpec full(std::string name = "full") {
    return {std::move(name), 0.0, std::numeric_limits<double>::infinity()};
  }
  bool is_full() const { return low <= 0.0 && std::isinf(high); }
};

/// Delta, theta, alpha, beta and gamma, as used for SEED-style DE features.
inline std::vector<BandSpec> standard_eeg_bands() {
  return {{"delta", 1.0, 3.0}, {"theta", 4.0, 7.0}, {"alpha", 8.0, 13.0}, {"beta", 14.0, 30.0}, {"gamma", 31.0, 50.0}};
}

// ---------------------------------------------------------------------------
// Butterworth band-pass filters in second-order sections

/// Direct-form II transposed biquad; a0 is normalized to 1.
struct Biquad {
  double b0, b1, b2, a1, a2;
};

using Sos = std::vector<Biquad>;

namespace detail {

inline std::complex<double> biquad_response(const Biquad& s, std::complex<double> z) {
  const auto zi = 1.0 / z;
  return (s.b0 + s.b1 * zi + s.b2 * zi * zi) / (1.0 + s.a1 * zi + s.a2 * zi * zi);
}

}  // namespace detail

/// Order-`order` Butterworth band-pass: analog low-pass prototype, low-pass to
/// band-pass transform, then bilinear transform with frequency prewarping.
/// Returns `order` sections with unit gain at the band centre.
inline Sos butter_bandpass_design(double low, double high, double fs, int order) {
  if (order < 1) throw DesignError("butterworth: order must be >= 1");
  if (!(fs > 0.0)) throw DesignError("butterworth: sampling rate must be > 0");
  if (!(low > 0.0 && low < high && high < fs / 2.0)) {
    throw DesignError("butterworth: band [" + std::to_string(low) + ", " + std::to_string(high) +
                      "] Hz must satisfy 0 < low < high < fs/2 = " + std::to_string(fs / 2.0));
  }
  using cd = std::complex<double>;
  const double pi = std::numbers::pi;
  const double w1 = 2.0 * fs * std::tan(pi * low / fs);
  const double w2 = 2.0 * fs * std::tan(pi * high / fs);
  const double bw = w2 - w1;
  const double w0sq = w1 * w2;

  std::vector<cd> upper;  // digital poles with Im > 0
  std::vector<double> real_poles;
  for (int k = 0; k < order; ++k) {
    const int m = -order + 1 + 2 * k;
    const cd proto = -std::exp(cd(0.0, pi * m / (2.0 * order)));
    const cd scaled = proto * (bw / 2.0);
    const cd root = std::sqrt(scaled * scaled - w0sq);
    for (const cd s : {scaled + root, scaled - root}) {
      const cd z = (2.0 * fs + s) / (2.0 * fs - s);
      if (std::abs(z.imag()) <= 1e-14 * std::abs(z)) {
        real_poles.push_back(z.real());
      } else if (z.imag() > 0.0) {
        upper.push_back(z);
      }
    }
  }
  Sos sos;
  for (const cd p : upper) sos.push_back({1.0, 0.0, -1.0, -2.0 * p.real(), std::norm(p)});
  std::sort(real_poles.begin(), real_poles.end());
  for (std::size_t i = 0; i + 1 < real_poles.size(); i += 2) {
    const double p1 = real_poles[i], p2 = real_poles[i + 1];
    sos.push_back({1.0, 0.0, -1.0, -(p1 + p2), p1 * p2});
  }
  if (static_cast<int>(sos.size()) != order) throw DesignError("butterworth: pole pairing failed");

  // Unit gain at the digital image of the analog centre frequency.
  const double centre = 2.0 * std::atan(std::sqrt(w0sq) / (2.0 * fs));
  const cd z = std::exp(cd(0.0, centre));
  cd h = 1.0;
  for (const auto& s : sos) h *= detail::biquad_response(s, z);
  const double gain = 1.0 / h.real();
  sos.front().b0 *= gain;
  sos.front().b1 *= gain;
  sos.front().b2 *= gain;
  return sos;
}

/// Magnitude response at frequency `f` Hz.
inline double sos_magnitude(const Sos& sos, double f, double fs) {
  const auto z = std::exp(std::complex<double>(0.0, 2.0 * std::numbers::pi * f / fs));
  std::complex<double> h = 1.0;
  for (const auto& s : sos) h *= detail::biquad_response(s, z);
  return std::abs(h);
}

/// Steady-state initial conditions of each section for a unit step input.
inline std::vector<std::array<double, 2>> sos_step_state(const Sos& sos) {
  std::vector<std::array<double, 2>> zi;
  double scale = 1.0;
  for (const auto& s : sos) {
    const double g = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    const double z2 = s.b2 - s.a2 * g;
    const double z1 = s.b1 - s.a1 * g + z2;
    zi.push_back({scale * z1, scale * z2});
    scale *= g;
  }
  return zi;
}

/// Cascade filtering of `x` in place, starting from states `zi` times `x0`.
inline void sos_filter(const Sos& sos, std::vector<double>& x, const std::vector<std::array<double, 2>>& zi, double x0) {
  for (std::size_t k = 0; k < sos.size(); ++k) {
    const auto& s = sos[k];
    double z1 = zi[k][0] * x0;
    double z2 = zi[k][1] * x0;
    for (double& v : x) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
}

/// Zero-phase filtering: forward pass, then a pass over the time-reversed
/// output. The signal is extended at both ends by odd reflection.
inline std::vector<double> sos_filtfilt(const Sos& sos, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) throw ShapeError("filtfilt: signal needs at least 2 samples");
  const std::size_t pad = std::min<std::size_t>(3 * (2 * sos.size() + 1), n - 1);
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const auto zi = sos_step_state(sos);
  sos_filter(sos, ext, zi, ext.front());
  std::reverse(ext.begin(), ext.end());
  sos_filter(sos, ext, zi, ext.front());
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

/// Per-channel zero-phase Butterworth band-pass.
inline SignalEpoch butter_bandpass(const SignalEpoch& epoch, double low, double high, int order) {
  if (epoch.length() < 2) throw ShapeError("butter_bandpass: epoch needs at least 2 samples");
  const Sos sos = butter_bandpass_design(low, high, epoch.fs, order);
  SignalEpoch out{Matrix(epoch.channels(), epoch.length()), epoch.fs};
  std::vector<double> row(static_cast<std::size_t>(epoch.length()));
  for (Eigen::Index c = 0; c < epoch.channels(); ++c) {
    for (Eigen::Index t = 0; t < epoch.length(); ++t) row[static_cast<std::size_t>(t)] = epoch.samples(c, t);
    const auto y = sos_filtfilt(sos, row);
    for (Eigen::Index t = 0; t < epoch.length(); ++t) out.samples(c, t) = y[static_cast<std::size_t>(t)];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Differential entropy

inline constexpr double kDeVarianceFloor = 1e-12;

struct DeFeatures {
  Vector values;                // channel-major, band-minor
  std::vector<bool> degenerate; // variance hit the floor
};

inline double gaussian_entropy(double variance) {
  return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * variance);
}

/// 0.5 ln(2 pi e sigma^2) of each band-passed channel. Variances below
/// (1e-12)^2 are floored and flagged.
inline DeFeatures differential_entropy(const SignalEpoch& epoch, std::span<const BandSpec> bands, int order = 4) {
  if (epoch.length() < 2) throw ShapeError("differential_entropy: epoch needs at least 2 samples");
  if (bands.empty()) throw ConfigError("differential_entropy: no bands");
  const auto n_ch = epoch.channels();
  const auto n_b = static_cast<Eigen::Index>(bands.size());
  DeFeatures out{Vector(n_ch * n_b), std::vector<bool>(static_cast<std::size_t>(n_ch * n_b), false)};
  for (Eigen::Index b = 0; b < n_b; ++b) {
    const auto& band = bands[static_cast<std::size_t>(b)];
    const SignalEpoch filtered = band.is_full() ? epoch : butter_bandpass(epoch, band.low, band.high, order);
    for (Eigen::Index c = 0; c < n_ch; ++c) {
      const Eigen::ArrayXd row = filtered.samples.row(c).transpose().array();
      const double var = (row - row.mean()).square().mean();
      const double floor = kDeVarianceFloor * kDeVarianceFloor;
      const auto k = c * n_b + b;
      out.degenerate[static_cast<std::size_t>(k)] = !(var > floor);
      out.values[k] = gaussian_entropy(std::max(var, floor));
    }
  }
  return out;
}

/// Centred moving average over rows (time). Not a linear dynamical system
/// smoother; window 1 is the identity.
inline Matrix smooth_moving_average(const Matrix& series, int window) {
  if (window < 1) throw ConfigError("moving average: window must be >= 1");
  const Eigen::Index n = series.rows();
  const Eigen::Index half = window / 2;
  Matrix out(n, series.cols());
  for (Eigen::Index t = 0; t < n; ++t) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, t - half);
    const Eigen::Index hi = std::min<Eigen::Index>(n - 1, t + (window - 1 - half));
    out.row(t) = series.middleRows(lo, hi - lo + 1).colwise().mean();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Common spatial patterns

struct CspModel {
  Matrix filters;       // n_components x channels
  Vector eigenvalues;   // generalized eigenvalue of each filter, same order
  bool discriminative = true;
};

namespace detail {

inline Matrix mean_normalized_covariance(std::span<const SignalEpoch> trials, Eigen::Index channels) {
  Matrix acc = Matrix::Zero(channels, channels);
  for (const auto& t : trials) {
    if (t.channels() != channels) throw ShapeError("csp: trials disagree on channel count");
    const Matrix centred = t.samples.colwise() - t.samples.rowwise().mean();
    const Matrix cov = centred * centred.transpose();
    const double tr = cov.trace();
    if (!(tr > 0.0)) throw DegenerateDataError("csp: trial with zero variance");
    acc += cov / tr;
  }
  return acc / static_cast<double>(trials.size());
}

}  // namespace detail

/// Solves S_a w = lambda (S_a + S_b) w on the class-averaged, trace-normalized
/// covariances. Filters alternate between the largest and smallest
/// eigenvalues: largest, smallest, second largest, ...
inline CspModel csp_fit(std::span<const SignalEpoch> trials_a, std::span<const SignalEpoch> trials_b, int n_components) {
  if (trials_a.empty() || trials_b.empty()) throw EmptyInputError("csp_fit: both classes need trials");
  const Eigen::Index ch = trials_a.front().channels();
  if (n_components < 2 || n_components % 2 != 0 || n_components > ch) {
    throw ConfigError("csp_fit: n_components must be even, >= 2 and <= channels");
  }
  const Matrix sa = detail::mean_normalized_covariance(trials_a, ch);
  const Matrix sb = detail::mean_normalized_covariance(trials_b, ch);
  Matrix composite = sa + sb;

  auto positive_definite = [](const Matrix& m) {
    Eigen::LLT<Matrix> llt(m);
    return llt.info() == Eigen::Success;
  };
  if (!positive_definite(composite)) {
    composite.diagonal().array() += 1e-9 * composite.trace();
    if (!positive_definite(composite)) throw NumericError("csp_fit: pooled covariance is singular");
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(sa, composite);
  if (solver.info() != Eigen::Success) throw NumericError("csp_fit: eigensolver failed");
  const Vector& evals = solver.eigenvalues();  // ascending
  const Matrix& evecs = solver.eigenvectors();

  CspModel model;
  model.filters.resize(n_components, ch);
  model.eigenvalues.resize(n_components);
  for (int k = 0; k < n_components / 2; ++k) {
    const Eigen::Index hi = ch - 1 - k;
    const Eigen::Index lo = k;
    model.filters.row(2 * k) = evecs.col(hi).transpose();
    model.eigenvalues[2 * k] = evals[hi];
    model.filters.row(2 * k + 1) = evecs.col(lo).transpose();
    model.eigenvalues[2 * k + 1] = evals[lo];
  }
  for (Eigen::Index r = 0; r < model.filters.rows(); ++r) {
    Eigen::Index arg = 0;
    model.filters.row(r).cwiseAbs().maxCoeff(&arg);
    if (model.filters(r, arg) < 0.0) model.filters.row(r) *= -1.0;
  }
  model.discriminative = (evals.array() - 0.5).abs().maxCoeff() > 1e-6;
  if (!model.filters.allFinite()) throw NumericError("csp_fit: non-finite filters");
  return model;
}

/// Log of each filtered component's share of the total variance.
inline Vector csp_features(const SignalEpoch& epoch, const CspModel& model) {
  if (epoch.channels() != model.filters.cols()) throw ShapeError("csp_features: channel count mismatch");
  const Matrix z = model.filters * epoch.samples;
  const Matrix centred = z.colwise() - z.rowwise().mean();
  const Vector var = centred.array().square().rowwise().mean();
  const double total = var.sum();
  if (!(total > 0.0) || (var.array() <= 0.0).any()) throw DegenerateDataError("csp_features: zero variance component");
  return (var / total).array().log();
}

}  // namespace dabench
