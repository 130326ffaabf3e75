#include <gtest/gtest.h>

#include <numbers>

#include "dabench/features.hpp"

using namespace dabench;

namespace {

constexpr double kPi = std::numbers::pi;

SignalEpoch tone(double freq, double fs, Eigen::Index n, Eigen::Index channels = 1) {
  SignalEpoch e{Matrix(channels, n), fs};
  for (Eigen::Index c = 0; c < channels; ++c) {
    for (Eigen::Index t = 0; t < n; ++t) e.samples(c, t) = std::sin(2 * kPi * freq * static_cast<double>(t) / fs);
  }
  return e;
}

SignalEpoch noise(Eigen::Index channels, Eigen::Index n, double fs, std::uint64_t seed) {
  Rng rng(seed);
  SignalEpoch e{Matrix(channels, n), fs};
  for (Eigen::Index i = 0; i < e.samples.size(); ++i) e.samples.data()[i] = standard_normal(rng);
  return e;
}

double rms(const Matrix& m) { return std::sqrt(m.squaredNorm() / static_cast<double>(m.size())); }

// RMS over the central part, away from the filtfilt edges.
double central_rms(const SignalEpoch& e) {
  const Eigen::Index n = e.length();
  return rms(e.samples.middleCols(n / 4, n / 2));
}

// 2-channel trials: class A has energy on channel 0 only (plus a little noise), B on channel 1.
std::vector<SignalEpoch> toy_trials(bool class_a, int count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SignalEpoch> out;
  for (int k = 0; k < count; ++k) {
    SignalEpoch e{Matrix(2, 200), 100.0};
    for (Eigen::Index t = 0; t < 200; ++t) {
      const double big = 3.0 * standard_normal(rng), small = 0.1 * standard_normal(rng);
      e.samples(0, t) = class_a ? big : small;
      e.samples(1, t) = class_a ? small : big;
    }
    out.push_back(std::move(e));
  }
  return out;
}

double variance(const Vector& v) { return (v.array() - v.mean()).square().mean(); }

}  // namespace

TEST(Butterworth, PassbandAndStopband) {
  const double fs = 250.0;
  const auto pass = tone(20.0, fs, 2500);
  EXPECT_GE(central_rms(butter_bandpass(pass, 8, 30, 5)), 0.9 * central_rms(pass));
  const auto stop = tone(2.0, fs, 2500);
  EXPECT_LE(central_rms(butter_bandpass(stop, 8, 30, 5)), 0.1 * central_rms(stop));
  // Whole-signal RMS as well.
  EXPECT_GE(rms(butter_bandpass(pass, 8, 30, 5).samples), 0.9 * rms(pass.samples));
  EXPECT_LE(rms(butter_bandpass(stop, 8, 30, 5).samples), 0.1 * rms(stop.samples));
}

TEST(Butterworth, DesignMagnitude) {
  const Sos sos = butter_bandpass_design(8, 30, 250, 5);
  EXPECT_EQ(sos.size(), 5u);
  // -3 dB at the edges, unity near the centre.
  EXPECT_NEAR(sos_magnitude(sos, 8, 250), std::sqrt(0.5), 1e-6);
  EXPECT_NEAR(sos_magnitude(sos, 30, 250), std::sqrt(0.5), 1e-6);
  EXPECT_NEAR(sos_magnitude(sos, std::sqrt(8.0 * 30.0), 250), 1.0, 1e-3);
  EXPECT_LT(sos_magnitude(sos, 2, 250), 1e-3);
  EXPECT_LT(sos_magnitude(sos, 100, 250), 1e-3);
}

TEST(Butterworth, ZeroInZeroOut) {
  SignalEpoch z{Matrix::Zero(3, 500), 200.0};
  EXPECT_EQ(butter_bandpass(z, 8, 30, 5).samples.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Butterworth, ZeroPhase) {
  const auto in = tone(15.0, 250.0, 2000);
  const auto out = butter_bandpass(in, 8, 30, 5);
  const Eigen::Index lo = 500, len = 1000;
  int best_lag = 999;
  double best = -1e300;
  for (int lag = -10; lag <= 10; ++lag) {
    const double c = in.samples.middleCols(lo, len).cwiseProduct(out.samples.middleCols(lo + lag, len)).sum();
    if (c > best) {
      best = c;
      best_lag = lag;
    }
  }
  EXPECT_EQ(best_lag, 0);
}

TEST(Butterworth, InvalidBands) {
  EXPECT_THROW(butter_bandpass_design(8, 130, 250, 5), DesignError);
  EXPECT_THROW(butter_bandpass_design(30, 8, 250, 5), DesignError);
  EXPECT_THROW(butter_bandpass_design(0, 8, 250, 5), DesignError);
  EXPECT_THROW(butter_bandpass_design(8, 30, 250, 0), DesignError);
}

TEST(DifferentialEntropy, UnitGaussian) {
  const auto e = noise(1, 10000, 200.0, 1);
  const std::vector<BandSpec> full{BandSpec::full()};
  const auto de = differential_entropy(e, full);
  EXPECT_NEAR(de.values[0], 0.5 * std::log(2 * kPi * std::numbers::e), 0.05);
  EXPECT_NEAR(gaussian_entropy(1.0), 1.4189385332, 1e-9);
}

TEST(DifferentialEntropy, ScaleAndOffset) {
  const auto e = noise(4, 1000, 200.0, 2);
  const auto bands = standard_eeg_bands();
  const auto base = differential_entropy(e, bands);
  SignalEpoch twice = e;
  twice.samples *= 2.0;
  EXPECT_LT((differential_entropy(twice, bands).values.array() - base.values.array() - std::log(2.0)).abs().maxCoeff(),
            1e-9);
  const std::vector<BandSpec> full{BandSpec::full()};
  SignalEpoch shifted = e;
  shifted.samples.array() += 17.0;
  EXPECT_LT((differential_entropy(shifted, full).values - differential_entropy(e, full).values).cwiseAbs().maxCoeff(),
            1e-9);
}

TEST(DifferentialEntropy, LayoutAndDegenerateFlag) {
  const auto bands = standard_eeg_bands();
  const auto de = differential_entropy(noise(62, 200, 200.0, 3), bands);
  EXPECT_EQ(de.values.size(), 310);
  // Channel-major, band-minor: entry c * 5 + b.
  SignalEpoch e = noise(2, 400, 200.0, 4);
  e.samples.row(1).setZero();
  const auto d2 = differential_entropy(e, bands);
  for (int b = 0; b < 5; ++b) {
    EXPECT_FALSE(d2.degenerate[static_cast<std::size_t>(b)]);
    EXPECT_TRUE(d2.degenerate[static_cast<std::size_t>(5 + b)]);
    EXPECT_DOUBLE_EQ(d2.values[5 + b], gaussian_entropy(1e-24));
  }
}

TEST(Smoothing, MovingAverage) {
  Matrix s(4, 1);
  s << 1, 2, 3, 10;
  EXPECT_EQ(smooth_moving_average(s, 1), s);
  const Matrix m = smooth_moving_average(s, 3);
  EXPECT_DOUBLE_EQ(m(0, 0), 1.5);
  EXPECT_DOUBLE_EQ(m(1, 0), 2.0);
  EXPECT_DOUBLE_EQ(m(3, 0), 6.5);
  EXPECT_THROW(smooth_moving_average(s, 0), ConfigError);
}

TEST(Csp, TwoChannelToy) {
  const auto a = toy_trials(true, 20, 5);
  const auto b = toy_trials(false, 20, 6);
  const auto model = csp_fit(a, b, 2);
  ASSERT_EQ(model.filters.rows(), 2);
  EXPECT_TRUE(model.discriminative);
  const RowVector w = model.filters.row(0);
  double va = 0, vb = 0;
  for (const auto& t : a) va += variance((w * t.samples).transpose());
  for (const auto& t : b) vb += variance((w * t.samples).transpose());
  EXPECT_GT(va / vb, 10.0);
  EXPECT_GT(model.eigenvalues[0], model.eigenvalues[1]);
}

TEST(Csp, IdenticalClassesAreNonDiscriminative) {
  std::vector<SignalEpoch> a;
  for (int k = 0; k < 5; ++k) a.push_back(noise(4, 300, 100.0, 10 + static_cast<std::uint64_t>(k)));
  const auto model = csp_fit(a, a, 4);
  EXPECT_FALSE(model.discriminative);
  EXPECT_LT((model.eigenvalues.array() - 0.5).abs().maxCoeff(), 1e-9);
}

TEST(Csp, ShapeAndFeatureIdentities) {
  std::vector<SignalEpoch> a, b;
  for (int k = 0; k < 6; ++k) {
    a.push_back(noise(22, 250, 250.0, 100 + static_cast<std::uint64_t>(k)));
    SignalEpoch e = noise(22, 250, 250.0, 200 + static_cast<std::uint64_t>(k));
    e.samples.row(3) *= 4.0;
    b.push_back(std::move(e));
  }
  const auto model = csp_fit(a, b, 2);
  EXPECT_EQ(model.filters.rows(), 2);
  EXPECT_EQ(model.filters.cols(), 22);
  const Vector f = csp_features(a[0], model);
  EXPECT_NEAR(f.array().exp().sum(), 1.0, 1e-9);
  SignalEpoch louder = a[0];
  louder.samples *= 2.0;
  EXPECT_LT((csp_features(louder, model) - f).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(csp_features(SignalEpoch{Matrix::Zero(22, 250), 250.0}, model), DegenerateDataError);
  EXPECT_THROW(csp_features(noise(3, 50, 250.0, 1), model), ShapeError);
  EXPECT_THROW(csp_fit(a, b, 3), ConfigError);
  EXPECT_THROW(csp_fit({}, b, 2), EmptyInputError);
}

// Swapping the classes reverses each largest/smallest pair; with the sign
// convention the filters come back identical.
TEST(Csp, ClassSwapReversesComponentPairs) {
  std::vector<SignalEpoch> a, b;
  for (int k = 0; k < 8; ++k) {
    SignalEpoch ea = noise(6, 300, 100.0, 300 + static_cast<std::uint64_t>(k));
    ea.samples.row(0) *= 3.0;
    SignalEpoch eb = noise(6, 300, 100.0, 400 + static_cast<std::uint64_t>(k));
    eb.samples.row(4) *= 3.0;
    a.push_back(std::move(ea));
    b.push_back(std::move(eb));
  }
  for (int n : {2, 4, 6}) {
    const auto ab = csp_fit(a, b, n);
    const auto ba = csp_fit(b, a, n);
    for (int k = 0; k < n; k += 2) {
      for (int pair : {0, 1}) {
        const RowVector u = ab.filters.row(k + pair).normalized();
        const RowVector v = ba.filters.row(k + 1 - pair).normalized();
        EXPECT_NEAR(std::abs(u.dot(v)), 1.0, 1e-6) << "n=" << n << " k=" << k;
      }
      EXPECT_NEAR(ab.eigenvalues[k], 1.0 - ba.eigenvalues[k + 1], 1e-9);
    }
  }
}
