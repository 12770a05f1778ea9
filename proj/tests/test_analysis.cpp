#include <cmath>
#include <numbers>
#include <random>

#include "gtest/gtest.h"
#include "xxz/analysis.hpp"
#include "xxz/error.hpp"
#include "xxz/observables.hpp"

using namespace xxz;

namespace {

std::vector<double> grid(double t0, double t1, double h) {
  std::vector<double> t;
  const auto n = static_cast<int>(std::lround((t1 - t0) / h));
  for (int k = 0; k <= n; ++k) t.push_back(t0 + h * k);
  return t;
}

template <class F>
std::vector<double> sample(const std::vector<double>& t, F f) {
  std::vector<double> v;
  for (double x : t) v.push_back(f(x));
  return v;
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

bool has_local_max_near(const Spectrum& s, double f0) {
  const double bin = s.frequencies[1];
  for (std::size_t k = 1; k + 1 < s.frequencies.size(); ++k) {
    if (std::abs(s.frequencies[k] - f0) <= bin && s.magnitudes[k] > s.magnitudes[k - 1] &&
        s.magnitudes[k] >= s.magnitudes[k + 1]) {
      return true;
    }
  }
  return false;
}

}  // namespace

TEST(TimeAverage, ConstantSeries) {
  const auto t = grid(0.0, 5.0, 0.1);
  EXPECT_NEAR(time_average(t, sample(t, [](double) { return 1.7; }), 1.0, 4.0), 1.7, 1e-14);
}

TEST(TimeAverage, SinusoidOverWholePeriods) {
  const auto t = grid(0.0, 10.0, 0.01);
  const double avg = time_average(t, sample(t, [](double x) { return std::sin(2.0 * std::numbers::pi * x); }), 2.0, 7.0);
  EXPECT_NEAR(avg, 0.0, 1e-10);
}

TEST(TimeAverage, LinearSeriesIsExactForAnyWindow) {
  const auto t = grid(0.0, 3.0, 0.3);
  EXPECT_NEAR(time_average(t, sample(t, [](double x) { return 2.0 - 0.5 * x; }), 0.45, 2.71), 2.0 - 0.25 * 3.16,
              1e-13);
}

TEST(TimeAverage, LeadWindowMatchesClosedForm) {
  // Window [0.15, 0.45]·N_B for N_B = 24.
  const double nb = 24.0;
  const double a = 0.15 * nb;
  const double b = 0.45 * nb;
  const auto t = grid(0.0, 12.0, 0.01);
  const auto q = sample(t, [](double x) { return 0.4 + 0.3 * std::exp(-0.2 * x) * std::cos(1.3 * x); });
  // ∫ e^{-ct} cos(wt) dt = e^{-ct}(w sin wt − c cos wt)/(c² + w²).
  const auto prim = [](double x) {
    return 0.4 * x + 0.3 * std::exp(-0.2 * x) * (1.3 * std::sin(1.3 * x) - 0.2 * std::cos(1.3 * x)) / (0.04 + 1.69);
  };
  EXPECT_NEAR(time_average(t, q, a, b), (prim(b) - prim(a)) / (b - a), 2e-6);
}

TEST(TimeAverage, Errors) {
  const auto t = grid(0.0, 1.0, 0.1);
  const auto q = sample(t, [](double) { return 1.0; });
  EXPECT_THROW(time_average(t, q, 0.5, 0.5), InvalidInput);
  EXPECT_THROW(time_average(t, q, 0.5, 1.5), InvalidInput);
  EXPECT_THROW(time_average(t, std::vector<double>{1.0}, 0.0, 1.0), InvalidInput);
}

TEST(Fits, PowerLawRecovery) {
  const auto t = grid(1.0, 10.0, 0.1);
  const FitReport r = fit_power_law(t, sample(t, [](double x) { return 2.0 * std::pow(x, -0.5); }), {1.0, 10.0});
  EXPECT_EQ(r.family, DecayFamily::power_law);
  EXPECT_NEAR(r.amplitude, 2.0, 1e-10);
  EXPECT_NEAR(r.exponent, 0.5, 1e-10);
  EXPECT_LT(r.residual, 1e-12);
  EXPECT_EQ(r.n_points, t.size());
  EXPECT_FALSE(r.flagged);
}

TEST(Fits, ExponentialRecovery) {
  const auto t = grid(0.0, 10.0, 0.1);
  const FitReport r = fit_exponential(t, sample(t, [](double x) { return 3.0 * std::exp(-0.7 * x); }), {0.0, 10.0});
  EXPECT_EQ(r.family, DecayFamily::exponential);
  EXPECT_NEAR(r.amplitude, 3.0, 1e-10);
  EXPECT_NEAR(r.exponent, 0.7, 1e-10);
  EXPECT_LT(r.residual, 1e-12);
}

TEST(Fits, WindowSelectsPoints) {
  const auto t = grid(0.0, 10.0, 0.5);
  const auto q = sample(t, [](double x) { return x < 4.0 ? 100.0 : 5.0 * std::pow(x, -1.2); });
  const FitReport r = fit_power_law(t, q, {4.0, 10.0});
  EXPECT_NEAR(r.exponent, 1.2, 1e-10);
  EXPECT_EQ(r.n_points, 13u);
  EXPECT_EQ(r.window.lo, 4.0);
  EXPECT_EQ(r.window.hi, 10.0);
}

TEST(Fits, NoisyPowerLawPrefersPowerLaw) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> noise(0.0, 0.01);
  const auto t = grid(1.0, 10.0, 0.1);
  const auto q = sample(t, [&](double x) { return 2.0 * std::pow(x, -0.5) * (1.0 + noise(rng)); });
  EXPECT_LT(fit_power_law(t, q, {1.0, 10.0}).residual, fit_exponential(t, q, {1.0, 10.0}).residual);
}

TEST(Fits, ClipAndFlag) {
  const auto t = grid(1.0, 10.0, 1.0);
  std::vector<double> q = sample(t, [](double x) { return std::pow(x, -1.0); });
  q[3] = -0.2;
  FitReport r = fit_power_law(t, q, {1.0, 10.0});
  EXPECT_EQ(r.n_dropped, 1u);
  EXPECT_FALSE(r.flagged);
  EXPECT_NEAR(r.exponent, 1.0, 1e-10);
  q[5] = 0.0;
  r = fit_power_law(t, q, {1.0, 10.0});
  EXPECT_EQ(r.n_dropped, 2u);
  EXPECT_TRUE(r.flagged);
  EXPECT_NEAR(r.exponent, 1.0, 1e-10);
  std::vector<double> bad(t.size(), -1.0);
  bad[0] = 1.0;
  EXPECT_THROW(fit_power_law(t, bad, {1.0, 10.0}), InvalidInput);
}

TEST(Fits, Errors) {
  const auto t = grid(0.0, 5.0, 0.5);
  const auto q = sample(t, [](double x) { return std::exp(-x); });
  EXPECT_THROW(fit_exponential(t, q, {-1.0, 4.0}), InvalidInput);
  EXPECT_THROW(fit_exponential(t, q, {1.0, 6.0}), InvalidInput);
  EXPECT_THROW(fit_exponential(t, q, {3.0, 2.0}), InvalidInput);
  EXPECT_THROW(fit_power_law(t, q, {0.0, 4.0}), InvalidInput);
}

TEST(Classify, SyntheticFamilies) {
  const auto t = grid(1.0, 10.0, 0.1);
  const auto pl = sample(t, [](double x) { return 2.0 * std::pow(x, -0.8); });
  const auto ex = sample(t, [](double x) { return 2.0 * std::exp(-0.3 * x); });
  EXPECT_EQ(classify_decay(t, pl, {1.0, 10.0}).preferred, DecayPreference::power_law);
  EXPECT_EQ(classify_decay(t, ex, {1.0, 10.0}).preferred, DecayPreference::exponential);
  const DecayClassification c = classify_decay(t, ex, {1.0, 10.0});
  EXPECT_NEAR(c.exponential.exponent, 0.3, 1e-10);
  EXPECT_GT(c.power_law.residual, 0.0);
}

TEST(Classify, TwoPointsAreATie) {
  const std::vector<double> t{1.0, 2.0};
  const std::vector<double> q{1.0, 0.5};
  EXPECT_EQ(classify_decay(t, q, {1.0, 2.0}).preferred, DecayPreference::indeterminate);
}

TEST(Classify, ModelSelectionIsReliableUnderNoise) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> amp(0.5, 3.0);
  std::uniform_real_distribution<double> alpha(0.3, 1.5);
  std::uniform_real_distribution<double> beta(0.1, 0.6);
  std::uniform_real_distribution<double> noise(-0.05, 0.05);
  const auto t = grid(2.4, 10.8, 0.2);
  int right_pl = 0;
  int right_ex = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const double a = amp(rng);
    const double p = alpha(rng);
    const double b = beta(rng);
    const auto pl = sample(t, [&](double x) { return a * std::pow(x, -p) * (1.0 + noise(rng)); });
    const auto ex = sample(t, [&](double x) { return a * std::exp(-b * x) * (1.0 + noise(rng)); });
    right_pl += classify_decay(t, pl, {2.4, 10.8}).preferred == DecayPreference::power_law;
    right_ex += classify_decay(t, ex, {2.4, 10.8}).preferred == DecayPreference::exponential;
  }
  EXPECT_GE(right_pl, 190);
  EXPECT_GE(right_ex, 190);
}

TEST(SLine, Parametrization) {
  const Couplings c0 = s_line(0.0);
  EXPECT_EQ(c0.u_bath, 1.5);
  EXPECT_EQ(c0.u_sys, 1.5);
  const Couplings cp = s_line(0.3);
  EXPECT_NEAR(cp.u_bath, 1.7121, 1e-4);
  EXPECT_NEAR(cp.u_sys, 1.2879, 1e-4);
  EXPECT_NEAR(cp.u_bath, 1.5 + 0.3 / std::sqrt(2.0), 1e-15);
  const Couplings cm = s_line(-0.3);
  EXPECT_NEAR(cm.u_bath, cp.u_sys, 1e-15);
  EXPECT_NEAR(cm.u_sys, cp.u_bath, 1e-15);
}

TEST(FiniteSize, Fits) {
  const std::vector<double> n{8, 12, 16, 20, 24};
  const std::vector<double> flat(5, 0.7);
  EXPECT_NEAR(finite_size_fit(n, flat, DecayFamily::power_law).exponent, 0.0, 1e-12);
  const auto inv = sample(n, [](double x) { return 3.0 / x; });
  const FitReport r = finite_size_fit(n, inv, DecayFamily::power_law);
  EXPECT_NEAR(r.exponent, 1.0, 1e-10);
  EXPECT_EQ(r.window.lo, 8.0);
  EXPECT_EQ(r.window.hi, 24.0);
  const auto ex = sample(n, [](double x) { return 2.0 * std::exp(-0.15 * x); });
  EXPECT_NEAR(finite_size_fit(n, ex, DecayFamily::exponential).exponent, 0.15, 1e-10);
}

TEST(TransportExponent, KnownScalings) {
  const auto t = grid(0.5, 20.0, 0.1);
  EXPECT_NEAR(transport_exponent_delta(t, sample(t, [](double x) { return 0.8 * x; }), {1.0, 20.0}).delta, 1.0,
              1e-10);
  const TransportExponent d = transport_exponent_delta(t, sample(t, [](double x) { return std::sqrt(x); }), {1.0, 20.0});
  EXPECT_NEAR(d.delta, 0.5, 1e-10);
  EXPECT_NEAR(d.alpha_time, 0.5, 1e-10);
}

TEST(TransportExponent, IntegratedPowerLawCurrent) {
  // ∫_0^t s^-0.3 ds = t^0.7 / 0.7, so delta = 0.7.
  const auto t = grid(0.0, 50.0, 0.01);
  const auto exact = sample(t, [](double x) { return std::pow(x, 0.7) / 0.7; });
  EXPECT_NEAR(transport_exponent_delta(t, exact, {5.0, 50.0}).delta, 0.7, 1e-10);
  std::vector<double> tt(t.begin() + 1, t.end());
  const auto q = sample(tt, [](double x) { return std::pow(x, -0.3); });
  const auto dz = transferred_magnetization(tt, q);
  const TransportExponent d = transport_exponent_delta(std::vector<double>(tt.begin() + 1, tt.end()),
                                                       std::vector<double>(dz.begin() + 1, dz.end()), {5.0, 50.0});
  EXPECT_NEAR(d.delta, 0.7, 0.01);
  EXPECT_NEAR(d.alpha_time, 0.3, 0.01);
}

TEST(TransportExponent, InverseSquareRootCurrentIsDiffusive) {
  const auto t = grid(0.01, 100.0, 0.01);
  const auto q = sample(t, [](double x) { return 1.0 / std::sqrt(x); });
  const auto dz = transferred_magnetization(t, q);
  EXPECT_EQ(dz.front(), 0.0);
  EXPECT_NEAR(transport_exponent_delta(t, dz, {1.0, 100.0}).delta, 0.5, 0.02);
}

TEST(SpectrumTest, SinusoidPeakWithinOneBin) {
  const auto t = grid(0.0, 60.0, 0.1);
  const Spectrum s = spectrum(t, sample(t, [](double x) { return std::sin(2.0 * std::numbers::pi * 0.4 * x); }), 10.0);
  const double bin = s.frequencies[1] - s.frequencies[0];
  EXPECT_NEAR(bin, 1.0 / (501 * 0.1), 1e-12);
  EXPECT_LE(std::abs(s.frequencies[argmax(s.magnitudes)] - 0.4), bin);
  EXPECT_EQ(s.window_start, 10.0);
  EXPECT_NEAR(s.sample_spacing, 0.1, 1e-12);
  for (std::size_t k = 1; k < s.frequencies.size(); ++k) EXPECT_NEAR(s.frequencies[k] - s.frequencies[k - 1], bin, 1e-12);
}

TEST(SpectrumTest, ConstantSeriesIsZero) {
  const auto t = grid(0.0, 30.0, 0.2);
  const Spectrum s = spectrum(t, sample(t, [](double) { return 0.37; }), 10.0);
  for (double m : s.magnitudes) EXPECT_LT(m, 1e-12);
}

TEST(SpectrumTest, Parseval) {
  for (SpectralWindow w : {SpectralWindow::hann, SpectralWindow::rectangular}) {
    for (double t_end : {40.0, 40.1}) {
      const auto t = grid(0.0, t_end, 0.1);
      const auto q = sample(t, [](double x) { return std::cos(0.9 * x) + 0.3 * std::sin(5.1 * x) + 0.01 * x; });
      const Spectrum s = spectrum(t, q, 10.0, w);
      std::vector<double> seg;
      for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] >= 10.0 - 1e-9) seg.push_back(q[k]);
      }
      double mean = 0.0;
      for (double v : seg) mean += v;
      mean /= static_cast<double>(seg.size());
      double energy = 0.0;
      for (std::size_t k = 0; k < seg.size(); ++k) {
        const double win =
            w == SpectralWindow::hann
                ? 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(seg.size() - 1)))
                : 1.0;
        energy += std::pow(win * (seg[k] - mean), 2);
      }
      double sum = 0.0;
      for (double m : s.magnitudes) sum += m * m;
      EXPECT_NEAR(sum / energy, 1.0, 1e-10);
    }
  }
}

TEST(SpectrumTest, Errors) {
  EXPECT_THROW(spectrum(std::vector<double>{0, 1, 2, 4, 5}, std::vector<double>{1, 2, 3, 4, 5}, 0.0), InvalidInput);
  const auto t = grid(0.0, 1.0, 0.1);
  EXPECT_THROW(spectrum(t, sample(t, [](double) { return 1.0; }), 0.85), InvalidInput);
}

TEST(Peaks, ThreeSinusoidsResolved) {
  const auto t = grid(0.0, 110.0, 0.1);
  const auto q = sample(t, [](double x) {
    const double w = 2.0 * std::numbers::pi;
    return std::sin(w * 0.19 * x) + 0.7 * std::sin(w * 0.63 * x) + 0.5 * std::sin(w * 1.45 * x);
  });
  const Spectrum s = spectrum(t, q, 10.0);
  const double bin = s.frequencies[1];
  for (double f : {0.19, 0.63, 1.45}) EXPECT_TRUE(has_local_max_near(s, f)) << f;
  const PeakSet p = extract_peaks(s);
  ASSERT_TRUE(p.low.has_value());
  ASSERT_TRUE(p.high.has_value());
  EXPECT_NEAR(p.low->frequency, 0.19, bin);
  EXPECT_NEAR(p.high->frequency, 1.45, bin);
  // 0.63 lies above the (0.3, 0.6) band; its leakage tail is not a peak.
  EXPECT_FALSE(p.medium.has_value());
}

TEST(Peaks, OnePerBand) {
  const auto t = grid(0.0, 110.0, 0.1);
  const auto q = sample(t, [](double x) {
    const double w = 2.0 * std::numbers::pi;
    return std::sin(w * 0.19 * x) + 0.7 * std::sin(w * 0.45 * x) + 0.5 * std::sin(w * 1.45 * x);
  });
  const PeakSet p = extract_peaks(spectrum(t, q, 10.0));
  ASSERT_TRUE(p.low && p.medium && p.high);
  EXPECT_NEAR(p.medium->frequency, 0.45, 0.01);
  EXPECT_GT(p.low->magnitude, p.medium->magnitude);
  EXPECT_GT(p.medium->magnitude, p.high->magnitude);
}

TEST(Peaks, MissingComponentNotReported) {
  const auto t = grid(0.0, 110.0, 0.1);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 0.01);
  const auto q = sample(t, [&](double x) {
    const double w = 2.0 * std::numbers::pi;
    return 0.7 * std::sin(w * 0.45 * x) + 0.5 * std::sin(w * 1.45 * x) + noise(rng);
  });
  const PeakSet p = extract_peaks(spectrum(t, q, 10.0));
  EXPECT_FALSE(p.low.has_value());
  EXPECT_TRUE(p.medium.has_value());
  EXPECT_TRUE(p.high.has_value());
  EXPECT_THROW(extract_peaks(spectrum(t, q, 10.0), 0.0), InvalidInput);
}

TEST(FrequencyModel, Examples) {
  const Frequencies a = frequency_model(0.5, 1.0, 0.63);
  EXPECT_EQ(a.low, 0.0);
  EXPECT_NEAR(a.medium, 0.315, 1e-15);
  EXPECT_NEAR(a.high, 1.26, 1e-15);
  EXPECT_EQ(frequency_model(1.0, 1.0, 0.63).low, 0.0);
  const Frequencies c = frequency_model(1.3, 1.0, 0.63);
  EXPECT_NEAR(c.low, 0.189, 1e-15);
  EXPECT_NEAR(c.medium, 0.63, 1e-15);
  EXPECT_NEAR(c.high, 1.449, 1e-15);
}

TEST(FrequencyModel, ContinuousAtHeisenbergPoint) {
  const Frequencies below = frequency_model(1.0 - 1e-9, 1.0, 0.63);
  const Frequencies at = frequency_model(1.0, 1.0, 0.63);
  const Frequencies above = frequency_model(1.0 + 1e-9, 1.0, 0.63);
  for (const Frequencies* f : {&below, &above}) {
    EXPECT_NEAR(f->low, at.low, 1e-8);
    EXPECT_NEAR(f->medium, at.medium, 1e-8);
    EXPECT_NEAR(f->high, at.high, 1e-8);
  }
}

TEST(FitAlpha, ExactRecovery) {
  std::vector<PeakObservation> obs;
  for (double u : {0.5, 0.7, 0.9, 1.3, 1.5}) {
    const Frequencies f = frequency_model(u, 1.0, 0.63);
    PeakObservation o{u, 1.0, {}};
    if (f.low > 0) o.peaks.low = Peak{f.low, 1.0};
    o.peaks.medium = Peak{f.medium, 1.0};
    o.peaks.high = Peak{f.high, 1.0};
    obs.push_back(o);
  }
  const AlphaFit fit = fit_alpha(obs);
  EXPECT_NEAR(fit.alpha_freq, 0.63, 1e-10);
  EXPECT_LT(fit.residual, 1e-12);
  EXPECT_EQ(fit.n_peaks, 12u);
}

TEST(FitAlpha, NoisyRecovery) {
  std::mt19937_64 rng(63);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<PeakObservation> obs;
  for (double u : {0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5}) {
    const Frequencies f = frequency_model(u, 1.0, 0.63);
    PeakObservation o{u, 1.0, {}};
    if (f.low > 0) o.peaks.low = Peak{f.low * (1.0 + noise(rng)), 1.0};
    o.peaks.medium = Peak{f.medium * (1.0 + noise(rng)), 1.0};
    o.peaks.high = Peak{f.high * (1.0 + noise(rng)), 1.0};
    obs.push_back(o);
  }
  EXPECT_NEAR(fit_alpha(obs).alpha_freq, 0.63, 0.05);
}

TEST(FitAlpha, NeedsInformativePeaks) {
  EXPECT_THROW(fit_alpha(std::vector<PeakObservation>{}), InvalidInput);
  PeakObservation o{0.5, 1.0, {}};
  o.peaks.low = Peak{0.1, 1.0};
  EXPECT_THROW(fit_alpha(std::vector<PeakObservation>{o}), InvalidInput);
}
