#include "xxz/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "xxz/error.hpp"

namespace xxz {

namespace {

void check_series(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidInput("series lengths differ");
  if (x.size() < 2) throw InvalidInput("series needs at least two samples");
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!std::isfinite(x[k]) || !std::isfinite(y[k])) throw InvalidInput("series contains non-finite values");
    if (k > 0 && !(x[k] > x[k - 1])) throw InvalidInput("abscissae must be strictly increasing");
  }
}

double slack(double a, double b) { return 1e-9 * std::max({1.0, std::abs(a), std::abs(b)}); }

FitReport fit_log(std::span<const double> x, std::span<const double> y, FitWindow window, double floor,
                  DecayFamily family) {
  check_series(x, y);
  if (!(window.lo < window.hi)) throw InvalidInput("fit window must have lo < hi");
  const double eps = slack(window.lo, window.hi);
  if (window.lo < x.front() - eps || window.hi > x.back() + eps) {
    throw InvalidInput("fit window outside the data range");
  }
  if (!(floor >= 0.0)) throw InvalidInput("floor must be non-negative");

  FitReport report;
  report.family = family;
  report.window = window;
  std::vector<double> u;
  std::vector<double> v;
  std::size_t in_window = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k] < window.lo - eps || x[k] > window.hi + eps) continue;
    ++in_window;
    if (y[k] <= floor) {
      ++report.n_dropped;
      continue;
    }
    if (family == DecayFamily::power_law) {
      if (!(x[k] > 0.0)) throw InvalidInput("power-law fit needs positive abscissae");
      u.push_back(std::log(x[k]));
    } else {
      u.push_back(x[k]);
    }
    v.push_back(std::log(y[k]));
  }
  report.n_points = u.size();
  report.flagged = 10 * report.n_dropped > in_window;
  if (u.size() < 2) throw InvalidInput("fewer than two usable points in the fit window");

  const auto n = static_cast<double>(u.size());
  double mu = 0.0;
  double mv = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    mu += u[k];
    mv += v[k];
  }
  mu /= n;
  mv /= n;
  double suu = 0.0;
  double suv = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    suu += (u[k] - mu) * (u[k] - mu);
    suv += (u[k] - mu) * (v[k] - mv);
  }
  if (!(suu > 0.0)) throw InvalidInput("fit abscissae are degenerate");
  const double slope = suv / suu;
  const double intercept = mv - slope * mu;
  double ss = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double r = v[k] - (intercept + slope * u[k]);
    ss += r * r;
  }
  report.amplitude = std::exp(intercept);
  report.exponent = -slope;
  report.residual = std::sqrt(ss / n);
  return report;
}

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

std::optional<Peak> band_peak(const Spectrum& spec, Band band, double prominence) {
  const auto& f = spec.frequencies;
  const auto& m = spec.magnitudes;
  std::vector<double> in_band;
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (!(f[k] > band.lo && f[k] < band.hi)) continue;
    in_band.push_back(m[k]);
    const bool left_ok = k == 0 || m[k] > m[k - 1];
    const bool right_ok = k + 1 == f.size() || m[k] >= m[k + 1];
    if (left_ok && right_ok && (!best || m[k] > m[*best])) best = k;
  }
  if (!best || in_band.empty()) return std::nullopt;
  if (!(m[*best] > prominence * median(in_band))) return std::nullopt;
  return Peak{f[*best], m[*best]};
}

}  // namespace

FitReport fit_power_law(std::span<const double> x, std::span<const double> y, FitWindow window, double floor) {
  return fit_log(x, y, window, floor, DecayFamily::power_law);
}

FitReport fit_exponential(std::span<const double> x, std::span<const double> y, FitWindow window, double floor) {
  return fit_log(x, y, window, floor, DecayFamily::exponential);
}

DecayClassification classify_decay(std::span<const double> times, std::span<const double> values,
                                   FitWindow window, double tie_tolerance) {
  DecayClassification c;
  c.power_law = fit_power_law(times, values, window);
  c.exponential = fit_exponential(times, values, window);
  const double diff = c.power_law.residual - c.exponential.residual;
  if (std::abs(diff) <= tie_tolerance) {
    c.preferred = DecayPreference::indeterminate;
  } else {
    c.preferred = diff < 0.0 ? DecayPreference::power_law : DecayPreference::exponential;
  }
  return c;
}

double time_average(std::span<const double> times, std::span<const double> values, double tau2, double t_end) {
  check_series(times, values);
  if (!(tau2 < t_end)) throw InvalidInput("averaging window must have tau2 < T");
  const double eps = slack(tau2, t_end);
  if (tau2 < times.front() - eps || t_end > times.back() + eps) {
    throw InvalidInput("averaging window outside the data range");
  }
  const double a = std::max(tau2, times.front());
  const double b = std::min(t_end, times.back());
  double area = 0.0;
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    const double lo = std::max(a, times[k]);
    const double hi = std::min(b, times[k + 1]);
    if (!(hi > lo)) continue;
    const double slope = (values[k + 1] - values[k]) / (times[k + 1] - times[k]);
    const double f_lo = values[k] + slope * (lo - times[k]);
    const double f_hi = values[k] + slope * (hi - times[k]);
    area += 0.5 * (f_lo + f_hi) * (hi - lo);
  }
  return area / (b - a);
}

Couplings s_line(double s) {
  const double d = s / std::numbers::sqrt2;
  return {1.5 + d, 1.5 - d};
}

FitReport finite_size_fit(std::span<const double> sizes, std::span<const double> averages, DecayFamily family) {
  check_series(sizes, averages);
  return fit_log(sizes, averages, {sizes.front(), sizes.back()}, kFitFloor, family);
}

TransportExponent transport_exponent_delta(std::span<const double> times, std::span<const double> delta_z,
                                           FitWindow window) {
  TransportExponent out;
  out.fit = fit_power_law(times, delta_z, window);
  out.delta = -out.fit.exponent;
  out.alpha_time = 1.0 - out.delta;
  return out;
}

Spectrum spectrum(std::span<const double> times, std::span<const double> values, double t_start,
                  SpectralWindow window) {
  check_series(times, values);
  const auto first = static_cast<std::size_t>(
      std::lower_bound(times.begin(), times.end(), t_start - slack(t_start, 0.0)) - times.begin());
  const std::size_t n = times.size() - first;
  if (n < 4) throw InvalidInput("spectrum needs at least four samples after t_start");
  const double h = (times.back() - times[first]) / static_cast<double>(n - 1);
  for (std::size_t k = first + 1; k < times.size(); ++k) {
    if (std::abs((times[k] - times[k - 1]) - h) > 1e-6 * h) throw InvalidInput("spectrum needs uniform sampling");
  }

  double mean = 0.0;
  for (std::size_t k = first; k < times.size(); ++k) mean += values[k];
  mean /= static_cast<double>(n);
  std::vector<std::complex<double>> in(n);
  for (std::size_t k = 0; k < n; ++k) {
    double w = 1.0;
    if (window == SpectralWindow::hann) {
      w = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n - 1)));
    }
    in[k] = w * (values[first + k] - mean);
  }
  std::vector<std::complex<double>> out;
  Eigen::FFT<double> fft;
  fft.fwd(out, in);

  Spectrum s;
  s.window_start = t_start;
  s.sample_spacing = h;
  s.window = window;
  const std::size_t half = n / 2;
  for (std::size_t k = 0; k <= half; ++k) {
    const bool single = k == 0 || (n % 2 == 0 && k == half);
    s.frequencies.push_back(static_cast<double>(k) / (static_cast<double>(n) * h));
    s.magnitudes.push_back(std::abs(out[k]) * std::sqrt((single ? 1.0 : 2.0) / static_cast<double>(n)));
  }
  return s;
}

PeakSet extract_peaks(const Spectrum& spec, double prominence) {
  if (spec.frequencies.size() != spec.magnitudes.size()) throw InvalidInput("malformed spectrum");
  if (!(prominence > 0.0)) throw InvalidInput("prominence must be positive");
  return {band_peak(spec, kLowBand, prominence), band_peak(spec, kMediumBand, prominence),
          band_peak(spec, kHighBand, prominence)};
}

Frequencies frequency_model(double u, double hopping, double alpha_freq) {
  const double excess = std::max(u - hopping, 0.0);
  return {alpha_freq * excess, alpha_freq * std::min(u, hopping), alpha_freq * (2.0 * hopping + excess)};
}

AlphaFit fit_alpha(std::span<const PeakObservation> observations) {
  std::vector<std::pair<double, double>> pairs;  // (model coefficient, observed frequency)
  for (const PeakObservation& o : observations) {
    const Frequencies unit = frequency_model(o.u, o.hopping, 1.0);
    if (o.peaks.low) pairs.emplace_back(unit.low, o.peaks.low->frequency);
    if (o.peaks.medium) pairs.emplace_back(unit.medium, o.peaks.medium->frequency);
    if (o.peaks.high) pairs.emplace_back(unit.high, o.peaks.high->frequency);
  }
  double smm = 0.0;
  double smv = 0.0;
  for (const auto& [m, v] : pairs) {
    smm += m * m;
    smv += m * v;
  }
  if (!(smm > 0.0)) throw InvalidInput("no peaks with a non-zero model frequency");
  AlphaFit fit;
  fit.alpha_freq = smv / smm;
  fit.n_peaks = pairs.size();
  double ss = 0.0;
  for (const auto& [m, v] : pairs) ss += (v - fit.alpha_freq * m) * (v - fit.alpha_freq * m);
  fit.residual = std::sqrt(ss / static_cast<double>(pairs.size()));
  return fit;
}

}  // namespace xxz
