#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

// Transport classification on sampled series. Three distinct exponents are
// kept apart by name: alpha_time (Q ∝ t^-alpha_time), gamma_size
// (Q̄ ∝ N^-gamma_size) and alpha_freq (the frequency-model coefficient).
namespace xxz {

enum class DecayFamily { power_law, exponential };
enum class DecayPreference { power_law, exponential, indeterminate };

struct FitWindow {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const FitWindow&) const = default;
};

// Least-squares fit in log space: ln y = ln(amplitude) − exponent·ln x for
// the power law, ln y = ln(amplitude) − exponent·x for the exponential.
struct FitReport {
  DecayFamily family = DecayFamily::power_law;
  double amplitude = 0.0;
  double exponent = 0.0;
  double residual = 0.0;  // RMS of the log-space residuals
  FitWindow window;
  std::size_t n_points = 0;
  std::size_t n_dropped = 0;  // points at or below the floor
  bool flagged = false;       // more than 10% of the window dropped
  bool operator==(const FitReport&) const = default;
};

constexpr double kFitFloor = 1e-12;

FitReport fit_power_law(std::span<const double> x, std::span<const double> y, FitWindow window,
                        double floor = kFitFloor);
FitReport fit_exponential(std::span<const double> x, std::span<const double> y, FitWindow window,
                          double floor = kFitFloor);

struct DecayClassification {
  DecayPreference preferred = DecayPreference::indeterminate;
  FitReport power_law;
  FitReport exponential;
  bool operator==(const DecayClassification&) const = default;
};

DecayClassification classify_decay(std::span<const double> times, std::span<const double> values,
                                   FitWindow window, double tie_tolerance = 1e-6);

// Trapezoidal mean of the linearly interpolated series over [tau2, t_end].
double time_average(std::span<const double> times, std::span<const double> values, double tau2, double t_end);

struct Couplings {
  double u_bath = 0.0;
  double u_sys = 0.0;
};

// (1.5, 1.5) + s/√2 · (1, −1).
Couplings s_line(double s);

// Fit of time-averaged currents against system size over all points.
FitReport finite_size_fit(std::span<const double> sizes, std::span<const double> averages, DecayFamily family);

struct TransportExponent {
  double delta = 0.0;       // ΔZ ∝ t^delta
  double alpha_time = 0.0;  // 1 − delta
  FitReport fit;
};

TransportExponent transport_exponent_delta(std::span<const double> times, std::span<const double> delta_z,
                                           FitWindow window);

enum class SpectralWindow { hann, rectangular };

// One-sided magnitude spectrum of the mean-subtracted, windowed samples at
// or after window_start. Frequencies are ordinary (cycles per unit time).
// Magnitudes are scaled so that their squares sum to the energy of the
// windowed signal.
struct Spectrum {
  std::vector<double> frequencies;
  std::vector<double> magnitudes;
  double window_start = 0.0;
  double sample_spacing = 0.0;
  SpectralWindow window = SpectralWindow::hann;
};

Spectrum spectrum(std::span<const double> times, std::span<const double> values, double t_start,
                  SpectralWindow window = SpectralWindow::hann);

// Open frequency interval.
struct Band {
  double lo = 0.0;
  double hi = 0.0;
};

constexpr Band kLowBand{0.0, 0.3};
constexpr Band kMediumBand{0.3, 0.6};
constexpr Band kHighBand{1.2, 1.6};

struct Peak {
  double frequency = 0.0;
  double magnitude = 0.0;
  bool operator==(const Peak&) const = default;
};

struct PeakSet {
  std::optional<Peak> low;
  std::optional<Peak> medium;
  std::optional<Peak> high;
  bool operator==(const PeakSet&) const = default;
};

// Largest local maximum in each band, kept when it exceeds prominence times
// the median magnitude of the band.
PeakSet extract_peaks(const Spectrum& spec, double prominence = 3.0);

struct Frequencies {
  double low = 0.0;
  double medium = 0.0;
  double high = 0.0;
};

// ν_low = α max(U − J, 0), ν_med = α min(U, J), ν_high = α (2J + max(U − J, 0)).
Frequencies frequency_model(double u, double hopping, double alpha_freq);

struct PeakObservation {
  double u = 0.0;
  double hopping = 1.0;
  PeakSet peaks;
};

struct AlphaFit {
  double alpha_freq = 0.0;
  double residual = 0.0;  // RMS over all observed peaks
  std::size_t n_peaks = 0;
};

// One-parameter least squares of every observed peak against frequency_model.
AlphaFit fit_alpha(std::span<const PeakObservation> observations);

}  // namespace xxz
