#pragma once

// Fit procedures for lifetime, Rabi, mixing and depolarization data.
// Rates in and out are rad/ns, times ns, temperatures K.

#include <functional>
#include <optional>
#include <vector>

#include "nvphonon/closedform.hpp"
#include "nvphonon/nlls.hpp"
#include "nvphonon/phonon.hpp"
#include "nvphonon/time_trace.hpp"

namespace nvp::estimate {

struct FitWindow {
  double start_ns = 4.0;
  double length_ns = 115.0;

  double end_ns() const { return start_ns + length_ns; }
  void validate() const;
};

/// Poisson for count traces, `provided` when the trace carries sigma,
/// uniform otherwise.
Weighting default_weighting(const TimeTrace& trace);

/// A exp(-rate t) on the window; parameters {amplitude, rate}. The initial
/// guess comes from a log-linear regression over the positive samples.
FitResult fit_exponential_window(const TimeTrace& trace, const FitWindow& window,
                                 std::optional<Weighting> weighting = std::nullopt, const NllsOptions& opt = {});

/// Lifetime fit followed by Gamma_i = rate - Gamma_rad.
struct IscPoint {
  double temperature_k = 0.0;
  double gamma_eff = 0.0;  // rad/ns, may be negative
  double sigma = 0.0;      // rad/ns
  closedform::Branch branch = closedform::Branch::a1;
};
IscPoint extract_isc_point(const TimeTrace& trace, const FitWindow& window, AngularRate gamma_rad,
                           closedform::Branch branch, double temperature_k);

struct RabiInit {
  std::optional<double> amp;
  std::optional<double> omega;  // rad/ns
  std::optional<double> phi;
  std::optional<double> t0_ns;
  std::optional<double> tau_rabi_ns;
  std::optional<double> gamma_isc_x;
};

struct RabiFitOptions {
  std::optional<FitWindow> window;
  RabiInit init;
  std::optional<Weighting> weighting;
  NllsOptions nlls;
};

/// Periodogram peak of the detrended trace (rad/ns), refined parabolically.
double estimate_rabi_frequency(const TimeTrace& trace);

/// Fits the damped-cosine Rabi model; parameters
/// {amp, omega, phi, t0, tau_rabi, gamma_isc_x}. Throws InvalidArgument when
/// a supplied omega is more than 50% away from the periodogram estimate or
/// the trace spans fewer than three periods.
FitResult fit_rabi_trace(const TimeTrace& trace, const RabiFitOptions& opt = {});

struct DerivedRate {
  AngularRate value;
  double sigma = 0.0;
};

/// Gamma_Add from a Rabi fit, with sigma propagated from tau_rabi.
DerivedRate additional_decoherence(const FitResult& rabi_fit, AngularRate gamma_rad);

struct T5Point {
  double temperature_k = 0.0;
  double gamma_add = 0.0;  // rad/ns
  double sigma = 0.0;      // rad/ns
};

/// Weighted fit of A (T - T0)^5 + C; parameters {a, t0, c}. Needs at least
/// four points spanning 10 K.
FitResult fit_t5(const std::vector<T5Point>& points, const NllsOptions& opt = {});
phonon::FitForm to_fit_form(const FitResult& t5_fit);

struct BandRow {
  double temperature_k;
  double value;
  double lo;
  double hi;
};
/// Linearized 95% band of the fitted curve.
std::vector<BandRow> t5_confidence_band(const FitResult& t5_fit, const std::vector<double>& temperatures_k);

struct DepolFitOptions {
  std::optional<Weighting> weighting;
  std::optional<double> amp_init;
  double t0_init_ns = 0.0;
  NllsOptions nlls;
};

struct DepolFit {
  FitResult fit;         // {amp, t0, eps}, eps in [0, 1/2]
  bool channels_swapped; // the data's x/y labels were found reversed
};

/// Joint fit of four traces labeled by metadata temperature (two values) and
/// channel ("x" or "y"). The lower temperature uses mix_low, the higher mix_high.
DepolFit fit_depolarization(const std::vector<TimeTrace>& traces, AngularRate mix_low, AngularRate mix_high,
                            AngularRate gamma_rad, const DepolFitOptions& opt = {});

using MixModel = std::function<AngularRate(TemperatureK)>;

/// One-parameter fit {gamma_a1} of measured effective ISC rates from both
/// branches against the windowed forward model.
FitResult fit_gamma_a1(const std::vector<IscPoint>& points, const MixModel& mix, AngularRate gamma_rad,
                       const phonon::EffectiveRateOptions& window = {}, const NllsOptions& opt = {});

struct Extremum {
  double time;
  double value;
  bool maximum;
};

/// Local extrema of a sampled oscillation, refined by a parabola through
/// each extremal sample and its neighbours.
std::vector<Extremum> find_extrema(const TimeTrace& trace);

struct EnvelopeDecay {
  double tau_ns = 0.0;
  std::vector<double> times;       // maxima times
  std::vector<double> amplitudes;  // (max - interpolated min) / 2
};

/// Decay time of the oscillation amplitude, from a log-linear fit.
EnvelopeDecay fit_envelope_decay(const TimeTrace& trace);

struct EnsembleStats {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
  double two_sigma = 0.0;
  std::size_t n = 0;
};
EnsembleStats ensemble_stats(const std::vector<double>& values);

}  // namespace nvp::estimate
