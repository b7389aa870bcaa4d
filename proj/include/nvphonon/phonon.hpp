#pragma once

// Electron-phonon layer: two-phonon mixing law, its empirical fit form,
// golden-rule ISC rates through the vibrational overlap function, and the
// windowed effective ISC rates that a lifetime measurement reports.

#include <Eigen/Core>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "nvphonon/overlap_table.hpp"
#include "nvphonon/units.hpp"

namespace nvp::phonon {

/// Acoustic spectral density J(w) = eta w^3, optionally cut off at `cutoff`.
struct PhononCoupling {
  double eta = 0.0;                  // rad/ns per meV^3
  std::optional<EnergyMeV> cutoff;   // absent means no cutoff

  static PhononCoupling from_linear_mhz(double eta_mhz_per_mev3, std::optional<EnergyMeV> cutoff = std::nullopt);
  double eta_linear_mhz() const { return eta / kRadPerNsPerMhz; }
  /// Throws InvalidArgument for eta < 0 or a non-positive cutoff.
  void validate() const;
  /// min(delta, cutoff).
  double upper_limit(double delta_mev) const;
};

/// Spin-orbit couplings; lambda_perp = ratio * lambda_par.
struct SpinOrbit {
  AngularRate lambda_par = AngularRate::linear_ghz(5.33);
  double ratio = 1.2;
  double ratio_sigma = 0.2;

  AngularRate lambda_perp() const { return ratio * lambda_par; }
  void validate() const;
};

/// Empirical mixing fit A (T - T0)^5 + C with A in rad/ns/K^5 and C in rad/ns.
struct FitForm {
  double a = 0.0;
  double t0_k = 0.0;
  double c = 0.0;

  static FitForm from_linear_mhz(double a_mhz_per_k5, double t0_k, double c_mhz);
  /// The reference fit of the measured Ex-Ey mixing data.
  static FitForm reference();
};

namespace kernel {

template <typename Scalar>
Scalar fit_form(Scalar a, Scalar t0, Scalar c, Scalar t) {
  const Scalar d = t - t0;
  return a * d * d * d * d * d + c;
}

}  // namespace kernel

/// Gamma_Mix = (64/pi) hbar alpha eta^2 kB^5 T^5.
AngularRate mixing_rate_t5(const PhononCoupling& coupling, TemperatureK t, const Constants& k = kConstants);

/// Signed fit form, tagged fitted.
AngularRate mixing_rate_fitform(const FitForm& f, TemperatureK t);
/// max(fit form, 0) for use as a physical rate in forward models.
AngularRate mixing_rate_fitform_clamped(const FitForm& f, TemperatureK t);

/// A = (64/pi) hbar alpha eta^2 kB^5 and its inverse. Both reject inputs <= 0.
double coefficient_from_eta(double eta, const Constants& k = kConstants);
double eta_from_coefficient(double a, const Constants& k = kConstants);

/// J(w) in rad/ns; zero above the cutoff.
double spectral_density(const PhononCoupling& coupling, EnergyMeV omega);

/// Gamma_A1 = 4 pi hbar lambda_perp^2 F(delta); zero outside the table support.
AngularRate isc_rate_a1(const SpinOrbit& so, const OverlapTable& f, EnergyMeV delta,
                        const Constants& k = kConstants);

struct QuadratureOptions {
  double step_mev = 0.1;  // upper bound on the Simpson panel width
};

/// Integral_0^min(delta, cutoff) w F(delta - w) dw by composite Simpson.
double overlap_moment(const PhononCoupling& coupling, const OverlapTable& f, EnergyMeV delta,
                      const QuadratureOptions& q = {});

/// Gamma_E12 / Gamma_A1 = (2/pi) hbar eta moment / F(delta). Independent of the
/// spin-orbit coupling by construction. Throws ModelError when F(delta) = 0 and
/// delta > 0; delta = 0 gives 0.
double e12_to_a1_ratio(const PhononCoupling& coupling, const OverlapTable& f, EnergyMeV delta,
                       const Constants& k = kConstants, const QuadratureOptions& q = {});

/// Gamma_E12 = ratio * Gamma_A1.
AngularRate isc_rate_e12(const PhononCoupling& coupling, AngularRate gamma_a1, const OverlapTable& f,
                         EnergyMeV delta, const Constants& k = kConstants, const QuadratureOptions& q = {});

struct MeasuredRatio {
  double value = 0.0;
  double uncertainty = 0.0;  // lower bound is value - uncertainty
  double lower_bound() const { return value - uncertainty; }
};

struct RatioRow {
  double delta_mev;
  double f_per_mev;
  double ratio_bound;   // no cutoff: the upper bound on the ratio
  double ratio;         // with the coupling's cutoff (equal to the bound if none)
  bool excluded;        // bound below the measured lower bound
};

struct RatioScan {
  std::vector<RatioRow> rows;
  std::vector<std::pair<double, double>> excluded;  // contiguous excluded delta ranges
  bool bound_monotone = false;                      // bound nonincreasing or nondecreasing over the grid
  std::optional<double> lower_boundary_mev;         // top of an excluded range that starts at the first grid point
  bool synthetic = false;                           // computed from the synthetic overlap table
};

RatioScan ratio_scan(const PhononCoupling& coupling, const OverlapTable& f, const std::vector<double>& deltas_mev,
                     const std::optional<MeasuredRatio>& measured = std::nullopt, const Constants& k = kConstants,
                     const QuadratureOptions& q = {});

struct EffectiveRateOptions {
  double window_start_ns = 4.0;
  double window_length_ns = 115.0;
  double sample_step_ns = 0.25;
};

struct EffectiveRates {
  AngularRate a1;  // fitted
  AngularRate a2;  // fitted
};

/// Fits a single exponential to both branches of the coupled A1/A2
/// fluorescence over the window (expected-count weights 1/I) and subtracts
/// Gamma_rad. Assumes no ISC from A2.
EffectiveRates effective_isc_rates(AngularRate gamma_rad, AngularRate gamma_a1, AngularRate gamma_mix,
                                   const EffectiveRateOptions& opt = {});

/// Stored for reference only; no mixing term uses it.
inline constexpr double kDeltaXyGhz = 3.9;

}  // namespace nvp::phonon
