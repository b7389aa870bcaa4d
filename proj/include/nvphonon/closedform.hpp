#pragma once

// Analytic envelopes, rate-equation solutions and rate relations.
//
// `kernel` holds unchecked templates on the scalar type (raw rad/ns and ns
// arguments), usable inside fit models and with Eigen arrays. The functions
// in `closedform` validate their inputs and speak in strong types.

#include <Eigen/Core>
#include <cmath>
#include <utility>

#include "nvphonon/units.hpp"

namespace nvp::closedform {

enum class Branch { a1, a2 };

namespace kernel {

/// sinh(x)/x, with its Taylor series below |x| = 1e-6.
template <typename Scalar>
Scalar sinhc(Scalar x) {
  using std::abs;
  using std::sinh;
  if (abs(x) < Scalar(1e-6)) return Scalar(1) + x * x / Scalar(6);
  return sinh(x) / x;
}

template <typename Scalar>
Scalar depol_bright(Scalar rad, Scalar mix, Scalar t) {
  using std::exp;
  return Scalar(0.5) * exp(-rad * t) * (Scalar(1) + exp(Scalar(-2) * mix * t));
}

template <typename Scalar>
Scalar depol_dark(Scalar rad, Scalar mix, Scalar t) {
  using std::exp;
  using std::expm1;
  return Scalar(-0.5) * exp(-rad * t) * expm1(Scalar(-2) * mix * t);
}

/// Total fluorescence after excitation into A1 (a1 = true) or A2.
/// Beyond small Gamma' t the two exponentials are weighted by Gamma' -/+ c,
/// written without cancellation.
template <typename Scalar>
Scalar fluorescence_a12(Scalar rad, Scalar mix, Scalar isc, bool a1, Scalar t) {
  using std::exp;
  using std::sqrt;
  const Scalar gp = sqrt(isc * isc + Scalar(4) * mix * mix);
  const Scalar x = Scalar(0.5) * gp * t;
  const Scalar k = (rad + mix + Scalar(0.5) * isc) * t;
  const Scalar c = Scalar(2) * mix + (a1 ? -isc : isc);
  // c/Gamma' sinh(x) = c (t/2) sinhc(x)
  if (x < Scalar(0.5)) {
    using std::cosh;
    return exp(-k) * (c * Scalar(0.5) * t * sinhc(x) + cosh(x));
  }
  const Scalar q = Scalar(2) * mix + Scalar(4) * mix * mix / (gp + isc);  // Gamma' - Gamma_isc + 2 Gamma_mix
  const Scalar r = isc * isc / (gp + Scalar(2) * mix);                     // Gamma' - 2 Gamma_mix
  const Scalar plus = a1 ? q : gp + c;
  const Scalar minus = a1 ? r + isc : -isc * q / (gp + Scalar(2) * mix);
  return (plus * exp(x - k) + minus * exp(-x - k)) / (Scalar(2) * gp);
}

template <typename Scalar>
Scalar isc_envelope_ex(Scalar tau_rabi, Scalar isc_x, Scalar t) {
  using std::exp;
  return Scalar(0.5) * (exp(-t / tau_rabi) + Scalar(1)) * exp(Scalar(-0.5) * isc_x * t);
}

template <typename Scalar>
Scalar rabi_fit_model(Scalar amp, Scalar omega, Scalar phi, Scalar t0, Scalar tau_rabi, Scalar isc_x,
                      Scalar t) {
  using std::cos;
  using std::exp;
  return amp * (cos(omega * t - phi) * exp(-(t - t0) / tau_rabi) + Scalar(1)) *
         exp(Scalar(-0.5) * isc_x * t);
}

/// Polarization-filtered intensity of the bright (x) or dark (y) channel.
template <typename Scalar>
Scalar polarized_intensity(Scalar amp, Scalar eps, Scalar t0, Scalar rad, Scalar mix, bool bright,
                           Scalar t) {
  const Scalar s = t - t0;
  const Scalar b = depol_bright(rad, mix, s), d = depol_dark(rad, mix, s);
  return bright ? amp * ((Scalar(1) - eps) * b + eps * d) : amp * ((Scalar(1) - eps) * d + eps * b);
}

}  // namespace kernel

/// Rates entering the mixing-resolved Rabi envelope.
struct EnvelopeParams {
  AngularRate gamma_rad_x;
  AngularRate gamma_rad_y;
  AngularRate gamma_mix_xy;
  AngularRate gamma_mix_yx;
  AngularRate gamma_t2;

  /// Throws InvalidArgument on negative rates.
  void validate() const;
  /// 1/tau_Rabi = 3/4 Gamma_rad_x + 1/2 (Gamma_mix_xy + Gamma_t2)
  double inverse_tau_rabi() const;
  /// 1/tau_2 = 1/2 (2 Gamma_rad_y + Gamma_mix_xy + 2 Gamma_mix_yx)
  double inverse_tau_2() const;
  /// Envelope coefficients; throw ModelError when the shared denominator vanishes.
  double coefficient_a() const;
  double coefficient_b() const;
};

/// g(t) = 1/2 (exp(-t/tau_Rabi) + A exp(-t/tau_2) + B)
double rabi_envelope(const EnvelopeParams& p, double t);
Eigen::ArrayXd rabi_envelope(const EnvelopeParams& p, const Eigen::ArrayXd& t);

/// Gamma_Add = 2 (1/tau_Rabi - 3/4 Gamma_rad). Result is tagged fitted.
AngularRate additional_decoherence(double tau_rabi_ns, AngularRate gamma_rad);

struct Populations {
  double bright;
  double dark;
};

/// Two-state rate-equation solution starting from rho_B = 1, rho_D = 0.
Populations depolarization_populations(AngularRate gamma_rad, AngularRate gamma_mix, double t);

struct PolarizedIntensity {
  double x;
  double y;
};

/// Imperfectly filtered channel intensities; (t - t0) is applied as written
/// for every t, so windowing is left to the caller.
PolarizedIntensity observed_polarized_intensity(double amp, double eps, double t0_ns, AngularRate gamma_rad,
                                                AngularRate gamma_mix, double t);

/// 1/2 (exp(-t/tau_Rabi) + 1) exp(-Gamma_ISC,Ex t / 2)
double isc_envelope_ex(double tau_rabi_ns, AngularRate gamma_isc_x, double t);

/// A [cos(Omega t - phi) exp(-(t - t0)/tau_Rabi) + 1] exp(-Gamma_ISC,Ex t / 2)
double rabi_fit_model(double amp, AngularRate omega, double phi, double t0_ns, double tau_rabi_ns,
                      AngularRate gamma_isc_x, double t);

/// Fluorescence after excitation into A1 or A2, normalized to 1 at t = 0.
double fluorescence_a12(AngularRate gamma_rad, AngularRate gamma_mix, AngularRate gamma_isc, Branch branch,
                        double t);
Eigen::ArrayXd fluorescence_a12(AngularRate gamma_rad, AngularRate gamma_mix, AngularRate gamma_isc,
                                Branch branch, const Eigen::ArrayXd& t);

/// Decay exponents (slow, fast) of the A1/A2 fluorescence.
std::pair<double, double> fluorescence_a12_exponents(AngularRate gamma_rad, AngularRate gamma_mix,
                                                     AngularRate gamma_isc);

/// Gamma_i = 1/tau_i - Gamma_rad. Result is tagged fitted.
AngularRate isc_rate_from_lifetime(double tau_ns, AngularRate gamma_rad);

}  // namespace nvp::closedform
