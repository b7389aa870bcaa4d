#include "nvphonon/closedform.hpp"

#include <cmath>
#include <string>

#include "nvphonon/errors.hpp"

namespace nvp::closedform {
namespace {

void require_physical(AngularRate r, const char* name) {
  if (!(r.value() >= 0.0)) throw InvalidArgument(std::string(name) + " must be >= 0");
}

void require_time(double t) {
  if (!std::isfinite(t) || t < 0.0) throw InvalidArgument("time must be finite and >= 0");
}

void require_positive(double v, const char* name) {
  if (!std::isfinite(v) || !(v > 0.0)) throw InvalidArgument(std::string(name) + " must be > 0");
}

double envelope_denominator(const EnvelopeParams& p) {
  const double den = 2.0 * p.gamma_rad_y.value() + p.gamma_mix_xy.value() + 2.0 * p.gamma_mix_yx.value();
  if (!(den > 0.0)) throw ModelError("envelope coefficients undefined: 2 Gamma_rad_y + Gamma_mix_xy + 2 Gamma_mix_yx = 0");
  return den;
}

}  // namespace

void EnvelopeParams::validate() const {
  require_physical(gamma_rad_x, "gamma_rad_x");
  require_physical(gamma_rad_y, "gamma_rad_y");
  require_physical(gamma_mix_xy, "gamma_mix_xy");
  require_physical(gamma_mix_yx, "gamma_mix_yx");
  require_physical(gamma_t2, "gamma_t2");
}

double EnvelopeParams::inverse_tau_rabi() const {
  return 0.75 * gamma_rad_x.value() + 0.5 * (gamma_mix_xy.value() + gamma_t2.value());
}

double EnvelopeParams::inverse_tau_2() const {
  return 0.5 * (2.0 * gamma_rad_y.value() + gamma_mix_xy.value() + 2.0 * gamma_mix_yx.value());
}

double EnvelopeParams::coefficient_a() const { return -gamma_mix_xy.value() / envelope_denominator(*this); }

double EnvelopeParams::coefficient_b() const {
  return 2.0 * (gamma_rad_y.value() + gamma_mix_xy.value() + gamma_mix_yx.value()) / envelope_denominator(*this);
}

double rabi_envelope(const EnvelopeParams& p, double t) {
  p.validate();
  require_time(t);
  const double a = p.coefficient_a(), b = p.coefficient_b();
  return 0.5 * (std::exp(-t * p.inverse_tau_rabi()) + a * std::exp(-t * p.inverse_tau_2()) + b);
}

Eigen::ArrayXd rabi_envelope(const EnvelopeParams& p, const Eigen::ArrayXd& t) {
  p.validate();
  for (double ti : t) require_time(ti);
  const double a = p.coefficient_a(), b = p.coefficient_b();
  return 0.5 * ((-t * p.inverse_tau_rabi()).exp() + a * (-t * p.inverse_tau_2()).exp() + b);
}

AngularRate additional_decoherence(double tau_rabi_ns, AngularRate gamma_rad) {
  require_positive(tau_rabi_ns, "tau_rabi");
  return AngularRate::fitted_rad_per_ns(2.0 * (1.0 / tau_rabi_ns - 0.75 * gamma_rad.value()));
}

Populations depolarization_populations(AngularRate gamma_rad, AngularRate gamma_mix, double t) {
  require_physical(gamma_rad, "gamma_rad");
  require_physical(gamma_mix, "gamma_mix");
  require_time(t);
  return {kernel::depol_bright(gamma_rad.value(), gamma_mix.value(), t),
          kernel::depol_dark(gamma_rad.value(), gamma_mix.value(), t)};
}

PolarizedIntensity observed_polarized_intensity(double amp, double eps, double t0_ns, AngularRate gamma_rad,
                                                AngularRate gamma_mix, double t) {
  require_positive(amp, "amplitude");
  if (!(eps >= 0.0 && eps <= 0.5)) throw InvalidArgument("polarization error eps must lie in [0, 1/2]");
  require_physical(gamma_rad, "gamma_rad");
  require_physical(gamma_mix, "gamma_mix");
  if (!std::isfinite(t0_ns) || !std::isfinite(t)) throw InvalidArgument("times must be finite");
  const double r = gamma_rad.value(), m = gamma_mix.value();
  return {kernel::polarized_intensity(amp, eps, t0_ns, r, m, true, t),
          kernel::polarized_intensity(amp, eps, t0_ns, r, m, false, t)};
}

double isc_envelope_ex(double tau_rabi_ns, AngularRate gamma_isc_x, double t) {
  require_positive(tau_rabi_ns, "tau_rabi");
  require_physical(gamma_isc_x, "gamma_isc_x");
  require_time(t);
  return kernel::isc_envelope_ex(tau_rabi_ns, gamma_isc_x.value(), t);
}

double rabi_fit_model(double amp, AngularRate omega, double phi, double t0_ns, double tau_rabi_ns,
                      AngularRate gamma_isc_x, double t) {
  require_positive(amp, "amplitude");
  require_positive(tau_rabi_ns, "tau_rabi");
  if (!std::isfinite(phi) || !std::isfinite(t0_ns) || !std::isfinite(t)) throw InvalidArgument("arguments must be finite");
  return kernel::rabi_fit_model(amp, omega.value(), phi, t0_ns, tau_rabi_ns, gamma_isc_x.value(), t);
}

double fluorescence_a12(AngularRate gamma_rad, AngularRate gamma_mix, AngularRate gamma_isc, Branch branch,
                        double t) {
  require_physical(gamma_rad, "gamma_rad");
  require_physical(gamma_mix, "gamma_mix");
  require_physical(gamma_isc, "gamma_isc");
  require_time(t);
  return kernel::fluorescence_a12(gamma_rad.value(), gamma_mix.value(), gamma_isc.value(), branch == Branch::a1, t);
}

Eigen::ArrayXd fluorescence_a12(AngularRate gamma_rad, AngularRate gamma_mix, AngularRate gamma_isc,
                                Branch branch, const Eigen::ArrayXd& t) {
  Eigen::ArrayXd out(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) out[i] = fluorescence_a12(gamma_rad, gamma_mix, gamma_isc, branch, t[i]);
  return out;
}

std::pair<double, double> fluorescence_a12_exponents(AngularRate gamma_rad, AngularRate gamma_mix,
                                                     AngularRate gamma_isc) {
  require_physical(gamma_rad, "gamma_rad");
  require_physical(gamma_mix, "gamma_mix");
  require_physical(gamma_isc, "gamma_isc");
  const double m = gamma_mix.value(), i = gamma_isc.value();
  const double mean = gamma_rad.value() + m + 0.5 * i;
  const double half_gp = 0.5 * std::sqrt(i * i + 4.0 * m * m);
  return {mean - half_gp, mean + half_gp};
}

AngularRate isc_rate_from_lifetime(double tau_ns, AngularRate gamma_rad) {
  require_positive(tau_ns, "lifetime");
  return AngularRate::fitted_rad_per_ns(1.0 / tau_ns - gamma_rad.value());
}

}  // namespace nvp::closedform
