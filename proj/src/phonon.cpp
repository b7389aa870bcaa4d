#include "nvphonon/phonon.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nvphonon/closedform.hpp"
#include "nvphonon/errors.hpp"
#include "nvphonon/nlls.hpp"
#include "nvphonon/reference_values.hpp"

namespace nvp::phonon {
namespace {

double t5_prefactor(const Constants& k) {
  const double kb5 = std::pow(k.kB, 5);
  return 64.0 / std::numbers::pi * k.hbar * k.alpha * kb5;
}

}  // namespace

PhononCoupling PhononCoupling::from_linear_mhz(double eta_mhz_per_mev3, std::optional<EnergyMeV> cutoff) {
  PhononCoupling c{detail::require_finite(eta_mhz_per_mev3, "eta") * kRadPerNsPerMhz, cutoff};
  c.validate();
  return c;
}

void PhononCoupling::validate() const {
  if (!std::isfinite(eta) || eta < 0.0) throw InvalidArgument("phonon coupling eta must be finite and >= 0");
  if (cutoff && !(cutoff->value() > 0.0)) throw InvalidArgument("phonon cutoff must be > 0 meV");
}

double PhononCoupling::upper_limit(double delta_mev) const {
  return cutoff ? std::min(delta_mev, cutoff->value()) : delta_mev;
}

void SpinOrbit::validate() const {
  if (!(lambda_par.value() > 0.0)) throw InvalidArgument("lambda_par must be > 0");
  if (!(ratio > 0.0) || !std::isfinite(ratio)) throw InvalidArgument("lambda_perp/lambda_par must be > 0");
  if (!(ratio_sigma >= 0.0)) throw InvalidArgument("ratio uncertainty must be >= 0");
}

FitForm FitForm::from_linear_mhz(double a_mhz_per_k5, double t0_k, double c_mhz) {
  return {detail::require_finite(a_mhz_per_k5, "A") * kRadPerNsPerMhz, detail::require_finite(t0_k, "T0"),
          detail::require_finite(c_mhz, "C") * kRadPerNsPerMhz};
}

FitForm FitForm::reference() {
  return from_linear_mhz(reference::mix_fit_a_mhz_per_k5, reference::mix_fit_t0_k, reference::mix_fit_c_mhz);
}

AngularRate mixing_rate_t5(const PhononCoupling& coupling, TemperatureK t, const Constants& k) {
  coupling.validate();
  return AngularRate::rad_per_ns(t5_prefactor(k) * coupling.eta * coupling.eta * std::pow(t.value(), 5));
}

AngularRate mixing_rate_fitform(const FitForm& f, TemperatureK t) {
  return AngularRate::fitted_rad_per_ns(kernel::fit_form(f.a, f.t0_k, f.c, t.value()));
}

AngularRate mixing_rate_fitform_clamped(const FitForm& f, TemperatureK t) {
  return mixing_rate_fitform(f, t).clamped();
}

double coefficient_from_eta(double eta, const Constants& k) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidArgument("eta must be finite and > 0");
  return t5_prefactor(k) * eta * eta;
}

double eta_from_coefficient(double a, const Constants& k) {
  if (!(a > 0.0) || !std::isfinite(a)) throw InvalidArgument("T^5 coefficient must be finite and > 0");
  return std::sqrt(a / t5_prefactor(k));
}

double spectral_density(const PhononCoupling& coupling, EnergyMeV omega) {
  coupling.validate();
  const double w = omega.value();
  if (coupling.cutoff && w > coupling.cutoff->value()) return 0.0;
  return coupling.eta * w * w * w;
}

AngularRate isc_rate_a1(const SpinOrbit& so, const OverlapTable& f, EnergyMeV delta, const Constants& k) {
  so.validate();
  const double lp = so.lambda_perp().value();
  return AngularRate::rad_per_ns(4.0 * std::numbers::pi * k.hbar * lp * lp * f(delta.value()));
}

double overlap_moment(const PhononCoupling& coupling, const OverlapTable& f, EnergyMeV delta,
                      const QuadratureOptions& q) {
  coupling.validate();
  if (!(q.step_mev > 0.0)) throw InvalidArgument("quadrature step must be > 0");
  const double d = delta.value();
  const double upper = coupling.upper_limit(d);
  if (!(upper > 0.0)) return 0.0;
  auto n = static_cast<long>(std::ceil(upper / q.step_mev - 1e-9));
  n = std::max(2L, n + (n % 2));
  const double h = upper / static_cast<double>(n);
  double sum = 0.0;
  for (long i = 0; i <= n; ++i) {
    const double w = h * static_cast<double>(i);
    const double coef = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    sum += coef * w * f(d - w);
  }
  return sum * h / 3.0;
}

double e12_to_a1_ratio(const PhononCoupling& coupling, const OverlapTable& f, EnergyMeV delta, const Constants& k,
                       const QuadratureOptions& q) {
  coupling.validate();
  if (delta.value() == 0.0) return 0.0;
  const double fd = f(delta.value());
  if (!(fd > 0.0))
    throw ModelError("E12 rate undefined: F(" + std::to_string(delta.value()) + " meV) = 0");
  return 2.0 / std::numbers::pi * k.hbar * coupling.eta * overlap_moment(coupling, f, delta, q) / fd;
}

AngularRate isc_rate_e12(const PhononCoupling& coupling, AngularRate gamma_a1, const OverlapTable& f,
                         EnergyMeV delta, const Constants& k, const QuadratureOptions& q) {
  if (gamma_a1.value() < 0.0) throw InvalidArgument("gamma_a1 must be >= 0");
  return AngularRate::rad_per_ns(e12_to_a1_ratio(coupling, f, delta, k, q) * gamma_a1.value());
}

RatioScan ratio_scan(const PhononCoupling& coupling, const OverlapTable& f, const std::vector<double>& deltas_mev,
                     const std::optional<MeasuredRatio>& measured, const Constants& k, const QuadratureOptions& q) {
  RatioScan scan;
  scan.synthetic = f.is_synthetic();
  PhononCoupling unbounded = coupling;
  unbounded.cutoff.reset();
  for (double d : deltas_mev) {
    const EnergyMeV delta(d);
    RatioRow row{d, f(d), e12_to_a1_ratio(unbounded, f, delta, k, q), 0.0, false};
    row.ratio = coupling.cutoff ? e12_to_a1_ratio(coupling, f, delta, k, q) : row.ratio_bound;
    row.excluded = measured && row.ratio_bound < measured->lower_bound();
    scan.rows.push_back(row);
  }

  bool up = true, down = true;
  for (std::size_t i = 1; i < scan.rows.size(); ++i) {
    up = up && scan.rows[i].ratio_bound >= scan.rows[i - 1].ratio_bound;
    down = down && scan.rows[i].ratio_bound <= scan.rows[i - 1].ratio_bound;
  }
  scan.bound_monotone = up || down;

  for (std::size_t i = 0; i < scan.rows.size();) {
    if (!scan.rows[i].excluded) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < scan.rows.size() && scan.rows[j + 1].excluded) ++j;
    scan.excluded.emplace_back(scan.rows[i].delta_mev, scan.rows[j].delta_mev);
    i = j + 1;
  }
  if (!scan.excluded.empty() && !scan.rows.empty() && scan.rows.front().excluded)
    scan.lower_boundary_mev = scan.excluded.front().second;
  return scan;
}

EffectiveRates effective_isc_rates(AngularRate gamma_rad, AngularRate gamma_a1, AngularRate gamma_mix,
                                   const EffectiveRateOptions& opt) {
  for (AngularRate r : {gamma_rad, gamma_a1, gamma_mix})
    if (r.value() < 0.0) throw InvalidArgument("effective ISC rates: rates must be >= 0");
  if (!(opt.window_length_ns > 0.0) || !(opt.window_start_ns >= 0.0) || !(opt.sample_step_ns > 0.0))
    throw InvalidArgument("effective ISC rates: invalid window");
  const auto n = static_cast<Eigen::Index>(std::floor(opt.window_length_ns / opt.sample_step_ns + 1e-9)) + 1;
  const double t0 = opt.window_start_ns;
  const Eigen::ArrayXd t = Eigen::ArrayXd::LinSpaced(n, 0.0, static_cast<double>(n - 1) * opt.sample_step_ns) + t0;

  auto fit_branch = [&](closedform::Branch b) {
    const Eigen::VectorXd y = closedform::fluorescence_a12(gamma_rad, gamma_mix, gamma_a1, b, t).matrix();
    if ((y.array() <= 0.0).any()) throw ModelError("effective ISC rates: fluorescence underflows in the window");
    const Eigen::VectorXd w = y.cwiseInverse();
    const auto [slope, icpt] = estimate::linear_regression((t - t0).matrix(), y.array().log().matrix(), y);
    Eigen::Vector2d init(std::exp(icpt), -slope);
    auto model = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd {
      return (p[0] * (-p[1] * (t - t0)).exp()).matrix();
    };
    const estimate::FitResult r = estimate::nlls(model, y, w, init, {"amplitude", "rate"});
    if (!r.converged) throw ModelError("effective ISC rates: exponential fit did not converge");
    return AngularRate::fitted_rad_per_ns(r.params[1] - gamma_rad.value());
  };
  return {fit_branch(closedform::Branch::a1), fit_branch(closedform::Branch::a2)};
}

}  // namespace nvp::phonon
