#include "nvphonon/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "nvphonon/closedform.hpp"
#include "nvphonon/dynamics.hpp"
#include "nvphonon/errors.hpp"
#include "nvphonon/fits.hpp"
#include "nvphonon/phonon.hpp"
#include "nvphonon/random.hpp"
#include "nvphonon/reference_values.hpp"
#include "nvphonon/synth.hpp"

namespace nvp::verify {
namespace {

using closedform::Branch;

AngularRate mhz(double f) { return AngularRate::linear_mhz(f); }

std::string describe(double got, double want, double err) {
  std::ostringstream s;
  s.precision(12);
  s << "got " << got << ", expected " << want << ", error " << err;
  return s.str();
}

Check relative(const std::string& name, double got, double want, double tol) {
  const double err = std::abs(got - want) / std::max(std::abs(want), 1e-300);
  return {name, err <= tol, describe(got, want, err)};
}

Check bound(const std::string& name, double err, double tol) {
  std::ostringstream s;
  s << "max error " << err << " (tolerance " << tol << ")";
  return {name, err <= tol, s.str()};
}

double rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return ((a - b).array().abs() / b.array().abs().max(1e-300)).maxCoeff();
}

Eigen::VectorXd grid(double hi, Eigen::Index n) { return Eigen::VectorXd::LinSpaced(n, 0.0, hi); }

}  // namespace

bool Report::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

std::vector<std::string> Report::failures() const {
  std::vector<std::string> out;
  for (const Check& c : checks)
    if (!c.passed) out.push_back(c.name);
  return out;
}

Report run(const Constants& k) {
  Report rep;
  auto add = [&](const std::string& name, const std::function<Check()>& f) {
    try {
      rep.checks.push_back(f());
    } catch (const std::exception& e) {
      rep.checks.push_back({name, false, std::string("threw: ") + e.what()});
    }
  };
  Rng rng(20260101);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };

  add("core.linear_mhz", [] { return relative("core.linear_mhz", rate_from_linear_mhz(13.2).value(), 0.0829380460547705, 1e-14); });
  add("core.thermal_energy", [&] {
    return relative("core.thermal_energy", thermal_energy(TemperatureK(20.0), k).value(), 1.7234666524, 1e-12);
  });
  add("phonon.t5_coefficient", [&] {
    const double a = phonon::coefficient_from_eta(kTwoPi * 44.0e-3, k);
    return relative("phonon.t5_coefficient", a, 1.26131966574e-7, 1e-9);
  });
  add("phonon.eta_round_trip", [&] {
    const double eta = kTwoPi * 44.0e-3;
    return relative("phonon.eta_round_trip", phonon::eta_from_coefficient(phonon::coefficient_from_eta(eta, k), k), eta, 1e-12);
  });
  add("phonon.fit_form_20k", [] {
    const double v = phonon::mixing_rate_fitform(phonon::FitForm::reference(), TemperatureK(20.0)).to_linear_mhz();
    return relative("phonon.fit_form_20k", v, 18.5579159552, 1e-9);
  });
  add("phonon.gamma_a1", [&] {
    const phonon::OverlapTable f(Eigen::Vector2d(0.0, 1000.0), Eigen::Vector2d(7.5e-3, 7.5e-3));
    phonon::SpinOrbit so;
    so.lambda_par = AngularRate::linear_ghz(6.396);
    so.ratio = 1.0;
    return relative("phonon.gamma_a1", phonon::isc_rate_a1(so, f, EnergyMeV(300.0), k).to_linear_mhz(), 15.94533593, 1e-8);
  });
  add("phonon.ratio_spin_orbit_invariance", [&] {
    const auto f = phonon::OverlapTable::synthetic();
    const auto coupling = phonon::PhononCoupling::from_linear_mhz(44.0);
    phonon::SpinOrbit a, b;
    b.ratio = 2.7;
    double err = 0.0;
    for (double d : {80.0, 150.0, 300.0, 450.0}) {
      const EnergyMeV delta(d);
      const double ra = phonon::isc_rate_e12(coupling, phonon::isc_rate_a1(a, f, delta, k), f, delta, k).value() /
                        phonon::isc_rate_a1(a, f, delta, k).value();
      const double rb = phonon::isc_rate_e12(coupling, phonon::isc_rate_a1(b, f, delta, k), f, delta, k).value() /
                        phonon::isc_rate_a1(b, f, delta, k).value();
      err = std::max(err, std::abs(ra - rb) / ra);
    }
    return bound("phonon.ratio_spin_orbit_invariance", err, 1e-12);
  });
  add("dynamics.radiative_decay", [] {
    dynamics::ThreeLevelModel m;
    m.gamma_rad_x = mhz(13.2);
    const Eigen::VectorXd t = grid(200.0, 201);
    const auto r = dynamics::evolve_lindblad(m, dynamics::DensityMatrix3::pure(dynamics::Level::bright), t);
    const Eigen::VectorXd want = (-m.gamma_rad_x.value() * t.array()).exp().matrix();
    return bound("dynamics.radiative_decay", rel_err(r.populations.col(1), want), 1e-9);
  });
  add("dynamics.unitary_rabi", [] {
    dynamics::ThreeLevelModel m;
    m.rabi = mhz(100.0);
    const Eigen::VectorXd t = grid(50.0, 501);
    const auto r = dynamics::evolve_lindblad(m, dynamics::DensityMatrix3::pure(dynamics::Level::ground), t);
    const Eigen::VectorXd want = (0.5 * m.rabi.value() * t.array()).sin().square().matrix();
    return bound("dynamics.unitary_rabi", (r.populations.col(1) - want).cwiseAbs().maxCoeff(), 1e-8);
  });
  add("dynamics.trace_preservation", [&] {
    dynamics::ThreeLevelModel m;
    m.rabi = mhz(uni(0.0, 100.0));
    m.gamma_rad_x = mhz(13.2);
    m.gamma_rad_y = mhz(13.2);
    m.gamma_mix_xy = mhz(uni(0.0, 20.0));
    m.gamma_mix_yx = mhz(uni(0.0, 20.0));
    m.gamma_t2 = mhz(uni(0.0, 20.0));
    const auto r = dynamics::evolve_lindblad(m, dynamics::DensityMatrix3::pure(dynamics::Level::ground), grid(200.0, 401));
    return bound("dynamics.trace_preservation", (r.trace().array() - 1.0).abs().maxCoeff(), 1e-9);
  });
  add("closedform.depolarization_oracle", [&] {
    const AngularRate gr = mhz(13.2), gm = mhz(18.5);
    const Eigen::VectorXd t = grid(100.0, 401);
    const auto r = dynamics::evolve_rates(dynamics::build_depolarization_model(gr, gm), Eigen::Vector2d(1.0, 0.0), t);
    Eigen::VectorXd b(t.size()), d(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      const auto p = closedform::depolarization_populations(gr, gm, t[i]);
      b[i] = p.bright;
      d[i] = p.dark;
    }
    return bound("closedform.depolarization_oracle",
                 std::max(rel_err(r.populations.col(0), b), rel_err(r.populations.col(1).tail(t.size() - 1), d.tail(t.size() - 1))),
                 1e-8);
  });
  add("closedform.a12_oracle", [&] {
    const AngularRate gr = mhz(13.2), gm = mhz(18.5), gi = mhz(16.0);
    const Eigen::VectorXd t = grid(200.0, 401);
    double err = 0.0;
    for (const Branch b : {Branch::a1, Branch::a2}) {
      const Eigen::Vector2d p0 = b == Branch::a1 ? Eigen::Vector2d(1.0, 0.0) : Eigen::Vector2d(0.0, 1.0);
      const auto r = dynamics::evolve_rates(dynamics::build_a12_model(gr, gm, gi), p0, t);
      err = std::max(err, rel_err(r.total(), closedform::fluorescence_a12(gr, gm, gi, b, t.array()).matrix()));
    }
    return bound("closedform.a12_oracle", err, 1e-8);
  });
  add("closedform.a12_slow_exponent", [] {
    return relative("closedform.a12_slow_exponent",
                    closedform::fluorescence_a12_exponents(mhz(13.2), mhz(18.5), mhz(16.0)).first, 0.122800808128, 1e-10);
  });
  add("closedform.envelope_sum_rule", [&] {
    double err = 0.0;
    for (int i = 0; i < 1000; ++i) {
      closedform::EnvelopeParams p{mhz(uni(0.0, 30.0)), mhz(uni(0.01, 30.0)), mhz(uni(0.0, 30.0)), mhz(uni(0.0, 30.0)),
                                   mhz(uni(0.0, 30.0))};
      err = std::max(err, std::abs(p.coefficient_a() + p.coefficient_b() - 1.0));
    }
    return bound("closedform.envelope_sum_rule", err, 1e-14);
  });
  add("phonon.effective_rate_convergence", [] {
    const auto form = phonon::FitForm::reference();
    auto rel = [&](double T) {
      const auto e = phonon::effective_isc_rates(mhz(13.2), mhz(16.0), phonon::mixing_rate_fitform_clamped(form, TemperatureK(T)));
      return std::abs(e.a1.value() - e.a2.value()) / std::min(std::abs(e.a1.value()), std::abs(e.a2.value()));
    };
    const double hi = rel(22.0), lo = rel(5.0);
    std::ostringstream s;
    s << "relative difference " << hi << " at 22 K, " << lo << " at 5 K";
    return Check{"phonon.effective_rate_convergence", hi < 0.10 && lo > 1.0, s.str()};
  });
  add("estimate.exponential_recovery", [] {
    const double g = mhz(13.2).value();
    const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(801, 0.0, 200.0);
    const TimeTrace tr(t, (1000.0 * (-g * t.array()).exp()).matrix());
    const auto r = estimate::fit_exponential_window(tr, {4.0, 115.0});
    return relative("estimate.exponential_recovery", r.param("rate"), g, 1e-8);
  });
  add("estimate.depolarization_recovery", [] {
    std::vector<TimeTrace> traces;
    const AngularRate gr = mhz(13.2);
    const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(400, 2.0, 101.75);
    for (double T : {5.0, 20.0})
      for (int ch = 0; ch < 2; ++ch) {
        const AngularRate gm = mhz(T == 5.0 ? 0.08 : 18.5);
        Eigen::VectorXd v(t.size());
        for (Eigen::Index i = 0; i < t.size(); ++i) {
          const auto p = closedform::observed_polarized_intensity(0.90, 0.10, -3.6, gr, gm, t[i]);
          v[i] = ch == 0 ? p.x : p.y;
        }
        TraceMetadata meta;
        meta.temperature_k = T;
        meta.channel = ch == 0 ? "x" : "y";
        traces.emplace_back(t, v, TraceKind::intensity, std::nullopt, meta);
      }
    const auto r = estimate::fit_depolarization(traces, mhz(0.08), mhz(18.5), gr).fit;
    const double err = std::max({std::abs(r.param("amp") / 0.90 - 1.0), std::abs(r.param("t0") / -3.6 - 1.0),
                                 std::abs(r.param("eps") / 0.10 - 1.0)});
    return bound("estimate.depolarization_recovery", err, 1e-6);
  });
  add("synth.determinism", [] {
    synth::ExperimentSpec spec;
    spec.model = {"a12", {{"gamma_rad", mhz(13.2).value()}, {"gamma_mix", mhz(5.0).value()}, {"gamma_isc", mhz(16.0).value()}}};
    spec.seed = 7;
    spec.background_rate = 2.0;
    const TimeTrace a = synth::generate(spec), b = synth::generate(spec);
    return Check{"synth.determinism", a.values() == b.values() && a.times() == b.times(), "two draws with seed 7"};
  });
  return rep;
}

}  // namespace nvp::verify
