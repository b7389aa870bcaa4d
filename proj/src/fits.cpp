#include "nvphonon/fits.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numeric>

#include "nvphonon/errors.hpp"

namespace nvp::estimate {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void refresh_ci(FitResult& r) {
  r.sigma = r.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  r.ci95.col(0) = r.params - 1.96 * r.sigma;
  r.ci95.col(1) = r.params + 1.96 * r.sigma;
}

}  // namespace

void FitWindow::validate() const {
  if (!std::isfinite(start_ns) || !(length_ns > 0.0) || !std::isfinite(length_ns))
    throw InvalidArgument("fit window: start must be finite and length > 0");
}

Weighting default_weighting(const TimeTrace& trace) {
  if (trace.sigma()) return Weighting::provided;
  return trace.kind() == TraceKind::counts ? Weighting::poisson : Weighting::uniform;
}

FitResult fit_exponential_window(const TimeTrace& trace, const FitWindow& window, std::optional<Weighting> weighting,
                                 const NllsOptions& opt) {
  window.validate();
  if (trace.empty() || window.start_ns < trace.time(0) - 1e-9 || window.end_ns() > trace.time(trace.size() - 1) + 1e-9)
    throw InvalidArgument("exponential fit: window lies outside the trace support");
  const TimeTrace w = trace.window(window.start_ns, window.end_ns());
  if (w.size() < 3) throw InvalidArgument("exponential fit: fewer than three samples in the window");

  std::vector<double> tp, lp, wp;
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (w.value(i) > 0.0) {
      tp.push_back(w.time(i));
      lp.push_back(std::log(w.value(i)));
      wp.push_back(w.value(i));
    }
  if (tp.size() < 2) throw InvalidArgument("exponential fit: fewer than two positive samples in the window");
  const auto map = [](const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()); };
  const auto [slope, icpt] = linear_regression(map(tp), map(lp), map(wp));
  Eigen::Vector2d init(std::exp(icpt), -slope);
  if (!init.allFinite() || !(init[1] > 0.0)) init = Eigen::Vector2d(w.values().maxCoeff(), 1.0 / window.length_ns);

  auto model = [](double t, const Eigen::VectorXd& p) { return p[0] * std::exp(-p[1] * t); };
  return nlls(model, w, init, {"amplitude", "rate"}, weighting.value_or(default_weighting(w)), opt);
}

IscPoint extract_isc_point(const TimeTrace& trace, const FitWindow& window, AngularRate gamma_rad,
                           closedform::Branch branch, double temperature_k) {
  const FitResult r = fit_exponential_window(trace, window);
  if (!r.converged) throw ModelError("lifetime fit did not converge");
  const AngularRate isc = closedform::isc_rate_from_lifetime(1.0 / r.param("rate"), gamma_rad);
  return {temperature_k, isc.value(), r.error("rate"), branch};
}

double estimate_rabi_frequency(const TimeTrace& trace) {
  const Eigen::Index n = trace.size();
  if (n < 8) throw InvalidArgument("rabi frequency estimate: too few samples");
  const Eigen::VectorXd& t = trace.times();
  const double span = t[n - 1] - t[0];
  const auto [a, b] = linear_regression(t, trace.values(), Eigen::VectorXd::Ones(n));
  const Eigen::ArrayXd y = trace.values().array() - (a * t.array() + b);

  std::vector<double> dts(n - 1);
  for (Eigen::Index i = 0; i + 1 < n; ++i) dts[i] = t[i + 1] - t[i];
  std::nth_element(dts.begin(), dts.begin() + dts.size() / 2, dts.end());
  const double nyquist = std::numbers::pi / dts[dts.size() / 2];

  const double dw = kTwoPi / span / 8.0;
  const double w_lo = 2.0 * kTwoPi / span;
  auto power = [&](double w) {
    const double c = (y * (w * t.array()).cos()).sum(), s = (y * (w * t.array()).sin()).sum();
    return c * c + s * s;
  };
  double best_w = w_lo, best_p = -1.0;
  for (double w = w_lo; w <= nyquist; w += dw) {
    const double p = power(w);
    if (p > best_p) {
      best_p = p;
      best_w = w;
    }
  }
  const double pm = power(best_w - dw), pp = power(best_w + dw);
  const double den = pm - 2.0 * best_p + pp;
  if (den < 0.0) best_w += 0.5 * dw * (pm - pp) / den;
  return best_w;
}

FitResult fit_rabi_trace(const TimeTrace& trace, const RabiFitOptions& opt) {
  TimeTrace w = trace;
  if (opt.window) {
    opt.window->validate();
    w = trace.window(opt.window->start_ns, opt.window->end_ns());
  }
  if (w.size() < 12) throw InvalidArgument("rabi fit: too few samples");
  const double span = w.time(w.size() - 1) - w.time(0);
  const double w_est = estimate_rabi_frequency(w);
  const double omega = opt.init.omega.value_or(w_est);
  if (std::abs(omega - w_est) > 0.5 * w_est)
    throw InvalidArgument("rabi fit: initial omega is more than 50% away from the periodogram estimate " +
                          std::to_string(w_est) + " rad/ns");
  if (omega * span < 3.0 * kTwoPi) throw InvalidArgument("rabi fit: trace covers fewer than three periods");

  const Eigen::ArrayXd t = w.times().array();
  const Eigen::ArrayXd y = w.values().array() - w.values().mean();
  const double phi = opt.init.phi.value_or(
      std::atan2((y * (omega * t).sin()).sum(), (y * (omega * t).cos()).sum()));
  Eigen::VectorXd init(6);
  init << opt.init.amp.value_or(w.values().tail(w.size() / 2).mean()), omega, phi,
      opt.init.t0_ns.value_or(w.time(0)), opt.init.tau_rabi_ns.value_or(span / 4.0),
      opt.init.gamma_isc_x.value_or(0.0);
  if (!(init[0] > 0.0)) init[0] = std::max(w.values().maxCoeff(), 1e-12);

  auto model = [](double tt, const Eigen::VectorXd& p) {
    if (!(p[0] > 0.0) || !(p[4] > 0.0)) return kNaN;
    return closedform::kernel::rabi_fit_model(p[0], p[1], p[2], p[3], p[4], p[5], tt);
  };
  NllsOptions nopt = opt.nlls;
  if (nopt.scale.empty()) nopt.scale = {std::abs(init[0]), omega, 1.0, std::max(1.0, std::abs(init[3])), init[4], 1e-3};
  return nlls(model, w, init, {"amp", "omega", "phi", "t0", "tau_rabi", "gamma_isc_x"},
              opt.weighting.value_or(default_weighting(w)), nopt);
}

DerivedRate additional_decoherence(const FitResult& rabi_fit, AngularRate gamma_rad) {
  const double tau = rabi_fit.param("tau_rabi");
  const double st = rabi_fit.error("tau_rabi");
  return {closedform::additional_decoherence(tau, gamma_rad), 2.0 * st / (tau * tau)};
}

FitResult fit_t5(const std::vector<T5Point>& pts, const NllsOptions& opt) {
  if (pts.size() < 4) throw InvalidArgument("T^5 fit: need at least four points");
  const auto n = static_cast<Eigen::Index>(pts.size());
  Eigen::VectorXd T(n), y(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const T5Point& p = pts[i];
    if (!std::isfinite(p.temperature_k) || !std::isfinite(p.gamma_add) || !(p.sigma > 0.0))
      throw InvalidArgument("T^5 fit: points need finite values and sigma > 0");
    T[i] = p.temperature_k;
    y[i] = p.gamma_add;
    w[i] = 1.0 / (p.sigma * p.sigma);
  }
  const double tmin = T.minCoeff();
  if (T.maxCoeff() - tmin < 10.0) throw InvalidArgument("T^5 fit: points must span at least 10 K");

  // Linear in (A, C) for fixed T0: scan T0 for the starting point.
  Eigen::Vector3d init(0.0, tmin, y.mean());
  double best = std::numeric_limits<double>::infinity();
  for (double t0 = tmin - 10.0; t0 <= tmin + 1e-9; t0 += 0.05) {
    const Eigen::VectorXd x = (T.array() - t0).pow(5).matrix();
    if (!(x.maxCoeff() - x.minCoeff() > 0.0)) continue;
    const auto [a, c] = linear_regression(x, y, w);
    const double chi2 = (w.array() * (y.array() - a * x.array() - c).square()).sum();
    if (chi2 < best) {
      best = chi2;
      init << a, t0, c;
    }
  }
  auto model = [&T](const Eigen::VectorXd& p) -> Eigen::VectorXd {
    Eigen::VectorXd out(T.size());
    for (Eigen::Index i = 0; i < T.size(); ++i) out[i] = phonon::kernel::fit_form(p[0], p[1], p[2], T[i]);
    return out;
  };
  NllsOptions nopt = opt;
  if (nopt.scale.empty()) {
    const double yscale = std::max(y.cwiseAbs().maxCoeff(), 1e-12);
    nopt.scale = {yscale / std::pow(std::max(T.maxCoeff() - tmin, 1.0), 5), 1.0, yscale};
  }
  return nlls(model, y, w, init, {"a", "t0", "c"}, Weighting::provided, nopt);
}

phonon::FitForm to_fit_form(const FitResult& r) { return {r.param("a"), r.param("t0"), r.param("c")}; }

std::vector<BandRow> t5_confidence_band(const FitResult& r, const std::vector<double>& temps) {
  const double a = r.param("a"), t0 = r.param("t0"), c = r.param("c");
  const Eigen::Index ia = r.index("a"), it = r.index("t0"), ic = r.index("c");
  std::vector<BandRow> out;
  for (double T : temps) {
    const double d = T - t0;
    Eigen::Vector3d g;  // gradient in (a, t0, c) order
    g << std::pow(d, 5), -5.0 * a * std::pow(d, 4), 1.0;
    Eigen::Matrix3d cov;
    const Eigen::Index idx[3] = {ia, it, ic};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) cov(i, j) = r.covariance(idx[i], idx[j]);
    const double var = g.dot(cov * g);
    const double half = 1.96 * std::sqrt(std::max(var, 0.0));
    const double v = phonon::kernel::fit_form(a, t0, c, T);
    out.push_back({T, v, v - half, v + half});
  }
  return out;
}

DepolFit fit_depolarization(const std::vector<TimeTrace>& traces, AngularRate mix_low, AngularRate mix_high,
                            AngularRate gamma_rad, const DepolFitOptions& opt) {
  if (traces.size() != 4) throw InvalidArgument("depolarization fit: need exactly four traces");
  std::vector<double> temps;
  for (const TimeTrace& tr : traces) {
    if (!tr.metadata().temperature_k) throw InvalidArgument("depolarization fit: trace lacks a temperature label");
    const std::string& ch = tr.metadata().channel;
    if (ch != "x" && ch != "y") throw InvalidArgument("depolarization fit: channel must be 'x' or 'y', got '" + ch + "'");
    if (tr.empty()) throw InvalidArgument("depolarization fit: empty trace");
    temps.push_back(*tr.metadata().temperature_k);
  }
  std::vector<double> uniq = temps;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  if (uniq.size() != 2) throw InvalidArgument("depolarization fit: need exactly two distinct temperatures");
  std::map<std::pair<double, std::string>, int> seen;
  for (const TimeTrace& tr : traces) ++seen[{*tr.metadata().temperature_k, tr.metadata().channel}];
  if (seen.size() != 4) throw InvalidArgument("depolarization fit: need one x and one y trace per temperature");

  Eigen::Index n = 0;
  for (const TimeTrace& tr : traces) n += tr.size();
  Eigen::VectorXd t(n), y(n), w(n), mix(n);
  std::vector<bool> bright(n);
  Eigen::Index k = 0;
  for (const TimeTrace& tr : traces) {
    const double m = *tr.metadata().temperature_k == uniq[0] ? mix_low.value() : mix_high.value();
    const Eigen::VectorXd wt = weights_for(tr, opt.weighting.value_or(default_weighting(tr)));
    for (Eigen::Index i = 0; i < tr.size(); ++i, ++k) {
      t[k] = tr.time(i);
      y[k] = tr.value(i);
      w[k] = wt[i];
      mix[k] = m;
      bright[k] = tr.metadata().channel == "x";
    }
  }
  const double rad = gamma_rad.value();
  auto model = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd {
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i)
      out[i] = closedform::kernel::polarized_intensity(p[0], p[2], p[1], rad, mix[i], bright[i], t[i]);
    return out;
  };

  const Weighting scheme = opt.weighting.value_or(default_weighting(traces.front()));
  const double amp0 = opt.amp_init.value_or(y.maxCoeff() * std::exp(rad * (t.minCoeff() - opt.t0_init_ns)));
  NllsOptions nopt = opt.nlls;
  if (nopt.scale.empty()) nopt.scale = {std::max(std::abs(amp0), 1e-12), 1.0, 0.1};
  FitResult best;
  bool have = false;
  for (double eps0 : {0.1, 0.9}) {
    FitResult r = nlls(model, y, w, Eigen::Vector3d(amp0, opt.t0_init_ns, eps0), {"amp", "t0", "eps"}, scheme, nopt);
    if (!have || r.chi2 < best.chi2) {
      best = std::move(r);
      have = true;
    }
  }
  DepolFit out{best, false};
  // eps > 1/2 is the same model with the channel labels exchanged.
  if (out.fit.params[2] > 0.5) {
    out.channels_swapped = true;
    out.fit.params[2] = 1.0 - out.fit.params[2];
    out.fit.covariance.row(2) *= -1.0;
    out.fit.covariance.col(2) *= -1.0;
    refresh_ci(out.fit);
  }
  return out;
}

FitResult fit_gamma_a1(const std::vector<IscPoint>& points, const MixModel& mix, AngularRate gamma_rad,
                       const phonon::EffectiveRateOptions& window, const NllsOptions& opt) {
  if (points.size() < 2) throw InvalidArgument("gamma_A1 fit: need at least two points");
  bool has_a1 = false, has_a2 = false;
  for (const IscPoint& p : points) {
    if (!(p.sigma > 0.0) || !std::isfinite(p.gamma_eff)) throw InvalidArgument("gamma_A1 fit: points need sigma > 0");
    (p.branch == closedform::Branch::a1 ? has_a1 : has_a2) = true;
  }
  if (!has_a1 || !has_a2) throw InvalidArgument("gamma_A1 fit: need points from both branches");

  std::vector<double> temps;
  for (const IscPoint& p : points) temps.push_back(p.temperature_k);
  std::sort(temps.begin(), temps.end());
  temps.erase(std::unique(temps.begin(), temps.end()), temps.end());
  std::vector<AngularRate> mixes;
  for (double T : temps) mixes.push_back(mix(TemperatureK(T)));

  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::VectorXd y(n), w(n);
  std::vector<std::size_t> slot(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y[i] = points[i].gamma_eff;
    w[i] = 1.0 / (points[i].sigma * points[i].sigma);
    slot[i] = std::lower_bound(temps.begin(), temps.end(), points[i].temperature_k) - temps.begin();
  }
  auto model = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd {
    Eigen::VectorXd out(n);
    if (!(p[0] >= 0.0)) return out.setConstant(kNaN);
    std::vector<phonon::EffectiveRates> eff;
    try {
      for (const AngularRate& m : mixes)
        eff.push_back(phonon::effective_isc_rates(gamma_rad, AngularRate::rad_per_ns(p[0]), m, window));
    } catch (const Error&) {
      return out.setConstant(kNaN);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const phonon::EffectiveRates& e = eff[slot[i]];
      out[i] = (points[i].branch == closedform::Branch::a1 ? e.a1 : e.a2).value();
    }
    return out;
  };
  double init = 0.0;
  for (const IscPoint& p : points)
    if (p.branch == closedform::Branch::a1) init = std::max(init, p.gamma_eff);
  if (!(init > 0.0)) init = gamma_rad.value();
  return nlls(model, y, w, Eigen::VectorXd::Constant(1, init), {"gamma_a1"}, Weighting::provided, opt);
}

std::vector<Extremum> find_extrema(const TimeTrace& tr) {
  std::vector<Extremum> out;
  for (Eigen::Index i = 1; i + 1 < tr.size(); ++i) {
    const double a = tr.value(i - 1), b = tr.value(i), c = tr.value(i + 1);
    const bool mx = b > a && b >= c, mn = b < a && b <= c;
    if (!mx && !mn) continue;
    const double h1 = tr.time(i) - tr.time(i - 1), h2 = tr.time(i + 1) - tr.time(i);
    // Vertex of the parabola through the three samples.
    const double d1 = (b - a) / h1, d2 = (c - b) / h2;
    const double curv = (d2 - d1) / (0.5 * (h1 + h2));
    double dt = 0.0, v = b;
    if (curv != 0.0) {
      const double slope_mid = d1 + curv * 0.5 * h1;  // slope at t_i
      dt = std::clamp(-slope_mid / curv, -h1, h2);
      v = b + slope_mid * dt + 0.5 * curv * dt * dt;
    }
    out.push_back({tr.time(i) + dt, v, mx});
  }
  return out;
}

EnvelopeDecay fit_envelope_decay(const TimeTrace& tr) {
  const std::vector<Extremum> ext = find_extrema(tr);
  std::vector<Extremum> mins;
  for (const Extremum& e : ext)
    if (!e.maximum) mins.push_back(e);
  EnvelopeDecay out;
  for (const Extremum& e : ext) {
    if (!e.maximum) continue;
    const auto hi = std::find_if(mins.begin(), mins.end(), [&](const Extremum& m) { return m.time > e.time; });
    if (hi == mins.begin() || hi == mins.end()) continue;
    const Extremum& lo = *(hi - 1);
    const double u = (e.time - lo.time) / (hi->time - lo.time);
    const double floor = lo.value + u * (hi->value - lo.value);
    const double amp = 0.5 * (e.value - floor);
    if (amp > 0.0) {
      out.times.push_back(e.time);
      out.amplitudes.push_back(amp);
    }
  }
  if (out.times.size() < 3) throw ModelError("envelope fit: fewer than three bracketed maxima");
  const auto m = static_cast<Eigen::Index>(out.times.size());
  Eigen::VectorXd t = Eigen::Map<const Eigen::VectorXd>(out.times.data(), m);
  Eigen::VectorXd la(m);
  for (Eigen::Index i = 0; i < m; ++i) la[i] = std::log(out.amplitudes[i]);
  const auto [slope, icpt] = linear_regression(t, la, Eigen::VectorXd::Ones(m));
  (void)icpt;
  if (!(slope < 0.0)) throw ModelError("envelope fit: amplitude does not decay");
  out.tau_ns = -1.0 / slope;
  return out;
}

EnsembleStats ensemble_stats(const std::vector<double>& v) {
  if (v.size() < 2) throw InvalidArgument("ensemble statistics need at least two values");
  EnsembleStats s;
  s.n = v.size();
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(s.n);
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
  s.two_sigma = 2.0 * s.stddev;
  return s;
}

}  // namespace nvp::estimate
