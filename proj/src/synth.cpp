#include "nvphonon/synth.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "nvphonon/closedform.hpp"
#include "nvphonon/dynamics.hpp"
#include "nvphonon/errors.hpp"
#include "nvphonon/random.hpp"

namespace nvp::synth {
namespace {

using Evaluator = std::function<Eigen::VectorXd(const std::map<std::string, double>&, const Eigen::VectorXd& s)>;

struct Entry {
  std::vector<ParamSpec> params;
  Evaluator eval;
};

AngularRate rate(const std::map<std::string, double>& p, const std::string& k) {
  return AngularRate::rad_per_ns(p.at(k));
}

// Applies f to the samples with s >= start; zero elsewhere.
template <typename F>
Eigen::VectorXd gated(const Eigen::VectorXd& s, double start, F&& f) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] >= start) out[i] = f(s[i]);
  return out;
}

closedform::Branch branch_of(double b) {
  if (b == 1.0) return closedform::Branch::a1;
  if (b == 2.0) return closedform::Branch::a2;
  throw InvalidArgument("a12 model: branch must be 1 or 2");
}

const std::map<std::string, Entry>& registry() {
  static const std::map<std::string, Entry> reg = [] {
    std::map<std::string, Entry> r;
    r["constant"] = {{{"level", 1.0, "constant intensity"}},
                     [](const auto& p, const Eigen::VectorXd& s) {
                       if (p.at("level") < 0.0) throw InvalidArgument("constant model: level must be >= 0");
                       return Eigen::VectorXd::Constant(s.size(), p.at("level"));
                     }};
    r["exponential"] = {{{"rate", std::nullopt, "decay rate, rad/ns"}},
                        [](const auto& p, const Eigen::VectorXd& s) {
                          const double k = rate(p, "rate").value();
                          return gated(s, 0.0, [k](double x) { return std::exp(-k * x); });
                        }};
    r["a12"] = {{{"gamma_rad", std::nullopt, "radiative rate, rad/ns"},
                 {"gamma_mix", std::nullopt, "A1-A2 mixing rate, rad/ns"},
                 {"gamma_isc", std::nullopt, "ISC rate from A1, rad/ns"},
                 {"branch", 1.0, "1 = excite A1, 2 = excite A2"}},
                [](const auto& p, const Eigen::VectorXd& s) {
                  const AngularRate gr = rate(p, "gamma_rad"), gm = rate(p, "gamma_mix"), gi = rate(p, "gamma_isc");
                  const closedform::Branch b = branch_of(p.at("branch"));
                  return gated(s, 0.0, [&](double x) { return closedform::fluorescence_a12(gr, gm, gi, b, x); });
                }};
    r["depolarization"] = {{{"gamma_rad", std::nullopt, "radiative rate, rad/ns"},
                            {"gamma_mix", std::nullopt, "Ex-Ey mixing rate, rad/ns"},
                            {"amp", 1.0, "amplitude"},
                            {"eps", 0.0, "polarization error, [0, 1/2]"},
                            {"t0", 0.0, "time origin, ns"},
                            {"channel", 0.0, "0 = x (bright), 1 = y (dark)"}},
                           [](const auto& p, const Eigen::VectorXd& s) {
                             const AngularRate gr = rate(p, "gamma_rad"), gm = rate(p, "gamma_mix");
                             const double ch = p.at("channel");
                             if (ch != 0.0 && ch != 1.0) throw InvalidArgument("depolarization model: channel must be 0 or 1");
                             const double amp = p.at("amp"), eps = p.at("eps"), t0 = p.at("t0");
                             return gated(s, t0, [&](double x) {
                               const auto i = closedform::observed_polarized_intensity(amp, eps, t0, gr, gm, x);
                               return ch == 0.0 ? i.x : i.y;
                             });
                           }};
    r["rabi"] = {{{"amp", 1.0, "amplitude"},
                  {"omega", std::nullopt, "Rabi frequency, rad/ns"},
                  {"phi", 0.0, "phase, rad"},
                  {"t0", 0.0, "envelope origin, ns"},
                  {"tau_rabi", std::nullopt, "envelope decay time, ns"},
                  {"gamma_isc_x", 0.0, "ISC rate from Ex, rad/ns"}},
                 [](const auto& p, const Eigen::VectorXd& s) {
                   const AngularRate om = AngularRate::fitted_rad_per_ns(p.at("omega"));
                   const AngularRate gi = rate(p, "gamma_isc_x");
                   return gated(s, 0.0, [&](double x) {
                     return closedform::rabi_fit_model(p.at("amp"), om, p.at("phi"), p.at("t0"), p.at("tau_rabi"), gi, x);
                   });
                 }};
    r["lindblad"] = {{{"rabi", std::nullopt, "drive Rabi frequency, rad/ns"},
                      {"detuning", 0.0, "drive detuning, rad/ns"},
                      {"gamma_rad_x", std::nullopt, "Ex radiative rate, rad/ns"},
                      {"gamma_rad_y", 0.0, "Ey radiative rate, rad/ns"},
                      {"gamma_mix_xy", 0.0, "Ex -> Ey mixing, rad/ns"},
                      {"gamma_mix_yx", 0.0, "Ey -> Ex mixing, rad/ns"},
                      {"gamma_t2", 0.0, "pure dephasing, rad/ns"},
                      {"gamma_isc_x", 0.0, "Ex -> sink, rad/ns"},
                      {"initial", 0.0, "initial level: 0 ground, 1 Ex, 2 Ey/sink"}},
                     [](const auto& p, const Eigen::VectorXd& s) {
                       dynamics::ThreeLevelModel m;
                       m.rabi = rate(p, "rabi");
                       m.detuning = AngularRate::fitted_rad_per_ns(p.at("detuning"));
                       m.gamma_rad_x = rate(p, "gamma_rad_x");
                       m.gamma_rad_y = rate(p, "gamma_rad_y");
                       m.gamma_mix_xy = rate(p, "gamma_mix_xy");
                       m.gamma_mix_yx = rate(p, "gamma_mix_yx");
                       m.gamma_t2 = rate(p, "gamma_t2");
                       m.gamma_isc_x = rate(p, "gamma_isc_x");
                       const double init = p.at("initial");
                       if (init != 0.0 && init != 1.0 && init != 2.0)
                         throw InvalidArgument("lindblad model: initial must be 0, 1 or 2");
                       std::vector<Eigen::Index> idx;
                       for (Eigen::Index i = 0; i < s.size(); ++i)
                         if (s[i] >= 0.0) idx.push_back(i);
                       Eigen::VectorXd out = Eigen::VectorXd::Zero(s.size());
                       if (idx.empty()) return out;
                       Eigen::VectorXd ts(static_cast<Eigen::Index>(idx.size()));
                       for (std::size_t k = 0; k < idx.size(); ++k) ts[k] = s[idx[k]];
                       const auto rho0 = dynamics::DensityMatrix3::pure(static_cast<dynamics::Level>(static_cast<int>(init)));
                       const TimeTrace f = dynamics::evolve_lindblad(m, rho0, ts).fluorescence();
                       for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k]] = f.value(k);
                       return out;
                     }};
    return r;
  }();
  return reg;
}

const Entry& lookup(const std::string& name) {
  const auto it = registry().find(name);
  if (it == registry().end()) throw InvalidArgument("unknown forward model '" + name + "'");
  return it->second;
}

std::map<std::string, double> resolve(const ForwardModel& m) {
  const Entry& e = lookup(m.name);
  std::map<std::string, double> out;
  for (const auto& [k, v] : m.params) {
    const bool known = std::any_of(e.params.begin(), e.params.end(), [&](const ParamSpec& p) { return p.name == k; });
    if (!known) throw InvalidArgument("model '" + m.name + "' has no parameter '" + k + "'");
    if (!std::isfinite(v)) throw InvalidArgument("model parameter '" + k + "' must be finite");
  }
  for (const ParamSpec& p : e.params) {
    const auto it = m.params.find(p.name);
    if (it != m.params.end())
      out[p.name] = it->second;
    else if (p.default_value)
      out[p.name] = *p.default_value;
    else
      throw InvalidArgument("model '" + m.name + "' requires parameter '" + p.name + "'");
  }
  return out;
}

}  // namespace

std::vector<std::string> model_names() {
  std::vector<std::string> names;
  for (const auto& [k, v] : registry()) names.push_back(k);
  return names;
}

const std::vector<ParamSpec>& model_parameters(const std::string& name) { return lookup(name).params; }

Eigen::VectorXd model_intensity(const ForwardModel& model, const Eigen::VectorXd& times, double pulse_start_ns) {
  const auto params = resolve(model);
  return lookup(model.name).eval(params, (times.array() - pulse_start_ns).matrix());
}

void ExperimentSpec::validate() const {
  if (!(bin_width_ns > 0.0) || !std::isfinite(bin_width_ns)) throw InvalidArgument("bin width must be > 0");
  if (!(span_ns >= bin_width_ns) || !std::isfinite(span_ns)) throw InvalidArgument("span must be >= bin width");
  if (!(total_counts >= 0.0) || !std::isfinite(total_counts)) throw InvalidArgument("total counts must be >= 0");
  if (!(background_rate >= 0.0) || !std::isfinite(background_rate)) throw InvalidArgument("background must be >= 0");
  if (!(pulse_edge_ns >= 0.0) || !std::isfinite(pulse_edge_ns)) throw InvalidArgument("pulse edge must be >= 0");
  if (!std::isfinite(pulse_start_ns)) throw InvalidArgument("pulse start must be finite");
  resolve(model);
}

Eigen::Index ExperimentSpec::bins() const {
  return static_cast<Eigen::Index>(std::floor(span_ns / bin_width_ns + 1e-9));
}

Eigen::VectorXd bin_centers(const ExperimentSpec& spec) {
  spec.validate();
  const Eigen::Index n = spec.bins();
  return ((Eigen::ArrayXd::LinSpaced(n, 0.0, static_cast<double>(n - 1)) + 0.5) * spec.bin_width_ns).matrix();
}

Eigen::VectorXd expected_counts(const ExperimentSpec& spec) {
  const Eigen::VectorXd centers = bin_centers(spec);
  Eigen::VectorXd ideal;
  if (spec.pulse_edge_ns == 0.0) {
    ideal = model_intensity(spec.model, centers, spec.pulse_start_ns);
  } else {
    // Sample finely, convolve with the edge kernel, interpolate at the centers.
    const double sigma = spec.pulse_edge_ns / (2.0 * std::sqrt(2.0 * std::log(2.0)));
    const double h = std::min(spec.bin_width_ns, sigma) / 10.0;
    const int half = static_cast<int>(std::ceil(5.0 * sigma / h));
    const double lo = centers[0] - half * h;
    const auto m = static_cast<Eigen::Index>(std::ceil((centers[centers.size() - 1] - centers[0]) / h)) + 2 * half + 2;
    const Eigen::VectorXd grid = (lo + h * Eigen::ArrayXd::LinSpaced(m, 0.0, static_cast<double>(m - 1))).matrix();
    const Eigen::VectorXd fine = model_intensity(spec.model, grid, spec.pulse_start_ns);
    Eigen::VectorXd kern(2 * half + 1);
    for (int j = -half; j <= half; ++j) kern[j + half] = std::exp(-0.5 * std::pow(j * h / sigma, 2));
    kern /= kern.sum();
    ideal.resize(centers.size());
    for (Eigen::Index i = 0; i < centers.size(); ++i) {
      const double x = (centers[i] - lo) / h;
      const auto k = static_cast<Eigen::Index>(std::floor(x));
      const double u = x - static_cast<double>(k);
      auto smooth_at = [&](Eigen::Index c) { return kern.dot(fine.segment(c - half, 2 * half + 1)); };
      ideal[i] = (1.0 - u) * smooth_at(k) + u * smooth_at(k + 1);
    }
  }
  if ((ideal.array() < -1e-12).any()) throw ModelError("forward model produced negative intensity");
  ideal = ideal.cwiseMax(0.0);
  const double total = ideal.sum();
  Eigen::VectorXd expect = total > 0.0 ? Eigen::VectorXd(ideal * (spec.total_counts / total))
                                       : Eigen::VectorXd::Zero(ideal.size());
  return (expect.array() + spec.background_rate).matrix();
}

namespace {

TimeTrace draw(const Eigen::VectorXd& centers, const Eigen::VectorXd& mu, Rng& rng, double bin_width) {
  Eigen::VectorXd counts(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) counts[i] = static_cast<double>(rng.poisson(mu[i]));
  TraceMetadata meta;
  meta.bin_width_ns = bin_width;
  return TimeTrace(centers, counts, TraceKind::counts, std::nullopt, meta);
}

}  // namespace

TimeTrace generate(const ExperimentSpec& spec) {
  Rng rng(spec.seed);
  return draw(bin_centers(spec), expected_counts(spec), rng, spec.bin_width_ns);
}

TracePair generate_background_pair(const ExperimentSpec& spec) {
  Rng rng(spec.seed);
  const Eigen::VectorXd centers = bin_centers(spec);
  TimeTrace signal = draw(centers, expected_counts(spec), rng, spec.bin_width_ns);
  TimeTrace bg = draw(centers, Eigen::VectorXd::Constant(centers.size(), spec.background_rate), rng, spec.bin_width_ns);
  return {std::move(signal), std::move(bg)};
}

Subtracted subtract_background(const TimeTrace& signal, const TimeTrace& background) {
  if (signal.size() != background.size() || signal.times() != background.times())
    throw InvalidArgument("background subtraction: signal and background binning differ");
  Eigen::VectorXd diff = signal.values() - background.values();
  Subtracted out;
  for (Eigen::Index i = 0; i < diff.size(); ++i)
    if (diff[i] <= 0.0) {
      diff[i] = 0.0;
      ++out.clamped;
    }
  TraceMetadata meta = signal.metadata();
  meta.background_subtracted = true;
  out.trace = TimeTrace(signal.times(), diff, signal.kind(), std::nullopt, meta);
  return out;
}

TimeTrace reject_before(const TimeTrace& trace, double t_cut_ns) {
  // A binned sample is kept only if its whole bin lies after the cut.
  const double half = 0.5 * trace.metadata().bin_width_ns.value_or(0.0);
  return trace.from(t_cut_ns + half);
}

}  // namespace nvp::synth
