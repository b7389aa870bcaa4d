#include "cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <sstream>

#include "config.hpp"
#include "nvphonon/closedform.hpp"
#include "nvphonon/csv.hpp"
#include "nvphonon/dynamics.hpp"
#include "nvphonon/errors.hpp"
#include "nvphonon/fits.hpp"
#include "nvphonon/phonon.hpp"
#include "nvphonon/reference_values.hpp"
#include "nvphonon/synth.hpp"
#include "nvphonon/trace_io.hpp"
#include "nvphonon/verify.hpp"

namespace nvp::cli {
namespace {

namespace ref = nvp::reference;
using closedform::Branch;

struct Options {
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::string procedure;
  std::string sweep;
  std::string background;
  std::vector<std::string> inputs;
  bool json = false;
};

Config load_config(const Options& o) { return o.config_path.empty() ? Config{} : Config::load(o.config_path); }

AngularRate mhz(const Config& c, const std::string& key, double fallback) {
  return AngularRate::linear_mhz(c.number_or(key, fallback));
}

AngularRate required_mhz(const Config& c, const std::string& key) {
  const auto v = c.number(key);
  if (!v) throw InvalidArgument("config key '" + key + "' is required here");
  return AngularRate::linear_mhz(*v);
}

Eigen::VectorXd time_grid(const Config& c) {
  const double lo = c.number_or("time.start_ns", 0.0), hi = c.number_or("time.stop_ns", 200.0);
  const double step = c.number_or("time.step_ns", 0.25);
  if (!(step > 0.0) || !(hi > lo) || lo < 0.0) throw InvalidArgument("time grid: need 0 <= start < stop and step > 0");
  const auto n = static_cast<Eigen::Index>(std::floor((hi - lo) / step + 1e-9)) + 1;
  return (lo + step * Eigen::ArrayXd::LinSpaced(n, 0.0, static_cast<double>(n - 1))).matrix();
}

// Writes to --out when given, otherwise to the command's stdout.
template <typename F>
void emit(const Options& o, std::ostream& out, F&& writer) {
  if (o.out_path.empty()) {
    writer(out);
    return;
  }
  std::ofstream f(o.out_path);
  if (!f) throw InvalidArgument("cannot write '" + o.out_path + "'");
  writer(f);
}

struct Rates {
  AngularRate rad, rad_y, mix_xy, mix_yx, t2, isc, isc_x;
};

Rates rates_from(const Config& c) {
  Rates r;
  r.rad = mhz(c, "rates.gamma_rad_mhz", ref::gamma_rad_mhz);
  r.rad_y = c.has("rates.gamma_rad_y_mhz") ? mhz(c, "rates.gamma_rad_y_mhz", 0.0) : r.rad;
  const double mix = c.number_or("rates.gamma_mix_mhz", 0.0);
  r.mix_xy = mhz(c, "rates.gamma_mix_xy_mhz", mix);
  r.mix_yx = mhz(c, "rates.gamma_mix_yx_mhz", mix);
  r.t2 = mhz(c, "rates.gamma_t2_mhz", 0.0);
  r.isc = mhz(c, "rates.gamma_isc_mhz", ref::gamma_a1_mhz);
  r.isc_x = mhz(c, "rates.gamma_isc_x_mhz", 0.0);
  return r;
}

phonon::FitForm fit_form_from(const Config& c) {
  return phonon::FitForm::from_linear_mhz(c.number_or("mixfit.a_mhz_per_k5", ref::mix_fit_a_mhz_per_k5),
                                          c.number_or("mixfit.t0_k", ref::mix_fit_t0_k),
                                          c.number_or("mixfit.c_mhz", ref::mix_fit_c_mhz));
}

phonon::PhononCoupling coupling_from(const Config& c) {
  std::optional<EnergyMeV> cutoff;
  if (const auto v = c.number("phonon.cutoff_mev")) cutoff = EnergyMeV(*v);
  return phonon::PhononCoupling::from_linear_mhz(c.number_or("phonon.eta_mhz_per_mev3", ref::eta_mhz_per_mev3),
                                                 cutoff);
}

phonon::OverlapTable overlap_from(const Config& c) {
  if (const auto p = c.text("files.overlap_table")) return phonon::OverlapTable::load(*p);
  return phonon::OverlapTable::synthetic();
}

int channel_of(const Config& c) {
  const std::string ch = c.text_or("depol.channel", "x");
  if (ch == "x") return 0;
  if (ch == "y") return 1;
  throw InvalidArgument("depol.channel must be x or y");
}

dynamics::ThreeLevelModel three_level_from(const Config& c) {
  const Rates r = rates_from(c);
  dynamics::ThreeLevelModel m;
  m.rabi = required_mhz(c, "drive.rabi_mhz");
  m.detuning = AngularRate::fitted_linear_mhz(c.number_or("drive.detuning_mhz", 0.0));
  m.gamma_rad_x = r.rad;
  m.gamma_isc_x = r.isc_x;
  // In sink mode the dark slot is the singlet shelf: no y decay or mixing.
  const bool sink = r.isc_x.value() > 0.0;
  m.gamma_rad_y = sink && !c.has("rates.gamma_rad_y_mhz") ? AngularRate{} : r.rad_y;
  m.gamma_mix_xy = r.mix_xy;
  m.gamma_mix_yx = r.mix_yx;
  m.gamma_t2 = r.t2;
  return m;
}

dynamics::Level initial_level(const Config& c) {
  const std::string s = c.text_or("initial", "g");
  if (s == "g") return dynamics::Level::ground;
  if (s == "x") return dynamics::Level::bright;
  if (s == "y") return dynamics::Level::dark;
  throw InvalidArgument("initial must be g, x or y");
}

synth::ForwardModel forward_model_from(const Config& c, const std::string& model) {
  const Rates r = rates_from(c);
  synth::ForwardModel fm;
  if (model == "constant") {
    fm = {"constant", {}};
  } else if (model == "exponential") {
    fm = {"exponential", {{"rate", r.rad.value()}}};
  } else if (model == "a12") {
    const std::string b = c.text_or("branch", "both");
    if (b != "a1" && b != "a2") throw InvalidArgument("count generation needs branch = a1 or a2");
    fm = {"a12",
          {{"gamma_rad", r.rad.value()}, {"gamma_mix", r.mix_xy.value()}, {"gamma_isc", r.isc.value()},
           {"branch", b == "a1" ? 1.0 : 2.0}}};
  } else if (model == "depolarization" || model == "polarized") {
    const bool ideal = model == "depolarization";
    fm = {"depolarization",
          {{"gamma_rad", r.rad.value()},
           {"gamma_mix", r.mix_xy.value()},
           {"amp", ideal ? 1.0 : c.number_or("depol.amp", ref::depol_amplitude)},
           {"eps", ideal ? 0.0 : c.number_or("depol.eps", ref::depol_epsilon)},
           {"t0", ideal ? 0.0 : c.number_or("depol.t0_ns", ref::depol_t0_ns)},
           {"channel", static_cast<double>(channel_of(c))}}};
  } else if (model == "rabi") {
    fm = {"rabi",
          {{"amp", c.number_or("drive.amp", 1.0)},
           {"omega", required_mhz(c, "drive.rabi_mhz").value()},
           {"phi", c.number_or("drive.phi", 0.0)},
           {"t0", c.number_or("drive.t0_ns", 0.0)},
           {"tau_rabi", c.number_or("drive.tau_rabi_ns", 4.0 / (3.0 * r.rad.value()))},
           {"gamma_isc_x", r.isc_x.value()}}};
  } else if (model == "lindblad") {
    const dynamics::ThreeLevelModel m = three_level_from(c);
    fm = {"lindblad",
          {{"rabi", m.rabi.value()},
           {"detuning", m.detuning.value()},
           {"gamma_rad_x", m.gamma_rad_x.value()},
           {"gamma_rad_y", m.gamma_rad_y.value()},
           {"gamma_mix_xy", m.gamma_mix_xy.value()},
           {"gamma_mix_yx", m.gamma_mix_yx.value()},
           {"gamma_t2", m.gamma_t2.value()},
           {"gamma_isc_x", m.gamma_isc_x.value()},
           {"initial", static_cast<double>(static_cast<int>(initial_level(c)))}}};
  } else {
    throw InvalidArgument("unknown model '" + model + "'");
  }
  return fm;
}

void write_table(std::ostream& os, std::vector<std::string> header, std::vector<Eigen::VectorXd> cols,
                 std::map<std::string, std::string> meta = {}) {
  io::CsvTable t;
  t.header = std::move(header);
  t.columns = std::move(cols);
  t.meta = std::move(meta);
  io::write_csv(os, t);
}

TraceMetadata metadata_from(const Config& c) {
  TraceMetadata meta;
  if (const auto t = c.number("temperature_k")) meta.temperature_k = *t;
  return meta;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const Options& o, std::ostream& out) {
  const Config c = load_config(o);
  const auto model = c.text("model");
  if (!model) throw InvalidArgument("config key 'model' is required for simulate");
  const std::string engine = c.text_or("engine", "closedform");
  if (engine != "closedform" && engine != "numeric") throw InvalidArgument("engine must be closedform or numeric");

  if (c.has("synth.total_counts")) {
    synth::ExperimentSpec spec;
    spec.model = forward_model_from(c, *model);
    spec.total_counts = *c.number("synth.total_counts");
    spec.bin_width_ns = c.number_or("synth.bin_width_ns", 0.25);
    spec.span_ns = c.number_or("synth.span_ns", 200.0);
    spec.background_rate = c.number_or("synth.background", 0.0);
    spec.pulse_edge_ns = c.number_or("synth.pulse_edge_ns", ref::pulse_fwhm_ns);
    spec.pulse_start_ns = c.number_or("synth.pulse_start_ns", 0.0);
    const double seed = c.number_or("synth.seed", 0.0);
    if (seed < 0.0 || seed != std::floor(seed)) throw InvalidArgument("synth.seed must be a nonnegative integer");
    spec.seed = o.seed.value_or(static_cast<std::uint64_t>(seed));
    TimeTrace tr = synth::generate(spec);
    tr.metadata().temperature_k = metadata_from(c).temperature_k;
    if (*model == "depolarization" || *model == "polarized") tr.metadata().channel = channel_of(c) == 0 ? "x" : "y";
    emit(o, out, [&](std::ostream& os) { io::write_trace(os, tr); });
    return 0;
  }

  const Eigen::VectorXd t = time_grid(c);
  const Rates r = rates_from(c);
  const bool numeric = engine == "numeric";
  std::map<std::string, std::string> meta;
  if (c.has("temperature_k")) meta["temperature_k"] = io::format_double(*c.number("temperature_k"));

  if (*model == "a12") {
    const std::string b = c.text_or("branch", "both");
    if (b != "a1" && b != "a2" && b != "both") throw InvalidArgument("branch must be a1, a2 or both");
    auto branch = [&](Branch which) -> Eigen::VectorXd {
      if (!numeric) return closedform::fluorescence_a12(r.rad, r.mix_xy, r.isc, which, t.array()).matrix();
      const Eigen::Vector2d p0 = which == Branch::a1 ? Eigen::Vector2d(1, 0) : Eigen::Vector2d(0, 1);
      return dynamics::evolve_rates(dynamics::build_a12_model(r.rad, r.mix_xy, r.isc), p0, t).total();
    };
    std::vector<std::string> h{"time_ns"};
    std::vector<Eigen::VectorXd> cols{t};
    if (b != "a2") h.push_back("a1"), cols.push_back(branch(Branch::a1));
    if (b != "a1") h.push_back("a2"), cols.push_back(branch(Branch::a2));
    emit(o, out, [&](std::ostream& os) { write_table(os, h, cols, meta); });
  } else if (*model == "depolarization") {
    Eigen::VectorXd bright(t.size()), dark(t.size());
    if (numeric) {
      const auto res = dynamics::evolve_rates(dynamics::build_depolarization_model(r.rad, r.mix_xy),
                                              Eigen::Vector2d(1, 0), t);
      bright = res.populations.col(0);
      dark = res.populations.col(1);
    } else {
      for (Eigen::Index i = 0; i < t.size(); ++i) {
        const auto p = closedform::depolarization_populations(r.rad, r.mix_xy, t[i]);
        bright[i] = p.bright;
        dark[i] = p.dark;
      }
    }
    emit(o, out, [&](std::ostream& os) { write_table(os, {"time_ns", "bright", "dark"}, {t, bright, dark}, meta); });
  } else if (*model == "polarized") {
    Eigen::VectorXd x(t.size()), y(t.size());
    const double amp = c.number_or("depol.amp", ref::depol_amplitude), eps = c.number_or("depol.eps", ref::depol_epsilon);
    const double t0 = c.number_or("depol.t0_ns", ref::depol_t0_ns);
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      const auto p = closedform::observed_polarized_intensity(amp, eps, t0, r.rad, r.mix_xy, t[i]);
      x[i] = p.x;
      y[i] = p.y;
    }
    emit(o, out, [&](std::ostream& os) { write_table(os, {"time_ns", "x", "y"}, {t, x, y}, meta); });
  } else if (*model == "lindblad") {
    const auto res = dynamics::evolve_lindblad(three_level_from(c), dynamics::DensityMatrix3::pure(initial_level(c)), t);
    emit(o, out, [&](std::ostream& os) {
      write_table(os, {"time_ns", "ground", "bright", "dark", "fluorescence", "coherence_gx"},
                  {t, res.populations.col(0), res.populations.col(1), res.populations.col(2),
                   res.fluorescence().values(), res.coherence_gx},
                  meta);
    });
  } else {
    const Eigen::VectorXd v = synth::model_intensity(forward_model_from(c, *model), t);
    TimeTrace tr(t, v, TraceKind::intensity, std::nullopt, metadata_from(c));
    emit(o, out, [&](std::ostream& os) { io::write_trace(os, tr); });
  }
  return 0;
}

// --------------------------------------------------------------------- fit

struct ReportRow {
  std::string name;
  double value, sigma, lo, hi;
  std::string unit;
};

struct Report {
  std::string procedure;
  const estimate::FitResult* fit = nullptr;
  std::vector<ReportRow> rows;
  std::vector<std::string> notes;
};

ReportRow row_from(const estimate::FitResult& f, const std::string& name, double scale, const std::string& unit) {
  const Eigen::Index i = f.index(name);
  return {name, f.params[i] * scale, f.sigma[i] * std::abs(scale), f.ci95(i, 0) * scale, f.ci95(i, 1) * scale, unit};
}

ReportRow derived_row(const std::string& name, double value, double sigma, const std::string& unit) {
  return {name, value, sigma, value - 1.96 * sigma, value + 1.96 * sigma, unit};
}

void print_report(std::ostream& os, const Report& r) {
  const estimate::FitResult& f = *r.fit;
  os << "procedure: " << r.procedure << '\n';
  os << "status: " << f.message << " (" << f.iterations << " iterations)\n";
  os << "chi2 = " << io::format_double(f.chi2) << ", dof = " << f.dof
     << ", chi2/dof = " << io::format_double(f.reduced_chi2()) << '\n';
  for (const std::string& n : r.notes) os << n << '\n';
  os << std::left << std::setw(14) << "parameter" << std::setw(16) << "value" << std::setw(16) << "sigma"
     << std::setw(34) << "95% CI" << "unit\n";
  for (const ReportRow& row : r.rows) {
    std::ostringstream ci;
    ci.precision(6);
    ci << "[" << row.lo << ", " << row.hi << "]";
    std::ostringstream v, s;
    v.precision(8);
    s.precision(4);
    v << row.value;
    s << row.sigma;
    os << std::setw(14) << row.name << std::setw(16) << v.str() << std::setw(16) << s.str() << std::setw(34)
       << ci.str() << row.unit << '\n';
  }
}

void write_report_csv(std::ostream& os, const Report& r) {
  const estimate::FitResult& f = *r.fit;
  os << "# procedure = " << r.procedure << '\n'
     << "# converged = " << (f.converged ? 1 : 0) << '\n'
     << "# status = " << f.message << '\n'
     << "# iterations = " << f.iterations << '\n'
     << "# chi2 = " << io::format_double(f.chi2) << '\n'
     << "# dof = " << f.dof << '\n';
  os << "parameter,value,sigma,ci95_lo,ci95_hi,unit\n";
  for (const ReportRow& row : r.rows)
    os << row.name << ',' << io::format_double(row.value) << ',' << io::format_double(row.sigma) << ','
       << io::format_double(row.lo) << ',' << io::format_double(row.hi) << ',' << row.unit << '\n';
}

std::optional<estimate::Weighting> weighting_from(const Config& c) {
  const auto w = c.text("fit.weighting");
  if (!w) return std::nullopt;
  if (*w == "uniform") return estimate::Weighting::uniform;
  if (*w == "poisson") return estimate::Weighting::poisson;
  if (*w == "provided") return estimate::Weighting::provided;
  throw ParseError("fit.weighting must be uniform, poisson or provided", c.line("fit.weighting"));
}

io::LoadedTrace load_input(const Options& o, const Config& c, const std::string& path) {
  std::optional<std::string> bg;
  if (!o.background.empty())
    bg = o.background;
  else if (const auto b = c.text("files.background"))
    bg = *b;
  return io::load_trace(path, bg, c.number("fit.reject_before_ns"), c.text("fit.column"));
}

constexpr double kToMhz = 1.0 / kRadPerNsPerMhz;

int cmd_fit(const Options& o, std::ostream& out, std::ostream& err) {
  const Config c = load_config(o);
  const std::string& p = o.procedure;
  auto need_inputs = [&](std::size_t n) {
    if (o.inputs.size() != n)
      throw InvalidArgument("procedure '" + p + "' needs " + std::to_string(n) + " input file(s), got " +
                            std::to_string(o.inputs.size()));
  };
  const AngularRate gamma_rad = mhz(c, "rates.gamma_rad_mhz", ref::gamma_rad_mhz);
  estimate::NllsOptions nopt;
  if (const auto m = c.number("fit.max_iterations")) {
    if (!(*m >= 1.0) || *m != std::floor(*m) || *m > 1e6)
      throw ParseError("fit.max_iterations must be a positive integer", c.line("fit.max_iterations"));
    nopt.max_iterations = static_cast<int>(*m);
  }
  estimate::FitResult fit;
  Report rep;
  rep.procedure = p;

  auto note_clamped = [&](const io::LoadedTrace& lt, const std::string& path) {
    if (lt.clamped_bins > 0) {
      err << "warning: " << path << ": background subtraction clamped " << lt.clamped_bins << " bins to zero\n";
      rep.notes.push_back("background subtraction clamped " + std::to_string(lt.clamped_bins) + " bins (" + path + ")");
    }
  };

  if (p == "exp-window") {
    need_inputs(1);
    const io::LoadedTrace lt = load_input(o, c, o.inputs[0]);
    note_clamped(lt, o.inputs[0]);
    const estimate::FitWindow w{c.number_or("window.start_ns", ref::lifetime_window_start_ns),
                                c.number_or("window.length_ns", ref::lifetime_window_length_ns)};
    fit = estimate::fit_exponential_window(lt.trace, w, weighting_from(c), nopt);
    rep.fit = &fit;
    rep.rows.push_back(row_from(fit, "amplitude", 1.0, "1"));
    rep.rows.push_back(row_from(fit, "rate", kToMhz, "2pi*MHz"));
    rep.rows.push_back(derived_row("lifetime", 1.0 / fit.param("rate"),
                                   fit.error("rate") / std::pow(fit.param("rate"), 2), "ns"));
    const double isc = closedform::isc_rate_from_lifetime(1.0 / fit.param("rate"), gamma_rad).value();
    rep.rows.push_back(derived_row("gamma_isc", isc * kToMhz, fit.error("rate") * kToMhz, "2pi*MHz"));
  } else if (p == "rabi") {
    need_inputs(1);
    const io::LoadedTrace lt = load_input(o, c, o.inputs[0]);
    note_clamped(lt, o.inputs[0]);
    estimate::RabiFitOptions ro;
    ro.weighting = weighting_from(c);
    ro.nlls = nopt;
    if (c.has("fit.window_start_ns") || c.has("fit.window_length_ns"))
      ro.window = estimate::FitWindow{c.number_or("fit.window_start_ns", lt.trace.time(0)),
                                      c.number_or("fit.window_length_ns", lt.trace.time(lt.trace.size() - 1))};
    if (const auto w = c.number("fit.omega_mhz")) ro.init.omega = AngularRate::linear_mhz(*w).value();
    fit = estimate::fit_rabi_trace(lt.trace, ro);
    rep.fit = &fit;
    rep.rows.push_back(row_from(fit, "amp", 1.0, "1"));
    rep.rows.push_back(row_from(fit, "omega", kToMhz, "2pi*MHz"));
    rep.rows.push_back(row_from(fit, "phi", 1.0, "rad"));
    rep.rows.push_back(row_from(fit, "t0", 1.0, "ns"));
    rep.rows.push_back(row_from(fit, "tau_rabi", 1.0, "ns"));
    rep.rows.push_back(row_from(fit, "gamma_isc_x", kToMhz, "2pi*MHz"));
    const auto add = estimate::additional_decoherence(fit, gamma_rad);
    rep.rows.push_back(derived_row("gamma_add", add.value.to_linear_mhz(), add.sigma * kToMhz, "2pi*MHz"));
  } else if (p == "t5") {
    need_inputs(1);
    const io::CsvTable t = io::read_csv_file(o.inputs[0]);
    if (t.header != std::vector<std::string>{"temperature_k", "gamma_add_mhz", "sigma_mhz"})
      throw ParseError(o.inputs[0] + ": header must be 'temperature_k,gamma_add_mhz,sigma_mhz'", t.header_line);
    std::vector<estimate::T5Point> pts;
    for (Eigen::Index i = 0; i < t.rows(); ++i)
      pts.push_back({t.columns[0][i], t.columns[1][i] * kRadPerNsPerMhz, t.columns[2][i] * kRadPerNsPerMhz});
    fit = estimate::fit_t5(pts, nopt);
    rep.fit = &fit;
    rep.rows.push_back(row_from(fit, "a", kToMhz, "2pi*MHz/K^5"));
    rep.rows.push_back(row_from(fit, "t0", 1.0, "K"));
    rep.rows.push_back(row_from(fit, "c", kToMhz, "2pi*MHz"));
    if (fit.param("a") > 0.0) {
      const double eta = phonon::eta_from_coefficient(fit.param("a"));
      // eta ~ sqrt(A): relative error halves.
      rep.rows.push_back(derived_row("eta", eta * kToMhz, 0.5 * eta * fit.error("a") / fit.param("a") * kToMhz,
                                     "2pi*MHz/meV^3"));
    }
  } else if (p == "depol") {
    need_inputs(4);
    std::vector<TimeTrace> traces;
    for (const std::string& path : o.inputs) {
      const io::LoadedTrace lt = load_input(o, c, path);
      note_clamped(lt, path);
      traces.push_back(lt.trace);
    }
    estimate::DepolFitOptions dopt;
    dopt.weighting = weighting_from(c);
    dopt.nlls = nopt;
    const estimate::DepolFit d = estimate::fit_depolarization(
        traces, mhz(c, "fit.gamma_mix_low_mhz", ref::gamma_mix_5k_mhz),
        mhz(c, "fit.gamma_mix_high_mhz", ref::gamma_mix_20k_mhz), gamma_rad, dopt);
    fit = d.fit;
    rep.fit = &fit;
    if (d.channels_swapped) rep.notes.push_back("note: x/y channel labels appear exchanged; eps reported as 1 - eps");
    rep.rows.push_back(row_from(fit, "amp", 1.0, "1"));
    rep.rows.push_back(row_from(fit, "t0", 1.0, "ns"));
    rep.rows.push_back(row_from(fit, "eps", 1.0, "1"));
  } else if (p == "gamma-a1") {
    need_inputs(1);
    const io::CsvTable t = io::read_csv_file(o.inputs[0]);
    if (t.header != std::vector<std::string>{"temperature_k", "gamma_eff_mhz", "sigma_mhz", "branch"})
      throw ParseError(o.inputs[0] + ": header must be 'temperature_k,gamma_eff_mhz,sigma_mhz,branch'", t.header_line);
    std::vector<estimate::IscPoint> pts;
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      const double b = t.columns[3][i];
      if (b != 1.0 && b != 2.0) throw ParseError("branch must be 1 or 2", t.row_lines[i]);
      pts.push_back({t.columns[0][i], t.columns[1][i] * kRadPerNsPerMhz, t.columns[2][i] * kRadPerNsPerMhz,
                     b == 1.0 ? Branch::a1 : Branch::a2});
    }
    const phonon::FitForm form = fit_form_from(c);
    phonon::EffectiveRateOptions w;
    w.window_start_ns = c.number_or("window.start_ns", ref::lifetime_window_start_ns);
    w.window_length_ns = c.number_or("window.length_ns", ref::lifetime_window_length_ns);
    fit = estimate::fit_gamma_a1(
        pts, [&](TemperatureK T) { return phonon::mixing_rate_fitform_clamped(form, T); }, gamma_rad, w, nopt);
    rep.fit = &fit;
    rep.rows.push_back(row_from(fit, "gamma_a1", kToMhz, "2pi*MHz"));
  } else {
    throw InvalidArgument("unknown procedure '" + p + "' (rabi, exp-window, t5, depol, gamma-a1)");
  }

  print_report(out, rep);
  if (!o.out_path.empty()) {
    std::ofstream f(o.out_path);
    if (!f) throw InvalidArgument("cannot write '" + o.out_path + "'");
    write_report_csv(f, rep);
  }
  if (!fit.converged) {
    err << "error: fit did not converge: " << fit.message << '\n';
    return 4;
  }
  return 0;
}

// ------------------------------------------------------------------- sweep

struct SweepAxis {
  std::string axis;
  std::vector<double> points;
};

SweepAxis parse_sweep(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() != 4) throw InvalidArgument("--sweep expects AXIS:LO:HI:STEP");
  double v[3];
  for (int i = 0; i < 3; ++i) {
    try {
      std::size_t used = 0;
      v[i] = std::stod(parts[i + 1], &used);
      if (used != parts[i + 1].size()) throw std::invalid_argument(parts[i + 1]);
    } catch (const std::exception&) {
      throw InvalidArgument("--sweep: '" + parts[i + 1] + "' is not a number");
    }
  }
  if (!(v[2] > 0.0) || !(v[1] >= v[0])) throw InvalidArgument("--sweep: need LO <= HI and STEP > 0");
  SweepAxis ax{parts[0], {}};
  const auto n = static_cast<long>(std::floor((v[1] - v[0]) / v[2] + 1e-9));
  for (long i = 0; i <= n; ++i) ax.points.push_back(v[0] + static_cast<double>(i) * v[2]);
  return ax;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  const Config c = load_config(o);
  if (o.sweep.empty()) throw InvalidArgument("sweep needs --sweep AXIS:LO:HI:STEP");
  const SweepAxis ax = parse_sweep(o.sweep);
  const auto n = static_cast<Eigen::Index>(ax.points.size());
  const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(ax.points.data(), n);

  if (ax.axis == "T") {
    const phonon::PhononCoupling coupling = coupling_from(c);
    const phonon::FitForm form = fit_form_from(c);
    const Rates r = rates_from(c);
    phonon::EffectiveRateOptions w;
    w.window_start_ns = c.number_or("window.start_ns", ref::lifetime_window_start_ns);
    w.window_length_ns = c.number_or("window.length_ns", ref::lifetime_window_length_ns);
    Eigen::VectorXd t5(n), fitv(n), a1(n), a2(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const TemperatureK T(x[i]);
      t5[i] = phonon::mixing_rate_t5(coupling, T).to_linear_mhz();
      fitv[i] = phonon::mixing_rate_fitform(form, T).to_linear_mhz();
      const auto e = phonon::effective_isc_rates(r.rad, r.isc, phonon::mixing_rate_fitform_clamped(form, T), w);
      a1[i] = e.a1.to_linear_mhz();
      a2[i] = e.a2.to_linear_mhz();
    }
    emit(o, out, [&](std::ostream& os) {
      write_table(os, {"temperature_k", "gamma_mix_t5_mhz", "gamma_mix_fit_mhz", "gamma_eff_a1_mhz", "gamma_eff_a2_mhz"},
                  {x, t5, fitv, a1, a2});
    });
    return 0;
  }
  if (ax.axis == "delta") {
    const phonon::PhononCoupling coupling = coupling_from(c);
    const phonon::OverlapTable f = overlap_from(c);
    phonon::SpinOrbit so;
    so.lambda_par = AngularRate::linear_ghz(c.number_or("spin_orbit.lambda_par_ghz", ref::lambda_par_ghz));
    so.ratio = c.number_or("spin_orbit.ratio", ref::so_ratio);
    std::optional<phonon::MeasuredRatio> measured;
    if (const auto m = c.number("measured.ratio"))
      measured = phonon::MeasuredRatio{*m, c.number_or("measured.ratio_uncertainty", 0.0)};
    const phonon::RatioScan scan = phonon::ratio_scan(coupling, f, ax.points, measured);
    Eigen::VectorXd fv(n), ga1(n), ge12(n), ratio(n), bound(n), excl(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const phonon::RatioRow& row = scan.rows[i];
      const AngularRate a1 = phonon::isc_rate_a1(so, f, EnergyMeV(row.delta_mev));
      fv[i] = row.f_per_mev;
      ga1[i] = a1.to_linear_mhz();
      ge12[i] = row.ratio * ga1[i];
      ratio[i] = row.ratio;
      bound[i] = row.ratio_bound;
      excl[i] = row.excluded ? 1.0 : 0.0;
    }
    std::map<std::string, std::string> meta;
    meta["overlap_provenance"] = f.is_synthetic() ? "synthetic" : "user";
    meta["bound_monotone"] = scan.bound_monotone ? "1" : "0";
    if (measured) {
      std::string ranges;
      for (const auto& [lo, hi] : scan.excluded)
        ranges += (ranges.empty() ? "" : " ") + io::format_double(lo) + ".." + io::format_double(hi);
      meta["excluded_mev"] = ranges.empty() ? "none" : ranges;
      meta["lower_boundary_mev"] = scan.lower_boundary_mev ? io::format_double(*scan.lower_boundary_mev) : "none";
    }
    emit(o, out, [&](std::ostream& os) {
      write_table(os, {"delta_mev", "f_per_mev", "gamma_a1_mhz", "gamma_e12_mhz", "ratio", "ratio_bound", "excluded"},
                  {x, fv, ga1, ge12, ratio, bound, excl}, meta);
    });
    return 0;
  }
  throw InvalidArgument("unknown sweep axis '" + ax.axis + "' (T or delta)");
}

// ------------------------------------------------------------------ verify

int cmd_verify(const Options& o, std::ostream& out) {
  const verify::Report rep = verify::run();
  nlohmann::json j;
  j["passed"] = rep.passed();
  j["checks"] = nlohmann::json::array();
  for (const verify::Check& c : rep.checks) j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  if (o.json) {
    out << j.dump(2) << '\n';
  } else {
    for (const verify::Check& c : rep.checks) out << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    out << (rep.passed() ? "all checks passed" : "FAILED: " + std::to_string(rep.failures().size()) + " check(s)") << '\n';
  }
  if (!o.out_path.empty()) {
    std::ofstream f(o.out_path);
    if (!f) throw InvalidArgument("cannot write '" + o.out_path + "'");
    f << j.dump(2) << '\n';
  }
  return rep.passed() ? 0 : 1;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Phonon-induced NV excited-state dynamics: simulate, fit, sweep, verify"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* sub) { sub->add_option("--config", o.config_path, "key = value configuration file"); };

  CLI::App* sim = app.add_subcommand("simulate", "write a model trace or a synthetic count histogram");
  common(sim);
  sim->add_option("--out", o.out_path, "output CSV (default stdout)");
  sim->add_option("--seed", o.seed, "random seed for count generation");

  CLI::App* fit = app.add_subcommand("fit", "fit traces and print parameters with 95% intervals");
  common(fit);
  fit->add_option("--procedure", o.procedure, "rabi | exp-window | t5 | depol | gamma-a1")->required();
  fit->add_option("--out", o.out_path, "parameter CSV");
  fit->add_option("--background", o.background, "background trace to subtract");
  fit->add_option("inputs", o.inputs, "input CSV file(s)");

  CLI::App* sweep = app.add_subcommand("sweep", "tabulate predictions over temperature or singlet spacing");
  common(sweep);
  sweep->add_option("--sweep", o.sweep, "AXIS:LO:HI:STEP with AXIS = T or delta")->required();
  sweep->add_option("--out", o.out_path, "output CSV (default stdout)");

  CLI::App* ver = app.add_subcommand("verify", "run the oracle checks");
  ver->add_option("--out", o.out_path, "write the JSON summary here");
  ver->add_flag("--json", o.json, "print the JSON summary instead of text");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sim) return cmd_simulate(o, out);
    if (*fit) return cmd_fit(o, out, err);
    if (*sweep) return cmd_sweep(o, out);
    return cmd_verify(o, out);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace nvp::cli
