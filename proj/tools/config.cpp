#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "nvphonon/errors.hpp"

namespace nvp::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

bool known(const std::string& key) {
  const auto& reg = key_registry();
  return std::any_of(reg.begin(), reg.end(), [&](const KeyInfo& k) { return k.key == key; });
}

}  // namespace

const std::vector<KeyInfo>& key_registry() {
  static const std::vector<KeyInfo> reg = {
      {"model", "simulate: constant | exponential | a12 | depolarization | polarized | rabi | lindblad"},
      {"engine", "simulate: closedform (default) or numeric (rate-equation integrator)"},
      {"branch", "a12 model: a1 | a2 | both (default both; counts need a1 or a2)"},
      {"initial", "lindblad model: initial level g | x | y (default g)"},
      {"temperature_k", "temperature label written to simulated traces"},
      {"time.start_ns", "output grid start (default 0)"},
      {"time.stop_ns", "output grid end (default 200)"},
      {"time.step_ns", "output grid step (default 0.25)"},
      {"rates.gamma_rad_mhz", "radiative rate (default 13.2)"},
      {"rates.gamma_rad_y_mhz", "Ey radiative rate (default: rates.gamma_rad_mhz)"},
      {"rates.gamma_mix_mhz", "symmetric mixing rate (default 0)"},
      {"rates.gamma_mix_xy_mhz", "Ex -> Ey mixing (default: rates.gamma_mix_mhz)"},
      {"rates.gamma_mix_yx_mhz", "Ey -> Ex mixing (default: rates.gamma_mix_mhz)"},
      {"rates.gamma_t2_mhz", "pure dephasing on the driven transition (default 0)"},
      {"rates.gamma_isc_mhz", "ISC rate from A1 (default 16.0)"},
      {"rates.gamma_isc_x_mhz", "ISC rate from Ex to the sink (default 0)"},
      {"drive.rabi_mhz", "Rabi frequency"},
      {"drive.detuning_mhz", "drive detuning (default 0)"},
      {"drive.amp", "rabi model amplitude (default 1)"},
      {"drive.phi", "rabi model phase, rad (default 0)"},
      {"drive.t0_ns", "rabi model envelope origin (default 0)"},
      {"drive.tau_rabi_ns", "rabi model envelope decay time"},
      {"depol.amp", "polarized model amplitude (default 0.90)"},
      {"depol.t0_ns", "polarized model time origin (default -3.6)"},
      {"depol.eps", "polarization error (default 0.10)"},
      {"depol.channel", "x | y for count generation (default x)"},
      {"mixfit.a_mhz_per_k5", "mixing fit A (default 2.0e-5)"},
      {"mixfit.t0_k", "mixing fit T0 (default 4.4)"},
      {"mixfit.c_mhz", "mixing fit C (default 0.08)"},
      {"phonon.eta_mhz_per_mev3", "electron-phonon coupling eta (default 44.0)"},
      {"phonon.cutoff_mev", "acoustic phonon cutoff (default none)"},
      {"spin_orbit.lambda_par_ghz", "axial spin-orbit coupling (default 5.33)"},
      {"spin_orbit.ratio", "lambda_perp / lambda_par (default 1.2)"},
      {"measured.ratio", "measured Gamma_E12 / Gamma_A1 for the exclusion scan"},
      {"measured.ratio_uncertainty", "its uncertainty; lower bound = ratio - uncertainty"},
      {"window.start_ns", "lifetime fit window start (default 4)"},
      {"window.length_ns", "lifetime fit window length (default 115)"},
      {"files.overlap_table", "overlap CSV (energy_mev,f_per_mev); default synthetic"},
      {"files.background", "background trace subtracted bin by bin before fitting"},
      {"fit.reject_before_ns", "drop samples stamped before this time"},
      {"fit.weighting", "uniform | poisson | provided (default by trace kind)"},
      {"fit.max_iterations", "iteration cap of the least-squares solver (default 500)"},
      {"fit.column", "trace column to fit in multi-column files"},
      {"fit.gamma_mix_low_mhz", "depol fit: mixing rate at the lower temperature (default 0.08)"},
      {"fit.gamma_mix_high_mhz", "depol fit: mixing rate at the higher temperature (default 18.5)"},
      {"fit.omega_mhz", "rabi fit: initial Rabi frequency (default: periodogram)"},
      {"fit.window_start_ns", "rabi fit: window start"},
      {"fit.window_length_ns", "rabi fit: window length"},
      {"synth.total_counts", "generate Poisson counts with this expected total"},
      {"synth.bin_width_ns", "histogram bin width (default 0.25)"},
      {"synth.span_ns", "histogram span (default 200)"},
      {"synth.background", "background counts per bin (default 0)"},
      {"synth.pulse_edge_ns", "edge smoothing FWHM (default 2; 0 disables)"},
      {"synth.pulse_start_ns", "model time origin (default 0)"},
      {"synth.seed", "random seed (default 0; --seed overrides)"},
  };
  return reg;
}

Config Config::parse(const std::string& text) {
  Config c;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    if (const auto hash = s.find('#'); hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line);
    const std::string key = trim(s.substr(0, eq)), value = trim(s.substr(eq + 1));
    if (key.empty()) throw ParseError("missing key", line);
    if (!known(key)) throw ParseError("unknown key '" + key + "'", line);
    if (value.empty()) throw ParseError("missing value for '" + key + "'", line);
    if (c.values_.count(key)) throw ParseError("key '" + key + "' repeated", line);
    c.values_[key] = {value, line};
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str());
  } catch (const ParseError& e) {
    throw e.in_file(path);
  }
}

std::optional<std::string> Config::text(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second.value;
}

std::string Config::text_or(const std::string& key, const std::string& fallback) const {
  return text(key).value_or(fallback);
}

std::optional<double> Config::number(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  const std::string& s = it->second.value;
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  if (b != e && *b == '+') ++b;
  const auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e) throw ParseError("'" + key + "' is not a number: '" + s + "'", it->second.line);
  return v;
}

double Config::number_or(const std::string& key, double fallback) const { return number(key).value_or(fallback); }

int Config::line(const std::string& key) const {
  const auto it = values_.find(key);
  return it == values_.end() ? 0 : it->second.line;
}

void Config::set(const std::string& key, const std::string& value) {
  if (!known(key)) throw InvalidArgument("unknown key '" + key + "'");
  values_[key] = {value, 0};
}

}  // namespace nvp::cli
