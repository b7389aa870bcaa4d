#pragma once

// Canonical units throughout the library: rates in rad/ns, times in ns,
// energies in meV, temperatures in K.

#include <cmath>
#include <compare>
#include <numbers>
#include <string>

#include "nvphonon/errors.hpp"

namespace nvp {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// One linear MHz expressed as an angular rate in rad/ns.
inline constexpr double kRadPerNsPerMhz = kTwoPi * 1e-3;

/// Physical constants in canonical units. Passed by value where a caller
/// (e.g. the verification harness) needs to substitute a perturbed set.
struct Constants {
  double hbar = 6.582119569e-4;  // meV ns
  double kB = 8.617333262e-2;    // meV / K
  double alpha = 25.9;           // two-phonon Ex-Ey mixing numeric constant
};

inline constexpr Constants kConstants{};

namespace detail {
inline double require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw InvalidArgument(std::string(what) + " must be finite");
  return v;
}
}  // namespace detail

/// Decay, coupling or mixing rate. Physical rates are nonnegative; values
/// produced by fits may be negative and are tagged `fitted`.
class AngularRate {
 public:
  enum class Kind { physical, fitted };

  constexpr AngularRate() = default;

  static AngularRate rad_per_ns(double v) {
    detail::require_finite(v, "rate");
    if (v < 0.0) throw InvalidArgument("physical rate must be >= 0, got " + std::to_string(v));
    return AngularRate(v, Kind::physical);
  }
  static AngularRate fitted_rad_per_ns(double v) {
    return AngularRate(detail::require_finite(v, "rate"), Kind::fitted);
  }
  static AngularRate linear_mhz(double f) {
    return rad_per_ns(detail::require_finite(f, "frequency") * kRadPerNsPerMhz);
  }
  static AngularRate fitted_linear_mhz(double f) {
    return fitted_rad_per_ns(detail::require_finite(f, "frequency") * kRadPerNsPerMhz);
  }
  static AngularRate linear_ghz(double f) { return linear_mhz(detail::require_finite(f, "frequency") * 1e3); }

  constexpr double value() const { return value_; }
  /// Display form: the number X in "2pi x X MHz".
  double to_linear_mhz() const { return value_ / kRadPerNsPerMhz; }

  constexpr Kind kind() const { return kind_; }
  constexpr bool is_fitted() const { return kind_ == Kind::fitted; }

  /// Reinterprets a fitted value as physical; throws if negative.
  AngularRate as_physical() const { return rad_per_ns(value_); }
  /// max(value, 0) as a physical rate.
  AngularRate clamped() const { return AngularRate(value_ > 0.0 ? value_ : 0.0, Kind::physical); }

  friend AngularRate operator+(AngularRate a, AngularRate b) {
    return AngularRate(a.value_ + b.value_, combine(a, b));
  }
  friend AngularRate operator-(AngularRate a, AngularRate b) {
    return fitted_rad_per_ns(a.value_ - b.value_);
  }
  friend AngularRate operator*(double s, AngularRate a) {
    return s >= 0.0 ? AngularRate(s * a.value_, a.kind_) : fitted_rad_per_ns(s * a.value_);
  }
  friend AngularRate operator*(AngularRate a, double s) { return s * a; }
  friend auto operator<=>(AngularRate a, AngularRate b) { return a.value_ <=> b.value_; }
  friend bool operator==(AngularRate a, AngularRate b) { return a.value_ == b.value_; }

 private:
  constexpr AngularRate(double v, Kind k) : value_(v), kind_(k) {}
  static Kind combine(AngularRate a, AngularRate b) {
    return a.is_fitted() || b.is_fitted() ? Kind::fitted : Kind::physical;
  }

  double value_ = 0.0;
  Kind kind_ = Kind::physical;
};

class EnergyMeV {
 public:
  constexpr EnergyMeV() = default;
  explicit EnergyMeV(double mev) : value_(detail::require_finite(mev, "energy")) {
    if (mev < 0.0) throw InvalidArgument("energy must be >= 0 meV");
  }
  constexpr double value() const { return value_; }
  friend auto operator<=>(EnergyMeV, EnergyMeV) = default;

 private:
  double value_ = 0.0;
};

class TemperatureK {
 public:
  constexpr TemperatureK() = default;
  explicit TemperatureK(double k) : value_(detail::require_finite(k, "temperature")) {
    if (k < 0.0) throw InvalidArgument("temperature must be >= 0 K");
  }
  constexpr double value() const { return value_; }
  friend auto operator<=>(TemperatureK, TemperatureK) = default;

 private:
  double value_ = 0.0;
};

inline AngularRate rate_from_linear_mhz(double f) { return AngularRate::linear_mhz(f); }

inline EnergyMeV thermal_energy(TemperatureK t, const Constants& c = kConstants) {
  return EnergyMeV(c.kB * t.value());
}

/// E = hbar * omega.
inline AngularRate energy_to_rate(EnergyMeV e, const Constants& c = kConstants) {
  return AngularRate::rad_per_ns(e.value() / c.hbar);
}
inline EnergyMeV rate_to_energy(AngularRate w, const Constants& c = kConstants) {
  return EnergyMeV(w.value() * c.hbar);
}
inline double energy_to_linear_ghz(EnergyMeV e, const Constants& c = kConstants) {
  return e.value() / (c.hbar * kTwoPi);
}
inline EnergyMeV linear_ghz_to_energy(double ghz, const Constants& c = kConstants) {
  return EnergyMeV(detail::require_finite(ghz, "frequency") * kTwoPi * c.hbar);
}

}  // namespace nvp
