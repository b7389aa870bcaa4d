#pragma once

// Measured NV-center values used as defaults, quoted as linear MHz
// (multiply by 2pi for angular rates) unless stated otherwise.

namespace nvp::reference {

inline constexpr double gamma_rad_mhz = 13.2;
inline constexpr double gamma_rad_sigma_mhz = 0.5;

inline constexpr double gamma_a1_mhz = 16.0;
inline constexpr double gamma_a1_ci95_mhz = 0.6;

// Gamma_Add(T) = A (T - T0)^5 + C
inline constexpr double mix_fit_a_mhz_per_k5 = 2.0e-5;
inline constexpr double mix_fit_t0_k = 4.4;
inline constexpr double mix_fit_c_mhz = 0.08;

inline constexpr double eta_mhz_per_mev3 = 44.0;

inline constexpr double gamma_mix_5k_mhz = 0.08;
inline constexpr double gamma_mix_20k_mhz = 18.5;

// Polarization-resolved depolarization fit.
inline constexpr double depol_amplitude = 0.90;
inline constexpr double depol_t0_ns = -3.6;
inline constexpr double depol_epsilon = 0.10;

inline constexpr double gamma_isc_ex_bound_mhz = 0.62;

inline constexpr double lambda_par_ghz = 5.33;
inline constexpr double so_ratio = 1.2;
inline constexpr double so_ratio_sigma = 0.2;

// Ex-Ey strain splitting; metadata only.
inline constexpr double delta_xy_ghz = 3.9;

// Lifetime fit window, ns after the start of the excitation pulse.
inline constexpr double lifetime_window_start_ns = 4.0;
inline constexpr double lifetime_window_length_ns = 115.0;

inline constexpr double reject_after_pulse_ns = 3.3;
inline constexpr double pulse_fwhm_ns = 2.0;

}  // namespace nvp::reference
