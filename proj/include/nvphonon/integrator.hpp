#pragma once

// Explicit Runge-Kutta integrators for y' = f(t, y) over Eigen column
// vectors (real or complex). Both drivers report the state at each requested
// output time through an observer callback.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "nvphonon/errors.hpp"

namespace nvp {

enum class IntegratorMode { fixed_rk4, adaptive_dopri5 };

struct IntegratorOptions {
  IntegratorMode mode = IntegratorMode::fixed_rk4;
  double dt = 0.01;         // ns, fixed-step size (upper bound)
  double abs_tol = 1e-10;   // adaptive mode
  double rel_tol = 0.0;     // adaptive mode
  double min_step = 1e-12;  // ns; adaptive step-size underflow threshold
  double initial_step = 1e-3;
};

namespace detail {

inline void check_output_times(const Eigen::VectorXd& times, double t0) {
  for (Eigen::Index i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i])) throw InvalidArgument("time grid contains a non-finite value");
    const double prev = i == 0 ? t0 : times[i - 1];
    if (i == 0 ? times[i] < prev : !(times[i] > prev))
      throw InvalidArgument("time grid must be strictly increasing and start at or after " +
                            std::to_string(t0) + " ns");
  }
}

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& v) {
  return v.size() == 0 ? 0.0 : static_cast<double>(v.cwiseAbs().maxCoeff());
}

}  // namespace detail

/// One classical fourth-order Runge-Kutta step of size h.
template <typename State, typename Rhs>
void rk4_step(const Rhs& f, double t, State& y, double h) {
  const State k1 = f(t, y);
  const State k2 = f(t + 0.5 * h, State(y + (0.5 * h) * k1));
  const State k3 = f(t + 0.5 * h, State(y + (0.5 * h) * k2));
  const State k4 = f(t + h, State(y + h * k3));
  y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Fixed-step RK4 from (t0, y0). Each interval between consecutive output
/// times is split into the smallest number of equal steps not exceeding dt,
/// so results depend only on the grid and dt.
template <typename State, typename Rhs, typename Observer>
void integrate_rk4(const Rhs& f, double t0, State y, const Eigen::VectorXd& times, double dt,
                   Observer&& observe) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("integrator: dt must be positive");
  detail::check_output_times(times, t0);
  double t = t0;
  for (Eigen::Index k = 0; k < times.size(); ++k) {
    const double span = times[k] - t;
    if (span > 0.0) {
      const auto n = static_cast<long>(std::ceil(span / dt - 1e-9));
      const double h = span / static_cast<double>(std::max(n, 1L));
      for (long s = 0; s < std::max(n, 1L); ++s) rk4_step(f, t + static_cast<double>(s) * h, y, h);
    }
    t = times[k];
    observe(k, t, static_cast<const State&>(y));
  }
}

/// Dormand-Prince 5(4) with embedded error control. Lands exactly on every
/// output time. Throws IntegrationError if the step falls below min_step.
template <typename State, typename Rhs, typename Observer>
void integrate_dopri5(const Rhs& f, double t0, State y, const Eigen::VectorXd& times,
                      const IntegratorOptions& opt, Observer&& observe) {
  detail::check_output_times(times, t0);
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  double t = t0;
  double h = opt.initial_step;
  State k1 = f(t, y);
  for (Eigen::Index k = 0; k < times.size(); ++k) {
    const double target = times[k];
    while (t < target) {
      const bool last = h >= target - t;
      const double hs = last ? target - t : h;
      const State k2 = f(t + c2 * hs, State(y + hs * (a21 * k1)));
      const State k3 = f(t + c3 * hs, State(y + hs * (a31 * k1 + a32 * k2)));
      const State k4 = f(t + c4 * hs, State(y + hs * (a41 * k1 + a42 * k2 + a43 * k3)));
      const State k5 =
          f(t + c5 * hs, State(y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
      const State k6 =
          f(t + hs, State(y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
      const State y5 = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const State k7 = f(t + hs, y5);
      const State err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      const double scale =
          opt.abs_tol + opt.rel_tol * std::max(detail::max_abs(y), detail::max_abs(y5));
      const double ratio = detail::max_abs(err) / scale;
      const bool accepted = ratio <= 1.0;
      if (accepted) {
        t = last ? target : t + hs;
        y = y5;
        k1 = k7;
      }
      const double factor =
          ratio == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(ratio, -0.2), 0.2, 5.0);
      // A truncated final step keeps the untruncated h for the next interval.
      if (!(accepted && last)) h = hs * factor;
      if (!accepted && h < opt.min_step)
        throw IntegrationError("adaptive integrator: step size underflow at t = " +
                               std::to_string(t) + " ns");
    }
    observe(k, t, static_cast<const State&>(y));
  }
}

/// Dispatches on opt.mode.
template <typename State, typename Rhs, typename Observer>
void integrate(const Rhs& f, double t0, const State& y0, const Eigen::VectorXd& times,
               const IntegratorOptions& opt, Observer&& observe) {
  if (opt.mode == IntegratorMode::fixed_rk4)
    integrate_rk4(f, t0, y0, times, opt.dt, observe);
  else
    integrate_dopri5(f, t0, y0, times, opt, observe);
}

}  // namespace nvp
