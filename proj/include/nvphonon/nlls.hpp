#pragma once

// Weighted nonlinear least squares: Levenberg-Marquardt damped Gauss-Newton
// with a forward-difference Jacobian and linearized covariance.

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "nvphonon/time_trace.hpp"

namespace nvp::estimate {

enum class Weighting {
  uniform,  // w = 1; covariance scaled by reduced chi^2
  poisson,  // w = 1 / max(y, 1)
  provided  // w = 1 / sigma^2 from the trace
};

enum class FitStatus {
  converged,
  max_iterations,
  singular  // converged, but J^T W J is rank deficient; affected sigmas are infinite
};

struct NllsOptions {
  int max_iterations = 500;
  double rel_step = 1e-6;     // forward-difference step relative to |theta_i|
  double x_tol = 1e-12;       // relative parameter change
  double f_tol = 1e-15;       // relative chi^2 change
  double lambda0 = 1e-3;
  std::vector<double> scale;  // absolute floor of the difference step, per parameter
};

struct FitResult {
  std::vector<std::string> names;
  Eigen::VectorXd params;
  Eigen::VectorXd sigma;
  Eigen::MatrixXd covariance;
  Eigen::MatrixX2d ci95;  // rows (lo, hi) = params -/+ 1.96 sigma
  double chi2 = 0.0;
  double chi2_initial = 0.0;
  int dof = 0;
  bool converged = false;
  int iterations = 0;
  FitStatus status = FitStatus::max_iterations;
  std::string message;

  Eigen::Index index(const std::string& name) const;
  double param(const std::string& name) const { return params[index(name)]; }
  double error(const std::string& name) const { return sigma[index(name)]; }
  double reduced_chi2() const { return dof > 0 ? chi2 / dof : 0.0; }
};

/// Predictions for every data point at once.
using VectorModel = std::function<Eigen::VectorXd(const Eigen::VectorXd& theta)>;
/// Prediction at a single abscissa.
using CurveModel = std::function<double(double t, const Eigen::VectorXd& theta)>;

/// Minimizes sum_i w_i (y_i - f_i(theta))^2. `weighting` only controls the
/// covariance scaling; the weights themselves are given explicitly.
FitResult nlls(const VectorModel& model, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
               const Eigen::VectorXd& init, std::vector<std::string> names,
               Weighting weighting = Weighting::provided, const NllsOptions& opt = {});

/// Curve fit to a trace with weights derived from `weighting`.
FitResult nlls(const CurveModel& model, const TimeTrace& data, const Eigen::VectorXd& init,
               std::vector<std::string> names, Weighting weighting, const NllsOptions& opt = {});

/// Per-point weights for a trace under the given scheme.
Eigen::VectorXd weights_for(const TimeTrace& data, Weighting weighting);

/// Weighted straight-line fit y = a t + b (closed form). Returns (a, b).
std::pair<double, double> linear_regression(const Eigen::VectorXd& t, const Eigen::VectorXd& y,
                                            const Eigen::VectorXd& w);

}  // namespace nvp::estimate
