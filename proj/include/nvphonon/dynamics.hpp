#pragma once

// Numerical forward models: a dense Lindblad solver for the driven
// three-level system and a linear population rate-equation solver.

#include <Eigen/Core>
#include <complex>
#include <string>
#include <vector>

#include "nvphonon/integrator.hpp"
#include "nvphonon/time_trace.hpp"
#include "nvphonon/units.hpp"

namespace nvp::dynamics {

/// Basis labels. In sink mode (gamma_isc_x > 0) the `dark` slot holds the
/// effective singlet shelving state instead of Ey.
enum class Level : int { ground = 0, bright = 1, dark = 2 };

/// Driven g <-> x transition (rotating frame, RWA) with radiative decay,
/// directional x <-> y mixing, pure dephasing on g-x and optional ISC from x.
struct ThreeLevelModel {
  AngularRate rabi;                                // Omega
  AngularRate detuning = AngularRate::fitted_rad_per_ns(0.0);  // signed
  AngularRate gamma_rad_x;
  AngularRate gamma_rad_y;
  AngularRate gamma_mix_xy;  // x -> y
  AngularRate gamma_mix_yx;  // y -> x
  AngularRate gamma_t2;
  AngularRate gamma_isc_x;   // x -> sink

  bool has_sink() const { return gamma_isc_x.value() > 0.0; }
  /// Throws InvalidArgument on negative rates or on mixing/y-decay combined with a sink.
  void validate() const;
};

using Matrix3c = Eigen::Matrix3cd;
using Vector9c = Eigen::Matrix<std::complex<double>, 9, 1>;
using Matrix9c = Eigen::Matrix<std::complex<double>, 9, 9>;

/// 3x3 density matrix: Hermitian to 1e-12, unit trace to 1e-9, diagonal in [0, 1].
class DensityMatrix3 {
 public:
  explicit DensityMatrix3(const Matrix3c& rho);
  static DensityMatrix3 pure(Level level);

  const Matrix3c& matrix() const { return rho_; }
  double population(Level level) const { return rho_(static_cast<int>(level), static_cast<int>(level)).real(); }

 private:
  Matrix3c rho_;
};

/// Row-major vectorization vec(rho)[3 i + j] = rho(i, j) and the matching
/// generator: d vec(rho)/dt = L vec(rho).
Matrix9c liouvillian(const ThreeLevelModel& model);

struct LindbladResult {
  Eigen::VectorXd times;
  Eigen::MatrixX3d populations;  // row per time: (g, x, dark)
  Eigen::VectorXd coherence_gx;  // |rho_gx|
  bool sink = false;

  TimeTrace population(Level level) const;
  /// PSB-style fluorescence: rho_xx + rho_yy, or rho_xx alone in sink mode.
  TimeTrace fluorescence() const;
  Eigen::VectorXd trace() const { return populations.rowwise().sum(); }
};

/// Integrates the master equation from t = 0 and samples the requested times
/// (strictly increasing, first >= 0).
LindbladResult evolve_lindblad(const ThreeLevelModel& model, const DensityMatrix3& rho0,
                               const Eigen::VectorXd& times, const IntegratorOptions& opt = {});

/// Linear population dynamics dp/dt = M p. Off-diagonal entries are transfer
/// rates (>= 0); loss channels appear only on the diagonal, so every column
/// sums to <= 0.
class RateMatrixModel {
 public:
  RateMatrixModel(Eigen::MatrixXd generator, std::vector<std::string> labels = {});

  Eigen::Index levels() const { return generator_.rows(); }
  const Eigen::MatrixXd& generator() const { return generator_; }
  const std::vector<std::string>& labels() const { return labels_; }

  /// Same dynamics with the levels renumbered: new level i is old level perm[i].
  RateMatrixModel permuted(const std::vector<int>& perm) const;

 private:
  Eigen::MatrixXd generator_;
  std::vector<std::string> labels_;
};

struct RateResult {
  Eigen::VectorXd times;
  Eigen::MatrixXd populations;  // row per time, column per level

  TimeTrace level(Eigen::Index i) const;
  Eigen::VectorXd total() const { return populations.rowwise().sum(); }
};

RateResult evolve_rates(const RateMatrixModel& model, const Eigen::VectorXd& p0,
                        const Eigen::VectorXd& times, const IntegratorOptions& opt = {});

/// A1/A2 pair: symmetric mixing, common radiative loss, ISC loss from A1 only.
/// Level 0 is A1, level 1 is A2.
RateMatrixModel build_a12_model(AngularRate gamma_rad, AngularRate gamma_mix, AngularRate gamma_isc);

/// Bright/dark pair (Ex as B, Ey as D) with symmetric mixing and common
/// radiative loss. Level 0 is B, level 1 is D.
RateMatrixModel build_depolarization_model(AngularRate gamma_rad, AngularRate gamma_mix);

}  // namespace nvp::dynamics
