#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <string>

namespace nvp::phonon {

/// Tabulated vibrational overlap function F(E) in 1/meV against E in meV,
/// linearly interpolated and zero outside the grid.
class OverlapTable {
 public:
  enum class Provenance { user_supplied, synthetic };

  OverlapTable(Eigen::VectorXd energies_mev, Eigen::VectorXd f_per_mev,
               Provenance provenance = Provenance::user_supplied);

  /// Poisson-weighted progression of Gaussian peaks (mean n * mode_mev,
  /// standard deviation width_mev, weight e^-S S^n / n!) on [0, max_mev],
  /// normalized to unit area.
  static OverlapTable synthetic(double mode_mev = 64.0, double width_mev = 25.0, double huang_rhys = 3.5,
                                double max_mev = 800.0, double step_mev = 0.25);

  /// Two-column CSV with header `energy_mev,f_per_mev`; '#' starts a comment.
  static OverlapTable read_csv(std::istream& in, Provenance provenance = Provenance::user_supplied);
  static OverlapTable load(const std::string& path);
  void write_csv(std::ostream& out) const;

  double operator()(double energy_mev) const;

  const Eigen::VectorXd& energies() const { return e_; }
  const Eigen::VectorXd& values() const { return f_; }
  Provenance provenance() const { return provenance_; }
  bool is_synthetic() const { return provenance_ == Provenance::synthetic; }
  double min_energy() const { return e_[0]; }
  double max_energy() const { return e_[e_.size() - 1]; }
  /// Trapezoid area (exact for the interpolant).
  double area() const;

 private:
  Eigen::VectorXd e_;
  Eigen::VectorXd f_;
  Provenance provenance_;
};

}  // namespace nvp::phonon
