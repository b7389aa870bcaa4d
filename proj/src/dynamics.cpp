#include "nvphonon/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "nvphonon/errors.hpp"

namespace nvp::dynamics {
namespace {

using cd = std::complex<double>;

Matrix3c ket_bra(Level i, Level j) {
  Matrix3c m = Matrix3c::Zero();
  m(static_cast<int>(i), static_cast<int>(j)) = 1.0;
  return m;
}

Matrix9c kron(const Matrix3c& a, const Matrix3c& b) {
  Matrix9c k;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) k.block<3, 3>(3 * i, 3 * j) = a(i, j) * b;
  return k;
}

void require_physical(AngularRate r, const char* name) {
  if (r.value() < 0.0) throw InvalidArgument(std::string(name) + " must be >= 0");
}

}  // namespace

void ThreeLevelModel::validate() const {
  require_physical(rabi, "rabi");
  require_physical(gamma_rad_x, "gamma_rad_x");
  require_physical(gamma_rad_y, "gamma_rad_y");
  require_physical(gamma_mix_xy, "gamma_mix_xy");
  require_physical(gamma_mix_yx, "gamma_mix_yx");
  require_physical(gamma_t2, "gamma_t2");
  require_physical(gamma_isc_x, "gamma_isc_x");
  if (!std::isfinite(detuning.value())) throw InvalidArgument("detuning must be finite");
  if (has_sink() && (gamma_mix_xy.value() > 0.0 || gamma_mix_yx.value() > 0.0 || gamma_rad_y.value() > 0.0))
    throw InvalidArgument("sink mode (gamma_isc_x > 0) requires zero mixing and zero dark-state decay");
}

DensityMatrix3::DensityMatrix3(const Matrix3c& rho) : rho_(rho) {
  if (!rho_.allFinite()) throw InvalidArgument("density matrix must be finite");
  if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
    throw InvalidArgument("density matrix must be Hermitian");
  if (std::abs(rho_.trace().real() - 1.0) > 1e-9) throw InvalidArgument("density matrix must have unit trace");
  for (int i = 0; i < 3; ++i) {
    const double p = rho_(i, i).real();
    if (p < -1e-9 || p > 1.0 + 1e-9) throw InvalidArgument("density matrix populations must lie in [0, 1]");
  }
}

DensityMatrix3 DensityMatrix3::pure(Level level) { return DensityMatrix3(ket_bra(level, level)); }

Matrix9c liouvillian(const ThreeLevelModel& m) {
  m.validate();
  const Level g = Level::ground, x = Level::bright, d = Level::dark;
  const Matrix3c id = Matrix3c::Identity();

  const Matrix3c h = 0.5 * m.rabi.value() * (ket_bra(g, x) + ket_bra(x, g)) -
                     m.detuning.value() * ket_bra(x, x);
  Matrix9c L = cd(0.0, -1.0) * (kron(h, id) - kron(id, h.transpose()));

  std::vector<Matrix3c> jumps;
  auto channel = [&](double rate, const Matrix3c& op) {
    if (rate > 0.0) jumps.push_back(std::sqrt(rate) * op);
  };
  channel(m.gamma_rad_x.value(), ket_bra(g, x));
  if (m.has_sink()) {
    channel(m.gamma_isc_x.value(), ket_bra(d, x));
  } else {
    channel(m.gamma_rad_y.value(), ket_bra(g, d));
    channel(m.gamma_mix_xy.value(), ket_bra(d, x));
    channel(m.gamma_mix_yx.value(), ket_bra(x, d));
  }
  // Coherence rho_gx picks up an extra decay rate gamma_t2.
  channel(0.5 * m.gamma_t2.value(), ket_bra(x, x) - ket_bra(g, g));

  for (const Matrix3c& op : jumps) {
    const Matrix3c ada = op.adjoint() * op;
    L += kron(op, op.conjugate()) - 0.5 * kron(ada, id) - 0.5 * kron(id, ada.transpose());
  }
  return L;
}

LindbladResult evolve_lindblad(const ThreeLevelModel& model, const DensityMatrix3& rho0,
                               const Eigen::VectorXd& times, const IntegratorOptions& opt) {
  const Matrix9c L = liouvillian(model);
  Vector9c y0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) y0[3 * i + j] = rho0.matrix()(i, j);

  LindbladResult out;
  out.times = times;
  out.populations.resize(times.size(), 3);
  out.coherence_gx.resize(times.size());
  out.sink = model.has_sink();

  auto rhs = [&L](double, const Vector9c& y) -> Vector9c { return L * y; };
  integrate(rhs, 0.0, y0, times, opt, [&](Eigen::Index k, double, const Vector9c& y) {
    for (int i = 0; i < 3; ++i) out.populations(k, i) = y[4 * i].real();
    out.coherence_gx[k] = std::abs(y[1]);
  });
  return out;
}

TimeTrace LindbladResult::population(Level level) const {
  return TimeTrace(times, populations.col(static_cast<int>(level)));
}

TimeTrace LindbladResult::fluorescence() const {
  Eigen::VectorXd f = populations.col(1);
  if (!sink) f += populations.col(2);
  return TimeTrace(times, f);
}

RateMatrixModel::RateMatrixModel(Eigen::MatrixXd generator, std::vector<std::string> labels)
    : generator_(std::move(generator)), labels_(std::move(labels)) {
  const Eigen::Index n = generator_.rows();
  if (n == 0 || generator_.cols() != n) throw InvalidArgument("rate generator must be square and non-empty");
  if (!generator_.allFinite()) throw InvalidArgument("rate generator must be finite");
  if (labels_.empty())
    for (Eigen::Index i = 0; i < n; ++i) labels_.push_back(std::to_string(i));
  if (static_cast<Eigen::Index>(labels_.size()) != n) throw InvalidArgument("label count does not match levels");
  const double scale = std::max(1.0, generator_.cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i)
      if (i != j && generator_(i, j) < 0.0) throw InvalidArgument("rate generator off-diagonal entries must be >= 0");
    if (generator_.col(j).sum() > 1e-12 * scale)
      throw InvalidArgument("rate generator columns must sum to <= 0");
  }
}

RateMatrixModel RateMatrixModel::permuted(const std::vector<int>& perm) const {
  const Eigen::Index n = levels();
  if (static_cast<Eigen::Index>(perm.size()) != n) throw InvalidArgument("permutation size mismatch");
  std::vector<int> check(perm);
  std::sort(check.begin(), check.end());
  for (Eigen::Index i = 0; i < n; ++i)
    if (check[i] != i) throw InvalidArgument("not a permutation");
  Eigen::MatrixXd g(n, n);
  std::vector<std::string> labels(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    labels[i] = labels_[perm[i]];
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = generator_(perm[i], perm[j]);
  }
  return RateMatrixModel(std::move(g), std::move(labels));
}

RateResult evolve_rates(const RateMatrixModel& model, const Eigen::VectorXd& p0,
                        const Eigen::VectorXd& times, const IntegratorOptions& opt) {
  if (p0.size() != model.levels()) throw InvalidArgument("initial populations do not match level count");
  if (!p0.allFinite() || (p0.array() < 0.0).any()) throw InvalidArgument("initial populations must be >= 0");
  if (p0.sum() > 1.0 + 1e-12) throw InvalidArgument("initial populations must sum to <= 1");

  RateResult out;
  out.times = times;
  out.populations.resize(times.size(), model.levels());
  const Eigen::MatrixXd& M = model.generator();
  auto rhs = [&M](double, const Eigen::VectorXd& p) -> Eigen::VectorXd { return M * p; };
  integrate(rhs, 0.0, p0, times, opt,
            [&](Eigen::Index k, double, const Eigen::VectorXd& p) { out.populations.row(k) = p.transpose(); });
  return out;
}

TimeTrace RateResult::level(Eigen::Index i) const {
  return TimeTrace(times, populations.col(i));
}

RateMatrixModel build_a12_model(AngularRate gamma_rad, AngularRate gamma_mix, AngularRate gamma_isc) {
  require_physical(gamma_rad, "gamma_rad");
  require_physical(gamma_mix, "gamma_mix");
  require_physical(gamma_isc, "gamma_isc");
  const double r = gamma_rad.value(), m = gamma_mix.value(), i = gamma_isc.value();
  Eigen::Matrix2d g;
  g << -(r + i + m), m,
       m, -(r + m);
  return RateMatrixModel(g, {"A1", "A2"});
}

RateMatrixModel build_depolarization_model(AngularRate gamma_rad, AngularRate gamma_mix) {
  require_physical(gamma_rad, "gamma_rad");
  require_physical(gamma_mix, "gamma_mix");
  const double r = gamma_rad.value(), m = gamma_mix.value();
  Eigen::Matrix2d g;
  g << -(r + m), m,
       m, -(r + m);
  return RateMatrixModel(g, {"B", "D"});
}

}  // namespace nvp::dynamics
