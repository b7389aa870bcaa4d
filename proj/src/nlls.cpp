#include "nvphonon/nlls.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "nvphonon/errors.hpp"

namespace nvp::estimate {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double weighted_chi2(const Eigen::VectorXd& pred, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  if (!pred.allFinite()) return kInf;
  return (w.array() * (y - pred).array().square()).sum();
}

Eigen::MatrixXd jacobian(const VectorModel& model, const Eigen::VectorXd& theta, const Eigen::VectorXd& f0,
                         const Eigen::VectorXd& floor, double rel_step) {
  Eigen::MatrixXd J(f0.size(), theta.size());
  Eigen::VectorXd probe = theta;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const double h = rel_step * std::max(std::abs(theta[j]), floor[j]);
    probe[j] = theta[j] + h;
    const double hh = probe[j] - theta[j];  // exactly representable step
    const Eigen::VectorXd f1 = model(probe);
    if (f1.size() != f0.size()) throw InvalidArgument("nlls: model changed its output length");
    J.col(j) = (f1 - f0) / hh;
    probe[j] = theta[j];
  }
  return J;
}

}  // namespace

Eigen::Index FitResult::index(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw InvalidArgument("fit result has no parameter '" + name + "'");
  return it - names.begin();
}

Eigen::VectorXd weights_for(const TimeTrace& data, Weighting weighting) {
  switch (weighting) {
    case Weighting::uniform:
      return Eigen::VectorXd::Ones(data.size());
    case Weighting::poisson:
      return data.values().array().max(1.0).inverse().matrix();
    case Weighting::provided:
      if (!data.sigma()) throw InvalidArgument("nlls: provided weighting needs per-point sigma");
      return data.sigma()->array().square().inverse().matrix();
  }
  return {};
}

FitResult nlls(const VectorModel& model, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
               const Eigen::VectorXd& init, std::vector<std::string> names, Weighting weighting,
               const NllsOptions& opt) {
  const Eigen::Index n = y.size(), p = init.size();
  if (static_cast<Eigen::Index>(names.size()) != p) throw InvalidArgument("nlls: names do not match parameters");
  if (w.size() != n) throw InvalidArgument("nlls: weights do not match data");
  if (n <= p) throw InvalidArgument("nlls: need more data points (" + std::to_string(n) + ") than parameters (" +
                                    std::to_string(p) + ")");
  if (!init.allFinite()) throw InvalidArgument("nlls: initial parameters must be finite");
  if (!y.allFinite() || !w.allFinite() || (w.array() < 0.0).any())
    throw InvalidArgument("nlls: data and weights must be finite, weights >= 0");

  Eigen::VectorXd floor(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    if (j < static_cast<Eigen::Index>(opt.scale.size()))
      floor[j] = opt.scale[j];
    else
      floor[j] = init[j] != 0.0 ? std::abs(init[j]) : 1.0;
  }

  FitResult res;
  res.names = std::move(names);
  res.dof = static_cast<int>(n - p);

  Eigen::VectorXd theta = init;
  Eigen::VectorXd f = model(theta);
  if (f.size() != n) throw InvalidArgument("nlls: model output length does not match data");
  double chi2 = weighted_chi2(f, y, w);
  if (!std::isfinite(chi2)) throw ModelError("nlls: model is not finite at the initial parameters");
  res.chi2_initial = chi2;

  const Eigen::ArrayXd sw = w.array().sqrt();
  double lambda = opt.lambda0;
  bool done = false;
  int it = 0;
  Eigen::MatrixXd J = jacobian(model, theta, f, floor, opt.rel_step);
  while (!done && it < opt.max_iterations) {
    ++it;
    const Eigen::MatrixXd Jw = J.array().colwise() * sw;
    const Eigen::VectorXd rw = sw * (y - f).array();
    const Eigen::MatrixXd H = Jw.transpose() * Jw;
    const Eigen::VectorXd g = Jw.transpose() * rw;
    Eigen::VectorXd d = H.diagonal();
    const double dmax = d.maxCoeff();
    if (!(dmax > 0.0)) {
      done = true;  // model does not depend on any parameter here
      break;
    }
    d = d.cwiseMax(1e-12 * dmax);

    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd A = H;
      A.diagonal() += lambda * d;
      const Eigen::VectorXd step = A.ldlt().solve(g);
      const Eigen::VectorXd trial = theta + step;
      Eigen::VectorXd ft;
      double chi2t = kInf;
      if (step.allFinite()) {
        ft = model(trial);
        chi2t = weighted_chi2(ft, y, w);
      }
      if (chi2t < chi2) {
        const double drop = chi2 - chi2t;
        const bool small_step = step.norm() <= opt.x_tol * (theta.norm() + opt.x_tol);
        theta = trial;
        f = std::move(ft);
        chi2 = chi2t;
        lambda = std::max(lambda / 3.0, 1e-15);
        accepted = true;
        if (small_step || drop <= opt.f_tol * chi2 || chi2 == 0.0) done = true;
      } else {
        lambda *= 4.0;
        // No downhill step exists at machine precision: this is the minimum.
        if (lambda > 1e16 || !step.allFinite()) {
          done = true;
          break;
        }
      }
    }
    if (accepted) J = jacobian(model, theta, f, floor, opt.rel_step);
  }

  res.params = theta;
  res.chi2 = chi2;
  res.iterations = it;
  res.converged = done;
  res.status = done ? FitStatus::converged : FitStatus::max_iterations;
  res.message = done ? "converged" : "no convergence after " + std::to_string(it) + " iterations";

  // Linearized covariance from the scaled normal matrix.
  const Eigen::MatrixXd Jw = J.array().colwise() * sw;
  const Eigen::MatrixXd H = Jw.transpose() * Jw;
  Eigen::VectorXd s(p);
  std::vector<bool> free_dir(p, false);
  for (Eigen::Index j = 0; j < p; ++j) {
    s[j] = H(j, j) > 0.0 ? 1.0 / std::sqrt(H(j, j)) : 0.0;
    if (!(H(j, j) > 0.0)) free_dir[j] = true;
  }
  const Eigen::MatrixXd Hs = s.asDiagonal() * H * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hs);
  const Eigen::VectorXd ev = es.eigenvalues();
  const double evmax = std::max(ev.maxCoeff(), 0.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    if (ev[k] > 1e-12 * evmax) {
      inv[k] = 1.0 / ev[k];
    } else {
      for (Eigen::Index j = 0; j < p; ++j)
        if (std::abs(es.eigenvectors()(j, k)) > 1e-6) free_dir[j] = true;
    }
  }
  Eigen::MatrixXd cov = s.asDiagonal() * es.eigenvectors() * inv.asDiagonal() *
                        es.eigenvectors().transpose() * s.asDiagonal();
  if (weighting == Weighting::uniform) cov *= chi2 / res.dof;

  const bool singular = std::any_of(free_dir.begin(), free_dir.end(), [](bool b) { return b; });
  for (Eigen::Index j = 0; j < p; ++j) {
    if (!free_dir[j]) continue;
    cov.row(j).setZero();
    cov.col(j).setZero();
    cov(j, j) = kInf;
  }
  if (singular && res.converged) {
    res.status = FitStatus::singular;
    res.message = "converged; normal matrix is singular, some parameters are unidentifiable";
  }
  res.covariance = cov;
  res.sigma = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  res.ci95.resize(p, 2);
  res.ci95.col(0) = theta - 1.96 * res.sigma;
  res.ci95.col(1) = theta + 1.96 * res.sigma;
  return res;
}

FitResult nlls(const CurveModel& model, const TimeTrace& data, const Eigen::VectorXd& init,
               std::vector<std::string> names, Weighting weighting, const NllsOptions& opt) {
  const Eigen::VectorXd& t = data.times();
  auto vm = [&](const Eigen::VectorXd& theta) {
    Eigen::VectorXd out(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) out[i] = model(t[i], theta);
    return out;
  };
  return nlls(vm, data.values(), weights_for(data, weighting), init, std::move(names), weighting, opt);
}

std::pair<double, double> linear_regression(const Eigen::VectorXd& t, const Eigen::VectorXd& y,
                                            const Eigen::VectorXd& w) {
  if (t.size() != y.size() || t.size() != w.size() || t.size() < 2)
    throw InvalidArgument("linear regression: need at least two matching points");
  const double sw = w.sum();
  const double mt = w.dot(t) / sw, my = w.dot(y) / sw;
  const Eigen::ArrayXd dt = t.array() - mt;
  const double stt = (w.array() * dt.square()).sum();
  if (!(stt > 0.0)) throw InvalidArgument("linear regression: abscissae are degenerate");
  const double a = (w.array() * dt * (y.array() - my)).sum() / stt;
  return {a, my - a * mt};
}

}  // namespace nvp::estimate
