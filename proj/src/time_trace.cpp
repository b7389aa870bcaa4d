#include "nvphonon/time_trace.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "nvphonon/errors.hpp"

namespace nvp {

TimeTrace::TimeTrace(Eigen::VectorXd times, Eigen::VectorXd values, TraceKind kind,
                     std::optional<Eigen::VectorXd> sigma, TraceMetadata meta)
    : times_(std::move(times)),
      values_(std::move(values)),
      sigma_(std::move(sigma)),
      kind_(kind),
      meta_(std::move(meta)) {
  if (times_.size() != values_.size())
    throw InvalidArgument("trace: times and values differ in length");
  if (sigma_ && sigma_->size() != values_.size())
    throw InvalidArgument("trace: sigma and values differ in length");
  for (Eigen::Index i = 0; i < times_.size(); ++i) {
    if (!std::isfinite(times_[i]) || !std::isfinite(values_[i]))
      throw InvalidArgument("trace: non-finite sample at index " + std::to_string(i));
    if (i > 0 && !(times_[i] > times_[i - 1]))
      throw InvalidArgument("trace: times must be strictly increasing (index " + std::to_string(i) + ")");
    if (kind_ == TraceKind::counts && !meta_.background_subtracted &&
        (values_[i] < 0.0 || values_[i] != std::floor(values_[i])))
      throw InvalidArgument("trace: counts must be nonnegative integers (index " + std::to_string(i) + ")");
    if (sigma_ && !((*sigma_)[i] > 0.0 && std::isfinite((*sigma_)[i])))
      throw InvalidArgument("trace: sigma must be positive and finite (index " + std::to_string(i) + ")");
  }
}

TimeTrace TimeTrace::select(double lo, double hi) const {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < times_.size(); ++i)
    if (times_[i] >= lo && times_[i] <= hi) keep.push_back(i);
  const auto n = static_cast<Eigen::Index>(keep.size());
  Eigen::VectorXd t(n), v(n);
  std::optional<Eigen::VectorXd> s;
  if (sigma_) s = Eigen::VectorXd(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    t[k] = times_[keep[k]];
    v[k] = values_[keep[k]];
    if (s) (*s)[k] = (*sigma_)[keep[k]];
  }
  return TimeTrace(std::move(t), std::move(v), kind_, std::move(s), meta_);
}

TimeTrace TimeTrace::window(double lo, double hi) const { return select(lo, hi); }

TimeTrace TimeTrace::from(double lo) const {
  return select(lo, std::numeric_limits<double>::infinity());
}

TimeTrace TimeTrace::shifted(double dt) const {
  return TimeTrace(times_.array() + dt, values_, kind_, sigma_, meta_);
}

TimeTrace TimeTrace::scaled(double s) const {
  if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidArgument("trace: scale must be finite and >= 0");
  std::optional<Eigen::VectorXd> sig;
  if (sigma_) sig = *sigma_ * s;
  return TimeTrace(times_, values_ * s, TraceKind::intensity, std::move(sig), meta_);
}

}  // namespace nvp
