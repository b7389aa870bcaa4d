#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>

namespace nvp {

enum class TraceKind { counts, intensity };

struct TraceMetadata {
  std::optional<double> temperature_k;
  std::string channel;  // polarization channel label, e.g. "x" or "y"
  bool background_subtracted = false;
  std::optional<double> bin_width_ns;
};

/// Sampled intensity or photon-count series, time in ns.
///
/// Times are strictly increasing and all values finite. Count traces hold
/// nonnegative integers unless flagged background-subtracted.
class TimeTrace {
 public:
  TimeTrace() = default;
  TimeTrace(Eigen::VectorXd times, Eigen::VectorXd values, TraceKind kind = TraceKind::intensity,
            std::optional<Eigen::VectorXd> sigma = std::nullopt, TraceMetadata meta = {});

  Eigen::Index size() const { return times_.size(); }
  bool empty() const { return times_.size() == 0; }

  const Eigen::VectorXd& times() const { return times_; }
  const Eigen::VectorXd& values() const { return values_; }
  const std::optional<Eigen::VectorXd>& sigma() const { return sigma_; }
  TraceKind kind() const { return kind_; }
  const TraceMetadata& metadata() const { return meta_; }
  TraceMetadata& metadata() { return meta_; }

  double time(Eigen::Index i) const { return times_[i]; }
  double value(Eigen::Index i) const { return values_[i]; }

  /// Samples with lo <= t <= hi.
  TimeTrace window(double lo, double hi) const;
  /// Samples with t >= lo.
  TimeTrace from(double lo) const;
  /// Every time shifted by dt.
  TimeTrace shifted(double dt) const;
  /// Values (and sigma) multiplied by s >= 0; the result is an intensity trace.
  TimeTrace scaled(double s) const;

 private:
  TimeTrace select(double lo, double hi) const;

  Eigen::VectorXd times_;
  Eigen::VectorXd values_;
  std::optional<Eigen::VectorXd> sigma_;
  TraceKind kind_ = TraceKind::intensity;
  TraceMetadata meta_;
};

}  // namespace nvp
