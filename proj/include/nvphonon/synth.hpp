#pragma once

// Synthetic photon-count histograms from named forward models.

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nvphonon/time_trace.hpp"

namespace nvp::synth {

/// A registered model name with parameters in canonical units (rad/ns, ns).
/// Models are written in s = t - pulse_start and vanish for s < 0, except
/// `constant` (never gated) and `depolarization` (gated at s < t0).
struct ForwardModel {
  std::string name;
  std::map<std::string, double> params;
};

struct ParamSpec {
  std::string name;
  std::optional<double> default_value;  // absent: required
  std::string doc;
};

/// Registered models: constant, exponential, a12, depolarization, rabi, lindblad.
std::vector<std::string> model_names();
/// Throws InvalidArgument for an unknown model.
const std::vector<ParamSpec>& model_parameters(const std::string& name);

/// Noiseless intensity at the given (strictly increasing) times.
Eigen::VectorXd model_intensity(const ForwardModel& model, const Eigen::VectorXd& times, double pulse_start_ns = 0.0);

struct ExperimentSpec {
  ForwardModel model;
  double bin_width_ns = 0.25;
  double span_ns = 200.0;
  double total_counts = 1e6;     // expected signal counts over the whole span
  double background_rate = 0.0;  // expected counts per bin
  double pulse_edge_ns = 2.0;    // FWHM of the Gaussian edge smoothing; 0 disables
  double pulse_start_ns = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  Eigen::Index bins() const;
};

/// Bin centers (k + 1/2) * bin_width, k = 0 .. bins - 1.
Eigen::VectorXd bin_centers(const ExperimentSpec& spec);

/// Intensity at the bin centers after edge smoothing, scaled to total_counts,
/// plus the background rate.
Eigen::VectorXd expected_counts(const ExperimentSpec& spec);

/// Poisson draw of expected_counts, stamped at bin centers.
TimeTrace generate(const ExperimentSpec& spec);

struct TracePair {
  TimeTrace signal;      // identical to generate(spec)
  TimeTrace background;  // model switched off, background kept
};
TracePair generate_background_pair(const ExperimentSpec& spec);

struct Subtracted {
  TimeTrace trace;          // counts, flagged background-subtracted
  std::size_t clamped = 0;  // bins whose difference was <= 0, left at zero
};
/// Bin-wise difference; both traces must share the same time stamps.
Subtracted subtract_background(const TimeTrace& signal, const TimeTrace& background);

/// Drops every sample with t < t_cut. For binned traces (bin_width_ns set)
/// a bin is dropped when any part of it lies before t_cut, so a cut at c
/// removes ceil(c / bin_width) bins stamped at their centers.
TimeTrace reject_before(const TimeTrace& trace, double t_cut_ns);

}  // namespace nvp::synth
