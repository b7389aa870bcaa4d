#pragma once

// Trace CSV files: header `time_ns,counts` or `time_ns,intensity`, optional
// `sigma` column, metadata as `# key = value` comments (temperature_k,
// channel, background_subtracted, bin_width_ns).

#include <iosfwd>
#include <optional>
#include <string>

#include "nvphonon/time_trace.hpp"

namespace nvp::io {

/// `column` selects a value column by name from a wider table whose first
/// column is time_ns; without it the two- or three-column layout is required.
TimeTrace read_trace(std::istream& in, const std::optional<std::string>& column = std::nullopt);
TimeTrace read_trace_file(const std::string& path, const std::optional<std::string>& column = std::nullopt);
void write_trace(std::ostream& out, const TimeTrace& trace);
void write_trace_file(const std::string& path, const TimeTrace& trace);

struct LoadedTrace {
  TimeTrace trace;
  std::size_t clamped_bins = 0;  // background subtraction set these to zero
};

/// Reads a count trace, optionally subtracts a background trace with the
/// same stamps bin by bin (clamping at zero), and drops samples stamped
/// before `reject_before_ns`.
LoadedTrace load_trace(const std::string& path, const std::optional<std::string>& background_path = std::nullopt,
                       std::optional<double> reject_before_ns = std::nullopt,
                       const std::optional<std::string>& column = std::nullopt);

}  // namespace nvp::io
