#include "nvphonon/trace_io.hpp"

#include <cmath>
#include <fstream>
#include <vector>

#include "nvphonon/csv.hpp"
#include "nvphonon/errors.hpp"
#include "nvphonon/synth.hpp"

namespace nvp::io {
namespace {

double meta_number(const CsvTable& t, const std::string& key) {
  const std::string& s = t.meta.at(key);
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("metadata '" + key + "' is not a number: '" + s + "'");
  }
}

}  // namespace

TimeTrace read_trace(std::istream& in, const std::optional<std::string>& column) {
  const CsvTable t = read_csv(in);
  if (t.header.empty() || t.header[0] != "time_ns") throw ParseError("first column must be 'time_ns'", t.header_line);
  int vc = 1, sc = -1;
  if (column) {
    vc = t.find(*column);
    if (vc <= 0) throw ParseError("no column '" + *column + "'", t.header_line);
  } else if (t.header.size() < 2 || t.header.size() > 3 || (t.header[1] != "counts" && t.header[1] != "intensity") ||
             (t.header.size() == 3 && t.header[2] != "sigma")) {
    throw ParseError("trace header must be 'time_ns,counts' or 'time_ns,intensity' (optionally ',sigma')",
                     t.header_line);
  }
  if (vc == 1 && t.header.size() == 3 && t.header[2] == "sigma") sc = 2;
  TraceMetadata meta;
  if (t.meta.count("temperature_k")) meta.temperature_k = meta_number(t, "temperature_k");
  if (t.meta.count("channel")) meta.channel = t.meta.at("channel");
  if (t.meta.count("background_subtracted")) meta.background_subtracted = meta_number(t, "background_subtracted") != 0.0;
  if (t.meta.count("bin_width_ns")) meta.bin_width_ns = meta_number(t, "bin_width_ns");
  const TraceKind kind = t.header[vc] == "counts" ? TraceKind::counts : TraceKind::intensity;
  std::optional<Eigen::VectorXd> sigma;
  if (sc > 0) sigma = t.columns[sc];
  // Re-validate row by row so that errors carry the offending line.
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    const int line = t.row_lines[i];
    if (i > 0 && !(t.columns[0][i] > t.columns[0][i - 1]))
      throw ParseError("time stamps must be strictly increasing", line);
    const double v = t.columns[vc][i];
    if (kind == TraceKind::counts && !meta.background_subtracted && (v < 0.0 || v != std::floor(v)))
      throw ParseError("counts must be nonnegative integers", line);
    if (sigma && !((*sigma)[i] > 0.0)) throw ParseError("sigma must be > 0", line);
  }
  try {
    return TimeTrace(t.columns[0], t.columns[vc], kind, sigma, meta);
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what());
  }
}

TimeTrace read_trace_file(const std::string& path, const std::optional<std::string>& column) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open trace '" + path + "'");
  try {
    return read_trace(in, column);
  } catch (const ParseError& e) {
    throw e.in_file(path);
  }
}

void write_trace(std::ostream& out, const TimeTrace& tr) {
  CsvTable t;
  const TraceMetadata& m = tr.metadata();
  if (m.temperature_k) t.meta["temperature_k"] = format_double(*m.temperature_k);
  if (!m.channel.empty()) t.meta["channel"] = m.channel;
  if (m.background_subtracted) t.meta["background_subtracted"] = "1";
  if (m.bin_width_ns) t.meta["bin_width_ns"] = format_double(*m.bin_width_ns);
  t.header = {"time_ns", tr.kind() == TraceKind::counts ? "counts" : "intensity"};
  t.columns = {tr.times(), tr.values()};
  if (tr.sigma()) {
    t.header.push_back("sigma");
    t.columns.push_back(*tr.sigma());
  }
  write_csv(out, t);
}

void write_trace_file(const std::string& path, const TimeTrace& trace) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  write_trace(out, trace);
}

LoadedTrace load_trace(const std::string& path, const std::optional<std::string>& background_path,
                       std::optional<double> reject_before_ns, const std::optional<std::string>& column) {
  LoadedTrace out{read_trace_file(path, column), 0};
  if (background_path) {
    const TimeTrace bg = read_trace_file(*background_path, column);
    synth::Subtracted s = synth::subtract_background(out.trace, bg);
    out.trace = std::move(s.trace);
    out.clamped_bins = s.clamped;
  }
  if (reject_before_ns) out.trace = synth::reject_before(out.trace, *reject_before_ns);
  return out;
}

}  // namespace nvp::io
