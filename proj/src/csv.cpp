#include "nvphonon/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "nvphonon/errors.hpp"

namespace nvp::io {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(const std::string& s, int line) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  if (b != e && *b == '+') ++b;
  const auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e || s.empty()) throw ParseError("not a number: '" + s + "'", line);
  return v;
}

}  // namespace

int CsvTable::find(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::vector<std::vector<double>> cols;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty()) continue;
    if (s[0] == '#') {
      const std::string body = trim(s.substr(1));
      const auto eq = body.find('=');
      if (eq != std::string::npos) t.meta[trim(body.substr(0, eq))] = trim(body.substr(eq + 1));
      continue;
    }
    const std::vector<std::string> fields = split(s);
    if (t.header.empty()) {
      for (const std::string& f : fields)
        if (f.empty()) throw ParseError("empty column name in header", line);
      t.header = fields;
      t.header_line = line;
      cols.resize(fields.size());
      continue;
    }
    if (fields.size() != t.header.size())
      throw ParseError("expected " + std::to_string(t.header.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       line);
    for (std::size_t c = 0; c < fields.size(); ++c) cols[c].push_back(parse_number(fields[c], line));
    t.row_lines.push_back(line);
  }
  if (t.header.empty()) throw ParseError("missing header row", line);
  for (const auto& c : cols) t.columns.push_back(Eigen::Map<const Eigen::VectorXd>(c.data(), c.size()));
  return t;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  try {
    return read_csv(in);
  } catch (const ParseError& e) {
    throw e.in_file(path);
  }
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_csv(std::ostream& out, const CsvTable& t) {
  for (const auto& [k, v] : t.meta) out << "# " << k << " = " << v << '\n';
  for (std::size_t c = 0; c < t.header.size(); ++c) out << (c ? "," : "") << t.header[c];
  out << '\n';
  for (Eigen::Index r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << format_double(t.columns[c][r]);
    out << '\n';
  }
}

}  // namespace nvp::io
