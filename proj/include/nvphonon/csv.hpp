#pragma once

// Minimal numeric CSV: one header row, comma-separated doubles, '#' comments.
// Comments of the form `# key = value` are kept as metadata.

#include <Eigen/Core>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace nvp::io {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<Eigen::VectorXd> columns;
  std::map<std::string, std::string> meta;
  int header_line = 0;
  std::vector<int> row_lines;  // source line of each data row

  Eigen::Index rows() const { return columns.empty() ? 0 : columns[0].size(); }
  /// Column index by name; -1 if absent.
  int find(const std::string& name) const;
};

/// Throws ParseError (with line number) on malformed input.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

/// Metadata first as `# key = value`, then the shortest round-trip decimal
/// form of every value.
void write_csv(std::ostream& out, const CsvTable& table);

std::string format_double(double v);

}  // namespace nvp::io
