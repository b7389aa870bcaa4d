#include "nvphonon/overlap_table.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <vector>

#include "nvphonon/csv.hpp"
#include "nvphonon/errors.hpp"

namespace nvp::phonon {

OverlapTable::OverlapTable(Eigen::VectorXd energies_mev, Eigen::VectorXd f_per_mev, Provenance provenance)
    : e_(std::move(energies_mev)), f_(std::move(f_per_mev)), provenance_(provenance) {
  if (e_.size() < 2 || e_.size() != f_.size())
    throw InvalidArgument("overlap table: need at least two (energy, F) rows of equal length");
  for (Eigen::Index i = 0; i < e_.size(); ++i) {
    if (!std::isfinite(e_[i]) || !std::isfinite(f_[i])) throw InvalidArgument("overlap table: non-finite entry");
    if (e_[i] < 0.0) throw InvalidArgument("overlap table: energies must be >= 0");
    if (f_[i] < 0.0) throw InvalidArgument("overlap table: F must be >= 0");
    if (i > 0 && !(e_[i] > e_[i - 1])) throw InvalidArgument("overlap table: energies must be strictly increasing");
  }
}

OverlapTable OverlapTable::synthetic(double mode_mev, double width_mev, double huang_rhys, double max_mev,
                                     double step_mev) {
  if (!(mode_mev > 0.0 && width_mev > 0.0 && huang_rhys > 0.0 && max_mev > 0.0 && step_mev > 0.0))
    throw InvalidArgument("synthetic overlap: parameters must be positive");
  const auto n = static_cast<Eigen::Index>(std::llround(max_mev / step_mev)) + 1;
  Eigen::VectorXd e = Eigen::VectorXd::LinSpaced(n, 0.0, static_cast<double>(n - 1) * step_mev);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  const int peaks = static_cast<int>(std::ceil((max_mev + 6.0 * width_mev) / mode_mev));
  double weight = std::exp(-huang_rhys);
  const double norm = 1.0 / (width_mev * std::sqrt(2.0 * std::numbers::pi));
  for (int k = 0; k <= peaks; ++k) {
    if (k > 0) weight *= huang_rhys / k;
    const Eigen::ArrayXd z = (e.array() - k * mode_mev) / width_mev;
    f.array() += weight * norm * (-0.5 * z.square()).exp();
  }
  OverlapTable t(e, f, Provenance::synthetic);
  t.f_ /= t.area();
  return t;
}

double OverlapTable::operator()(double x) const {
  if (!(x >= e_[0]) || x > e_[e_.size() - 1]) return 0.0;
  const double* b = e_.data();
  const double* it = std::upper_bound(b, b + e_.size(), x);
  auto i = static_cast<Eigen::Index>(it - b);
  if (i >= e_.size()) return f_[e_.size() - 1];
  --i;
  const double u = (x - e_[i]) / (e_[i + 1] - e_[i]);
  return f_[i] + u * (f_[i + 1] - f_[i]);
}

double OverlapTable::area() const {
  const Eigen::Index n = e_.size();
  const Eigen::ArrayXd de = e_.tail(n - 1) - e_.head(n - 1);
  return (0.5 * de * (f_.tail(n - 1) + f_.head(n - 1)).array()).sum();
}

OverlapTable OverlapTable::read_csv(std::istream& in, Provenance provenance) {
  const io::CsvTable table = io::read_csv(in);
  if (table.header != std::vector<std::string>{"energy_mev", "f_per_mev"})
    throw ParseError("overlap table header must be 'energy_mev,f_per_mev'", table.header_line);
  const auto it = table.meta.find("provenance");
  if (it != table.meta.end() && it->second == "synthetic") provenance = Provenance::synthetic;
  try {
    return OverlapTable(table.columns[0], table.columns[1], provenance);
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what(), table.header_line);
  }
}

OverlapTable OverlapTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open overlap table '" + path + "'");
  try {
    return read_csv(in);
  } catch (const ParseError& e) {
    throw e.in_file(path);
  }
}

void OverlapTable::write_csv(std::ostream& out) const {
  io::CsvTable table;
  table.meta["provenance"] = is_synthetic() ? "synthetic" : "user";
  table.header = {"energy_mev", "f_per_mev"};
  table.columns = {e_, f_};
  io::write_csv(out, table);
}

}  // namespace nvp::phonon
