#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "cli.hpp"
#include "nvphonon/closedform.hpp"
#include "nvphonon/csv.hpp"
#include "nvphonon/fits.hpp"
#include "nvphonon/phonon.hpp"
#include "nvphonon/synth.hpp"
#include "nvphonon/trace_io.hpp"

using namespace nvp;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "nvphonon");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) : path(fs::temp_directory_path() / ("nvphonon_cli_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name, const std::string& content = {}) const {
    const std::string p = (path / name).string();
    if (!content.empty()) std::ofstream(p) << content;
    return p;
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

AngularRate mhz(double f) { return AngularRate::linear_mhz(f); }

Eigen::VectorXd grid(double lo, double hi, double step) {
  const auto n = static_cast<Eigen::Index>(std::floor((hi - lo) / step + 1e-9)) + 1;
  return (lo + step * Eigen::ArrayXd::LinSpaced(n, 0.0, static_cast<double>(n - 1))).matrix();
}

}  // namespace

TEST_CASE("simulate depolarization matches the closed form byte for byte") {
  TempDir d("depol");
  const std::string cfg = d.file("c.cfg", "model = depolarization\nrates.gamma_mix_mhz = 18.5\ntime.stop_ns = 100\n");
  const Run r = run_cli({"simulate", "--config", cfg, "--out", d.file("o.csv")});
  REQUIRE(r.code == 0);
  const Eigen::VectorXd t = grid(0, 100, 0.25);
  io::CsvTable expect;
  expect.header = {"time_ns", "bright", "dark"};
  Eigen::VectorXd b(t.size()), k(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    const auto p = closedform::depolarization_populations(mhz(13.2), mhz(18.5), t[i]);
    b[i] = p.bright;
    k[i] = p.dark;
  }
  expect.columns = {t, b, k};
  std::ostringstream os;
  io::write_csv(os, expect);
  CHECK(slurp(d.file("o.csv")) == os.str());

  // The numeric engine agrees to integrator accuracy.
  const std::string ncfg = d.file("n.cfg", "model = depolarization\nengine = numeric\nrates.gamma_mix_mhz = 18.5\ntime.stop_ns = 100\n");
  const Run n = run_cli({"simulate", "--config", ncfg});
  REQUIRE(n.code == 0);
  std::istringstream in(n.out);
  const io::CsvTable num = io::read_csv(in);
  CHECK((num.columns[1] - b).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("simulate lindblad without drive is a pure decay") {
  TempDir d("lind");
  const std::string cfg = d.file("c.cfg", "model = lindblad\ndrive.rabi_mhz = 0\ninitial = x\ntime.stop_ns = 50\ntime.step_ns = 1\n");
  const Run r = run_cli({"simulate", "--config", cfg});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  const io::CsvTable t = io::read_csv(in);
  REQUIRE(t.find("fluorescence") >= 0);
  const Eigen::VectorXd& f = t.columns[t.find("fluorescence")];
  for (Eigen::Index i = 0; i < t.rows(); ++i)
    CHECK(f[i] == doctest::Approx(std::exp(-mhz(13.2).value() * t.columns[0][i])).epsilon(1e-9));
}

TEST_CASE("simulate both A1/A2 branches") {
  TempDir d("a12");
  const std::string cfg = d.file("c.cfg", "model = a12\nrates.gamma_mix_mhz = 3\n");
  const Run r = run_cli({"simulate", "--config", cfg});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  const io::CsvTable t = io::read_csv(in);
  CHECK(t.header == std::vector<std::string>{"time_ns", "a1", "a2"});
  CHECK((t.columns[1].array() <= t.columns[2].array()).all());
  CHECK(t.columns[1][0] == 1.0);
  // A single-branch column loads as an intensity trace.
  std::ofstream(d.file("o.csv")) << r.out;
  const TimeTrace a2 = io::read_trace_file(d.file("o.csv"), std::string("a2"));
  CHECK(a2.values() == t.columns[2]);
}

TEST_CASE("simulated counts equal the library generator and round-trip") {
  TempDir d("counts");
  const std::string cfg = d.file("c.cfg",
                                 "model = exponential\nsynth.total_counts = 1e5\nsynth.background = 2\n"
                                 "synth.seed = 9\ntemperature_k = 12\n");
  REQUIRE(run_cli({"simulate", "--config", cfg, "--out", d.file("a.csv")}).code == 0);
  REQUIRE(run_cli({"simulate", "--config", cfg, "--out", d.file("b.csv")}).code == 0);
  REQUIRE(run_cli({"simulate", "--config", cfg, "--seed", "10", "--out", d.file("c.csv")}).code == 0);
  CHECK(slurp(d.file("a.csv")) == slurp(d.file("b.csv")));
  CHECK(slurp(d.file("a.csv")) != slurp(d.file("c.csv")));

  synth::ExperimentSpec spec;
  spec.model = {"exponential", {{"rate", mhz(13.2).value()}}};
  spec.total_counts = 1e5;
  spec.background_rate = 2;
  spec.seed = 9;
  TimeTrace expect = synth::generate(spec);
  expect.metadata().temperature_k = 12.0;
  std::ostringstream os;
  io::write_trace(os, expect);
  CHECK(slurp(d.file("a.csv")) == os.str());

  const io::LoadedTrace back = io::load_trace(d.file("a.csv"));
  CHECK(back.trace.values() == expect.values());
  CHECK(back.trace.times() == expect.times());
  CHECK(back.trace.metadata().temperature_k == 12.0);
  std::ostringstream again;
  io::write_trace(again, back.trace);
  CHECK(again.str() == os.str());
}

TEST_CASE("exp-window fit report matches the library fit") {
  TempDir d("expfit");
  const std::string cfg = d.file("c.cfg", "model = exponential\nrates.gamma_rad_mhz = 29.2\nsynth.total_counts = 1e6\nsynth.seed = 4\n");
  REQUIRE(run_cli({"simulate", "--config", cfg, "--out", d.file("t.csv")}).code == 0);
  const std::string fcfg = d.file("f.cfg", "fit.reject_before_ns = 3.3\n");
  const Run r = run_cli({"fit", "--procedure", "exp-window", "--config", fcfg, d.file("t.csv"), "--out", d.file("p.csv")});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("status: converged") != std::string::npos);

  const io::LoadedTrace lt = io::load_trace(d.file("t.csv"), std::nullopt, 3.3);
  const estimate::FitResult f = estimate::fit_exponential_window(lt.trace, estimate::FitWindow{});
  std::istringstream in(slurp(d.file("p.csv")));
  std::string line, rate_line;
  while (std::getline(in, line))
    if (line.rfind("rate,", 0) == 0) rate_line = line;
  const double scale = 1.0 / kRadPerNsPerMhz;
  CHECK(rate_line == "rate," + io::format_double(f.param("rate") * scale) + "," +
                         io::format_double(f.error("rate") * scale) + "," +
                         io::format_double(f.ci95(1, 0) * scale) + "," + io::format_double(f.ci95(1, 1) * scale) +
                         ",2pi*MHz");
  CHECK(slurp(d.file("p.csv")).find("# converged = 1") != std::string::npos);
}

TEST_CASE("rabi pipeline interval contains the truth") {
  TempDir d("rabi");
  const std::string cfg = d.file("c.cfg",
                                 "model = rabi\ndrive.rabi_mhz = 80\ndrive.tau_rabi_ns = 12\nrates.gamma_isc_x_mhz = 0.6\n"
                                 "synth.total_counts = 2e6\nsynth.span_ns = 60\nsynth.bin_width_ns = 0.1\n"
                                 "synth.pulse_edge_ns = 0\nsynth.seed = 2\n");
  REQUIRE(run_cli({"simulate", "--config", cfg, "--out", d.file("t.csv")}).code == 0);
  const Run r = run_cli({"fit", "--procedure", "rabi", d.file("t.csv"), "--out", d.file("p.csv")});
  REQUIRE(r.code == 0);
  std::istringstream in(slurp(d.file("p.csv")));
  const io::CsvTable t = [&] {
    std::string body, line;
    while (std::getline(in, line))
      if (line.rfind("tau_rabi,", 0) == 0) body = line;
    std::istringstream row("value,sigma,lo,hi\n" + body.substr(9, body.rfind(',') - 9) + "\n");
    return io::read_csv(row);
  }();
  CHECK(t.columns[2][0] <= 12.0);
  CHECK(t.columns[3][0] >= 12.0);
}

TEST_CASE("depolarization fixture fit") {
  TempDir d("depolfit");
  std::vector<std::string> files;
  for (auto [T, mix] : {std::pair{5.0, 0.08}, std::pair{20.0, 18.5}}) {
    for (const char* ch : {"x", "y"}) {
      const std::string name = "T" + std::to_string(static_cast<int>(T)) + ch;
      // Per-trace totals proportional to the model area keep one common count scale.
      synth::ExperimentSpec spec;
      spec.model = {"depolarization",
                    {{"gamma_rad", mhz(13.2).value()}, {"gamma_mix", mhz(mix).value()}, {"amp", 0.9}, {"eps", 0.1},
                     {"t0", -3.6}, {"channel", ch[0] == 'x' ? 0.0 : 1.0}}};
      const double total = 1e4 * synth::model_intensity(spec.model, synth::bin_centers(spec)).sum();
      std::ostringstream c;
      c << "model = polarized\nrates.gamma_mix_mhz = " << mix << "\ntemperature_k = " << T
        << "\ndepol.channel = " << ch << "\nsynth.total_counts = " << io::format_double(total)
        << "\nsynth.pulse_edge_ns = 0\nsynth.seed = " << (T * 10 + (ch[0] == 'x')) << "\n";
      const std::string cfg = d.file(name + ".cfg", c.str());
      REQUIRE(run_cli({"simulate", "--config", cfg, "--out", d.file(name + ".csv")}).code == 0);
      files.push_back(d.file(name + ".csv"));
    }
  }
  const std::string fcfg = d.file("f.cfg", "fit.reject_before_ns = 3.3\n");
  std::vector<std::string> args{"fit", "--procedure", "depol", "--config", fcfg, "--out", d.file("p.csv")};
  args.insert(args.end(), files.begin(), files.end());
  const Run r = run_cli(args);
  REQUIRE(r.code == 0);
  std::istringstream in(slurp(d.file("p.csv")));
  std::string line;
  std::map<std::string, double> v;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("parameter", 0) == 0) continue;
    v[line.substr(0, line.find(','))] = std::stod(line.substr(line.find(',') + 1));
  }
  // Amplitude comes back in counts per unit intensity.
  CHECK(std::abs(v["amp"] / 1e4 - 0.90) < 0.06);
  CHECK(std::abs(v["t0"] + 3.6) < 0.8);
  CHECK(std::abs(v["eps"] - 0.10) < 0.02);
}

TEST_CASE("malformed inputs exit 2 with the line") {
  TempDir d("bad");
  const std::string bad = d.file("t.csv", "time_ns,counts\n0.125,4\n0.375,x\n");
  const Run r = run_cli({"fit", "--procedure", "exp-window", bad});
  CHECK(r.code == 2);
  CHECK(r.err.find(":3:") != std::string::npos);

  const std::string cfg = d.file("c.cfg", "model = a12\n\nrates.gamma_bogus_mhz = 1\n");
  const Run c = run_cli({"simulate", "--config", cfg});
  CHECK(c.code == 2);
  CHECK(c.err.find(":3:") != std::string::npos);

  CHECK(run_cli({"simulate"}).code == 2);
  CHECK(run_cli({"fit", "--procedure", "nope", bad}).code == 2);
  CHECK(run_cli({"bogus"}).code == 2);
  CHECK(run_cli({"sweep", "--sweep", "T:5:x:1"}).code == 2);
  CHECK(run_cli({"--help"}).code == 0);
  const std::string neg = d.file("n.cfg", "model = a12\nrates.gamma_mix_mhz = -1\n");
  CHECK(run_cli({"simulate", "--config", neg}).code == 2);
}

TEST_CASE("model errors exit 3") {
  TempDir d("model");
  const std::string table = d.file("f.csv", "energy_mev,f_per_mev\n0,1\n100,0\n200,1\n");
  const std::string cfg = d.file("c.cfg", "files.overlap_table = " + table + "\n");
  const Run r = run_cli({"sweep", "--config", cfg, "--sweep", "delta:50:150:50"});
  CHECK(r.code == 3);
  CHECK(!r.err.empty());
}

TEST_CASE("non-converged fits exit 4 and still write the report") {
  TempDir d("noconv");
  const std::string cfg = d.file("c.cfg", "model = exponential\nsynth.total_counts = 1e6\n");
  REQUIRE(run_cli({"simulate", "--config", cfg, "--out", d.file("t.csv")}).code == 0);
  const std::string fcfg = d.file("f.cfg", "fit.max_iterations = 1\n");
  const Run r = run_cli({"fit", "--procedure", "exp-window", "--config", fcfg, d.file("t.csv"), "--out", d.file("p.csv")});
  CHECK(r.code == 4);
  CHECK(slurp(d.file("p.csv")).find("# converged = 0") != std::string::npos);
}

TEST_CASE("temperature sweep") {
  const Run r = run_cli({"sweep", "--sweep", "T:5:26:1"});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  const io::CsvTable t = io::read_csv(in);
  REQUIRE(t.rows() == 22);
  const Eigen::VectorXd& T = t.columns[0];
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    CHECK(t.columns[1][i] / std::pow(T[i], 5) == doctest::Approx(t.columns[1][0] / std::pow(T[0], 5)).epsilon(1e-12));
    const phonon::EffectiveRates e =
        phonon::effective_isc_rates(mhz(13.2), mhz(16.0), phonon::mixing_rate_fitform_clamped(phonon::FitForm::reference(), TemperatureK(T[i])));
    CHECK(t.columns[3][i] == e.a1.to_linear_mhz());
    CHECK(t.columns[4][i] == e.a2.to_linear_mhz());
  }
  const Eigen::Index i22 = 17;
  CHECK(T[i22] == 22.0);
  CHECK(std::abs(t.columns[3][i22] - t.columns[4][i22]) / t.columns[4][i22] < 0.1);
  CHECK(t.columns[3][0] > 2 * t.columns[4][0]);
}

TEST_CASE("singlet spacing sweep does not depend on the spin-orbit ratio") {
  TempDir d("delta");
  const std::string a = d.file("a.cfg", "spin_orbit.ratio = 1.0\nmeasured.ratio = 1\nmeasured.ratio_uncertainty = 0.2\n");
  const std::string b = d.file("b.cfg", "spin_orbit.ratio = 1.4\nmeasured.ratio = 1\nmeasured.ratio_uncertainty = 0.2\n");
  const Run ra = run_cli({"sweep", "--config", a, "--sweep", "delta:10:500:10"});
  const Run rb = run_cli({"sweep", "--config", b, "--sweep", "delta:10:500:10"});
  REQUIRE(ra.code == 0);
  REQUIRE(rb.code == 0);
  std::istringstream ia(ra.out), ib(rb.out);
  const io::CsvTable ta = io::read_csv(ia), tb = io::read_csv(ib);
  const int ratio = ta.find("ratio");
  CHECK(ta.columns[ratio] == tb.columns[ratio]);
  CHECK(ta.columns[ta.find("gamma_a1_mhz")] != tb.columns[tb.find("gamma_a1_mhz")]);
  CHECK(ta.meta.at("overlap_provenance") == "synthetic");
  CHECK(ta.meta.count("excluded_mev") == 1);
}

TEST_CASE("verify reports success and a JSON summary") {
  TempDir d("verify");
  const Run r = run_cli({"verify", "--out", d.file("v.json")});
  CHECK(r.code == 0);
  CHECK(r.out.find("all checks passed") != std::string::npos);
  const nlohmann::json j = nlohmann::json::parse(slurp(d.file("v.json")));
  CHECK(j["passed"] == true);
  CHECK(j["checks"].size() > 10);
  const Run j2 = run_cli({"verify", "--json"});
  CHECK(nlohmann::json::parse(j2.out) == j);
}
