#include <doctest.h>

#include <sstream>

#include "nvphonon/csv.hpp"
#include "nvphonon/errors.hpp"
#include "nvphonon/time_trace.hpp"
#include "nvphonon/trace_io.hpp"
#include "nvphonon/units.hpp"

using namespace nvp;

TEST_CASE("linear MHz to angular rate") {
  CHECK(AngularRate::linear_mhz(13.2).value() == doctest::Approx(0.0829380460547705).epsilon(1e-14));
  CHECK(AngularRate::linear_mhz(13.2).to_linear_mhz() == doctest::Approx(13.2).epsilon(1e-15));
  CHECK(AngularRate::linear_ghz(1.0).value() == doctest::Approx(kTwoPi).epsilon(1e-15));
}

TEST_CASE("physical rates reject negatives and NaN") {
  CHECK_THROWS_AS(AngularRate::linear_mhz(-1.0), InvalidArgument);
  CHECK_THROWS_AS(AngularRate::rad_per_ns(std::nan("")), InvalidArgument);
  CHECK_NOTHROW(AngularRate::fitted_linear_mhz(-1.0));
  const AngularRate f = AngularRate::fitted_linear_mhz(-1.0);
  CHECK(f.is_fitted());
  CHECK(f.clamped().value() == 0.0);
  CHECK_THROWS_AS(f.as_physical(), InvalidArgument);
  CHECK((AngularRate::linear_mhz(1) - AngularRate::linear_mhz(2)).is_fitted());
}

TEST_CASE("energy and temperature") {
  CHECK(thermal_energy(TemperatureK(20.0)).value() == doctest::Approx(1.7234666524).epsilon(1e-12));
  CHECK_THROWS_AS(TemperatureK(-1.0), InvalidArgument);
  CHECK_THROWS_AS(EnergyMeV(-0.1), InvalidArgument);
  const EnergyMeV e = linear_ghz_to_energy(240.0);
  CHECK(energy_to_linear_ghz(e) == doctest::Approx(240.0).epsilon(1e-14));
  CHECK(rate_to_energy(energy_to_rate(EnergyMeV(3.0))).value() == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("TimeTrace invariants") {
  Eigen::VectorXd t(3), v(3);
  t << 0, 1, 2;
  v << 1, 2, 3;
  CHECK_NOTHROW(TimeTrace(t, v, TraceKind::counts));
  Eigen::VectorXd bad = t;
  bad[2] = 1;
  CHECK_THROWS_AS(TimeTrace(bad, v), InvalidArgument);
  Eigen::VectorXd frac = v;
  frac[0] = 0.5;
  CHECK_THROWS_AS(TimeTrace(t, frac, TraceKind::counts), InvalidArgument);
  Eigen::VectorXd neg = v;
  neg[0] = -1;
  CHECK_THROWS_AS(TimeTrace(t, neg, TraceKind::counts), InvalidArgument);
  TraceMetadata m;
  m.background_subtracted = true;
  CHECK_NOTHROW(TimeTrace(t, neg, TraceKind::counts, std::nullopt, m));

  const TimeTrace tr(t, v);
  CHECK(tr.window(0.5, 2.0).size() == 2);
  CHECK(tr.from(1.0).time(0) == 1.0);
  CHECK(tr.shifted(-1.0).time(0) == -1.0);
  CHECK(tr.scaled(2.0).value(2) == 6.0);
}

TEST_CASE("csv metadata, comments and line numbers") {
  std::istringstream in("# temperature_k = 5\n# free comment\ntime_ns,counts\n0,1\n\n1,2\n");
  const io::CsvTable t = io::read_csv(in);
  CHECK(t.meta.at("temperature_k") == "5");
  CHECK(t.rows() == 2);
  CHECK(t.row_lines == std::vector<int>{4, 6});
  CHECK(t.find("counts") == 1);
  CHECK(t.find("nope") == -1);

  std::istringstream bad("time_ns,counts\n0,1\n1,x\n");
  try {
    io::read_csv(bad);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  std::istringstream ragged("time_ns,counts\n0,1,2\n");
  CHECK_THROWS_AS(io::read_csv(ragged), ParseError);
}

TEST_CASE("format_double is the shortest round-trip form") {
  for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0829380460547705}) {
    CHECK(std::stod(io::format_double(v)) == v);
  }
  CHECK(io::format_double(0.5) == "0.5");
  CHECK(io::format_double(2.0) == "2");
}

TEST_CASE("trace csv round trip is lossless") {
  Eigen::VectorXd t(4), v(4), s(4);
  t << 0.125, 0.375, 0.625, 0.875;
  v << 1.0 / 3.0, 2e-17, 3.5, 1e8;
  s << 0.1, 0.2, 0.3, 0.4;
  TraceMetadata m;
  m.temperature_k = 20.5;
  m.channel = "y";
  m.bin_width_ns = 0.25;
  const TimeTrace tr(t, v, TraceKind::intensity, s, m);
  std::stringstream io_;
  io::write_trace(io_, tr);
  const TimeTrace back = io::read_trace(io_);
  CHECK(back.times() == tr.times());
  CHECK(back.values() == tr.values());
  REQUIRE(back.sigma());
  CHECK(*back.sigma() == s);
  CHECK(back.kind() == TraceKind::intensity);
  CHECK(back.metadata().temperature_k == 20.5);
  CHECK(back.metadata().channel == "y");
  CHECK(back.metadata().bin_width_ns == 0.25);
}

TEST_CASE("trace header is enforced") {
  std::istringstream in("time,counts\n0,1\n1,2\n");
  CHECK_THROWS_AS(io::read_trace(in), ParseError);
  std::istringstream wide("time_ns,a1,a2\n0,1,1\n1,0.5,0.7\n");
  const TimeTrace a2 = io::read_trace(wide, std::string("a2"));
  CHECK(a2.value(1) == 0.7);
  std::istringstream wide2("time_ns,a1,a2\n0,1,1\n1,0.5,0.7\n");
  CHECK_THROWS_AS(io::read_trace(wide2, std::string("b")), ParseError);
}
