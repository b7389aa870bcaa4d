#include <doctest.h>

#include <sstream>

#include "nvphonon/errors.hpp"
#include "nvphonon/overlap_table.hpp"
#include "nvphonon/phonon.hpp"

using namespace nvp;
using namespace nvp::phonon;

namespace {

OverlapTable linear_table(double a, double b, double max_mev = 1000.0) {
  const Eigen::VectorXd e = Eigen::VectorXd::LinSpaced(11, 0.0, max_mev);
  return OverlapTable(e, (a + b * e.array()).matrix());
}

OverlapTable constant_table(double f) { return linear_table(f, 0.0); }

}  // namespace

TEST_CASE("T^5 coefficient from the coupling strength") {
  const PhononCoupling c = PhononCoupling::from_linear_mhz(44.0);
  CHECK(coefficient_from_eta(c.eta) == doctest::Approx(1.26131966574e-7).epsilon(1e-10));
  CHECK(mixing_rate_t5(c, TemperatureK(1.0)).to_linear_mhz() ==
        doctest::Approx(1.26131966574e-7 / kRadPerNsPerMhz).epsilon(1e-10));
  CHECK(mixing_rate_t5(c, TemperatureK(0.0)).value() == 0.0);
  CHECK(mixing_rate_t5(c, TemperatureK(14.0)).value() / mixing_rate_t5(c, TemperatureK(7.0)).value() ==
        doctest::Approx(32.0).epsilon(1e-14));
  const PhononCoupling c2{2 * c.eta, std::nullopt};
  CHECK(coefficient_from_eta(c2.eta) == doctest::Approx(4 * coefficient_from_eta(c.eta)).epsilon(1e-14));
}

TEST_CASE("coefficient and coupling are inverse") {
  for (double eta : {1e-3, 0.27646, 5.0}) CHECK(eta_from_coefficient(coefficient_from_eta(eta)) == doctest::Approx(eta).epsilon(1e-13));
  const double a = 2e-5 * kRadPerNsPerMhz;
  CHECK(coefficient_from_eta(eta_from_coefficient(a)) == doctest::Approx(a).epsilon(1e-13));
  CHECK(eta_from_coefficient(a) / kRadPerNsPerMhz == doctest::Approx(43.91824984).epsilon(1e-9));
  CHECK_THROWS_AS(eta_from_coefficient(0.0), InvalidArgument);
  CHECK_THROWS_AS(coefficient_from_eta(-1.0), InvalidArgument);
}

TEST_CASE("perturbed constants change the coefficient") {
  Constants k;
  k.alpha *= 1.01;
  CHECK(coefficient_from_eta(1.0, k) == doctest::Approx(1.01 * coefficient_from_eta(1.0)).epsilon(1e-14));
}

TEST_CASE("empirical mixing fit form") {
  const FitForm f = FitForm::reference();
  CHECK(mixing_rate_fitform(f, TemperatureK(20.0)).to_linear_mhz() == doctest::Approx(18.5579159552).epsilon(1e-10));
  CHECK(mixing_rate_fitform(f, TemperatureK(5.0)).to_linear_mhz() == doctest::Approx(0.0800015552).epsilon(1e-10));
  CHECK(mixing_rate_fitform(f, TemperatureK(4.4)).to_linear_mhz() == doctest::Approx(0.08).epsilon(1e-13));
  const FitForm neg = FitForm::from_linear_mhz(2e-5, 10.0, 0.0);
  CHECK(mixing_rate_fitform(neg, TemperatureK(5.0)).value() < 0.0);
  CHECK(mixing_rate_fitform(neg, TemperatureK(5.0)).is_fitted());
  CHECK(mixing_rate_fitform_clamped(neg, TemperatureK(5.0)).value() == 0.0);
  CHECK(!mixing_rate_fitform_clamped(f, TemperatureK(20.0)).is_fitted());
}

TEST_CASE("spectral density") {
  const PhononCoupling c{0.3, EnergyMeV(93.0)};
  CHECK(spectral_density(c, EnergyMeV(0.0)) == 0.0);
  CHECK(spectral_density(c, EnergyMeV(40.0)) / spectral_density(c, EnergyMeV(20.0)) == doctest::Approx(8.0));
  CHECK(spectral_density(c, EnergyMeV(100.0)) == 0.0);
  const PhononCoupling bad{0.3, EnergyMeV(0.0)};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("A1 ISC rate") {
  const SpinOrbit so;
  CHECK(so.lambda_perp().value() == doctest::Approx(AngularRate::linear_ghz(6.396).value()).epsilon(1e-14));
  const OverlapTable f = constant_table(7.5e-3);
  CHECK(isc_rate_a1(so, f, EnergyMeV(300.0)).to_linear_mhz() == doctest::Approx(15.94533593).epsilon(1e-9));
  SpinOrbit doubled = so;
  doubled.ratio *= 2;
  CHECK(isc_rate_a1(doubled, f, EnergyMeV(300.0)).value() ==
        doctest::Approx(4 * isc_rate_a1(so, f, EnergyMeV(300.0)).value()).epsilon(1e-14));
  CHECK(isc_rate_a1(so, f, EnergyMeV(2000.0)).value() == 0.0);
}

TEST_CASE("overlap moment is exact for a linear overlap function") {
  const double a = 2e-3, b = -1.5e-6;
  const OverlapTable f = linear_table(a, b);
  for (double d : {0.35, 12.0, 148.0, 430.0}) {
    const double expect = a * d * d / 2 + b * d * d * d / 6;
    CHECK(overlap_moment(PhononCoupling{1.0, std::nullopt}, f, EnergyMeV(d)) == doctest::Approx(expect).epsilon(1e-12));
    const double w = 74.0;
    if (d > w) {
      const double cut = (a + b * d) * w * w / 2 - b * w * w * w / 3;
      CHECK(overlap_moment(PhononCoupling{1.0, EnergyMeV(w)}, f, EnergyMeV(d)) == doctest::Approx(cut).epsilon(1e-12));
    }
  }
}

TEST_CASE("E12/A1 ratio") {
  const PhononCoupling c = PhononCoupling::from_linear_mhz(44.0);
  const OverlapTable f = OverlapTable::synthetic();
  CHECK(e12_to_a1_ratio(c, f, EnergyMeV(0.0)) == 0.0);
  CHECK(e12_to_a1_ratio(c, f, EnergyMeV(1e-6)) < 1e-10);
  const double r = e12_to_a1_ratio(c, f, EnergyMeV(250.0));
  const PhononCoupling c3{3 * c.eta, std::nullopt};
  CHECK(e12_to_a1_ratio(c3, f, EnergyMeV(250.0)) == doctest::Approx(3 * r).epsilon(1e-14));
  double prev = 0.0;
  for (double w : {10.0, 50.0, 74.0, 93.0, 200.0, 1e4}) {
    const double rw = e12_to_a1_ratio(PhononCoupling{c.eta, EnergyMeV(w)}, f, EnergyMeV(250.0));
    CHECK(rw >= prev);
    CHECK(rw <= r * (1 + 1e-14));
    prev = rw;
  }
  QuadratureOptions fine;
  fine.step_mev = 0.05;
  CHECK(std::abs(e12_to_a1_ratio(c, f, EnergyMeV(250.0), kConstants, fine) / r - 1) < 1e-6);

  const Eigen::Vector3d e(0.0, 100.0, 200.0), v(1.0, 0.0, 1.0);
  const OverlapTable hole(e, v);
  CHECK_THROWS_AS(e12_to_a1_ratio(c, hole, EnergyMeV(100.0)), ModelError);
}

TEST_CASE("E12 rate scales with A1 rate and coupling") {
  const PhononCoupling c = PhononCoupling::from_linear_mhz(44.0);
  const OverlapTable f = OverlapTable::synthetic();
  const AngularRate a1 = AngularRate::linear_mhz(16.0);
  const AngularRate e12 = isc_rate_e12(c, a1, f, EnergyMeV(300.0));
  CHECK(e12.value() == doctest::Approx(e12_to_a1_ratio(c, f, EnergyMeV(300.0)) * a1.value()).epsilon(1e-14));
  CHECK(isc_rate_e12(PhononCoupling{}, a1, f, EnergyMeV(300.0)).value() == 0.0);
}

TEST_CASE("ratio scan is independent of the spin-orbit coupling") {
  const PhononCoupling c = PhononCoupling::from_linear_mhz(44.0);
  const OverlapTable f = OverlapTable::synthetic();
  std::vector<double> deltas;
  for (double d = 20.0; d <= 500.0; d += 20.0) deltas.push_back(d);
  const RatioScan s = ratio_scan(c, f, deltas, MeasuredRatio{2.0, 0.5});
  CHECK(s.synthetic);
  REQUIRE(s.rows.size() == deltas.size());
  for (const RatioRow& row : s.rows) {
    CHECK(row.ratio == row.ratio_bound);
    CHECK(row.excluded == (row.ratio_bound < 1.5));
    for (double ratio : {0.7, 1.2, 1.9}) {
      SpinOrbit so;
      so.ratio = ratio;
      const EnergyMeV d(row.delta_mev);
      const double via_rates = isc_rate_e12(c, isc_rate_a1(so, f, d), f, d).value() / isc_rate_a1(so, f, d).value();
      CHECK(std::abs(via_rates / row.ratio - 1) < 1e-12);
    }
  }
  // Low-delta rows fall below the measured bound.
  CHECK(s.rows.front().excluded);
  REQUIRE(s.lower_boundary_mev);
  CHECK(!s.excluded.empty());
  CHECK(s.excluded.front().first == 20.0);
}

TEST_CASE("effective ISC rates") {
  const AngularRate rad = AngularRate::linear_mhz(13.2), a1 = AngularRate::linear_mhz(16.0);
  const EffectiveRates none = effective_isc_rates(rad, a1, AngularRate{});
  CHECK(none.a1.value() == doctest::Approx(a1.value()).epsilon(1e-9));
  CHECK(std::abs(none.a2.value()) < 1e-12);
  const EffectiveRates fast = effective_isc_rates(rad, a1, AngularRate::linear_mhz(1e5));
  CHECK(fast.a1.value() == doctest::Approx(0.5 * a1.value()).epsilon(1e-4));
  CHECK(fast.a2.value() == doctest::Approx(0.5 * a1.value()).epsilon(1e-4));
  for (double m : {0.05, 1.0, 5.0, 20.0, 60.0}) {
    const EffectiveRates e = effective_isc_rates(rad, a1, AngularRate::linear_mhz(m));
    CHECK(e.a1.value() >= e.a2.value());
    CHECK(e.a2.value() >= 0.0);
    CHECK(e.a1.value() <= a1.value());
  }
  EffectiveRateOptions bad;
  bad.window_length_ns = 0.0;
  CHECK_THROWS_AS(effective_isc_rates(rad, a1, AngularRate{}, bad), InvalidArgument);
}

TEST_CASE("overlap table") {
  const OverlapTable s = OverlapTable::synthetic();
  CHECK(s.is_synthetic());
  CHECK(s.area() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s(-1.0) == 0.0);
  CHECK(s(801.0) == 0.0);
  CHECK((s.values().array() >= 0.0).all());

  const Eigen::Vector3d e(0.0, 10.0, 20.0), v(0.0, 1.0, 3.0);
  const OverlapTable t(e, v);
  CHECK(t(5.0) == 0.5);
  CHECK(t(15.0) == 2.0);
  CHECK(t.area() == doctest::Approx(25.0));

  std::stringstream io;
  s.write_csv(io);
  const OverlapTable back = OverlapTable::read_csv(io);
  CHECK(back.is_synthetic());
  CHECK(back.energies() == s.energies());
  CHECK(back.values() == s.values());

  const Eigen::Vector3d dup(0.0, 10.0, 10.0);
  CHECK_THROWS_AS(OverlapTable(dup, v), InvalidArgument);
  CHECK_THROWS_AS(OverlapTable(e, Eigen::Vector3d(0.0, -1.0, 0.0)), InvalidArgument);
  std::istringstream hdr("energy,f\n0,1\n1,2\n");
  CHECK_THROWS_AS(OverlapTable::read_csv(hdr), ParseError);
  std::istringstream bad("energy_mev,f_per_mev\n0,1\n1,oops\n");
  try {
    OverlapTable::read_csv(bad);
    FAIL("expected ParseError");
  } catch (const ParseError& err) {
    CHECK(err.line() == 3);
  }
}
