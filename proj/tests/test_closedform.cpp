#include <doctest.h>

#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "nvphonon/closedform.hpp"
#include "nvphonon/errors.hpp"

using namespace nvp;
using namespace nvp::closedform;

namespace {
AngularRate mhz(double f) { return AngularRate::linear_mhz(f); }
}  // namespace

TEST_CASE("depolarization populations against the matrix exponential") {
  const AngularRate rad = mhz(13.2), mix = mhz(18.5);
  Eigen::Matrix2d g;
  g << -(rad.value() + mix.value()), mix.value(), mix.value(), -(rad.value() + mix.value());
  for (double t : {0.0, 0.3, 5.0, 37.0, 100.0}) {
    const Eigen::Vector2d p = (g * t).exp() * Eigen::Vector2d(1, 0);
    const Populations q = depolarization_populations(rad, mix, t);
    CHECK(q.bright == doctest::Approx(p[0]).epsilon(1e-12));
    CHECK(q.dark == doctest::Approx(p[1]).epsilon(1e-12).scale(1e-300));
  }
  const Populations z = depolarization_populations(rad, AngularRate{}, 10.0);
  CHECK(z.bright == doctest::Approx(std::exp(-rad.value() * 10.0)));
  CHECK(z.dark == 0.0);
}

TEST_CASE("A1/A2 fluorescence against the matrix exponential") {
  const AngularRate rad = mhz(13.2), mix = mhz(7.3), isc = mhz(16.0);
  Eigen::Matrix2d g;
  g << -(rad.value() + mix.value() + isc.value()), mix.value(), mix.value(), -(rad.value() + mix.value());
  for (double t : {0.0, 1e-4, 2.0, 50.0, 200.0}) {
    const Eigen::Matrix2d e = (g * t).exp();
    CHECK(fluorescence_a12(rad, mix, isc, Branch::a1, t) == doctest::Approx(e.col(0).sum()).epsilon(1e-12));
    CHECK(fluorescence_a12(rad, mix, isc, Branch::a2, t) == doctest::Approx(e.col(1).sum()).epsilon(1e-12));
  }
}

TEST_CASE("A1/A2 fluorescence reductions") {
  const AngularRate rad = mhz(13.2), isc = mhz(16.0), mix = mhz(4.0);
  for (double t : {0.0, 3.0, 80.0}) {
    CHECK(fluorescence_a12(rad, AngularRate{}, isc, Branch::a1, t) ==
          doctest::Approx(std::exp(-(rad.value() + isc.value()) * t)).epsilon(1e-14));
    CHECK(fluorescence_a12(rad, AngularRate{}, isc, Branch::a2, t) ==
          doctest::Approx(std::exp(-rad.value() * t)).epsilon(1e-14));
    CHECK(fluorescence_a12(rad, mix, AngularRate{}, Branch::a1, t) ==
          doctest::Approx(std::exp(-rad.value() * t)).epsilon(1e-14));
  }
  // Large Gamma' t switches to the exponential form without a seam.
  const AngularRate big = mhz(5000);
  const double t_switch = 2 * 20.0 / std::hypot(isc.value(), 2 * big.value());
  const double below = fluorescence_a12(rad, big, isc, Branch::a1, t_switch * (1 - 1e-12));
  const double above = fluorescence_a12(rad, big, isc, Branch::a1, t_switch * (1 + 1e-12));
  CHECK(below == doctest::Approx(above).epsilon(1e-9));
  CHECK(std::isfinite(fluorescence_a12(rad, big, isc, Branch::a2, 1e4)));
}

TEST_CASE("A1/A2 exponents") {
  const auto [slow, fast] = fluorescence_a12_exponents(mhz(13.2), mhz(18.5), mhz(16.0));
  CHECK(slow == doctest::Approx(0.122800808128).epsilon(1e-11));
  CHECK(fast > slow);
  // Sum and product are the trace and determinant of the generator.
  const double r = mhz(13.2).value(), m = mhz(18.5).value(), i = mhz(16.0).value();
  CHECK(slow + fast == doctest::Approx(2 * r + 2 * m + i).epsilon(1e-14));
  CHECK(slow * fast == doctest::Approx((r + m + i) * (r + m) - m * m).epsilon(1e-13));
}

TEST_CASE("A1 is dimmer than A2 whenever ISC is on") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    const AngularRate rad = mhz(5 + 20 * u(rng)), mix = mhz(50 * u(rng)), isc = mhz(0.1 + 30 * u(rng));
    const double t = 0.01 + 200 * u(rng);
    CHECK(fluorescence_a12(rad, mix, isc, Branch::a1, t) < fluorescence_a12(rad, mix, isc, Branch::a2, t));
  }
}

TEST_CASE("envelope coefficients and limits") {
  EnvelopeParams p{mhz(13.2), mhz(13.2), mhz(0), mhz(0), mhz(10)};
  CHECK(p.coefficient_a() == 0.0);
  CHECK(p.coefficient_b() == doctest::Approx(1.0));
  const double itau = 0.75 * p.gamma_rad_x.value() + 0.5 * p.gamma_t2.value();
  for (double t : {0.0, 3.0, 40.0})
    CHECK(rabi_envelope(p, t) == doctest::Approx(0.5 * (1 + std::exp(-itau * t))).epsilon(1e-14));

  p.gamma_mix_xy = p.gamma_mix_yx = mhz(30);
  CHECK(std::abs(p.coefficient_a()) <= 1.0 / 3.0);
  CHECK(p.coefficient_a() + p.coefficient_b() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rabi_envelope(p, 1e4) == doctest::Approx(0.5 * p.coefficient_b()).epsilon(1e-12));

  EnvelopeParams zero{mhz(1), AngularRate{}, AngularRate{}, AngularRate{}, AngularRate{}};
  CHECK_THROWS_AS(zero.coefficient_a(), ModelError);
  CHECK_THROWS_AS(rabi_envelope(zero, 1.0), ModelError);
  EnvelopeParams neg = p;
  neg.gamma_t2 = AngularRate::fitted_linear_mhz(-1);
  CHECK_THROWS_AS(rabi_envelope(neg, 1.0), InvalidArgument);
}

TEST_CASE("additional decoherence inverts the Rabi decay time") {
  const AngularRate rad = mhz(13.2);
  CHECK(std::abs(additional_decoherence(4.0 / (3.0 * rad.value()), rad).value()) < 1e-15);
  CHECK(4.0 / (3.0 * rad.value()) == doctest::Approx(16.07625687797).epsilon(1e-11));
  const EnvelopeParams p{rad, rad, mhz(6.5), mhz(2.0), mhz(3.0)};
  const AngularRate add = additional_decoherence(1.0 / p.inverse_tau_rabi(), rad);
  CHECK(add.value() == doctest::Approx(p.gamma_mix_xy.value() + p.gamma_t2.value()).epsilon(1e-13));
  CHECK(add.is_fitted());
  CHECK_THROWS_AS(additional_decoherence(0.0, rad), InvalidArgument);
}

TEST_CASE("observed polarized intensity") {
  const AngularRate rad = mhz(13.2), mix = mhz(18.5);
  for (double t : {0.0, 2.0, 30.0}) {
    const PolarizedIntensity i = observed_polarized_intensity(1.0, 0.0, 0.0, rad, mix, t);
    const Populations p = depolarization_populations(rad, mix, t);
    CHECK(i.x == p.bright);
    CHECK(i.y == p.dark);
    const PolarizedIntensity j = observed_polarized_intensity(0.9, 0.1, -3.6, rad, mix, t);
    CHECK(j.x + j.y == doctest::Approx(0.9 * std::exp(-rad.value() * (t + 3.6))).epsilon(1e-14));
  }
  CHECK_THROWS_AS(observed_polarized_intensity(1.0, 0.6, 0.0, rad, mix, 1.0), InvalidArgument);
  CHECK_THROWS_AS(observed_polarized_intensity(1.0, -0.1, 0.0, rad, mix, 1.0), InvalidArgument);
}

TEST_CASE("ISC-damped envelope from Ex") {
  const AngularRate isc = mhz(0.62);
  CHECK(isc_envelope_ex(10.0, isc, 0.0) == 1.0);
  const double ratio = isc_envelope_ex(16.0, isc, 60.0) / isc_envelope_ex(16.0, AngularRate{}, 60.0);
  CHECK(ratio == doctest::Approx(0.8897032963605).epsilon(1e-12));
  CHECK_THROWS_AS(isc_envelope_ex(0.0, isc, 1.0), InvalidArgument);
}

TEST_CASE("Rabi fit model") {
  const AngularRate w = mhz(80);
  const double period = kTwoPi / w.value();
  CHECK(rabi_fit_model(2.0, w, 0.0, 0.0, 10.0, AngularRate{}, period) ==
        doctest::Approx(2.0 * (std::exp(-period / 10.0) + 1)).epsilon(1e-14));
  CHECK(rabi_fit_model(2.0, w, 0.0, 0.0, 10.0, AngularRate{}, 1e4) == doctest::Approx(2.0));
  // At maxima the curve touches 2 * amp * envelope.
  const AngularRate isc = mhz(0.62);
  for (int n = 0; n < 5; ++n) {
    const double t = n * period;
    CHECK(rabi_fit_model(1.5, w, 0.0, 0.0, 12.0, isc, t) ==
          doctest::Approx(2 * 1.5 * isc_envelope_ex(12.0, isc, t)).epsilon(1e-12));
  }
}

TEST_CASE("ISC rate from lifetime") {
  const AngularRate rad = mhz(13.2);
  CHECK(std::abs(isc_rate_from_lifetime(1.0 / rad.value(), rad).value()) < 1e-15);
  CHECK(1.0 / (kTwoPi * 29.2e-3) == doctest::Approx(5.450511749722).epsilon(1e-12));
  CHECK(isc_rate_from_lifetime(5.450511749722, rad).to_linear_mhz() == doctest::Approx(16.0).epsilon(1e-10));
  const AngularRate gi = mhz(7.0);
  CHECK(isc_rate_from_lifetime(1.0 / (gi.value() + rad.value()), rad).value() ==
        doctest::Approx(gi.value()).epsilon(1e-13));
  CHECK(isc_rate_from_lifetime(1.0, rad).is_fitted());
  CHECK_THROWS_AS(isc_rate_from_lifetime(-1.0, rad), InvalidArgument);
}
