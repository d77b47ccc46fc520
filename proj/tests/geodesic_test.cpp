#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "birkhoff/geodesic.hpp"
#include "support.hpp"

using birkhoff::ChartPoint;
using birkhoff::connect;
using birkhoff::distance;
using birkhoff::exp_map;
using birkhoff::GeodesicSegment;
using birkhoff::Vec;

namespace {
ChartPoint pt(double a, double b) {
  Vec v(2);
  v << a, b;
  return {v};
}
Vec vec(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}
}  // namespace

TEST_CASE("straight lines in flat charts") {
  auto euc = support::euclidean2();
  auto seg = exp_map(euc, pt(0, 0), vec(3, 4), 16);
  CHECK((seg.end().coords - vec(3, 4)).norm() <= 1e-13);
  CHECK(seg.length() == Catch::Approx(5.0).epsilon(1e-15));
  CHECK((seg.evaluate(0.3).coords - vec(0.9, 1.2)).norm() <= 1e-13);

  auto flat = support::flat_diag41();
  auto seg2 = exp_map(flat, pt(0, 0), vec(1, 0), 16);
  CHECK((seg2.end().coords - vec(1, 0)).norm() <= 1e-13);
  CHECK(seg2.length() == Catch::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("equator and meridians of the sphere chart") {
  auto sph = support::unit_sphere();
  auto eq = exp_map(sph, pt(M_PI / 2, 0), vec(0, 1), 16);
  CHECK((eq.end().coords - vec(M_PI / 2, 1)).norm() <= 1e-12);
  CHECK(eq.length() == Catch::Approx(1.0).epsilon(1e-14));

  auto mer = exp_map(sph, pt(M_PI / 2, 0), vec(-0.5, 0), 16);
  CHECK((mer.end().coords - vec(M_PI / 2 - 0.5, 0)).norm() <= 1e-10);
  CHECK(mer.length() == Catch::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("sphere flow matches the ambient great-circle oracle") {
  auto sph = support::unit_sphere();
  support::Rng rng(11);
  for (int i = 0; i < 40; ++i) {
    Vec p(2);
    p << rng.uniform(0.5, M_PI - 0.5), rng.uniform(-2.0, 2.0);
    Vec v = support::random_velocity(rng, *sph, p, rng.uniform(0.05, 0.45));
    // generous step count: isolates formula errors from truncation error
    GeodesicSegment seg = exp_map(sph, {p}, v, 128);
    Vec want = support::sphere_exp_oracle(p, v);
    INFO("p=" << p.transpose() << " v=" << v.transpose());
    CHECK((seg.end().coords - want).norm() <= 1e-9);
  }
}

TEST_CASE("integration reports the parameter where it leaves the domain") {
  auto sph = support::unit_sphere();
  try {
    exp_map(sph, pt(1e-3 + 0.05, 0.0), vec(-0.2, 0.0), 32);
    FAIL("expected domain_exit_error");
  } catch (const birkhoff::domain_exit_error& e) {
    CHECK(e.exit_parameter > 0.1);
    CHECK(e.exit_parameter < 0.4);
  }
}

TEST_CASE("two-point solve in the plane") {
  auto euc = support::euclidean2();
  auto seg = connect(euc, pt(0, 0), pt(0.3, 0.4));
  CHECK(seg.length() == Catch::Approx(0.5).margin(1e-12));
  CHECK((seg.initial_velocity() - vec(0.3, 0.4)).norm() <= 1e-12);
}

TEST_CASE("two-point solve along the equator") {
  auto sph = support::unit_sphere();
  auto seg = connect(sph, pt(M_PI / 2, 0), pt(M_PI / 2, 0.2));
  CHECK(seg.length() == Catch::Approx(0.2).margin(1e-10));
  CHECK((birkhoff::midpoint(seg).coords - vec(M_PI / 2, 0.1)).norm() <= 1e-10);
}

TEST_CASE("identical endpoints short-circuit to a zero segment") {
  auto euc = support::euclidean2();
  auto seg = connect(euc, pt(1, 1), pt(1, 1));
  CHECK(seg.length() == 0.0);
  CHECK(seg.is_zero());
  CHECK(seg.evaluate(0.5).coords == vec(1, 1));
}

TEST_CASE("distance is symmetric") {
  support::Rng rng(31);
  for (const auto& chart :
       {support::unit_sphere(), support::bumpy_conformal()}) {
    auto [lo, hi] = chart->domain().sample_box(0.8);
    for (int i = 0; i < 15; ++i) {
      Vec p(2), q(2);
      for (int a = 0; a < 2; ++a) {
        p[a] = rng.uniform(lo[a] + 0.3, hi[a] - 0.3);
        q[a] = p[a] + rng.uniform(-0.05, 0.05);
      }
      double dpq = distance(chart, {p}, {q});
      double dqp = distance(chart, {q}, {p});
      CHECK(std::abs(dpq - dqp) <= 1e-8 * (1.0 + dpq));
    }
  }
}

TEST_CASE("exp/log roundtrip recovers the velocity") {
  support::Rng rng(13);
  for (const auto& chart :
       {support::euclidean2(1.0), support::flat_diag41(1.0),
        support::unit_sphere(), support::bumpy_conformal()}) {
    auto [lo, hi] = chart->domain().sample_box(0.8);
    const double r = chart->trusted_radius();
    for (int i = 0; i < 25; ++i) {
      Vec p(2);
      for (int a = 0; a < 2; ++a) p[a] = rng.uniform(lo[a] + 0.3, hi[a] - 0.3);
      Vec v = support::random_velocity(rng, *chart, p,
                                       rng.uniform(0.01, 0.5) * r / 2.0);
      GeodesicSegment fwd = exp_map(chart, {p}, v);
      GeodesicSegment back = connect(chart, {p}, fwd.end());
      INFO("p=" << p.transpose() << " v=" << v.transpose());
      CHECK((back.initial_velocity() - v).norm() <=
            1e-8 * std::max(1.0, v.norm()));
    }
  }
}

TEST_CASE("geodesics keep constant speed") {
  support::Rng rng(17);
  for (const auto& chart :
       {support::unit_sphere(), support::bumpy_conformal()}) {
    auto [lo, hi] = chart->domain().sample_box(0.8);
    for (int i = 0; i < 10; ++i) {
      Vec p(2);
      for (int a = 0; a < 2; ++a) p[a] = rng.uniform(lo[a] + 0.4, hi[a] - 0.4);
      Vec v = support::random_velocity(rng, *chart, p, 0.12);
      GeodesicSegment seg = exp_map(chart, {p}, v);
      CHECK(seg.speed_drift() <= 1e-8);
      // energy is length^2/2 under the constant-speed parametrization
      CHECK(seg.energy() ==
            Catch::Approx(0.5 * seg.length() * seg.length()).epsilon(1e-12));
    }
  }
}

TEST_CASE("triangle inequality on nearby triples") {
  auto sph = support::unit_sphere();
  support::Rng rng(19);
  for (int i = 0; i < 15; ++i) {
    Vec p(2);
    p << rng.uniform(0.8, M_PI - 0.8), rng.uniform(0.0, 1.0);
    Vec q = p + rng.vec(2, -0.1, 0.1);
    Vec s = p + rng.vec(2, -0.1, 0.1);
    double dps = distance(sph, {p}, {s});
    double dpq = distance(sph, {p}, {q});
    double dqs = distance(sph, {q}, {s});
    CHECK(dps <= dpq + dqs + 1e-9);
  }
}

TEST_CASE("connect refuses points it cannot reliably join") {
  // two near-polar points on opposite longitudes: the short geodesic crosses
  // the guarded polar cap, so the shot leaves the domain
  auto sph = support::unit_sphere();
  CHECK_THROWS_AS(connect(sph, pt(0.05, 0.0), pt(0.05, M_PI)),
                  birkhoff::connectivity_error);
}

TEST_CASE("exact midpoint in the plane") {
  auto euc = support::euclidean2();
  auto seg = connect(euc, pt(0, 0), pt(2, 2));
  CHECK(birkhoff::midpoint(seg).coords == vec(1, 1));
}
