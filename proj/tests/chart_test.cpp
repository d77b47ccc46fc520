#include <Eigen/Cholesky>
#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "birkhoff/chart.hpp"
#include "support.hpp"

using birkhoff::ChartPoint;
using birkhoff::Domain;
using birkhoff::Mat;
using birkhoff::MetricChart;
using birkhoff::Vec;

namespace {
ChartPoint pt(double a, double b) {
  Vec v(2);
  v << a, b;
  return {v};
}
}  // namespace

TEST_CASE("built-in metric values") {
  auto euc = support::euclidean2();
  CHECK(euc->metric_at(pt(0.3, -2.0)) == Mat::Identity(2, 2));

  auto flat = support::flat_diag41();
  Mat g = flat->metric_at(pt(5.0, 5.0));
  CHECK(g(0, 0) == 4.0);
  CHECK(g(1, 1) == 1.0);
  CHECK(g(0, 1) == 0.0);

  auto sph = support::unit_sphere();
  Mat gs = sph->metric_at(pt(M_PI / 3, 1.0));
  CHECK(gs(0, 0) == Catch::Approx(1.0).epsilon(1e-15));
  CHECK(gs(1, 1) == Catch::Approx(0.75).epsilon(1e-14));  // sin^2(pi/3)

  auto conf = support::bumpy_conformal();
  Mat gc = conf->metric_at(pt(0.25, 0.25));
  CHECK(gc(0, 0) == Catch::Approx(std::exp(0.2)).epsilon(1e-14));
  CHECK(gc(1, 1) == Catch::Approx(std::exp(0.2)).epsilon(1e-14));
  CHECK(gc(0, 1) == 0.0);
}

TEST_CASE("construction rejects bad input") {
  Mat notspd(2, 2);
  notspd << 1, 0, 0, -1;
  CHECK_THROWS_AS(MetricChart::flat(notspd, 1.0), birkhoff::usage_error);
  Mat notsym(2, 2);
  notsym << 1, 0.5, 0, 1;
  CHECK_THROWS_AS(MetricChart::flat(notsym, 1.0), birkhoff::usage_error);
  CHECK_THROWS_AS(MetricChart::euclidean(0, 1.0), birkhoff::usage_error);
  CHECK_THROWS_AS(MetricChart::euclidean(2, 0.0), birkhoff::usage_error);
  CHECK_THROWS_AS(MetricChart::sphere_chart(1.0, 1.0, 2.0),
                  birkhoff::usage_error);
}

TEST_CASE("metric symmetry and positive definiteness at random points") {
  support::Rng rng(7);
  auto charts = {support::euclidean2(), support::flat_diag41(),
                 support::unit_sphere(), support::bumpy_conformal()};
  for (const auto& chart : charts) {
    auto [lo, hi] = chart->domain().sample_box();
    for (int i = 0; i < 100; ++i) {
      Vec x(2);
      for (int a = 0; a < 2; ++a) x[a] = rng.uniform(lo[a], hi[a]);
      Mat g = chart->metric_at({x});
      CHECK(g(0, 1) == g(1, 0));  // symmetric to zero error
      Eigen::LLT<Mat> llt(g);
      CHECK(llt.info() == Eigen::Success);
    }
  }
}

TEST_CASE("custom entries are mirrored from the upper triangle") {
  using birkhoff::parse_expression;
  std::vector<std::vector<birkhoff::Expression>> entries(2);
  entries[0] = {parse_expression("1"), parse_expression("x1*x2")};
  entries[1] = {parse_expression("x1*x2"), parse_expression("2+x1^2")};
  Domain dom(2);
  dom.set_bounds(0, -0.5, 0.5);
  dom.set_bounds(1, -0.5, 0.5);
  auto chart = MetricChart::custom(entries, 1.0, dom);
  Mat g = chart.metric_at(pt(0.2, 0.3));
  CHECK(g(0, 1) == g(1, 0));
  CHECK(g(0, 1) == Catch::Approx(0.06).epsilon(1e-15));
  CHECK(g(1, 1) == Catch::Approx(2.04).epsilon(1e-15));
  CHECK_THROWS_AS(chart.metric_at(pt(0.7, 0.0)), birkhoff::domain_error);
}

TEST_CASE("constant metrics have exactly zero Christoffel symbols") {
  for (const auto& chart : {support::euclidean2(), support::flat_diag41()}) {
    auto gamma = chart->christoffel_at(pt(1.0, -2.0));
    for (const auto& m : gamma) CHECK(m.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("finite-difference Christoffels match the symbolic sphere values") {
  auto sph = support::unit_sphere();
  for (double theta : {0.4, M_PI / 2, 2.2}) {
    auto gamma = sph->christoffel_at(pt(theta, 0.7));
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) {
          double want = support::sphere_gamma_oracle(i, j, k, theta);
          INFO("i=" << i << " j=" << j << " k=" << k << " theta=" << theta);
          CHECK(std::abs(gamma[i](j, k) - want) <= 1e-6);
        }
    // lower-pair symmetry holds bitwise by construction
    for (int i = 0; i < 2; ++i) CHECK(gamma[i](0, 1) == gamma[i](1, 0));
  }
}

TEST_CASE("polar-coordinate custom chart has the classical symbols") {
  // g = diag(1, x1^2): Gamma^1_{22} = -x1, Gamma^2_{12} = 1/x1
  using birkhoff::parse_expression;
  std::vector<std::vector<birkhoff::Expression>> entries(2);
  entries[0] = {parse_expression("1"), parse_expression("0")};
  entries[1] = {parse_expression("0"), parse_expression("x1^2")};
  Domain dom(2);
  dom.set_bounds(0, 0.1, 10.0);
  auto chart = MetricChart::custom(entries, 0.05, dom);
  auto gamma = chart.christoffel_at(pt(2.0, 0.3));
  CHECK(gamma[0](1, 1) == Catch::Approx(-2.0).margin(1e-8));
  CHECK(gamma[1](0, 1) == Catch::Approx(0.5).margin(1e-8));
  CHECK(gamma[0](0, 0) == Catch::Approx(0.0).margin(1e-8));
}

TEST_CASE("domain gates and finite-difference margins") {
  auto sph = support::unit_sphere();
  CHECK_THROWS_AS(sph->metric_at(pt(1e-4, 0.0)), birkhoff::domain_error);
  // inside the domain but without FD room: christoffel refuses
  CHECK_THROWS_AS(sph->christoffel_at(pt(1e-3 + 1e-6, 0.0)),
                  birkhoff::domain_error);
  CHECK_NOTHROW(sph->christoffel_at(pt(1e-3 + 1e-4, 0.0)));
}

TEST_CASE("tangent norms use the metric") {
  auto flat = support::flat_diag41();
  Vec v(2);
  v << 1, 0;
  CHECK(flat->norm({pt(0, 0), v}) == 2.0);
  auto sph = support::unit_sphere();
  Vec w(2);
  w << 0, 1;
  CHECK(sph->norm({pt(M_PI / 6, 0), w}) == Catch::Approx(0.5).epsilon(1e-14));
}
