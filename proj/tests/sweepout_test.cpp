// Sweepout grids and the built-in loop families. The key frozen value: the
// latitude sweepout of the unit sphere has max energy 2 pi^2 (the equator
// traversed once at constant speed).

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "birkhoff/sweepout.hpp"
#include "support.hpp"

using namespace birkhoff;
using Catch::Approx;

namespace {
Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}
}  // namespace

TEST_CASE("parameter grid shapes") {
  SECTION("one parameter: a single interior point") {
    auto g = parameter_grid(1, 99);
    REQUIRE(g.size() == 1);
    CHECK(g[0].alpha == 1.0);
    CHECK_FALSE(g[0].boundary);
    CHECK(g[0].x.size() == 0);
  }
  SECTION("two parameters: odd lattice on [-1,1]") {
    auto g = parameter_grid(2, 5);
    REQUIRE(g.size() == 5);
    CHECK(g[0].x[0] == -1.0);
    CHECK(g[2].x[0] == 0.0);
    CHECK(g[4].x[0] == 1.0);
    CHECK(g[0].boundary);
    CHECK(g[4].boundary);
    CHECK(g[0].alpha == 0.0);
    CHECK(g[2].alpha == 1.0);
    CHECK(g[1].alpha == Approx(std::sqrt(0.75)).margin(1e-15));
  }
  SECTION("three parameters: lattice points outside the disk are projected") {
    auto g = parameter_grid(3, 5);
    REQUIRE(g.size() == 25);
    int boundary = 0;
    for (const auto& gp : g) {
      CHECK(gp.x.norm() <= 1.0 + 1e-12);
      if (gp.boundary) {
        ++boundary;
        CHECK(gp.alpha == 0.0);
        CHECK(gp.x.norm() == Approx(1.0).margin(1e-12));
      }
    }
    // the 16 perimeter points of the 5x5 lattice all have max-norm 1
    CHECK(boundary == 16);
  }
  SECTION("rejections") {
    CHECK_THROWS_AS(parameter_grid(2, 4), usage_error);
    CHECK_THROWS_AS(parameter_grid(2, 1), usage_error);
    CHECK_THROWS_AS(parameter_grid(4, 5), usage_error);
    CHECK_THROWS_AS(parameter_grid(0, 5), usage_error);
  }
}

TEST_CASE("circle family: single loop approximates the round circle") {
  auto chart = support::euclidean2();
  auto fam = circle_family(v2(0.5, -0.25), 1.0);
  GeodesicLoop loop = single_loop(chart, fam, 16);
  CHECK(loop.length() == Approx(32.0 * std::sin(M_PI / 16)).epsilon(1e-12));
  CHECK(loop.twist().is_identity());
  CHECK(loop.vertex(0).coords.isApprox(v2(1.5, -0.25), 1e-12));
}

TEST_CASE("latitude sweepout of the unit sphere peaks at the equator") {
  auto chart = support::unit_sphere();
  auto phi = AffineIsometry::translation(v2(0.0, 2 * M_PI),
                                         Word::generator("phi"));
  auto fam = latitude_family(1e-3, phi);
  Sweepout sw = build_sweepout(chart, fam, 9, 32);
  REQUIRE(sw.grid.size() == 9);
  REQUIRE(sw.loops.size() == 9);
  CHECK(sw.k == 2);
  CHECK(sw.m == 32);

  // boundary loops are constant with exactly zero energy
  CHECK(sw.loops.front().energy() == 0.0);
  CHECK(sw.loops.back().energy() == 0.0);
  CHECK(sw.loops.front().twist().is_identity());

  // interior loops wind once in longitude, closing through the 2pi shift
  CHECK(sw.loops[4].twist().approx_equal(phi, 1e-12));
  CHECK(sw.loops[4].effective_vertex(32).coords.isApprox(
      sw.loops[4].vertex(0).coords + v2(0, 2 * M_PI), 1e-9));

  // max energy: the equator (x=0 -> theta=pi/2) at constant speed 2pi
  CHECK(sw.kappa == Approx(2 * M_PI * M_PI).margin(1e-6));
  CHECK(sw.kappa == Approx(sw.loops[4].energy()));
  for (const auto& l : sw.loops) CHECK(l.energy() <= sw.kappa);

  // energies are symmetric under x -> -x up to solver noise
  CHECK(sw.loops[1].energy() == Approx(sw.loops[7].energy()).margin(1e-9));
}

TEST_CASE("class line family: straight representative with a sine wiggle") {
  auto chart = support::euclidean2();
  Vec cls = v2(2, 1);
  auto tw = AffineIsometry::translation(cls, Word::generator("T"));
  auto fam = class_line_family(cls, 0.05, tw);
  GeodesicLoop loop = single_loop(chart, fam, 16);
  CHECK(loop.vertex(0).coords.isApprox(v2(0, 0)));
  CHECK(loop.effective_vertex(16).coords.isApprox(v2(2, 1), 1e-12));
  // the wiggle is orthogonal to the class direction
  Vec quarter = fam.point(Vec(0), 1.0, 0.25);
  CHECK((quarter - 0.25 * cls).dot(cls) == Approx(0.0).margin(1e-12));
  CHECK((quarter - 0.25 * cls).norm() == Approx(0.05).margin(1e-12));
  CHECK_THROWS_AS(class_line_family(v2(0, 0), 0.1, tw), usage_error);
}

TEST_CASE("expression family: (u, v) components trace the unit circle") {
  auto chart = support::euclidean2();
  std::vector<Expression> comps{parse_expression("u", true),
                                parse_expression("v", true)};
  auto fam = expression_family(comps, 1);
  GeodesicLoop loop = single_loop(chart, fam, 32);
  CHECK(loop.length() == Approx(64.0 * std::sin(M_PI / 32)).epsilon(1e-12));
  CHECK(loop.twist().is_identity());

  // two-parameter version: alpha shrinks the circle toward the boundary
  std::vector<Expression> scaled{parse_expression("u + x1", true),
                                 parse_expression("v", true)};
  auto fam2 = expression_family(scaled, 2);
  Sweepout sw = build_sweepout(chart, fam2, 5, 16);
  CHECK(sw.loops.front().energy() == 0.0);   // constant at (-1, 0)
  CHECK(sw.loops.front().vertex(0).coords.isApprox(v2(-1, 0)));
  CHECK(sw.kappa == Approx(sw.loops[2].energy()));

  // referencing x2 in a one-parameter family is rejected
  CHECK_THROWS_AS(
      expression_family({parse_expression("x2", true)}, 2), usage_error);
}

TEST_CASE("random fourier family is deterministic in its seed") {
  auto chart = support::euclidean2();
  auto f1 = random_fourier_family(v2(0.5, 0.5), 3, 0.3, 42);
  auto f2 = random_fourier_family(v2(0.5, 0.5), 3, 0.3, 42);
  auto f3 = random_fourier_family(v2(0.5, 0.5), 3, 0.3, 43);
  GeodesicLoop a = single_loop(chart, f1, 16);
  GeodesicLoop b = single_loop(chart, f2, 16);
  GeodesicLoop c = single_loop(chart, f3, 16);
  for (int k = 0; k < 16; ++k)  // bitwise agreement
    CHECK((a.vertex(k).coords - b.vertex(k).coords).cwiseAbs().maxCoeff() ==
          0.0);
  CHECK(loop_distance(a, c) > 1e-3);
  CHECK(a.energy() > 0.0);
  CHECK_THROWS_AS(random_fourier_family(v2(0, 0), 0, 0.3, 1), usage_error);
}

TEST_CASE("sweepout loops all share the vertex count") {
  auto chart = support::euclidean2();
  auto fam = circle_family(v2(0, 0), 0.5);
  Sweepout sw = build_sweepout(chart, fam, 5, 8);
  REQUIRE(sw.loops.size() == 1);  // k = 1
  for (const auto& l : sw.loops) CHECK(l.m() == sw.m);
}
