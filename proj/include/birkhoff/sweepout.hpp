#pragma once
// One-, two-, and three-parameter families of loops ("sweepouts").
//
// The parameter domain is the closed unit ball of dimension k-1, sampled on
// a uniform odd-sided lattice of the enclosing cube; lattice points outside
// the ball are radially projected onto the sphere and flagged as boundary.
// Each grid point x spawns the loop t -> f(x, a cos 2 pi t, a sin 2 pi t)
// with a = sqrt(1 - |x|^2), so boundary loops are constant (energy exactly
// zero) and the family is continuous in x.
//
// Families are supplied as a point function (x, alpha, t) -> chart
// coordinates plus an optional per-loop twist isometry for lifts that close
// only modulo a deck transformation (e.g. loops winding in longitude on the
// sphere's polar chart).

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <utility>
#include <vector>

#include "affine.hpp"
#include "chart.hpp"
#include "errors.hpp"
#include "expression.hpp"
#include "loop.hpp"

namespace birkhoff {

struct GridPoint {
  Vec x;          // parameter in the closed unit ball of dim k-1
  double alpha;   // sqrt(1 - |x|^2)
  bool boundary;
};

struct LoopFamily {
  int k = 1;
  std::function<Vec(const Vec& x, double alpha, double t)> point;
  // optional: twist isometry of the loop at grid point x (identity if null);
  // must be the identity wherever alpha == 0
  std::function<AffineIsometry(const Vec& x, double alpha)> twist;
};

struct Sweepout {
  std::shared_ptr<const MetricChart> chart;
  int k = 1;
  int m = 0;
  std::vector<GridPoint> grid;
  std::vector<GeodesicLoop> loops;
  double kappa = 0.0;  // max loop energy at construction
};

inline std::vector<GridPoint> parameter_grid(int k, int resolution) {
  if (k < 1 || k > 3)
    throw usage_error("sweepout parameter count k must be 1, 2, or 3");
  std::vector<GridPoint> grid;
  if (k == 1) {
    grid.push_back({Vec(0), 1.0, false});
    return grid;
  }
  if (resolution < 3 || resolution % 2 == 0)
    throw usage_error("grid resolution must be odd and at least 3");
  auto coord = [&](int i) {
    return -1.0 + 2.0 * static_cast<double>(i) / (resolution - 1);
  };
  if (k == 2) {
    for (int i = 0; i < resolution; ++i) {
      Vec x(1);
      x[0] = coord(i);
      const bool bdry = std::abs(x[0]) >= 1.0 - 1e-12;
      grid.push_back({x, bdry ? 0.0 : std::sqrt(1.0 - x[0] * x[0]), bdry});
    }
    return grid;
  }
  for (int i = 0; i < resolution; ++i)
    for (int j = 0; j < resolution; ++j) {
      Vec x(2);
      x << coord(i), coord(j);
      double n = x.norm();
      bool bdry = n >= 1.0 - 1e-12;
      if (n > 1.0) {
        x /= n;  // radial projection onto the sphere
        n = 1.0;
      }
      grid.push_back({x, bdry ? 0.0 : std::sqrt(1.0 - n * n), bdry});
    }
  return grid;
}

inline Sweepout build_sweepout(std::shared_ptr<const MetricChart> chart,
                               const LoopFamily& family, int grid_resolution,
                               int m, SolverOptions opt = {}) {
  Sweepout sw;
  sw.chart = chart;
  sw.k = family.k;
  sw.m = m;
  sw.grid = parameter_grid(family.k, grid_resolution);
  sw.loops.reserve(sw.grid.size());
  const auto id = AffineIsometry::identity(chart->dim());
  for (const auto& gp : sw.grid) {
    if (gp.boundary) {
      // constant loop; exact zero energy by construction
      ChartPoint p{family.point(gp.x, 0.0, 0.0)};
      sw.loops.emplace_back(chart, std::vector<ChartPoint>(m, p), id, opt);
    } else {
      AffineIsometry tw = family.twist ? family.twist(gp.x, gp.alpha) : id;
      auto curve = [&](double t) { return family.point(gp.x, gp.alpha, t); };
      sw.loops.push_back(resample(chart, curve, m, std::move(tw), opt));
    }
    sw.kappa = std::max(sw.kappa, sw.loops.back().energy());
  }
  return sw;
}

// --- built-in families ---------------------------------------------------

// Latitude circles of the round sphere in the polar chart: colatitude fixed
// by the grid parameter, longitude running once around. Interior loops close
// through the supplied longitude-period isometry (x1, x2) -> (x1, x2 + 2 pi).
inline LoopFamily latitude_family(double guard, AffineIsometry phi_period) {
  LoopFamily f;
  f.k = 2;
  f.point = [guard](const Vec& x, double alpha, double t) -> Vec {
    double c = std::min(1.0, std::max(-1.0, x[0]));
    double theta =
        std::min(M_PI - guard, std::max(guard, std::acos(c)));
    Vec p(2);
    p << theta, (alpha == 0.0 ? 0.0 : 2.0 * M_PI * t);
    return p;
  };
  f.twist = [phi_period](const Vec&, double alpha) {
    return alpha == 0.0 ? AffineIsometry::identity(2) : phi_period;
  };
  return f;
}

// Straight representative of a translation class with a transverse sine
// wiggle: t -> t*cls + amplitude*sin(2 pi t)*n, n a unit vector orthogonal
// to cls (deterministically the coordinate direction least aligned with it).
// The caller supplies the matching twist isometry (translation by cls).
inline LoopFamily class_line_family(Vec cls, double amplitude,
                                    AffineIsometry twist_element) {
  const int n = static_cast<int>(cls.size());
  if (cls.cwiseAbs().maxCoeff() == 0.0)
    throw usage_error("class vector must be nonzero");
  int j = 0;
  for (int i = 1; i < n; ++i)
    if (std::abs(cls[i]) < std::abs(cls[j])) j = i;
  Vec perp = Vec::Unit(n, j) - cls * (cls[j] / cls.squaredNorm());
  perp.normalize();
  LoopFamily f;
  f.k = 1;
  f.point = [cls, amplitude, perp](const Vec&, double, double t) -> Vec {
    return t * cls + amplitude * std::sin(2.0 * M_PI * t) * perp;
  };
  f.twist = [twist_element](const Vec&, double) { return twist_element; };
  return f;
}

// Round circle in a two-dimensional chart; plain closure.
inline LoopFamily circle_family(Vec center, double radius) {
  LoopFamily f;
  f.k = 1;
  f.point = [center, radius](const Vec&, double, double t) -> Vec {
    Vec p(2);
    p << center[0] + radius * std::cos(2.0 * M_PI * t),
         center[1] + radius * std::sin(2.0 * M_PI * t);
    return p;
  };
  return f;
}

// Smooth random loop: truncated Fourier series with coefficients drawn
// uniformly from [-amplitude/h, amplitude/h] for mode h (seeded, so the
// family is reproducible). Plain closure.
inline LoopFamily random_fourier_family(Vec center, int modes,
                                        double amplitude,
                                        std::uint64_t seed) {
  const int n = static_cast<int>(center.size());
  if (modes < 1) throw usage_error("random_fourier needs at least one mode");
  std::mt19937_64 rng(seed);
  std::vector<Mat> coef(2, Mat(n, modes));  // [0]=cos, [1]=sin
  for (int h = 0; h < modes; ++h) {
    std::uniform_real_distribution<double> d(-amplitude / (h + 1),
                                             amplitude / (h + 1));
    for (int s = 0; s < 2; ++s)
      for (int i = 0; i < n; ++i) coef[s](i, h) = d(rng);
  }
  LoopFamily f;
  f.k = 1;
  f.point = [center, modes, coef](const Vec&, double, double t) -> Vec {
    Vec p = center;
    for (int h = 1; h <= modes; ++h)
      p += coef[0].col(h - 1) * std::cos(2.0 * M_PI * h * t) +
           coef[1].col(h - 1) * std::sin(2.0 * M_PI * h * t);
    return p;
  };
  return f;
}

// The single loop of a one-parameter family.
inline GeodesicLoop single_loop(std::shared_ptr<const MetricChart> chart,
                                const LoopFamily& family, int m,
                                SolverOptions opt = {}) {
  if (family.k != 1)
    throw usage_error("single_loop requires a one-parameter family");
  Vec x(0);
  AffineIsometry tw = family.twist ? family.twist(x, 1.0)
                                   : AffineIsometry::identity(chart->dim());
  auto curve = [&](double t) { return family.point(x, 1.0, t); };
  return resample(chart, curve, m, std::move(tw), opt);
}

// Componentwise expressions in x1..x_{k-1} and the loop parameters
// u = alpha cos(2 pi t), v = alpha sin(2 pi t). Closure is automatic since
// (u, v) is 1-periodic in t.
inline LoopFamily expression_family(std::vector<Expression> components,
                                    int k) {
  for (const auto& c : components)
    if (c.max_variable() > k - 1)
      throw usage_error(
          "sweepout component references a parameter beyond x" +
          std::to_string(k - 1));
  LoopFamily f;
  f.k = k;
  f.point = [components](const Vec& x, double alpha, double t) -> Vec {
    EvalContext ctx{std::span<const double>(x.data(), x.size()),
                    alpha * std::cos(2.0 * M_PI * t),
                    alpha * std::sin(2.0 * M_PI * t)};
    Vec p(components.size());
    for (int i = 0; i < static_cast<int>(components.size()); ++i)
      p[i] = components[i].eval(ctx);
    return p;
  };
  return f;
}

}  // namespace birkhoff
