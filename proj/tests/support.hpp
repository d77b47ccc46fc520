#pragma once
// Shared helpers for the test suite: chart factories, deterministic RNG
// draws, and independent closed-form oracles the implementation is checked
// against (ambient sphere formulas, symbolic Christoffels, polygon energies).

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <random>

#include "birkhoff/chart.hpp"
#include "birkhoff/expression.hpp"

namespace support {

using birkhoff::ChartPoint;
using birkhoff::Mat;
using birkhoff::MetricChart;
using birkhoff::Vec;

inline std::shared_ptr<const MetricChart> euclidean2(double r = 10.0) {
  return std::make_shared<MetricChart>(MetricChart::euclidean(2, r));
}

inline std::shared_ptr<const MetricChart> flat_diag41(double r = 10.0) {
  Mat g(2, 2);
  g << 4, 0, 0, 1;
  return std::make_shared<MetricChart>(MetricChart::flat(g, r));
}

inline std::shared_ptr<const MetricChart> unit_sphere(double r = 1.0) {
  return std::make_shared<MetricChart>(MetricChart::sphere_chart(1.0, r));
}

// lambda(x,y) = 0.1 sin(2 pi x) sin(2 pi y); |K| stays O(10), r=0.3 is safe
inline std::shared_ptr<const MetricChart> bumpy_conformal(double r = 0.3) {
  auto lam = birkhoff::parse_expression("0.1*sin(2*pi*x1)*sin(2*pi*x2)");
  return std::make_shared<MetricChart>(MetricChart::conformal(lam, r));
}

// --- ambient-sphere oracles (unit radius) ------------------------------

inline Eigen::Vector3d ambient(const Vec& p) {
  const double th = p[0], ph = p[1];
  return {std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph),
          std::cos(th)};
}

// pushforward of a chart tangent into R^3
inline Eigen::Vector3d ambient_tangent(const Vec& p, const Vec& v) {
  const double th = p[0], ph = p[1];
  Eigen::Vector3d dth{std::cos(th) * std::cos(ph), std::cos(th) * std::sin(ph),
                      -std::sin(th)};
  Eigen::Vector3d dph{-std::sin(th) * std::sin(ph), std::sin(th) * std::cos(ph),
                      0.0};
  return v[0] * dth + v[1] * dph;
}

inline double great_circle_distance(const Vec& p, const Vec& q) {
  double c = ambient(p).dot(ambient(q));
  return std::acos(std::min(1.0, std::max(-1.0, c)));
}

// exact geodesic flow on the unit sphere, mapped back to chart coordinates
inline Vec sphere_exp_oracle(const Vec& p, const Vec& v) {
  Eigen::Vector3d X = ambient(p);
  Eigen::Vector3d W = ambient_tangent(p, v);
  double s = W.norm();
  if (s == 0.0) return p;
  Eigen::Vector3d Y = std::cos(s) * X + (std::sin(s) / s) * W;
  Vec out(2);
  out[0] = std::acos(std::min(1.0, std::max(-1.0, Y[2])));
  out[1] = std::atan2(Y[1], Y[0]);
  // unwrap longitude to the branch nearest the start
  while (out[1] - p[1] > M_PI) out[1] -= 2.0 * M_PI;
  while (out[1] - p[1] < -M_PI) out[1] += 2.0 * M_PI;
  return out;
}

// symbolic Christoffel symbols of g = diag(R^2, R^2 sin^2 th):
// Gamma^th_{phph} = -sin th cos th, Gamma^ph_{th ph} = cot th, rest zero.
inline double sphere_gamma_oracle(int i, int j, int k, double theta) {
  if (i == 0 && j == 1 && k == 1) return -std::sin(theta) * std::cos(theta);
  if (i == 1 && ((j == 0 && k == 1) || (j == 1 && k == 0)))
    return std::cos(theta) / std::sin(theta);
  return 0.0;
}

// --- deterministic draws ------------------------------------------------

struct Rng {
  explicit Rng(unsigned seed) : eng(seed) {}
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(eng);
  }
  Vec vec(int n, double lo, double hi) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }
  std::mt19937_64 eng;
};

// random tangent with metric norm exactly `speed`
inline Vec random_velocity(Rng& rng, const MetricChart& chart, const Vec& p,
                           double speed) {
  Vec v = rng.vec(chart.dim(), -1.0, 1.0);
  double n = chart.norm({{p}, v});
  if (n == 0.0) {
    v.setZero();
    v[0] = 1.0;
    n = chart.norm({{p}, v});
  }
  return v * (speed / n);
}

}  // namespace support
