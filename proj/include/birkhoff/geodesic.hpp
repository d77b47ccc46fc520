#pragma once
// Geodesics on a metric chart.
//
// Initial value problem: fixed-step RK4 on the geodesic equation
//   x''^i + Gamma^i_{jk} x'^j x'^k = 0,
// always over parameter [0,1] (speed is folded into the velocity). The dense
// list of step states is cached on the segment; evaluation between grid
// states takes one RK4 refinement step from the nearest cached state below.
//
// Boundary value problem (connect): damped Newton shooting on the endpoint
// map v -> exp_p(v), Jacobian by forward differences, step halving on
// residual increase. Trusted only within the chart's radius r; failure to
// converge is reported as a connectivity error, never papered over.

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include "chart.hpp"
#include "errors.hpp"

namespace birkhoff {

struct SolverOptions {
  double tol_bvp = 1e-10;   // endpoint residual, scaled by (1 + |q|)
  int max_newton = 50;      // Newton iterations for connect
  int max_halvings = 20;    // damping: step halvings per iteration
  int steps = 0;            // RK4 steps per segment; 0 = automatic rule
};

namespace detail {
// automatic step rule: resolution proportional to segment length over r
inline int rk4_steps(double speed, double r) {
  double want = 64.0 * speed / r;
  int steps = want > 16.0 ? static_cast<int>(std::ceil(want)) : 16;
  return steps;
}
}  // namespace detail

class GeodesicSegment {
 public:
  struct State {
    Vec x;
    Vec xdot;
  };

  // Integrate from (p, v) over [0,1]. Throws domain_exit_error when the
  // trajectory leaves the chart (carrying the parameter of the first bad
  // step) and numeric_error on a singular metric.
  GeodesicSegment(std::shared_ptr<const MetricChart> chart, ChartPoint p,
                  Vec v, int steps = 0) {
    chart_ = std::move(chart);
    chart_->require_inside(p.coords, 0.0);
    const int n = chart_->dim();
    if (static_cast<int>(v.size()) != n)
      throw usage_error("velocity dimension does not match chart dimension");

    double speed0 = chart_->norm({p, v});
    zero_ = speed0 == 0.0 || v.cwiseAbs().maxCoeff() == 0.0;
    steps_ = steps > 0 ? steps
                       : detail::rk4_steps(speed0, chart_->trusted_radius());
    states_.reserve(steps_ + 1);
    states_.push_back({p.coords, v});
    if (zero_) {
      // zero segment: constant path, one state is enough
      length_ = 0.0;
      return;
    }
    const double h = 1.0 / steps_;
    State s = states_.front();
    for (int i = 0; i < steps_; ++i) {
      const double t = i * h;
      s = rk4_once(s, h, t);
      if (!chart_->domain().contains(s.x))
        throw domain_exit_error("geodesic left the chart domain", t + h);
      states_.push_back(s);
    }
    length_ = speed0;  // constant-speed parametrization over [0,1]
  }

  const MetricChart& chart() const { return *chart_; }
  const std::shared_ptr<const MetricChart>& chart_ptr() const { return chart_; }

  ChartPoint start() const { return {states_.front().x}; }
  ChartPoint end() const { return {states_.back().x}; }
  Vec initial_velocity() const { return states_.front().xdot; }
  Vec final_velocity() const { return states_.back().xdot; }
  int steps() const { return steps_; }
  bool is_zero() const { return zero_; }

  // Riemannian length; equals initial speed by constant-speed parametrization.
  double length() const { return length_; }
  double energy() const { return 0.5 * length_ * length_; }

  ChartPoint evaluate(double t) const { return {state_at(t).x}; }
  Tangent velocity(double t) const {
    State s = state_at(t);
    return {{s.x}, s.xdot};
  }

  // Largest relative deviation of the cached speeds from the initial speed.
  double speed_drift() const {
    if (zero_) return 0.0;
    double worst = 0.0;
    for (const auto& s : states_) {
      double sp = chart_->norm({{s.x}, s.xdot});
      worst = std::max(worst, std::abs(sp - length_) / length_);
    }
    return worst;
  }

  // Transport the whole cached trajectory by an affine map (used only with
  // exact isometries, which send geodesics to geodesics and keep lengths).
  template <class AffineMap>
  GeodesicSegment transformed(const AffineMap& iso) const {
    GeodesicSegment out = *this;
    for (auto& s : out.states_) {
      s.x = iso.A * s.x + iso.b;
      s.xdot = iso.A * s.xdot;
    }
    return out;
  }

 private:
  State state_at(double t) const {
    if (zero_) return states_.front();
    if (t <= 0.0) return states_.front();
    if (t >= 1.0) return states_.back();
    const double h = 1.0 / steps_;
    int i = static_cast<int>(t * steps_);
    if (i >= steps_) i = steps_ - 1;
    const double dt = t - i * h;
    if (dt == 0.0) return states_[i];
    return rk4_once(states_[i], dt, i * h);
  }

  State rk4_once(const State& s, double h, double t_base) const {
    auto accel = [this, t_base](const Vec& x, const Vec& w) -> Vec {
      std::vector<Mat> gamma;
      try {
        gamma = chart_->christoffel_at({x});
      } catch (const domain_error&) {
        throw domain_exit_error("geodesic left the chart domain", t_base);
      }
      Vec a(x.size());
      for (int i = 0; i < static_cast<int>(x.size()); ++i)
        a[i] = -w.dot(gamma[i] * w);
      return a;
    };
    const Vec k1x = s.xdot, k1v = accel(s.x, s.xdot);
    const Vec k2x = s.xdot + 0.5 * h * k1v,
              k2v = accel(s.x + 0.5 * h * k1x, s.xdot + 0.5 * h * k1v);
    const Vec k3x = s.xdot + 0.5 * h * k2v,
              k3v = accel(s.x + 0.5 * h * k2x, s.xdot + 0.5 * h * k2v);
    const Vec k4x = s.xdot + h * k3v,
              k4v = accel(s.x + h * k3x, s.xdot + h * k3v);
    State out;
    out.x = s.x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    out.xdot = s.xdot + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    return out;
  }

  std::shared_ptr<const MetricChart> chart_;
  std::vector<State> states_;
  int steps_ = 0;
  double length_ = 0.0;
  bool zero_ = true;
};

inline GeodesicSegment exp_map(std::shared_ptr<const MetricChart> chart,
                               const ChartPoint& p, const Vec& v,
                               int steps = 0) {
  return GeodesicSegment(std::move(chart), p, v, steps);
}

// Unique short geodesic from p to q. Precondition (trusted, not provable
// locally): d(p, q) < chart r. Identical points short-circuit to a zero
// segment. The step count for the whole solve is frozen from the initial
// coordinate-difference guess so the shooting map stays smooth in v.
inline GeodesicSegment connect(std::shared_ptr<const MetricChart> chart,
                               const ChartPoint& p, const ChartPoint& q,
                               const SolverOptions& opt = {}) {
  const int n = chart->dim();
  const Vec diff = q.coords - p.coords;
  const double scale = 1.0 + q.coords.norm();
  if (diff.cwiseAbs().maxCoeff() <= 1e-15 * scale)
    return GeodesicSegment(std::move(chart), p, Vec::Zero(n), 1);

  Vec v = diff;  // straight-coordinate initial guess
  const int steps =
      opt.steps > 0
          ? opt.steps
          : detail::rk4_steps(chart->norm({p, v}), chart->trusted_radius());

  auto shoot = [&](const Vec& vel) -> std::pair<GeodesicSegment, double> {
    GeodesicSegment seg(chart, p, vel, steps);
    return {seg, (seg.end().coords - q.coords).norm()};
  };

  GeodesicSegment seg = GeodesicSegment(chart, p, Vec::Zero(n), 1);
  double residual;
  try {
    auto [s0, r0] = shoot(v);
    seg = std::move(s0);
    residual = r0;
  } catch (const domain_exit_error& e) {
    throw connectivity_error(
        std::string("two-point geodesic solve failed: initial guess left the "
                    "chart domain (") + e.what() + ")");
  }
  const double tol = opt.tol_bvp * scale;

  for (int iter = 0; iter < opt.max_newton && residual > tol; ++iter) {
    // forward-difference Jacobian of the endpoint map
    Mat J(n, n);
    for (int j = 0; j < n; ++j) {
      Vec vj = v;
      const double dj = 1e-7 * std::max(1.0, std::abs(v[j]));
      vj[j] += dj;
      GeodesicSegment sj(chart, p, vj, steps);
      J.col(j) = (sj.end().coords - seg.end().coords) / dj;
    }
    Eigen::FullPivLU<Mat> lu(J);
    if (!lu.isInvertible())
      throw connectivity_error(
          "two-point geodesic solve failed: singular shooting Jacobian");
    Vec step = lu.solve(q.coords - seg.end().coords);

    // damped update: halve until the residual actually drops
    bool accepted = false;
    double damp = 1.0;
    for (int h = 0; h <= opt.max_halvings; ++h, damp *= 0.5) {
      Vec trial = v + damp * step;
      try {
        auto [st, rt] = shoot(trial);
        if (rt < residual) {
          v = trial;
          seg = std::move(st);
          residual = rt;
          accepted = true;
          break;
        }
      } catch (const domain_exit_error&) {
        // overshoot out of the domain: damp further
      }
    }
    if (!accepted) break;  // stalled; the residual check below decides
  }

  if (residual > tol)
    throw connectivity_error(
        "two-point geodesic solve did not converge (residual " +
        std::to_string(residual) + "); points likely exceed the trusted radius");
  return seg;
}

inline double distance(const std::shared_ptr<const MetricChart>& chart,
                       const ChartPoint& p, const ChartPoint& q,
                       const SolverOptions& opt = {}) {
  return connect(chart, p, q, opt).length();
}

inline ChartPoint midpoint(const GeodesicSegment& seg) {
  return seg.evaluate(0.5);
}

}  // namespace birkhoff
