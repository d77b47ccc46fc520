#pragma once
// Piecewise-geodesic closed loops with m vertices (m even).
//
// A loop may be the lift of a closed curve in a quotient: it closes through a
// "twist" isometry g, meaning the edge after v_{m-1} runs to g(v_0) and, for
// any integer j, the effective vertex at index j+m is g applied to the one at
// index j. Plain closed loops are the g = identity case. Fixed loops of the
// curve-shortening map with twist g are exactly the curves c with
// g(c(0)) = c(1) and dg(c'(0)) = c'(1), i.e. closed geodesics of the quotient.
//
// Invariants kept by construction: m even; every consecutive pair is joined
// by a cached geodesic edge shorter than the chart's trusted radius r (the
// uniqueness regime); energy is (m/2) * sum of squared edge lengths, which is
// the Dirichlet energy of the uniform-speed parametrization.

#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include "affine.hpp"
#include "chart.hpp"
#include "errors.hpp"
#include "geodesic.hpp"

namespace birkhoff {

class GeodesicLoop {
 public:
  GeodesicLoop(std::shared_ptr<const MetricChart> chart,
               std::vector<ChartPoint> vertices,
               AffineIsometry twist_element, SolverOptions opt = {})
      : chart_(std::move(chart)),
        vertices_(std::move(vertices)),
        twist_(std::move(twist_element)),
        opt_(opt) {
    const int m = static_cast<int>(vertices_.size());
    if (m < 2 || m % 2 != 0)
      throw usage_error("loop needs an even vertex count of at least 2");
    if (twist_.dim() != chart_->dim())
      throw usage_error("twist dimension does not match chart dimension");
    build_edges();
  }

  GeodesicLoop(std::shared_ptr<const MetricChart> chart,
               std::vector<ChartPoint> vertices, SolverOptions opt = {})
      : GeodesicLoop(chart, std::move(vertices),
                     AffineIsometry::identity(chart->dim()), opt) {}

  int m() const { return static_cast<int>(vertices_.size()); }
  const std::shared_ptr<const MetricChart>& chart_ptr() const { return chart_; }
  const MetricChart& chart() const { return *chart_; }
  const std::vector<ChartPoint>& vertices() const { return vertices_; }
  const ChartPoint& vertex(int k) const { return vertices_[k]; }
  const AffineIsometry& twist() const { return twist_; }
  const SolverOptions& solver_options() const { return opt_; }

  // Effective vertex at any index: shifts by +-m apply the twist.
  ChartPoint effective_vertex(int j) const {
    const int m_ = m();
    if (j >= 0 && j < m_) return vertices_[j];
    if (j >= m_ && j < 2 * m_) return twist_.apply(vertices_[j - m_]);
    if (j < 0 && j >= -m_) return twist_.inverse().apply(vertices_[j + m_]);
    throw usage_error("effective vertex index out of the supported window");
  }

  // Edge k joins vertex k to effective vertex k+1 (k in [0, m)).
  const GeodesicSegment& edge(int k) const { return edges_[k]; }

  double edge_length(int k) const { return edges_[k].length(); }

  double length() const {
    double L = 0;
    for (const auto& e : edges_) L += e.length();
    return L;
  }

  // E = (m/2) sum_k d(v_k, v_{k+1})^2: the energy of the parametrization
  // that traverses edge k at constant speed on [k/m, (k+1)/m].
  double energy() const {
    double s = 0;
    for (const auto& e : edges_) s += e.length() * e.length();
    return 0.5 * m() * s;
  }

  // point at loop parameter t in [0,1]; vertex k sits at t = k/m
  ChartPoint at(double t) const {
    const int m_ = m();
    double u = t * m_;
    int k = static_cast<int>(u);
    if (k >= m_) k = m_ - 1;
    return edges_[k].evaluate(u - k);
  }

  // Largest interior angle between consecutive edges (radians). The wrap
  // vertex compares the last edge's arrival direction, pulled back through
  // the twist, against the first edge's departure.
  double max_angle_defect() const {
    double worst = 0.0;
    const int m_ = m();
    for (int k = 0; k < m_; ++k) {
      const GeodesicSegment& out = edges_[k];
      const GeodesicSegment& in = edges_[(k + m_ - 1) % m_];
      if (in.is_zero() || out.is_zero()) continue;
      Vec win = in.final_velocity();
      if (k == 0) win = twist_.inverse().A * win;  // pull back to v_0
      const Vec wout = out.initial_velocity();
      Mat g = chart_->metric_at(vertices_[k]);
      double c = win.dot(g * wout) /
                 (std::sqrt(win.dot(g * win)) * std::sqrt(wout.dot(g * wout)));
      c = std::min(1.0, std::max(-1.0, c));
      worst = std::max(worst, std::acos(c));
    }
    return worst;
  }

  // Apply an isometry to the whole loop; the twist conjugates so that the
  // closure relation is preserved: new closing edge ends at (h g h^-1)(h v0).
  GeodesicLoop transformed(const AffineIsometry& h) const {
    GeodesicLoop out = *this;
    for (auto& v : out.vertices_) v = h.apply(v);
    out.twist_ = h.compose(twist_).compose(h.inverse());
    for (auto& e : out.edges_) e = e.transformed(h);
    return out;
  }

  // Replace the vertex set, keeping chart/twist/options (edges recomputed).
  GeodesicLoop with_vertices(std::vector<ChartPoint> vs) const {
    return GeodesicLoop(chart_, std::move(vs), twist_, opt_);
  }

 private:
  void build_edges() {
    const int m_ = m();
    const double r = chart_->trusted_radius();
    edges_.clear();
    edges_.reserve(m_);
    for (int k = 0; k < m_; ++k) {
      ChartPoint to = k + 1 < m_ ? vertices_[k + 1] : twist_.apply(vertices_[0]);
      GeodesicSegment e = [&] {
        try {
          return connect(chart_, vertices_[k], to, opt_);
        } catch (const connectivity_error& err) {
          throw resolution_error(
              "loop edge " + std::to_string(k) +
              " could not be joined; increase m (" + err.what() + ")");
        }
      }();
      if (e.length() >= r)
        throw resolution_error("loop edge " + std::to_string(k) +
                               " is not shorter than the trusted radius; "
                               "increase m");
      edges_.push_back(std::move(e));
    }
  }

  std::shared_ptr<const MetricChart> chart_;
  std::vector<ChartPoint> vertices_;
  AffineIsometry twist_;
  SolverOptions opt_;
  std::vector<GeodesicSegment> edges_;
};

// Max pointwise distance over a dense common parameter grid (vertices plus
// per-edge interior samples). Loops must share chart and m.
inline double loop_distance(const GeodesicLoop& a, const GeodesicLoop& b,
                            int samples_per_edge = 4) {
  if (a.m() != b.m()) throw usage_error("loop_distance requires equal m");
  if (a.chart_ptr().get() != b.chart_ptr().get())
    throw usage_error("loop_distance requires a shared chart");
  double worst = 0.0;
  const int m = a.m();
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < samples_per_edge; ++j) {
      double t = (k + static_cast<double>(j) / samples_per_edge) / m;
      worst = std::max(
          worst, distance(a.chart_ptr(), a.at(t), b.at(t), a.solver_options()));
    }
  return worst;
}

// Sample a parametrized curve at m uniform parameters. The curve must close
// through the twist: curve(1) = twist(curve(0)) within a coordinate
// tolerance. Over-coarse sampling surfaces as a resolution error from the
// loop constructor.
template <class CurveFn>
GeodesicLoop resample(std::shared_ptr<const MetricChart> chart,
                      const CurveFn& curve, int m,
                      AffineIsometry twist_element, SolverOptions opt = {}) {
  if (m < 2 || m % 2 != 0)
    throw usage_error("resample needs an even vertex count of at least 2");
  Vec c0 = curve(0.0);
  Vec c1 = curve(1.0);
  if ((c1 - twist_element.apply(c0)).cwiseAbs().maxCoeff() >
      1e-9 * (1.0 + c0.cwiseAbs().maxCoeff()))
    throw usage_error(
        "curve endpoints do not close through the given twist isometry");
  std::vector<ChartPoint> vs;
  vs.reserve(m);
  for (int k = 0; k < m; ++k) vs.push_back({curve(static_cast<double>(k) / m)});
  return GeodesicLoop(std::move(chart), std::move(vs),
                      std::move(twist_element), opt);
}

template <class CurveFn>
GeodesicLoop resample(std::shared_ptr<const MetricChart> chart,
                      const CurveFn& curve, int m, SolverOptions opt = {}) {
  auto id = AffineIsometry::identity(chart->dim());
  return resample(std::move(chart), curve, m, std::move(id), opt);
}

}  // namespace birkhoff
