#pragma once
// Riemannian metrics on a single global coordinate chart.
//
// A MetricChart is a coordinate box (possibly unbounded) together with a
// smooth symmetric positive-definite matrix field g(p) and a trusted radius r:
// the caller guarantees that points within distance r of each other are
// joined by a unique minimizing geodesic. Built-ins:
//
//   euclidean(n)        identity metric on R^n
//   flat(G0)            constant SPD matrix
//   sphere_chart(R)     polar chart of the round 2-sphere, g = diag(R^2,
//                       R^2 sin^2 x1), with the colatitude guarded away from
//                       the poles: x1 in [guard, pi - guard]
//   conformal(lambda)   e^{2 lambda(x1,x2)} * I on the plane
//   custom(entries)     expression-valued entries (upper triangle is used and
//                       mirrored, so g is symmetric by construction)
//
// Christoffel symbols come from central finite differences of the metric with
// step fd_step, except that constant metrics (euclidean/flat) carry exact zero
// derivatives. The FD formula is symmetric in the lower index pair by
// construction, so Gamma^i_{jk} == Gamma^i_{kj} holds exactly.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "expression.hpp"

namespace birkhoff {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct ChartPoint {
  Vec coords;
  int dim() const { return static_cast<int>(coords.size()); }
};

struct Tangent {
  ChartPoint base;
  Vec components;
};

// Per-axis closed interval bounds; an absent bound means the axis is free.
class Domain {
 public:
  Domain() = default;
  explicit Domain(int dim) : bounds_(dim) {}

  static Domain unbounded(int dim) { return Domain(dim); }

  int dim() const { return static_cast<int>(bounds_.size()); }

  void set_bounds(int axis, double lo, double hi) {
    if (lo > hi) throw usage_error("domain interval with lo > hi");
    bounds_.at(axis) = std::array<double, 2>{lo, hi};
  }

  const std::optional<std::array<double, 2>>& bounds(int axis) const {
    return bounds_.at(axis);
  }

  // margin > 0 demands room on every bounded side (finite differences).
  bool contains(const Vec& p, double margin = 0.0) const {
    for (int a = 0; a < dim(); ++a) {
      if (!bounds_[a]) continue;
      if (p[a] < (*bounds_[a])[0] + margin || p[a] > (*bounds_[a])[1] - margin)
        return false;
    }
    return true;
  }

  // A bounded box for sampling: free axes fall back to [-halfwidth, halfwidth].
  std::pair<Vec, Vec> sample_box(double halfwidth = 2.0) const {
    Vec lo(dim()), hi(dim());
    for (int a = 0; a < dim(); ++a) {
      lo[a] = bounds_[a] ? (*bounds_[a])[0] : -halfwidth;
      hi[a] = bounds_[a] ? (*bounds_[a])[1] : halfwidth;
    }
    return {lo, hi};
  }

 private:
  std::vector<std::optional<std::array<double, 2>>> bounds_;
};

class MetricChart {
 public:
  enum class Kind { euclidean, flat, sphere_chart, conformal, custom };

  static MetricChart euclidean(int dim, double r) {
    MetricChart c;
    c.kind_ = Kind::euclidean;
    c.dim_ = dim;
    c.r_ = r;
    c.g0_ = Mat::Identity(dim, dim);
    c.domain_ = Domain::unbounded(dim);
    c.validate();
    return c;
  }

  static MetricChart flat(Mat g0, double r) {
    MetricChart c;
    c.kind_ = Kind::flat;
    c.dim_ = static_cast<int>(g0.rows());
    c.r_ = r;
    c.g0_ = std::move(g0);
    c.domain_ = Domain::unbounded(c.dim_);
    if (c.g0_.rows() != c.g0_.cols())
      throw usage_error("flat metric matrix must be square");
    if (!c.g0_.isApprox(c.g0_.transpose(), 1e-12))
      throw usage_error("flat metric matrix must be symmetric");
    Eigen::LLT<Mat> llt(c.g0_);
    if (llt.info() != Eigen::Success)
      throw usage_error("flat metric matrix must be positive definite");
    c.validate();
    return c;
  }

  static MetricChart sphere_chart(double radius, double r, double guard = 1e-3) {
    MetricChart c;
    c.kind_ = Kind::sphere_chart;
    c.dim_ = 2;
    c.r_ = r;
    c.sphere_radius_ = radius;
    c.domain_ = Domain(2);
    c.domain_.set_bounds(0, guard, M_PI - guard);  // colatitude; longitude free
    if (radius <= 0) throw usage_error("sphere radius must be positive");
    if (guard <= 0 || guard >= M_PI / 2)
      throw usage_error("sphere chart guard must lie in (0, pi/2)");
    c.validate();
    return c;
  }

  static MetricChart conformal(Expression lambda, double r,
                               Domain domain = Domain::unbounded(2)) {
    MetricChart c;
    c.kind_ = Kind::conformal;
    c.dim_ = 2;
    c.r_ = r;
    c.lambda_ = std::move(lambda);
    c.domain_ = std::move(domain);
    if (c.lambda_.max_variable() > 2 || c.lambda_.uses_uv())
      throw usage_error("conformal factor may only reference x1 and x2");
    if (c.domain_.dim() != 2)
      throw usage_error("conformal charts are two-dimensional");
    c.validate();
    return c;
  }

  static MetricChart custom(std::vector<std::vector<Expression>> entries,
                            double r, Domain domain, double fd_step = 1e-5) {
    MetricChart c;
    c.kind_ = Kind::custom;
    c.dim_ = static_cast<int>(entries.size());
    c.r_ = r;
    c.fd_step_ = fd_step;
    c.domain_ = std::move(domain);
    for (const auto& row : entries)
      if (static_cast<int>(row.size()) != c.dim_)
        throw usage_error("metric entries must form a square matrix");
    for (const auto& row : entries)
      for (const auto& e : row) {
        if (e.max_variable() > c.dim_)
          throw usage_error("metric entry references a coordinate beyond dim");
        if (e.uses_uv())
          throw usage_error("metric entries may not reference u or v");
      }
    if (c.domain_.dim() != c.dim_)
      throw usage_error("domain dimension does not match chart dimension");
    if (c.fd_step_ <= 0) throw usage_error("fd_step must be positive");
    c.entries_ = std::move(entries);
    c.validate();
    return c;
  }

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  double trusted_radius() const { return r_; }
  double fd_step() const { return fd_step_; }
  double sphere_radius() const { return sphere_radius_; }
  const Domain& domain() const { return domain_; }

  bool has_analytic_derivatives() const {
    return kind_ == Kind::euclidean || kind_ == Kind::flat;
  }

  Mat metric_at(const ChartPoint& p) const {
    require_inside(p.coords, 0.0);
    return metric_raw(p.coords);
  }

  // dg/dx_l as a list over l. Exact zeros for constant metrics, otherwise
  // central differences with step fd_step (evaluated without the domain gate:
  // the formulas extend smoothly past the boundary by the step amount).
  std::vector<Mat> metric_derivatives_at(const ChartPoint& p) const {
    if (has_analytic_derivatives()) {
      require_inside(p.coords, 0.0);
      return std::vector<Mat>(dim_, Mat::Zero(dim_, dim_));
    }
    require_inside(p.coords, fd_step_);
    std::vector<Mat> d(dim_);
    Vec q = p.coords;
    for (int l = 0; l < dim_; ++l) {
      const double x = q[l];
      q[l] = x + fd_step_;
      Mat plus = metric_raw(q);
      q[l] = x - fd_step_;
      Mat minus = metric_raw(q);
      q[l] = x;
      d[l] = (plus - minus) / (2.0 * fd_step_);
    }
    return d;
  }

  // Gamma^i_{jk} = 1/2 g^{il} (d_j g_{lk} + d_k g_{lj} - d_l g_{jk});
  // result[i](j,k). Symmetric in (j,k) exactly because g is stored
  // symmetrically and the bracket is, term for term, symmetric under j<->k.
  std::vector<Mat> christoffel_at(const ChartPoint& p) const {
    std::vector<Mat> dg = metric_derivatives_at(p);
    Mat g = metric_raw(p.coords);
    Eigen::LLT<Mat> llt(g);
    if (llt.info() != Eigen::Success)
      throw numeric_error("metric is singular or indefinite at the requested point");
    std::vector<Mat> gamma(dim_, Mat::Zero(dim_, dim_));
    std::vector<Mat> brackets(dim_, Mat(dim_, dim_));
    for (int l = 0; l < dim_; ++l) {
      for (int j = 0; j < dim_; ++j)
        for (int k = 0; k <= j; ++k) {
          const double v = 0.5 * (dg[j](l, k) + dg[k](l, j) - dg[l](j, k));
          brackets[l](j, k) = v;
          brackets[l](k, j) = v;
        }
    }
    // contract with the inverse metric: gamma[i] = sum_l ginv(i,l) brackets[l]
    Mat ginv = llt.solve(Mat::Identity(dim_, dim_));
    for (int i = 0; i < dim_; ++i)
      for (int l = 0; l < dim_; ++l)
        if (ginv(i, l) != 0.0) gamma[i] += ginv(i, l) * brackets[l];
    return gamma;
  }

  double inner(const Tangent& a, const Vec& w2) const {
    Mat g = metric_at(a.base);
    return a.components.dot(g * w2);
  }

  double norm(const Tangent& t) const {
    Mat g = metric_at(t.base);
    return std::sqrt(std::max(0.0, t.components.dot(g * t.components)));
  }

  // Raw metric evaluation, no domain gate. Public so integrators can probe
  // finite-difference stencils that straddle the boundary by < fd_step.
  Mat metric_raw(const Vec& x) const {
    switch (kind_) {
      case Kind::euclidean:
      case Kind::flat:
        return g0_;
      case Kind::sphere_chart: {
        Mat g = Mat::Zero(2, 2);
        const double R2 = sphere_radius_ * sphere_radius_;
        const double s = std::sin(x[0]);
        g(0, 0) = R2;
        g(1, 1) = R2 * s * s;
        return g;
      }
      case Kind::conformal: {
        EvalContext ctx{std::span<const double>(x.data(), 2), 0, 0};
        const double f = std::exp(2.0 * lambda_.eval(ctx));
        return f * Mat::Identity(2, 2);
      }
      case Kind::custom: {
        EvalContext ctx{std::span<const double>(x.data(), x.size()), 0, 0};
        Mat g(dim_, dim_);
        for (int i = 0; i < dim_; ++i)
          for (int j = i; j < dim_; ++j) {
            const double v = entries_[i][j].eval(ctx);
            g(i, j) = v;
            g(j, i) = v;
          }
        return g;
      }
    }
    return g0_;  // unreachable
  }

  void require_inside(const Vec& p, double margin) const {
    if (static_cast<int>(p.size()) != dim_)
      throw usage_error("point dimension does not match chart dimension");
    if (!domain_.contains(p, margin)) {
      std::string msg = "point outside chart domain";
      if (margin > 0) msg += " (or within one finite-difference step of it)";
      throw domain_error(msg);
    }
  }

 private:
  MetricChart() = default;

  void validate() const {
    if (dim_ < 1) throw usage_error("chart dimension must be at least 1");
    if (!(r_ > 0)) throw usage_error("trusted radius r must be positive");
  }

  Kind kind_ = Kind::euclidean;
  int dim_ = 0;
  double r_ = 0.0;
  double fd_step_ = 1e-5;
  double sphere_radius_ = 1.0;
  Mat g0_;
  Expression lambda_;
  std::vector<std::vector<Expression>> entries_;
  Domain domain_;
};

}  // namespace birkhoff
