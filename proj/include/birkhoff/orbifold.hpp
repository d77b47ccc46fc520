#pragma once
// Developable orbifolds with exact models (round spheres and flat tori), a
// twisted-closed-geodesic checker for chart-based spaces, and the
// singular-stratum reduction: pick a point on a maximal singular stratum,
// restrict to its fixed submanifold with the induced symmetry, recurse until
// the space is a manifold / a circle / an even-dimensional orbifold with only
// isolated singular points, then lift the terminal geodesic back up.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "affine.hpp"
#include "chart.hpp"
#include "errors.hpp"
#include "geodesic.hpp"
#include "group.hpp"
#include "lattice.hpp"
#include "loop.hpp"

namespace birkhoff {

// --- exact models ----------------------------------------------------------

enum class ModelKind { sphere, flat_torus };

inline std::string to_string(ModelKind k) {
  return k == ModelKind::sphere ? "sphere" : "flat_torus";
}

// sphere: points are unit vectors in R^n (the round sphere S^{n-1} of radius
// one), isometries are orthogonal linear maps. flat_torus: points live in
// lattice coordinates R^n / Z^n with inner product `gram`; isometries have an
// integer linear part and a real translation taken mod one.
struct OrbifoldModel {
  ModelKind kind = ModelKind::sphere;
  int n = 0;  // ambient dimension (sphere) or torus rank
  Mat gram;   // flat_torus only

  int dim() const { return kind == ModelKind::sphere ? n - 1 : n; }
};

inline Vec torus_wrap(Vec x) {
  for (int i = 0; i < x.size(); ++i) {
    x[i] -= std::floor(x[i]);
    if (x[i] >= 1.0) x[i] = 0.0;  // guard against floor(1 - eps) edge case
  }
  return x;
}

namespace detail {

inline double mod_dist(double x) { return std::abs(x - std::round(x)); }

inline double mod_gap(const Vec& d) {
  double worst = 0.0;
  for (int i = 0; i < d.size(); ++i) worst = std::max(worst, mod_dist(d[i]));
  return worst;
}

}  // namespace detail

inline Vec model_apply(const OrbifoldModel& model, const AffineIsometry& g,
                       const Vec& p) {
  if (model.kind == ModelKind::sphere) return g.A * p;
  return torus_wrap(g.A * p + g.b);
}

// Largest coordinate gap between two model points (torus gaps are taken mod
// one); used for exact-model identity tests.
inline double model_point_gap(const OrbifoldModel& model, const Vec& p,
                              const Vec& q) {
  if (model.kind == ModelKind::sphere) return (p - q).cwiseAbs().maxCoeff();
  return detail::mod_gap(p - q);
}

// Metric distance proxy: chordal for the sphere, Gram-weighted shortest
// representative for the torus. Exact enough for the tolerances used here.
inline double model_distance(const OrbifoldModel& model, const Vec& p,
                             const Vec& q) {
  if (model.kind == ModelKind::sphere) return (p - q).norm();
  Vec d = p - q;
  for (int i = 0; i < d.size(); ++i) d[i] -= std::round(d[i]);
  return std::sqrt(d.dot(model.gram * d));
}

inline AffineIsometry model_compose(const OrbifoldModel& model,
                                    const AffineIsometry& a,
                                    const AffineIsometry& b) {
  AffineIsometry out = a.compose(b);
  if (model.kind == ModelKind::flat_torus) out.b = torus_wrap(out.b);
  return out;
}

inline AffineIsometry model_inverse(const OrbifoldModel& model,
                                    const AffineIsometry& g) {
  AffineIsometry out = g.inverse();
  if (model.kind == ModelKind::flat_torus) {
    // unimodular linear part: the inverse is integer again
    out.A = detail::from_integer(detail::to_integer(out.A, 1e-6));
    out.b = torus_wrap(out.b);
  }
  return out;
}

inline bool model_equal(const OrbifoldModel& model, const AffineIsometry& a,
                        const AffineIsometry& b, double tol = 1e-9) {
  if ((a.A - b.A).cwiseAbs().maxCoeff() > tol) return false;
  if (model.kind == ModelKind::sphere)
    return (a.b - b.b).cwiseAbs().maxCoeff() <= tol;
  return detail::mod_gap(a.b - b.b) <= tol;
}

// --- developable orbifolds ---------------------------------------------------

struct DevelopableOrbifold {
  OrbifoldModel model;
  std::vector<AffineIsometry> group;  // full element list, identity first
};

namespace detail {

inline std::vector<AffineIsometry> enumerate_model_group(
    const OrbifoldModel& model, const std::vector<AffineIsometry>& generators,
    int max_elements) {
  std::vector<AffineIsometry> elems{AffineIsometry::identity(model.n)};
  auto known = [&](const AffineIsometry& g) {
    for (const auto& e : elems)
      if (model_equal(model, e, g)) return true;
    return false;
  };
  std::size_t scan = 0;
  while (scan < elems.size()) {
    AffineIsometry cur = elems[scan++];
    for (const auto& g : generators) {
      AffineIsometry next = model_compose(model, g, cur);
      if (known(next)) continue;
      if (static_cast<int>(elems.size()) >= max_elements)
        throw usage_error("symmetry group did not close under composition");
      elems.push_back(std::move(next));
    }
  }
  return elems;
}

}  // namespace detail

inline DevelopableOrbifold make_sphere_orbifold(
    int ambient_dim, std::vector<AffineIsometry> generators,
    int max_elements = 512) {
  if (ambient_dim < 2) throw usage_error("sphere model needs ambient dim >= 2");
  OrbifoldModel model{ModelKind::sphere, ambient_dim, Mat()};
  for (auto& g : generators) {
    if (g.dim() != ambient_dim)
      throw usage_error("generator dimension mismatch");
    if (g.b.cwiseAbs().maxCoeff() > 1e-10)
      throw usage_error("sphere isometries must be linear");
    g.b.setZero();
    Mat defect = g.A.transpose() * g.A - Mat::Identity(ambient_dim, ambient_dim);
    if (defect.cwiseAbs().maxCoeff() > 1e-10)
      throw usage_error("sphere isometries must be orthogonal matrices");
  }
  return {model, detail::enumerate_model_group(model, generators, max_elements)};
}

inline DevelopableOrbifold make_torus_orbifold(
    Mat gram, std::vector<AffineIsometry> generators, int max_elements = 512) {
  const int n = static_cast<int>(gram.rows());
  if (n < 1 || gram.cols() != n) throw usage_error("gram matrix must be square");
  if ((gram - gram.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw usage_error("gram matrix must be symmetric");
  Eigen::LLT<Mat> llt(gram);
  if (llt.info() != Eigen::Success)
    throw usage_error("gram matrix must be positive definite");
  OrbifoldModel model{ModelKind::flat_torus, n, gram};
  for (auto& g : generators) {
    if (g.dim() != n) throw usage_error("generator dimension mismatch");
    g.A = detail::from_integer(detail::to_integer(g.A));  // snap to exact ints
    Mat defect = g.A.transpose() * gram * g.A - gram;
    if (defect.cwiseAbs().maxCoeff() > 1e-9)
      throw usage_error("linear part does not preserve the gram inner product");
    g.b = torus_wrap(g.b);
  }
  return {model, detail::enumerate_model_group(model, generators, max_elements)};
}

inline std::vector<AffineIsometry> model_isotropy(const DevelopableOrbifold& orb,
                                                  const Vec& p,
                                                  double tol = 1e-9) {
  std::vector<AffineIsometry> out;
  for (const auto& g : orb.group)
    if (model_point_gap(orb.model, model_apply(orb.model, g, p), p) <= tol)
      out.push_back(g);
  return out;
}

// Normalizer of a subgroup inside the full (finite) model group, with the
// model's own composition/equality so torus translations wrap correctly.
inline std::vector<AffineIsometry> model_normalizer(
    const DevelopableOrbifold& orb, const std::vector<AffineIsometry>& subgroup,
    double tol = 1e-9) {
  std::vector<AffineIsometry> out;
  for (const auto& h : orb.group) {
    AffineIsometry hinv = model_inverse(orb.model, h);
    bool normalizes = true;
    for (const auto& s : subgroup) {
      AffineIsometry conj =
          model_compose(orb.model, model_compose(orb.model, h, s), hinv);
      bool inside = false;
      for (const auto& t : subgroup)
        if (model_equal(orb.model, conj, t, tol)) {
          inside = true;
          break;
        }
      if (!inside) {
        normalizes = false;
        break;
      }
    }
    if (normalizes) out.push_back(h);
  }
  return out;
}

// --- twisted closed geodesics -----------------------------------------------

struct TwistedGeodesicReport {
  bool pass = false;
  double position_residual = 0.0;  // d(g c(0), c(1))
  double velocity_residual = 0.0;  // |dg c'(0) - c'(1)| in the metric
  double interior_defect = 0.0;    // worst junction mismatch inside the chain
};

// Checks whether a chain of geodesic segments c : [0,1] -> M closes up
// through the isometry g: g(c(0)) = c(1) with matching velocity. Interior
// junctions are measured too, so a broken chain cannot sneak through.
inline TwistedGeodesicReport is_twisted_closed_geodesic(
    const std::vector<GeodesicSegment>& path, const AffineIsometry& g,
    double tol = 1e-8) {
  if (path.empty()) throw usage_error("empty geodesic chain");
  const MetricChart& chart = path.front().chart();
  auto metric_norm = [&](const Vec& at, const Vec& d) {
    Mat G = chart.metric_at({at});
    return std::sqrt(std::max(0.0, d.dot(G * d)));
  };

  TwistedGeodesicReport rep;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    Vec pe = path[i].end().coords;
    Vec ps = path[i + 1].start().coords;
    double gap = metric_norm(pe, ps - pe);
    double vgap = metric_norm(
        pe, path[i + 1].initial_velocity() - path[i].final_velocity());
    rep.interior_defect = std::max(rep.interior_defect, std::max(gap, vgap));
  }

  Vec c0 = path.front().start().coords;
  Vec c1 = path.back().end().coords;
  Vec image = g.apply(ChartPoint{c0}).coords;
  rep.position_residual = metric_norm(c1, image - c1);
  rep.velocity_residual = metric_norm(
      c1, Vec(g.A * path.front().initial_velocity() - path.back().final_velocity()));
  rep.pass = rep.position_residual <= tol && rep.velocity_residual <= tol &&
             rep.interior_defect <= tol;
  return rep;
}

inline TwistedGeodesicReport is_twisted_closed_geodesic(const GeodesicLoop& loop,
                                                        double tol = 1e-8) {
  std::vector<GeodesicSegment> path;
  path.reserve(loop.m());
  for (int k = 0; k < loop.m(); ++k) path.push_back(loop.edge(k));
  return is_twisted_closed_geodesic(path, loop.twist(), tol);
}

// Geodesics of the exact models. sphere: c(t) = cos(omega t) u + sin(omega t) v
// with u, v orthonormal; flat torus: the line c(t) = base + t dir in lattice
// coordinates, dir integer so the curve closes after one period.
struct ModelGeodesic {
  ModelKind kind = ModelKind::sphere;
  Vec u, v;
  double omega = 2.0 * M_PI;
  Vec base, dir;
  Mat gram;

  double length() const {
    if (kind == ModelKind::sphere) return omega;
    return std::sqrt(dir.dot(gram * dir));
  }
  Vec point(double t) const {
    if (kind == ModelKind::sphere)
      return std::cos(omega * t) * u + std::sin(omega * t) * v;
    return torus_wrap(base + t * dir);
  }
  Vec velocity(double t) const {
    if (kind == ModelKind::sphere)
      return omega * (-std::sin(omega * t) * u + std::cos(omega * t) * v);
    return dir;
  }
};

inline TwistedGeodesicReport is_closed_model_geodesic(
    const OrbifoldModel& model, const ModelGeodesic& geo,
    const AffineIsometry& g, double tol = 1e-8) {
  TwistedGeodesicReport rep;
  if (model.kind == ModelKind::sphere) {
    if (std::abs(geo.u.norm() - 1.0) > 1e-8 || std::abs(geo.v.norm() - 1.0) > 1e-8 ||
        std::abs(geo.u.dot(geo.v)) > 1e-8)
      throw usage_error("sphere geodesic frame is not orthonormal");
    Vec c1 = geo.point(1.0);
    rep.position_residual = (g.A * geo.point(0.0) - c1).norm();
    rep.velocity_residual = (g.A * geo.velocity(0.0) - geo.velocity(1.0)).norm();
  } else {
    Vec end = geo.base + geo.dir;  // unwrapped endpoint
    Vec w = (g.A * geo.base + g.b) - end;
    for (int i = 0; i < w.size(); ++i) w[i] -= std::round(w[i]);
    rep.position_residual = std::sqrt(std::max(0.0, w.dot(model.gram * w)));
    Vec dv = g.A * geo.dir - geo.dir;
    rep.velocity_residual = std::sqrt(std::max(0.0, dv.dot(model.gram * dv)));
  }
  rep.pass = rep.position_residual <= tol && rep.velocity_residual <= tol;
  return rep;
}

// --- fixed sets on the flat torus -------------------------------------------

// One connected component of a fixed-point set: the affine subtorus
// {x0 + span_R(basis)} mod Z^n, where the (integer) basis columns generate a
// saturated sublattice, so intrinsic coordinates y in R^d / Z^d are exact.
struct TorusComponent {
  Vec x0;
  detail::IMat basis;

  int dim() const { return static_cast<int>(basis.cols()); }
};

namespace detail {

// Orthonormal basis of the orthogonal complement of span(B) (euclidean).
inline Mat complement_projector(const Mat& B, int n) {
  if (B.cols() == 0) return Mat::Identity(n, n);
  Eigen::HouseholderQR<Mat> qr(B);
  Mat Q = qr.householderQ() * Mat::Identity(n, static_cast<int>(B.cols()));
  return Mat::Identity(n, n) - Q * Q.transpose();
}

// Is w in span(B) + Z^n? Small integer offsets are enumerated exhaustively;
// fixed-set data here has entries of magnitude O(1).
inline bool in_span_mod_lattice(const Mat& proj_off, const Vec& w, double tol) {
  const int n = static_cast<int>(w.size());
  int radius = 1 + static_cast<int>(std::ceil(w.cwiseAbs().maxCoeff()));
  std::vector<int> z(n, -radius);
  while (true) {
    Vec shifted = w;
    for (int i = 0; i < n; ++i) shifted[i] -= z[i];
    if ((proj_off * shifted).cwiseAbs().maxCoeff() <= tol) return true;
    int i = 0;
    for (; i < n; ++i) {
      if (z[i] < radius) {
        ++z[i];
        break;
      }
      z[i] = -radius;
    }
    if (i == n) return false;
  }
}

inline bool lex_less(const Vec& a, const Vec& b, double tol = 1e-9) {
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] < b[i] - tol) return true;
    if (a[i] > b[i] + tol) return false;
  }
  return false;
}

inline Vec snap_wrap(Vec x, double tol = 1e-9) {
  x = torus_wrap(std::move(x));
  for (int i = 0; i < x.size(); ++i) {
    double r = std::round(x[i]);
    if (std::abs(x[i] - r) <= tol) x[i] = 0.0;  // 0 and 1 both wrap to 0
  }
  return x;
}

}  // namespace detail

// All components of the common fixed set {x : h x = x mod Z^n for all h} of
// the given (non-identity) elements, as parallel affine subtori in
// deterministic lexicographic order. Empty result means the fixed set is
// empty. Works by refining the full torus one element at a time: each
// constraint (A - I)(x0 + B y) + b = 0 mod Z^n becomes an integer system
// M y = v + k over the current intrinsic coordinates, solved for every
// feasible integer offset k.
inline std::vector<TorusComponent> torus_fixed_components(
    const std::vector<AffineIsometry>& elements, int n) {
  using detail::IMat;
  std::vector<TorusComponent> comps{{Vec::Zero(n), IMat::Identity(n, n)}};

  for (const auto& h : elements) {
    if (h.is_identity(1e-12)) continue;
    Mat AmI = h.A - Mat::Identity(n, n);
    IMat AmI_int = detail::to_integer(AmI);
    std::vector<TorusComponent> next;

    for (const auto& comp : comps) {
      const int d = comp.dim();
      IMat M = AmI_int * comp.basis;
      Vec v = -(h.b + AmI * comp.x0);

      // rows with no y-dependence are pure congruence constraints
      bool feasible = true;
      std::vector<int> live_rows;
      for (int r = 0; r < n; ++r) {
        if (M.row(r).cwiseAbs().maxCoeff() == 0) {
          if (detail::mod_dist(v[r]) > 1e-8) feasible = false;
        } else {
          live_rows.push_back(r);
        }
      }
      if (!feasible) continue;

      IMat K = detail::integer_kernel(M);
      Mat Kd = detail::from_integer(K);
      Mat off_kernel = detail::complement_projector(Kd, d);

      std::vector<Vec> found;  // particular solutions mod (span K + Z^d)
      auto record = [&](const Vec& y0) {
        Vec snapped = detail::snap_wrap(y0);
        for (const auto& y : found)
          if (detail::in_span_mod_lattice(off_kernel, snapped - y, 1e-7)) return;
        found.push_back(snapped);
      };

      if (live_rows.empty()) {
        record(Vec::Zero(d));
      } else {
        const int rows = static_cast<int>(live_rows.size());
        Mat Msub(rows, d);
        Vec vsub(rows);
        std::vector<int> klo(rows), khi(rows);
        long long combos = 1;
        for (int i = 0; i < rows; ++i) {
          int r = live_rows[i];
          for (int j = 0; j < d; ++j) Msub(i, j) = static_cast<double>(M(r, j));
          vsub[i] = v[r];
          double lo = 0.0, hi = 0.0;
          for (int j = 0; j < d; ++j) {
            double e = Msub(i, j);
            if (e < 0) lo += e;
            else hi += e;
          }
          klo[i] = static_cast<int>(std::ceil(lo - vsub[i])) - 1;
          khi[i] = static_cast<int>(std::floor(hi - vsub[i])) + 1;
          combos *= (khi[i] - klo[i] + 1);
          if (combos > 200000)
            throw numeric_error("fixed-set offset enumeration too large");
        }
        Eigen::JacobiSVD<Mat> svd(Msub,
                                  Eigen::ComputeThinU | Eigen::ComputeThinV);
        svd.setThreshold(1e-9);
        std::vector<int> k(rows);
        for (int i = 0; i < rows; ++i) k[i] = klo[i];
        while (true) {
          Vec rhs = vsub;
          for (int i = 0; i < rows; ++i) rhs[i] += k[i];
          Vec y0 = svd.solve(rhs);
          if ((Msub * y0 - rhs).cwiseAbs().maxCoeff() <= 1e-8) record(y0);
          int i = 0;
          for (; i < rows; ++i) {
            if (k[i] < khi[i]) {
              ++k[i];
              break;
            }
            k[i] = klo[i];
          }
          if (i == rows) break;
        }
      }

      Mat Bd = detail::from_integer(comp.basis);
      for (const auto& y0 : found)
        next.push_back({detail::snap_wrap(comp.x0 + Bd * y0), comp.basis * K});
    }

    comps = std::move(next);
    if (comps.empty()) return comps;
  }

  // dedup across refinement branches and order deterministically
  std::vector<TorusComponent> unique;
  for (const auto& c : comps) {
    Mat off =
        detail::complement_projector(detail::from_integer(c.basis), n);
    bool seen = false;
    for (const auto& u : unique)
      if (detail::in_span_mod_lattice(off, c.x0 - u.x0, 1e-7)) {
        seen = true;
        break;
      }
    if (!seen) unique.push_back(c);
  }
  std::sort(unique.begin(), unique.end(),
            [](const TorusComponent& a, const TorusComponent& b) {
              return detail::lex_less(a.x0, b.x0);
            });
  return unique;
}

// --- singular strata ---------------------------------------------------------

struct StratumPoint {
  Vec p;
  std::vector<AffineIsometry> isotropy;  // includes the identity
  int stratum_dim = 0;                   // intrinsic dimension of the fixed set
};

namespace detail {

inline int ambient_kernel_dim(const Mat& A, int n) {
  Eigen::JacobiSVD<Mat> svd(A - Mat::Identity(n, n));
  int rank = 0;
  double cutoff = 1e-9 * std::max(1.0, svd.singularValues().size() > 0
                                           ? svd.singularValues()[0]
                                           : 1.0);
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > cutoff) ++rank;
  return n - rank;
}

// intrinsic dimension of one element's fixed set, or -1 if empty
inline int fixed_dim_of_element(const OrbifoldModel& model,
                                const AffineIsometry& h) {
  if (model.kind == ModelKind::sphere) {
    int d = ambient_kernel_dim(h.A, model.n);
    return d == 0 ? -1 : d - 1;
  }
  auto comps = torus_fixed_components({h}, model.n);
  return comps.empty() ? -1 : comps.front().dim();
}

// common fixed set of the whole isotropy group, as (origin, ambient span)
struct FixedSetFrame {
  Vec origin;
  Mat span;              // sphere: orthonormal; torus: integer lattice basis
  detail::IMat lattice;  // torus only
  int stratum_dim = -1;  // intrinsic (sphere: cols-1; torus: cols)
};

inline std::optional<FixedSetFrame> fixed_set_frame(
    const DevelopableOrbifold& orb, const std::vector<AffineIsometry>& iso,
    const Vec& through) {
  std::vector<AffineIsometry> nontrivial;
  for (const auto& g : iso)
    if (!g.is_identity(1e-12)) nontrivial.push_back(g);
  if (nontrivial.empty()) return std::nullopt;

  FixedSetFrame frame;
  if (orb.model.kind == ModelKind::sphere) {
    AffineSubspace V = fixed_set(nontrivial, orb.model.n);
    if (V.empty() || V.dim() == 0) return std::nullopt;
    frame.origin = Vec::Zero(orb.model.n);
    frame.span = V.basis;
    frame.stratum_dim = V.dim() - 1;
    return frame;
  }
  auto comps = torus_fixed_components(nontrivial, orb.model.n);
  for (const auto& c : comps) {
    Mat off = complement_projector(from_integer(c.basis), orb.model.n);
    if (in_span_mod_lattice(off, through - c.x0, 1e-7)) {
      frame.origin = c.x0;
      frame.lattice = c.basis;
      frame.span = from_integer(c.basis);
      frame.stratum_dim = c.dim();
      return frame;
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Deterministic point on a singular stratum of maximal dimension, or nullopt
// when the action is free (the quotient is a manifold). The representative is
// the lexicographically smallest basis point of the maximal fixed set, pushed
// off lower-dimensional strata by a fixed offset along the first spanning
// direction (retried with smaller offsets if it happens to land on a smaller
// stratum).
inline std::optional<StratumPoint> maximal_stratum_point(
    const DevelopableOrbifold& orb) {
  const OrbifoldModel& model = orb.model;
  int best_dim = -1;
  const AffineIsometry* witness = nullptr;
  for (const auto& h : orb.group) {
    if (h.is_identity(1e-12)) continue;
    int d = detail::fixed_dim_of_element(model, h);
    if (d > best_dim) {
      best_dim = d;
      witness = &h;
    }
  }
  if (!witness) return std::nullopt;  // trivial symmetry: already a manifold

  // spanning data of the witness element's fixed set
  Vec origin;
  Mat span;
  if (model.kind == ModelKind::sphere) {
    AffineSubspace V = fixed_set({*witness}, model.n);
    origin = Vec::Zero(model.n);
    span = V.basis;
  } else {
    auto comps = torus_fixed_components({*witness}, model.n);
    origin = comps.front().x0;
    span = detail::from_integer(comps.front().basis);
  }

  const double offsets[] = {1.0 / 8, 1.0 / 16, 3.0 / 32, 5.0 / 64,
                            7.0 / 128, 11.0 / 256};
  const int d_span = static_cast<int>(span.cols());
  // first six attempts follow the canonical rule (offset along the first
  // spanning direction); if those all land on smaller strata, fall back to a
  // generic full-basis combination, which escapes any proper invariant
  // subspace for some offset in the list
  for (int attempt = 0; attempt < 12; ++attempt) {
    const double delta = offsets[attempt % 6];
    const bool generic = attempt >= 6;
    Vec p;
    if (model.kind == ModelKind::sphere) {
      p = span.col(0);
      if (!generic) {
        if (d_span > 1) p += delta * span.col(1);
      } else {
        for (int j = 1; j < d_span; ++j) p += std::pow(delta, j) * span.col(j);
      }
      p.normalize();
    } else {
      p = origin;
      if (!generic) {
        if (d_span > 0) p += delta * span.col(0);
      } else {
        for (int j = 0; j < d_span; ++j)
          p += std::pow(delta, j + 1) * span.col(j);
      }
      p = detail::snap_wrap(p);
    }
    StratumPoint sp;
    sp.p = p;
    sp.isotropy = model_isotropy(orb, p);
    if (sp.isotropy.size() < 2) continue;  // fell off the stratum entirely
    auto frame = detail::fixed_set_frame(orb, sp.isotropy, p);
    if (!frame) continue;
    sp.stratum_dim = frame->stratum_dim;
    if (sp.stratum_dim == best_dim) return sp;
    // landed on a smaller stratum: retry with the next offset
  }
  throw numeric_error("could not place a generic point on the maximal stratum");
}

// --- reduction ---------------------------------------------------------------

struct ReductionStep {
  Vec p;
  std::vector<AffineIsometry> isotropy;
  int stratum_dim = 0;
  Vec origin;  // torus component base point; zero on the sphere
  Mat basis;   // ambient span of the fixed submanifold N
  std::vector<AffineIsometry> stabilizer;  // normalizer elements preserving N
  DevelopableOrbifold induced;
  double invariance_residual = 0.0;
};

struct ReduceOutcome {
  enum class Kind { step, manifold, isolated } kind = Kind::manifold;
  std::optional<StratumPoint> stratum;  // set for isolated
  std::optional<ReductionStep> step;    // set for step
};

namespace detail {

// distance from a model point to the affine set origin + span(B) (mod Z^n for
// the torus); euclidean in ambient/lattice coordinates
inline double distance_to_frame(const OrbifoldModel& model, const Vec& origin,
                                const Mat& B, const Vec& x) {
  const int n = model.n;
  Mat off = complement_projector(B, n);
  if (model.kind == ModelKind::sphere)
    return (off * x).norm() + std::abs(x.norm() - 1.0);
  Vec w = x - origin;
  int radius = 1 + static_cast<int>(std::ceil(w.cwiseAbs().maxCoeff()));
  std::vector<int> z(n, -radius);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    Vec shifted = w;
    for (int i = 0; i < n; ++i) shifted[i] -= z[i];
    best = std::min(best, (off * shifted).norm());
    int i = 0;
    for (; i < n; ++i) {
      if (z[i] < radius) {
        ++z[i];
        break;
      }
      z[i] = -radius;
    }
    if (i == n) break;
  }
  return best;
}

}  // namespace detail

// One reduction step at a maximal singular stratum: N = fixed submanifold of
// the isotropy group through the chosen point, H = normalizer elements that
// keep N's component, and the induced orbifold is N in intrinsic coordinates
// with H's restriction (elements acting trivially on N are quotiented away).
inline ReduceOutcome reduce_once(const DevelopableOrbifold& orb) {
  const OrbifoldModel& model = orb.model;
  const int n = model.n;

  auto msp = maximal_stratum_point(orb);
  if (!msp) return {ReduceOutcome::Kind::manifold, std::nullopt, std::nullopt};
  if (msp->stratum_dim == 0)
    return {ReduceOutcome::Kind::isolated, msp, std::nullopt};

  auto frame = detail::fixed_set_frame(orb, msp->isotropy, msp->p);
  if (!frame) throw numeric_error("stratum fixed set vanished unexpectedly");
  const int span_dim = static_cast<int>(frame->span.cols());

  // normal-space freeness: every non-identity isotropy element must fix
  // exactly the stratum directions. A larger fixed space would mean the
  // chosen stratum was not maximal.
  for (const auto& h : msp->isotropy) {
    if (h.is_identity(1e-12)) continue;
    if (detail::ambient_kernel_dim(h.A, n) != span_dim)
      throw numeric_error(
          "isotropy element fixes a normal direction: stratum not maximal");
  }

  ReductionStep step;
  step.p = msp->p;
  step.isotropy = msp->isotropy;
  step.stratum_dim = msp->stratum_dim;
  step.origin = frame->origin;
  step.basis = frame->span;

  std::vector<AffineIsometry> H = model_normalizer(orb, msp->isotropy);

  // restrict to elements preserving this component of N, and compute the
  // induced action in intrinsic coordinates
  std::vector<AffineIsometry> induced_elems;
  OrbifoldModel induced_model;
  if (model.kind == ModelKind::sphere) {
    const Mat& B = frame->span;  // orthonormal columns
    induced_model = {ModelKind::sphere, span_dim, Mat()};
    for (const auto& h : H) {
      Mat AB = h.A * B;
      if (((Mat::Identity(n, n) - B * B.transpose()) * AB)
              .cwiseAbs()
              .maxCoeff() > 1e-9)
        continue;  // moves this component
      step.stabilizer.push_back(h);
      Mat Ap = B.transpose() * AB;
      if ((AB - B * Ap).cwiseAbs().maxCoeff() > 1e-9)
        throw numeric_error("restriction left the fixed subspace");
      if ((Ap.transpose() * Ap - Mat::Identity(span_dim, span_dim))
              .cwiseAbs()
              .maxCoeff() > 1e-9)
        throw numeric_error("restricted map is not orthogonal");
      AffineIsometry g{Ap, Vec::Zero(span_dim), h.word};
      if (g.is_identity(1e-9)) continue;  // acts trivially on N: quotient away
      bool dup = false;
      for (const auto& e : induced_elems)
        if (model_equal(induced_model, e, g)) {
          dup = true;
          break;
        }
      if (!dup) induced_elems.push_back(std::move(g));
    }
  } else {
    const detail::IMat& L = frame->lattice;
    Mat B = frame->span;
    Mat gram_new = B.transpose() * model.gram * B;
    induced_model = {ModelKind::flat_torus, span_dim, gram_new};
    Eigen::ColPivHouseholderQR<Mat> Bqr(B);
    Mat off = detail::complement_projector(B, n);
    for (const auto& h : H) {
      Vec w = h.A * frame->origin + h.b - frame->origin;
      // does h keep the component? need w in span(B) + Z^n
      int radius = 1 + static_cast<int>(std::ceil(w.cwiseAbs().maxCoeff()));
      std::vector<int> z(n, -radius);
      bool keeps = false;
      Vec w_in_span;
      while (true) {
        Vec shifted = w;
        for (int i = 0; i < n; ++i) shifted[i] -= z[i];
        if ((off * shifted).cwiseAbs().maxCoeff() <= 1e-8) {
          keeps = true;
          w_in_span = shifted;
          break;
        }
        int i = 0;
        for (; i < n; ++i) {
          if (z[i] < radius) {
            ++z[i];
            break;
          }
          z[i] = -radius;
        }
        if (i == n) break;
      }
      if (!keeps) continue;
      step.stabilizer.push_back(h);

      detail::IMat Ap(span_dim, span_dim);
      detail::IMat Ah = detail::to_integer(h.A);
      for (int j = 0; j < span_dim; ++j) {
        detail::IVec col;
        if (!detail::solve_integer_columns(L, detail::IVec(Ah * L.col(j)), col))
          throw numeric_error("restriction does not preserve the fixed lattice");
        Ap.col(j) = col;
      }
      Vec bp = Bqr.solve(w_in_span);
      if ((B * bp - w_in_span).cwiseAbs().maxCoeff() > 1e-8)
        throw numeric_error("translation part left the fixed subtorus");
      AffineIsometry g{detail::from_integer(Ap), torus_wrap(bp), h.word};
      Mat defect = g.A.transpose() * gram_new * g.A - gram_new;
      if (defect.cwiseAbs().maxCoeff() > 1e-8)
        throw numeric_error("restricted map is not an isometry of the subtorus");
      if ((g.A - Mat::Identity(span_dim, span_dim)).cwiseAbs().maxCoeff() <=
              1e-9 &&
          detail::mod_gap(g.b) <= 1e-9)
        continue;  // trivial on N
      bool dup = false;
      for (const auto& e : induced_elems)
        if (model_equal(induced_model, e, g)) {
          dup = true;
          break;
        }
      if (!dup) induced_elems.push_back(std::move(g));
    }
  }

  // sampled invariance: the stabilizer maps N into N
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int s = 0; s < 20; ++s) {
    Vec y(span_dim);
    for (int i = 0; i < span_dim; ++i) y[i] = 2.0 * unit(rng) - 1.0;
    Vec x;
    if (model.kind == ModelKind::sphere) {
      if (y.norm() < 1e-3) y[0] = 1.0;
      x = (frame->span * y).normalized();
    } else {
      x = torus_wrap(frame->origin + frame->span * y);
    }
    for (const auto& h : step.stabilizer) {
      double dist = detail::distance_to_frame(
          model, frame->origin, frame->span, model_apply(model, h, x));
      step.invariance_residual = std::max(step.invariance_residual, dist);
    }
  }
  if (step.invariance_residual > 1e-10)
    throw numeric_error("fixed submanifold is not stabilizer-invariant");

  // assemble the induced orbifold (identity first), verify closure
  std::vector<AffineIsometry> full{AffineIsometry::identity(span_dim)};
  for (auto& g : induced_elems) full.push_back(std::move(g));
  for (const auto& a : full)
    for (const auto& b : full) {
      AffineIsometry c = model_compose(induced_model, a, b);
      bool inside = false;
      for (const auto& e : full)
        if (model_equal(induced_model, e, c, 1e-8)) {
          inside = true;
          break;
        }
      if (!inside) throw numeric_error("induced symmetry group is not closed");
    }
  step.induced = {induced_model, std::move(full)};

  ReduceOutcome out;
  out.kind = ReduceOutcome::Kind::step;
  out.stratum = msp;
  out.step = std::move(step);
  return out;
}

// --- full reduction chains ----------------------------------------------------

struct ReductionChain {
  bool used_orientation_subgroup = false;
  std::vector<ReductionStep> steps;
  std::string terminal;  // "manifold" | "dimension_1" | "even_isolated"
  DevelopableOrbifold terminal_orb;
};

inline ReductionChain reduction_chain(DevelopableOrbifold orb) {
  ReductionChain chain;
  const bool odd_start = orb.model.dim() % 2 == 1;
  for (int guard = 0; guard < 64; ++guard) {
    auto oriented = orientation_subgroup(orb.group);
    if (oriented.size() < orb.group.size()) {
      chain.used_orientation_subgroup = true;
      orb.group = std::move(oriented);
    }
    if (orb.model.dim() == 1) {
      chain.terminal = "dimension_1";
      break;
    }
    ReduceOutcome out = reduce_once(orb);
    if (out.kind == ReduceOutcome::Kind::manifold) {
      chain.terminal = "manifold";
      break;
    }
    if (out.kind == ReduceOutcome::Kind::isolated) {
      if (orb.model.dim() % 2 != 0)
        throw numeric_error(
            "isolated singular points on an odd-dimensional space: parity "
            "argument violated");
      chain.terminal = "even_isolated";
      break;
    }
    ReductionStep step = std::move(*out.step);
    if (step.induced.model.dim() >= orb.model.dim())
      throw numeric_error("reduction failed to decrease dimension");
    if (odd_start && step.stratum_dim % 2 == 0)
      throw numeric_error(
          "even-dimensional stratum in an orientation-preserving odd-"
          "dimensional reduction");
    orb = step.induced;
    chain.steps.push_back(std::move(step));
  }
  if (chain.terminal.empty())
    throw numeric_error("reduction chain did not terminate");
  chain.terminal_orb = std::move(orb);
  return chain;
}

// --- geodesics via reduction ---------------------------------------------------

struct OrbifoldGeodesicResult {
  std::string status;  // "found" | "reduced_to_even_isolated"
  ReductionChain chain;
  std::optional<ModelGeodesic> geodesic;  // original model coordinates
  double length = 0.0;
  TwistedGeodesicReport closure;
  double invariance_residual = 0.0;
};

namespace detail {

inline Vec shortest_lattice_vector(const Mat& gram) {
  const int n = static_cast<int>(gram.rows());
  Vec best = Vec::Zero(n);
  double best_len = std::numeric_limits<double>::infinity();
  std::vector<int> z(n, -2);
  while (true) {
    Vec cand(n);
    bool zero = true;
    for (int i = 0; i < n; ++i) {
      cand[i] = z[i];
      if (z[i] != 0) zero = false;
    }
    if (!zero) {
      double len = cand.dot(gram * cand);
      if (len < best_len - 1e-12 ||
          (len < best_len + 1e-12 && lex_less(cand, best))) {
        best_len = len;
        best = cand;
      }
    }
    int i = 0;
    for (; i < n; ++i) {
      if (z[i] < 2) {
        ++z[i];
        break;
      }
      z[i] = -2;
    }
    if (i == n) break;
  }
  return best;
}

}  // namespace detail

// Finds a nontrivial closed geodesic of the orbifold by reducing to a
// terminal space, taking its standard geodesic (a great circle or a shortest
// lattice line), and lifting back through the chain of fixed submanifolds.
inline OrbifoldGeodesicResult find_closed_geodesic_via_reduction(
    const DevelopableOrbifold& orb) {
  OrbifoldGeodesicResult res;
  res.chain = reduction_chain(orb);
  if (res.chain.terminal == "even_isolated") {
    res.status = "reduced_to_even_isolated";
    return res;
  }

  const OrbifoldModel& terminal = res.chain.terminal_orb.model;
  ModelGeodesic geo;
  geo.kind = terminal.kind;
  if (terminal.kind == ModelKind::sphere) {
    if (terminal.n < 2)
      throw numeric_error("terminal sphere is zero-dimensional");
    geo.u = Vec::Zero(terminal.n);
    geo.v = Vec::Zero(terminal.n);
    geo.u[0] = 1.0;
    geo.v[1] = 1.0;
    geo.omega = 2.0 * M_PI;
  } else {
    geo.base = Vec::Zero(terminal.n);
    geo.dir = detail::shortest_lattice_vector(terminal.gram);
    geo.gram = terminal.gram;
  }

  for (auto it = res.chain.steps.rbegin(); it != res.chain.steps.rend(); ++it) {
    if (geo.kind == ModelKind::sphere) {
      geo.u = it->basis * geo.u;
      geo.v = it->basis * geo.v;
    } else {
      geo.base = torus_wrap(it->origin + it->basis * geo.base);
      geo.dir = it->basis * geo.dir;
    }
  }
  if (geo.kind == ModelKind::flat_torus) geo.gram = orb.model.gram;

  res.closure = is_closed_model_geodesic(
      orb.model, geo, AffineIsometry::identity(orb.model.n), 1e-8);
  if (!res.closure.pass)
    throw numeric_error("lifted curve is not a closed geodesic of the model");

  if (!res.chain.steps.empty()) {
    const auto& iso = res.chain.steps.front().isotropy;
    for (int j = 0; j < 20; ++j) {
      Vec x = geo.point(j / 20.0);
      for (const auto& h : iso)
        res.invariance_residual =
            std::max(res.invariance_residual,
                     model_distance(orb.model, model_apply(orb.model, h, x), x));
    }
    if (res.invariance_residual > 1e-8)
      throw numeric_error("lifted geodesic is not isotropy-invariant");
  }

  res.geodesic = std::move(geo);
  res.length = res.geodesic->length();
  res.status = "found";
  return res;
}

}  // namespace birkhoff
