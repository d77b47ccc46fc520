#pragma once
// Groups of affine isometries acting on a chart: finite matrix groups and
// deck (covering) groups generated by translations/glides. Provides sampled
// isometry verification against the chart metric, breadth-first enumeration
// of finite groups, isotropy and fixed-point sets, normalizers, the
// orientation (det > 0) subgroup, and renormalization of loops back into a
// fundamental-domain box.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "affine.hpp"
#include "chart.hpp"
#include "errors.hpp"
#include "loop.hpp"

namespace birkhoff {

inline bool contains_element(const std::vector<AffineIsometry>& set,
                             const AffineIsometry& g, double tol = 1e-9) {
  for (const auto& h : set)
    if (h.approx_equal(g, tol)) return true;
  return false;
}

// Sampled check that g preserves the metric: A^T G(g p) A == G(p) at random
// domain points. Points whose image leaves the chart domain are skipped.
struct IsometryReport {
  bool pass = true;
  double worst = 0.0;       // largest entry violation seen
  Vec worst_point;          // sample realizing it
  int samples_used = 0;
};

inline IsometryReport verify_isometry(const MetricChart& chart,
                                      const AffineIsometry& g,
                                      int samples = 64, double tol = 1e-8,
                                      std::uint64_t seed = 12345) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const auto [blo, bhi] = chart.domain().sample_box();
  IsometryReport rep;
  rep.worst_point = Vec::Zero(chart.dim());
  int tried = 0;
  while (rep.samples_used < samples && tried < 50 * samples) {
    ++tried;
    Vec p(chart.dim());
    for (int a = 0; a < chart.dim(); ++a)
      p[a] = blo[a] + (bhi[a] - blo[a]) * uni(rng);
    Vec q = g.A * p + g.b;
    if (!chart.domain().contains(q, 1e-12)) continue;
    Mat lhs = g.A.transpose() * chart.metric_at(ChartPoint{q}) * g.A;
    Mat diff = lhs - chart.metric_at(ChartPoint{p});
    double v = diff.cwiseAbs().maxCoeff();
    ++rep.samples_used;
    if (v > rep.worst) {
      rep.worst = v;
      rep.worst_point = p;
    }
  }
  if (rep.samples_used < samples / 2)
    throw numeric_error(
        "isometry check could not place enough samples inside the domain");
  rep.pass = rep.worst <= tol;
  return rep;
}

// Breadth-first closure of a finite generating set. Throws if the group
// fails to close within max_elements.
inline std::vector<AffineIsometry> enumerate_group(
    const std::vector<AffineIsometry>& generators, int max_elements = 512,
    double tol = 1e-9) {
  if (generators.empty())
    throw usage_error("cannot enumerate a group without generators");
  const int n = static_cast<int>(generators[0].A.rows());
  std::vector<AffineIsometry> elems{AffineIsometry::identity(n)};
  std::size_t frontier_begin = 0;
  while (frontier_begin < elems.size()) {
    std::size_t frontier_end = elems.size();
    for (std::size_t i = frontier_begin; i < frontier_end; ++i)
      for (const auto& g : generators) {
        AffineIsometry h = g.compose(elems[i]);
        if (!contains_element(elems, h, tol)) {
          if (static_cast<int>(elems.size()) >= max_elements)
            throw usage_error(
                "group did not close within " +
                std::to_string(max_elements) +
                " elements; is it finite?");
          elems.push_back(std::move(h));
        }
      }
    frontier_begin = frontier_end;
  }
  return elems;
}

// Elements fixing p (coordinate distance). For exact finite models this is
// the isotropy subgroup on the nose.
inline std::vector<AffineIsometry> isotropy(
    const std::vector<AffineIsometry>& elements, const Vec& p,
    double tol = 1e-9) {
  std::vector<AffineIsometry> out;
  for (const auto& g : elements)
    if ((g.A * p + g.b - p).cwiseAbs().maxCoeff() <= tol) out.push_back(g);
  for (const auto& a : out)
    for (const auto& b : out)
      if (!contains_element(out, a.compose(b), 10 * tol))
        throw numeric_error("isotropy set failed to close under products");
  return out;
}

// Affine subspace {base + span(basis)}; empty() means no solution.
struct AffineSubspace {
  Vec base;
  Mat basis;  // n x d, orthonormal columns, canonically oriented
  bool is_empty = false;
  int dim() const { return is_empty ? -1 : static_cast<int>(basis.cols()); }
  bool empty() const { return is_empty; }
  bool contains(const Vec& p, double tol = 1e-9) const {
    if (is_empty) return false;
    Vec r = p - base;
    r -= basis * (basis.transpose() * r);
    return r.cwiseAbs().maxCoeff() <= tol * (1.0 + p.cwiseAbs().maxCoeff());
  }
  Vec project(const Vec& p) const {
    return base + basis * (basis.transpose() * (p - base));
  }
};

namespace detail {

// Deterministic orthonormal basis of a projector's column space: repeatedly
// take the coordinate direction with the largest residual projection
// (lowest index on ties), orient each vector so its largest-magnitude entry
// is positive. Axis-aligned spaces come out as exact unit vectors.
inline Mat canonical_basis(const Mat& projector, int d) {
  const int n = static_cast<int>(projector.rows());
  Mat P = projector;
  Mat B(n, d);
  for (int c = 0; c < d; ++c) {
    int best = 0;
    double best_norm = -1.0;
    for (int j = 0; j < n; ++j) {
      double nj = P.col(j).norm();
      if (nj > best_norm + 1e-12) {
        best_norm = nj;
        best = j;
      }
    }
    Vec v = P.col(best);
    v.normalize();
    int big = 0;
    for (int i = 1; i < n; ++i)
      if (std::abs(v[i]) > std::abs(v[big]) + 1e-12) big = i;
    if (v[big] < 0) v = -v;
    // snap near-integer entries so axis-aligned spaces are exact
    for (int i = 0; i < n; ++i)
      if (std::abs(v[i] - std::round(v[i])) < 1e-12) v[i] = std::round(v[i]);
    v.normalize();
    B.col(c) = v;
    P -= v * v.transpose() * P;
  }
  return B;
}

}  // namespace detail

// Common fixed-point set of a list of isometries, solved by stacking
// (A_i - I) x = -b_i and splitting the solution into a canonical base point
// (orthogonal to the direction space) plus an SVD null-space basis.
inline AffineSubspace fixed_set(const std::vector<AffineIsometry>& elements,
                                int dim, double cutoff = 1e-9) {
  AffineSubspace out;
  std::vector<const AffineIsometry*> nontrivial;
  for (const auto& g : elements)
    if (!g.is_identity(1e-13)) nontrivial.push_back(&g);
  if (nontrivial.empty()) {
    out.base = Vec::Zero(dim);
    out.basis = Mat::Identity(dim, dim);
    return out;
  }
  const int rows = static_cast<int>(nontrivial.size()) * dim;
  Mat M(rows, dim);
  Vec rhs(rows);
  for (int i = 0; i < static_cast<int>(nontrivial.size()); ++i) {
    M.block(i * dim, 0, dim, dim) =
        nontrivial[i]->A - Mat::Identity(dim, dim);
    rhs.segment(i * dim, dim) = -nontrivial[i]->b;
  }
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const double smax = svd.singularValues().size()
                          ? svd.singularValues()[0]
                          : 0.0;
  const double thresh = cutoff * std::max(smax, 1.0);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > thresh) ++rank;
  Vec x0 = Vec::Zero(dim);
  if (rank > 0) {
    Vec y = svd.matrixU().leftCols(rank).transpose() * rhs;
    y.array() /= svd.singularValues().head(rank).array();
    x0 = svd.matrixV().leftCols(rank) * y;
  }
  if ((M * x0 - rhs).cwiseAbs().maxCoeff() > 1e-8 * (1.0 + rhs.norm())) {
    out.is_empty = true;
    out.base = Vec::Zero(dim);
    out.basis = Mat(dim, 0);
    return out;
  }
  const int d = dim - rank;
  Mat null_basis = svd.matrixV().rightCols(d);
  Mat projector = null_basis * null_basis.transpose();
  out.basis = detail::canonical_basis(projector, d);
  // canonical base point: component orthogonal to the direction space
  out.base = x0 - out.basis * (out.basis.transpose() * x0);
  for (int i = 0; i < dim; ++i)
    if (std::abs(out.base[i]) < 1e-12) out.base[i] = 0.0;
  return out;
}

// Elements h of `ambient` with h S h^-1 = S (as a set, up to tol).
inline std::vector<AffineIsometry> normalizer(
    const std::vector<AffineIsometry>& ambient,
    const std::vector<AffineIsometry>& subgroup, double tol = 1e-9) {
  std::vector<AffineIsometry> out;
  for (const auto& h : ambient) {
    AffineIsometry hinv = h.inverse();
    bool ok = true;
    for (const auto& s : subgroup) {
      if (!contains_element(subgroup, h.compose(s).compose(hinv), tol)) {
        ok = false;
        break;
      }
    }
    if (ok) out.push_back(h);
  }
  for (const auto& a : out)
    for (const auto& b : out)
      if (!contains_element(out, a.compose(b), 10 * tol))
        throw numeric_error("normalizer failed to close under products");
  return out;
}

// Subgroup of orientation-preserving elements; index is 1 or 2.
inline std::vector<AffineIsometry> orientation_subgroup(
    const std::vector<AffineIsometry>& elements) {
  std::vector<AffineIsometry> out;
  for (const auto& g : elements)
    if (g.A.determinant() > 0.0) out.push_back(g);
  if (out.empty() || elements.size() % out.size() != 0 ||
      elements.size() / out.size() > 2)
    throw numeric_error("orientation subgroup has unexpected index");
  return out;
}

// --- group objects -------------------------------------------------------

enum class GroupKind { finite, deck };

// Per-axis interval of the deck group's fundamental-domain box.
struct FundamentalBox {
  std::vector<std::optional<std::pair<double, double>>> axis;
};

class IsometryGroup {
 public:
  IsometryGroup(GroupKind kind, std::vector<AffineIsometry> generators,
                FundamentalBox box = {}, int max_elements = 512)
      : kind_(kind), generators_(std::move(generators)), box_(std::move(box)) {
    if (generators_.empty())
      throw usage_error("isometry group needs at least one generator");
    dim_ = static_cast<int>(generators_[0].A.rows());
    for (const auto& g : generators_)
      if (g.A.rows() != dim_ || g.b.size() != dim_)
        throw usage_error("group generators disagree on dimension");
    if (kind_ == GroupKind::finite) {
      elements_ = enumerate_group(generators_, max_elements);
    } else {
      box_.axis.resize(dim_);
      prepare_deck();
    }
  }

  GroupKind kind() const { return kind_; }
  int dim() const { return dim_; }
  const std::vector<AffineIsometry>& generators() const { return generators_; }
  const std::vector<AffineIsometry>& elements() const {
    if (kind_ != GroupKind::finite)
      throw usage_error("deck groups are infinite; no element list");
    return elements_;
  }
  const FundamentalBox& box() const { return box_; }
  int translation_axis(int gen) const { return deck_axis_.at(gen); }

 private:
  // Deck generators must translate along a coordinate axis they preserve,
  // one axis per generator; the fundamental box (given or inferred) must
  // have width equal to the translation period on that axis.
  void prepare_deck() {
    std::vector<bool> taken(dim_, false);
    for (const auto& g : generators_) {
      int axis = -1;
      for (int i = 0; i < dim_; ++i)
        if (std::abs(g.b[i]) > 1e-12) {
          if (axis >= 0)
            throw usage_error(
                "deck generator translates along more than one axis");
          axis = i;
        }
      if (axis < 0)
        throw usage_error("deck generator has no translation part");
      Vec e = Vec::Unit(dim_, axis);
      if ((g.A * e - e).cwiseAbs().maxCoeff() > 1e-12)
        throw usage_error(
            "deck generator does not preserve its translation axis");
      if (taken[axis])
        throw usage_error("two deck generators translate the same axis");
      taken[axis] = true;
      deck_axis_.push_back(axis);
      const double period = std::abs(g.b[axis]);
      if (!box_.axis[axis]) {
        box_.axis[axis] = {0.0, period};
      } else {
        auto [lo, hi] = *box_.axis[axis];
        if (std::abs((hi - lo) - period) > 1e-9)
          throw usage_error(
              "fundamental box width does not match translation period");
      }
    }
  }

  GroupKind kind_;
  int dim_ = 0;
  std::vector<AffineIsometry> generators_;
  std::vector<AffineIsometry> elements_;
  FundamentalBox box_;
  std::vector<int> deck_axis_;
};

// Translate a loop back into the fundamental-domain box: pick g in the deck
// group with g . v0 inside the box (per translating axis) and return the
// transformed loop. Finite groups renormalize trivially.
struct RenormalizeResult {
  AffineIsometry g;
  GeodesicLoop loop;
};

inline RenormalizeResult renormalize(const GeodesicLoop& loop,
                                     const IsometryGroup& group) {
  if (group.kind() == GroupKind::finite)
    return {AffineIsometry::identity(group.dim()), loop};
  AffineIsometry g = AffineIsometry::identity(group.dim());
  const Vec v0 = loop.vertex(0).coords;
  for (int i = 0; i < static_cast<int>(group.generators().size()); ++i) {
    const auto& gi = group.generators()[i];
    const int axis = group.translation_axis(i);
    const auto [lo, hi] = *group.box().axis[axis];
    const double width = hi - lo;
    const double cur = (g.A * v0 + g.b)[axis];
    const double shift = gi.b[axis];
    long long k = static_cast<long long>(std::floor((cur - lo) / width));
    long long power = shift > 0 ? -k : k;
    if (power != 0) g = gi.power(static_cast<int>(power)).compose(g);
  }
  const Vec w = g.A * v0 + g.b;
  for (int i = 0; i < static_cast<int>(group.generators().size()); ++i) {
    const int axis = group.translation_axis(i);
    const auto [lo, hi] = *group.box().axis[axis];
    if (w[axis] < lo - 1e-12 || w[axis] >= hi + 1e-12)
      throw renormalization_error(
          "renormalized base vertex escaped the fundamental box");
  }
  if (g.is_identity(0.0)) return {g, loop};
  return {g, loop.transformed(g)};
}

}  // namespace birkhoff
