#pragma once
// Run configurations: strict JSON documents turned into charts, groups, loop
// families, sweepouts, and orbifold models. Validation is unforgiving — any
// unknown key, missing key, or wrongly-typed value raises config_error with
// the JSON-pointer path of the offender, so typos fail loudly instead of
// silently falling back to defaults.
//
// Top-level keys of a run document:
//   command   "shorten" | "minmax" | "reduce" | "verify" | "exp"
//   metric    coordinate chart ({"type": "euclidean"|"flat"|"sphere_chart"|
//             "conformal"|"custom", ...})
//   group     isometry group acting on the chart (optional)
//   loop      initial closed curve for "shorten" and loop checks
//   sweepout  loop family for "minmax"
//   orbifold  exact quotient model for "reduce" and model checks
//   geodesic  candidate model geodesic checked by "verify"
//   exp       point/velocity pair for a single geodesic shot
//   solver    discretization and tolerance knobs ("m" is an even integer or
//             "auto")
//   seed      unsigned integer driving seeded loop constructions
//   out       result JSON path
//   trace     iteration log path (JSON lines)
//   curve     sampled-curve CSV path

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "chart.hpp"
#include "errors.hpp"
#include "expression.hpp"
#include "group.hpp"
#include "loop.hpp"
#include "orbifold.hpp"
#include "shortening.hpp"
#include "sweepout.hpp"

namespace birkhoff::config {

using Json = nlohmann::ordered_json;

namespace detail {

[[noreturn]] inline void fail(const std::string& ptr, const std::string& msg) {
  throw config_error(ptr.empty() ? "/" : ptr, msg);
}

inline std::string child(const std::string& ptr, const std::string& key) {
  return ptr + "/" + key;
}

inline std::string child(const std::string& ptr, std::size_t index) {
  return ptr + "/" + std::to_string(index);
}

inline void require_object(const Json& j, const std::string& ptr) {
  if (!j.is_object()) fail(ptr, "expected an object");
}

inline void check_keys(const Json& obj, const std::string& ptr,
                       std::initializer_list<const char*> allowed) {
  require_object(obj, ptr);
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known) fail(child(ptr, item.key()), "unknown key");
  }
}

inline const Json* find(const Json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

inline const Json& require(const Json& obj, const std::string& ptr,
                           const char* key) {
  const Json* j = find(obj, key);
  if (!j) fail(child(ptr, key), "missing required key");
  return *j;
}

inline double as_number(const Json& j, const std::string& ptr) {
  if (!j.is_number()) fail(ptr, "expected a number");
  return j.get<double>();
}

inline double as_positive(const Json& j, const std::string& ptr) {
  double v = as_number(j, ptr);
  if (!(v > 0.0)) fail(ptr, "expected a positive number");
  return v;
}

inline int as_int(const Json& j, const std::string& ptr) {
  if (!j.is_number_integer() && !j.is_number_unsigned())
    fail(ptr, "expected an integer");
  long long v = j.get<long long>();
  if (v < std::numeric_limits<int>::min() ||
      v > std::numeric_limits<int>::max())
    fail(ptr, "integer out of range");
  return static_cast<int>(v);
}

inline std::uint64_t as_seed(const Json& j, const std::string& ptr) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<long long>() >= 0)
    return static_cast<std::uint64_t>(j.get<long long>());
  fail(ptr, "expected a nonnegative integer");
}

inline std::string as_string(const Json& j, const std::string& ptr) {
  if (!j.is_string()) fail(ptr, "expected a string");
  return j.get<std::string>();
}

inline Vec as_vector(const Json& j, const std::string& ptr) {
  if (!j.is_array() || j.empty())
    fail(ptr, "expected a nonempty array of numbers");
  Vec v(static_cast<int>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v[static_cast<int>(i)] = as_number(j[i], child(ptr, i));
  return v;
}

inline Mat as_matrix(const Json& j, const std::string& ptr) {
  if (!j.is_array() || j.empty())
    fail(ptr, "expected a nonempty array of rows");
  if (!j[0].is_array() || j[0].empty())
    fail(child(ptr, std::size_t(0)), "expected a nonempty array of numbers");
  const std::size_t cols = j[0].size();
  Mat m(static_cast<int>(j.size()), static_cast<int>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const std::string rp = child(ptr, r);
    if (!j[r].is_array() || j[r].size() != cols)
      fail(rp, "rows must all have the same length");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<int>(r), static_cast<int>(c)) =
          as_number(j[r][c], child(rp, c));
  }
  return m;
}

inline Expression as_expression(const Json& j, const std::string& ptr,
                                bool allow_uv) {
  const std::string text = as_string(j, ptr);
  try {
    return parse_expression(text, allow_uv);
  } catch (const parse_error& e) {
    fail(ptr, std::string("bad expression: ") + e.what());
  }
}

}  // namespace detail

// --- metric ----------------------------------------------------------------

inline Domain parse_domain(const Json& j, const std::string& ptr, int dim) {
  detail::check_keys(j, ptr, {"box"});
  const Json& box = detail::require(j, ptr, "box");
  const std::string bp = detail::child(ptr, "box");
  if (!box.is_array() || static_cast<int>(box.size()) != dim)
    detail::fail(bp, "expected one [lo, hi] entry (or null) per coordinate");
  Domain d(dim);
  for (int a = 0; a < dim; ++a) {
    const Json& e = box[a];
    const std::string ep = detail::child(bp, static_cast<std::size_t>(a));
    if (e.is_null()) continue;  // free axis
    if (!e.is_array() || e.size() != 2)
      detail::fail(ep, "expected [lo, hi] or null");
    double lo = detail::as_number(e[0], detail::child(ep, std::size_t(0)));
    double hi = detail::as_number(e[1], detail::child(ep, std::size_t(1)));
    if (!(lo < hi)) detail::fail(ep, "interval needs lo < hi");
    d.set_bounds(a, lo, hi);
  }
  return d;
}

inline std::shared_ptr<const MetricChart> parse_metric(const Json& j,
                                                       const std::string& ptr) {
  detail::require_object(j, ptr);
  const std::string type = detail::as_string(detail::require(j, ptr, "type"),
                                             detail::child(ptr, "type"));
  try {
    if (type == "euclidean") {
      detail::check_keys(j, ptr, {"type", "dim", "r"});
      int dim = detail::as_int(detail::require(j, ptr, "dim"),
                               detail::child(ptr, "dim"));
      if (dim < 1) detail::fail(detail::child(ptr, "dim"), "needs dim >= 1");
      double r = detail::as_positive(detail::require(j, ptr, "r"),
                                     detail::child(ptr, "r"));
      return std::make_shared<MetricChart>(MetricChart::euclidean(dim, r));
    }
    if (type == "flat") {
      detail::check_keys(j, ptr, {"type", "dim", "entries", "r"});
      Mat g0 = detail::as_matrix(detail::require(j, ptr, "entries"),
                                 detail::child(ptr, "entries"));
      if (g0.rows() != g0.cols())
        detail::fail(detail::child(ptr, "entries"), "matrix must be square");
      if (const Json* d = detail::find(j, "dim"))
        if (detail::as_int(*d, detail::child(ptr, "dim")) != g0.rows())
          detail::fail(detail::child(ptr, "dim"),
                       "does not match the entries matrix");
      double r = detail::as_positive(detail::require(j, ptr, "r"),
                                     detail::child(ptr, "r"));
      return std::make_shared<MetricChart>(MetricChart::flat(g0, r));
    }
    if (type == "sphere_chart") {
      detail::check_keys(j, ptr, {"type", "radius", "r", "guard"});
      double radius = detail::as_positive(detail::require(j, ptr, "radius"),
                                          detail::child(ptr, "radius"));
      double r = detail::as_positive(detail::require(j, ptr, "r"),
                                     detail::child(ptr, "r"));
      double guard = 1e-3;
      if (const Json* g = detail::find(j, "guard"))
        guard = detail::as_positive(*g, detail::child(ptr, "guard"));
      return std::make_shared<MetricChart>(
          MetricChart::sphere_chart(radius, r, guard));
    }
    if (type == "conformal") {
      detail::check_keys(j, ptr, {"type", "lambda", "r", "domain"});
      Expression lambda =
          detail::as_expression(detail::require(j, ptr, "lambda"),
                                detail::child(ptr, "lambda"), false);
      double r = detail::as_positive(detail::require(j, ptr, "r"),
                                     detail::child(ptr, "r"));
      Domain dom = Domain::unbounded(2);
      if (const Json* d = detail::find(j, "domain"))
        dom = parse_domain(*d, detail::child(ptr, "domain"), 2);
      return std::make_shared<MetricChart>(
          MetricChart::conformal(std::move(lambda), r, std::move(dom)));
    }
    if (type == "custom") {
      detail::check_keys(j, ptr,
                         {"type", "dim", "entries", "r", "fd_step", "domain"});
      const Json& ej = detail::require(j, ptr, "entries");
      const std::string ep = detail::child(ptr, "entries");
      if (!ej.is_array() || ej.empty())
        detail::fail(ep, "expected a nonempty array of rows");
      const int dim = static_cast<int>(ej.size());
      if (const Json* d = detail::find(j, "dim"))
        if (detail::as_int(*d, detail::child(ptr, "dim")) != dim)
          detail::fail(detail::child(ptr, "dim"),
                       "does not match the entries matrix");
      std::vector<std::vector<Expression>> entries;
      for (int r0 = 0; r0 < dim; ++r0) {
        const std::string rp = detail::child(ep, static_cast<std::size_t>(r0));
        if (!ej[r0].is_array() || static_cast<int>(ej[r0].size()) != dim)
          detail::fail(rp, "matrix must be square");
        std::vector<Expression> row;
        for (int c = 0; c < dim; ++c)
          row.push_back(detail::as_expression(
              ej[r0][c], detail::child(rp, static_cast<std::size_t>(c)),
              false));
        entries.push_back(std::move(row));
      }
      double r = detail::as_positive(detail::require(j, ptr, "r"),
                                     detail::child(ptr, "r"));
      double fd = 1e-5;
      if (const Json* f = detail::find(j, "fd_step"))
        fd = detail::as_positive(*f, detail::child(ptr, "fd_step"));
      Domain dom = Domain::unbounded(dim);
      if (const Json* d = detail::find(j, "domain"))
        dom = parse_domain(*d, detail::child(ptr, "domain"), dim);
      return std::make_shared<MetricChart>(
          MetricChart::custom(std::move(entries), r, std::move(dom), fd));
    }
  } catch (const config_error&) {
    throw;
  } catch (const error& e) {
    // library-side validation (symmetry, positivity, ...) re-pointed here
    detail::fail(ptr, e.what());
  }
  detail::fail(detail::child(ptr, "type"),
               "unknown metric type \"" + type + "\"");
}

// --- groups ------------------------------------------------------------------

inline AffineIsometry parse_map(const Json& j, const std::string& ptr,
                                const std::string& default_name) {
  detail::check_keys(j, ptr, {"A", "b", "name"});
  Mat A = detail::as_matrix(detail::require(j, ptr, "A"),
                            detail::child(ptr, "A"));
  if (A.rows() != A.cols())
    detail::fail(detail::child(ptr, "A"), "matrix must be square");
  Vec b = detail::as_vector(detail::require(j, ptr, "b"),
                            detail::child(ptr, "b"));
  if (b.size() != A.rows())
    detail::fail(detail::child(ptr, "b"),
                 "length must match the matrix dimension");
  std::string name = default_name;
  if (const Json* n = detail::find(j, "name"))
    name = detail::as_string(*n, detail::child(ptr, "name"));
  if (name.empty())
    detail::fail(detail::child(ptr, "name"), "name must be nonempty");
  return {std::move(A), std::move(b), Word::generator(std::move(name))};
}

inline std::vector<AffineIsometry> parse_generators(const Json& j,
                                                    const std::string& ptr) {
  if (!j.is_array()) detail::fail(ptr, "expected an array of generators");
  std::vector<AffineIsometry> gens;
  for (std::size_t i = 0; i < j.size(); ++i)
    gens.push_back(parse_map(j[i], detail::child(ptr, i),
                             "g" + std::to_string(i + 1)));
  return gens;
}

inline IsometryGroup parse_group(const Json& j, const std::string& ptr) {
  detail::check_keys(j, ptr,
                     {"kind", "generators", "fundamental_domain",
                      "max_elements"});
  const std::string kind = detail::as_string(detail::require(j, ptr, "kind"),
                                             detail::child(ptr, "kind"));
  if (kind != "finite" && kind != "deck")
    detail::fail(detail::child(ptr, "kind"),
                 "expected \"finite\" or \"deck\"");
  auto gens = parse_generators(detail::require(j, ptr, "generators"),
                               detail::child(ptr, "generators"));
  if (gens.empty())
    detail::fail(detail::child(ptr, "generators"),
                 "needs at least one generator");
  FundamentalBox box;
  box.axis.resize(gens[0].dim());
  if (const Json* fd = detail::find(j, "fundamental_domain")) {
    const std::string fp = detail::child(ptr, "fundamental_domain");
    detail::check_keys(*fd, fp, {"box"});
    const Json& bj = detail::require(*fd, fp, "box");
    const std::string bp = detail::child(fp, "box");
    if (!bj.is_array() || static_cast<int>(bj.size()) != gens[0].dim())
      detail::fail(bp, "expected one [lo, hi] entry (or null) per coordinate");
    for (std::size_t a = 0; a < bj.size(); ++a) {
      const std::string ap = detail::child(bp, a);
      if (bj[a].is_null()) continue;
      if (!bj[a].is_array() || bj[a].size() != 2)
        detail::fail(ap, "expected [lo, hi] or null");
      double lo = detail::as_number(bj[a][0], detail::child(ap, std::size_t(0)));
      double hi = detail::as_number(bj[a][1], detail::child(ap, std::size_t(1)));
      if (!(lo < hi)) detail::fail(ap, "interval needs lo < hi");
      box.axis[a] = {lo, hi};
    }
  }
  int max_elements = 512;
  if (const Json* m = detail::find(j, "max_elements")) {
    max_elements = detail::as_int(*m, detail::child(ptr, "max_elements"));
    if (max_elements < 1)
      detail::fail(detail::child(ptr, "max_elements"), "needs at least 1");
  }
  try {
    return IsometryGroup(kind == "finite" ? GroupKind::finite : GroupKind::deck,
                         std::move(gens), std::move(box), max_elements);
  } catch (const error& e) {
    detail::fail(ptr, e.what());
  }
}

// --- loop families -----------------------------------------------------------

struct FamilySpec {
  std::string kind;  // latitude | class_line | circle | random_fourier |
                     // custom_expression
  std::string ptr;   // document location, for errors raised at build time
  int k = 1;
  int grid_resolution = 0;  // only k >= 2 uses a grid
  Vec cls;                  // class_line
  double amplitude = 0.0;   // class_line / random_fourier
  std::optional<AffineIsometry> twist;  // class_line closure override
  Vec center;               // circle / random_fourier
  double radius = 0.0;      // circle
  int modes = 0;            // random_fourier
  std::vector<Expression> components;  // custom_expression
};

inline int parse_grid_resolution(const Json& j, const std::string& ptr) {
  int res = detail::as_int(j, ptr);
  if (res < 3 || res % 2 == 0)
    detail::fail(ptr, "grid resolution must be odd and at least 3");
  return res;
}

inline FamilySpec parse_family(const Json& j, const std::string& ptr,
                               bool sweepout_context) {
  detail::require_object(j, ptr);
  const std::string kind = detail::as_string(detail::require(j, ptr, "kind"),
                                             detail::child(ptr, "kind"));
  FamilySpec s;
  s.kind = kind;
  s.ptr = ptr;
  if (kind == "latitude") {
    if (!sweepout_context)
      detail::fail(detail::child(ptr, "kind"),
                   "latitude is a sweepout family, not a single loop");
    detail::check_keys(j, ptr, {"kind", "grid_resolution"});
    s.k = 2;
    s.grid_resolution =
        parse_grid_resolution(detail::require(j, ptr, "grid_resolution"),
                              detail::child(ptr, "grid_resolution"));
    return s;
  }
  if (kind == "class_line") {
    detail::check_keys(j, ptr, {"kind", "class", "amplitude", "twist"});
    s.cls = detail::as_vector(detail::require(j, ptr, "class"),
                              detail::child(ptr, "class"));
    if (s.cls.cwiseAbs().maxCoeff() == 0.0)
      detail::fail(detail::child(ptr, "class"), "class vector must be nonzero");
    if (const Json* a = detail::find(j, "amplitude"))
      s.amplitude = detail::as_number(*a, detail::child(ptr, "amplitude"));
    if (const Json* t = detail::find(j, "twist"))
      s.twist = parse_map(*t, detail::child(ptr, "twist"), "w");
    return s;
  }
  if (kind == "circle") {
    detail::check_keys(j, ptr, {"kind", "center", "radius"});
    s.center = detail::as_vector(detail::require(j, ptr, "center"),
                                 detail::child(ptr, "center"));
    s.radius = detail::as_positive(detail::require(j, ptr, "radius"),
                                   detail::child(ptr, "radius"));
    return s;
  }
  if (kind == "random_fourier") {
    detail::check_keys(j, ptr, {"kind", "center", "modes", "amplitude"});
    s.center = detail::as_vector(detail::require(j, ptr, "center"),
                                 detail::child(ptr, "center"));
    s.modes = detail::as_int(detail::require(j, ptr, "modes"),
                             detail::child(ptr, "modes"));
    if (s.modes < 1)
      detail::fail(detail::child(ptr, "modes"), "needs at least one mode");
    s.amplitude = detail::as_number(detail::require(j, ptr, "amplitude"),
                                    detail::child(ptr, "amplitude"));
    return s;
  }
  if (kind == "custom_expression") {
    detail::check_keys(j, ptr, {"kind", "k", "components", "grid_resolution"});
    if (const Json* kj = detail::find(j, "k")) {
      s.k = detail::as_int(*kj, detail::child(ptr, "k"));
      if (s.k < 1 || s.k > 3)
        detail::fail(detail::child(ptr, "k"), "parameter count k must be 1, 2, or 3");
      if (!sweepout_context && s.k != 1)
        detail::fail(detail::child(ptr, "k"), "single loops take k = 1");
    }
    const Json& comps = detail::require(j, ptr, "components");
    const std::string cp = detail::child(ptr, "components");
    if (!comps.is_array() || comps.empty())
      detail::fail(cp, "expected a nonempty array of expressions");
    for (std::size_t i = 0; i < comps.size(); ++i) {
      Expression e =
          detail::as_expression(comps[i], detail::child(cp, i), true);
      if (e.max_variable() > s.k - 1)
        detail::fail(detail::child(cp, i),
                     "references a parameter beyond x" +
                         std::to_string(s.k - 1));
      s.components.push_back(std::move(e));
    }
    if (const Json* g = detail::find(j, "grid_resolution")) {
      if (s.k == 1)
        detail::fail(detail::child(ptr, "grid_resolution"),
                     "only families with k >= 2 use a parameter grid");
      s.grid_resolution =
          parse_grid_resolution(*g, detail::child(ptr, "grid_resolution"));
    } else if (s.k >= 2) {
      detail::fail(detail::child(ptr, "grid_resolution"),
                   "missing required key");
    }
    return s;
  }
  detail::fail(detail::child(ptr, "kind"),
               "unknown family kind \"" + kind + "\"");
}

// Default closure element of a class line: translation by the class vector,
// named t1^c1 ... tn^cn when the class is integral.
inline AffineIsometry class_twist(const Vec& cls) {
  Word w;
  bool integral = true;
  for (int i = 0; i < cls.size(); ++i)
    if (std::abs(cls[i] - std::round(cls[i])) > 1e-9) integral = false;
  if (integral) {
    for (int i = 0; i < cls.size(); ++i) {
      int p = static_cast<int>(std::llround(cls[i]));
      if (p != 0) w = w * Word::generator("t" + std::to_string(i + 1), p);
    }
  } else {
    w = Word::generator("class");
  }
  return AffineIsometry::translation(cls, std::move(w));
}

inline LoopFamily make_family(const FamilySpec& s, const MetricChart& chart,
                              std::uint64_t seed) {
  const int dim = chart.dim();
  if (s.kind == "latitude") {
    if (chart.kind() != MetricChart::Kind::sphere_chart)
      throw config_error(s.ptr, "latitude sweepouts need a sphere_chart metric");
    const auto& colat = chart.domain().bounds(0);
    const double guard = colat ? (*colat)[0] : 1e-3;
    Vec period(2);
    period << 0.0, 2.0 * M_PI;
    return latitude_family(
        guard, AffineIsometry::translation(period, Word::generator("phi")));
  }
  if (s.kind == "class_line") {
    if (s.cls.size() != dim)
      throw config_error(detail::child(s.ptr, "class"),
                         "length must match the chart dimension");
    AffineIsometry tw = s.twist ? *s.twist : class_twist(s.cls);
    if (tw.dim() != dim)
      throw config_error(detail::child(s.ptr, "twist"),
                         "dimension must match the chart");
    return class_line_family(s.cls, s.amplitude, std::move(tw));
  }
  if (s.kind == "circle") {
    if (dim != 2 || s.center.size() != 2)
      throw config_error(detail::child(s.ptr, "center"),
                         "circles live in two-dimensional charts");
    return circle_family(s.center, s.radius);
  }
  if (s.kind == "random_fourier") {
    if (s.center.size() != dim)
      throw config_error(detail::child(s.ptr, "center"),
                         "length must match the chart dimension");
    return random_fourier_family(s.center, s.modes, s.amplitude, seed);
  }
  // custom_expression
  if (static_cast<int>(s.components.size()) != dim)
    throw config_error(detail::child(s.ptr, "components"),
                       "needs one component per chart coordinate");
  return expression_family(s.components, s.k);
}

// --- orbifolds ---------------------------------------------------------------

struct OrbifoldSpec {
  std::string model;  // "sphere" | "flat_torus" | "chart"
  std::string ptr;
  int n = 0;
  Mat gram;  // flat torus; 0x0 means identity
  std::vector<AffineIsometry> generators;
  int max_elements = 512;
};

inline OrbifoldSpec parse_orbifold(const Json& j, const std::string& ptr) {
  detail::require_object(j, ptr);
  OrbifoldSpec s;
  s.ptr = ptr;
  s.model = detail::as_string(detail::require(j, ptr, "model"),
                              detail::child(ptr, "model"));
  if (s.model == "chart") {
    // borrows the run's metric and group; nothing else to declare
    detail::check_keys(j, ptr, {"model"});
    return s;
  }
  if (s.model != "sphere" && s.model != "flat_torus")
    detail::fail(detail::child(ptr, "model"),
                 "expected \"sphere\", \"flat_torus\", or \"chart\"");
  if (s.model == "sphere")
    detail::check_keys(j, ptr, {"model", "n", "group"});
  else
    detail::check_keys(j, ptr, {"model", "n", "gram", "group"});
  s.n = detail::as_int(detail::require(j, ptr, "n"), detail::child(ptr, "n"));
  const int min_n = s.model == "sphere" ? 2 : 1;
  if (s.n < min_n)
    detail::fail(detail::child(ptr, "n"),
                 "needs n >= " + std::to_string(min_n));
  if (const Json* g = detail::find(j, "gram")) {
    s.gram = detail::as_matrix(*g, detail::child(ptr, "gram"));
    if (s.gram.rows() != s.n || s.gram.cols() != s.n)
      detail::fail(detail::child(ptr, "gram"), "matrix must be n x n");
  }
  const Json& grp = detail::require(j, ptr, "group");
  const std::string gp = detail::child(ptr, "group");
  detail::check_keys(grp, gp, {"kind", "generators", "max_elements"});
  if (const Json* k = detail::find(grp, "kind"))
    if (detail::as_string(*k, detail::child(gp, "kind")) != "finite")
      detail::fail(detail::child(gp, "kind"),
                   "exact models take finite groups");
  s.generators = parse_generators(detail::require(grp, gp, "generators"),
                                  detail::child(gp, "generators"));
  for (std::size_t i = 0; i < s.generators.size(); ++i)
    if (s.generators[i].dim() != s.n)
      detail::fail(detail::child(detail::child(gp, "generators"), i),
                   "dimension must match n");
  if (const Json* m = detail::find(grp, "max_elements")) {
    s.max_elements = detail::as_int(*m, detail::child(gp, "max_elements"));
    if (s.max_elements < 1)
      detail::fail(detail::child(gp, "max_elements"), "needs at least 1");
  }
  return s;
}

inline DevelopableOrbifold make_orbifold(const OrbifoldSpec& s) {
  if (s.model == "chart")
    throw config_error(detail::child(s.ptr, "model"),
                       "chart orbifolds have no exact model to build");
  try {
    if (s.model == "sphere")
      return make_sphere_orbifold(s.n, s.generators, s.max_elements);
    Mat gram = s.gram.size() == 0
                   ? Mat(Mat::Identity(s.n, s.n))
                   : s.gram;
    return make_torus_orbifold(std::move(gram), s.generators, s.max_elements);
  } catch (const config_error&) {
    throw;
  } catch (const error& e) {
    throw config_error(s.ptr, e.what());
  }
}

// --- verify / exp payloads ----------------------------------------------------

struct GeodesicSpec {
  std::string ptr;
  Vec u, v;        // sphere great-circle frame (empty when unused)
  Vec base, dir;   // torus line (empty when unused)
  std::optional<AffineIsometry> twist;
};

inline GeodesicSpec parse_geodesic(const Json& j, const std::string& ptr) {
  detail::check_keys(j, ptr, {"u", "v", "base", "dir", "twist"});
  GeodesicSpec s;
  s.ptr = ptr;
  const Json* u = detail::find(j, "u");
  const Json* v = detail::find(j, "v");
  const Json* base = detail::find(j, "base");
  const Json* dir = detail::find(j, "dir");
  if ((u != nullptr) != (v != nullptr))
    detail::fail(ptr, "\"u\" and \"v\" come as a pair");
  if ((base != nullptr) != (dir != nullptr))
    detail::fail(ptr, "\"base\" and \"dir\" come as a pair");
  if ((u != nullptr) == (base != nullptr))
    detail::fail(ptr, "give either a sphere frame (u, v) or a torus line "
                      "(base, dir)");
  if (u) {
    s.u = detail::as_vector(*u, detail::child(ptr, "u"));
    s.v = detail::as_vector(*v, detail::child(ptr, "v"));
    if (s.u.size() != s.v.size())
      detail::fail(detail::child(ptr, "v"), "length must match \"u\"");
  } else {
    s.base = detail::as_vector(*base, detail::child(ptr, "base"));
    s.dir = detail::as_vector(*dir, detail::child(ptr, "dir"));
    if (s.base.size() != s.dir.size())
      detail::fail(detail::child(ptr, "dir"), "length must match \"base\"");
  }
  if (const Json* t = detail::find(j, "twist"))
    s.twist = parse_map(*t, detail::child(ptr, "twist"), "w");
  return s;
}

struct ExpSpec {
  std::string ptr;
  Vec point, velocity;
  int steps = 0;
};

inline ExpSpec parse_exp(const Json& j, const std::string& ptr) {
  detail::check_keys(j, ptr, {"point", "velocity", "steps"});
  ExpSpec s;
  s.ptr = ptr;
  s.point = detail::as_vector(detail::require(j, ptr, "point"),
                              detail::child(ptr, "point"));
  s.velocity = detail::as_vector(detail::require(j, ptr, "velocity"),
                                 detail::child(ptr, "velocity"));
  if (s.point.size() != s.velocity.size())
    detail::fail(detail::child(ptr, "velocity"),
                 "length must match \"point\"");
  if (const Json* st = detail::find(j, "steps")) {
    s.steps = detail::as_int(*st, detail::child(ptr, "steps"));
    if (s.steps < 0)
      detail::fail(detail::child(ptr, "steps"), "must be nonnegative");
  }
  return s;
}

// --- solver knobs --------------------------------------------------------------

struct SolverSpec {
  ShorteningConfig shortening;
  SolverOptions geodesic;
  int m = 0;  // 0 means "auto": choose_m from a probe of the initial family
};

inline SolverSpec parse_solver(const Json& j, const std::string& ptr) {
  detail::check_keys(j, ptr,
                     {"m", "max_iters", "tol_energy", "tol_vertex", "tol_angle",
                      "min_length", "cauchy_window", "threads", "tol_bvp",
                      "max_newton", "steps_per_segment"});
  SolverSpec s;
  if (const Json* m = detail::find(j, "m")) {
    const std::string mp = detail::child(ptr, "m");
    if (m->is_string()) {
      if (m->get<std::string>() != "auto")
        detail::fail(mp, "expected an even integer >= 2, or \"auto\"");
      s.m = 0;
    } else {
      s.m = detail::as_int(*m, mp);
      if (s.m < 2 || s.m % 2 != 0)
        detail::fail(mp, "expected an even integer >= 2, or \"auto\"");
    }
  }
  auto opt_int = [&](const char* key, int& slot, int lo) {
    if (const Json* x = detail::find(j, key)) {
      slot = detail::as_int(*x, detail::child(ptr, key));
      if (slot < lo)
        detail::fail(detail::child(ptr, key),
                     "needs at least " + std::to_string(lo));
    }
  };
  auto opt_pos = [&](const char* key, double& slot) {
    if (const Json* x = detail::find(j, key))
      slot = detail::as_positive(*x, detail::child(ptr, key));
  };
  opt_int("max_iters", s.shortening.max_iters, 1);
  opt_pos("tol_energy", s.shortening.tol_energy);
  opt_pos("tol_vertex", s.shortening.tol_vertex);
  opt_pos("tol_angle", s.shortening.tol_angle);
  if (const Json* x = detail::find(j, "min_length")) {
    s.shortening.min_length =
        detail::as_number(*x, detail::child(ptr, "min_length"));
    if (s.shortening.min_length < 0.0)
      detail::fail(detail::child(ptr, "min_length"), "must be nonnegative");
  }
  opt_int("cauchy_window", s.shortening.cauchy_window, 1);
  opt_int("threads", s.shortening.threads, 1);
  opt_pos("tol_bvp", s.geodesic.tol_bvp);
  opt_int("max_newton", s.geodesic.max_newton, 1);
  opt_int("steps_per_segment", s.geodesic.steps, 0);
  return s;
}

// --- whole documents -------------------------------------------------------------

struct RunConfig {
  std::string command;  // empty when only the flag supplies it
  std::shared_ptr<const MetricChart> chart;
  std::optional<IsometryGroup> group;
  std::optional<FamilySpec> loop;
  std::optional<FamilySpec> sweepout;
  std::optional<OrbifoldSpec> orbifold;
  std::optional<GeodesicSpec> geodesic;
  std::optional<ExpSpec> exp;
  SolverSpec solver;
  std::uint64_t seed = 0;
  std::string out, trace, curve;
};

inline RunConfig parse_run_config(const Json& root) {
  detail::check_keys(root, "",
                     {"command", "metric", "group", "loop", "sweepout",
                      "orbifold", "geodesic", "exp", "solver", "seed", "out",
                      "trace", "curve"});
  RunConfig rc;
  if (const Json* c = detail::find(root, "command")) {
    rc.command = detail::as_string(*c, "/command");
    if (rc.command != "shorten" && rc.command != "minmax" &&
        rc.command != "reduce" && rc.command != "verify" &&
        rc.command != "exp")
      detail::fail("/command",
                   "expected one of shorten, minmax, reduce, verify, exp");
  }
  if (const Json* m = detail::find(root, "metric"))
    rc.chart = parse_metric(*m, "/metric");
  if (const Json* g = detail::find(root, "group")) {
    rc.group = parse_group(*g, "/group");
    if (rc.chart && rc.group->dim() != rc.chart->dim())
      detail::fail("/group", "dimension does not match the metric");
  }
  if (const Json* l = detail::find(root, "loop"))
    rc.loop = parse_family(*l, "/loop", false);
  if (const Json* s = detail::find(root, "sweepout"))
    rc.sweepout = parse_family(*s, "/sweepout", true);
  if (const Json* o = detail::find(root, "orbifold"))
    rc.orbifold = parse_orbifold(*o, "/orbifold");
  if (const Json* g = detail::find(root, "geodesic"))
    rc.geodesic = parse_geodesic(*g, "/geodesic");
  if (const Json* e = detail::find(root, "exp")) {
    rc.exp = parse_exp(*e, "/exp");
    if (rc.chart && rc.exp->point.size() != rc.chart->dim())
      detail::fail("/exp/point", "length must match the chart dimension");
  }
  if (const Json* s = detail::find(root, "solver"))
    rc.solver = parse_solver(*s, "/solver");
  if (const Json* s = detail::find(root, "seed"))
    rc.seed = detail::as_seed(*s, "/seed");
  if (const Json* s = detail::find(root, "out"))
    rc.out = detail::as_string(*s, "/out");
  if (const Json* s = detail::find(root, "trace"))
    rc.trace = detail::as_string(*s, "/trace");
  if (const Json* s = detail::find(root, "curve"))
    rc.curve = detail::as_string(*s, "/curve");
  return rc;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("/", "cannot open config file: " + path);
  Json root;
  try {
    root = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw config_error("/", std::string("invalid JSON: ") + e.what());
  }
  return parse_run_config(root);
}

// Checks that the document carries everything the command needs; the pointer
// in the raised error names the missing piece.
inline void validate_for_command(const RunConfig& rc) {
  if (rc.command.empty())
    throw config_error("/command",
                       "no command given (set \"command\" or pass --command)");
  auto need = [](bool ok, const char* ptr, const std::string& msg) {
    if (!ok) throw config_error(ptr, msg);
  };
  if (rc.command == "shorten") {
    need(rc.chart != nullptr, "/metric", "command \"shorten\" needs a metric");
    need(rc.loop.has_value(), "/loop",
         "command \"shorten\" needs an initial loop");
  } else if (rc.command == "minmax") {
    need(rc.chart != nullptr, "/metric", "command \"minmax\" needs a metric");
    need(rc.sweepout.has_value(), "/sweepout",
         "command \"minmax\" needs a sweepout");
  } else if (rc.command == "reduce") {
    need(rc.orbifold.has_value(), "/orbifold",
         "command \"reduce\" needs an orbifold");
    need(rc.orbifold->model != "chart", "/orbifold/model",
         "automated reduction needs an exact model (\"sphere\" or "
         "\"flat_torus\")");
  } else if (rc.command == "verify") {
    const bool exact = rc.orbifold && rc.orbifold->model != "chart";
    const bool chart_checks =
        rc.chart && (rc.group.has_value() || rc.loop.has_value());
    need(exact || chart_checks, "/",
         "command \"verify\" needs an exact orbifold, or a metric with a "
         "group or loop to check");
    if (rc.geodesic)
      need(exact, "/geodesic",
           "model geodesic checks need an exact orbifold");
  } else if (rc.command == "exp") {
    need(rc.chart != nullptr, "/metric", "command \"exp\" needs a metric");
    need(rc.exp.has_value(), "/exp",
         "command \"exp\" needs a point and velocity");
  }
}

// Probe resolution used to estimate the energy bound when m is "auto".
inline constexpr int kAutoProbeM = 64;

}  // namespace birkhoff::config
