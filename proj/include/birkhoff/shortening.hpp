#pragma once
// Birkhoff curve shortening and the min-max search over sweepouts.
//
// One shortening step is D = D2 o D1. D1 keeps the even-indexed vertices
// and moves every odd vertex to the geodesic midpoint of its (even)
// neighbors; D2 does the same with the parities swapped. Midpoints of a
// twisted loop wrap through its deck transformation, so twisted closure is
// preserved exactly. Each half step is energy-nonincreasing, and fixed
// points of D are closed geodesics (up to the polygonal resolution m).
//
// The min-max routine drives a whole sweepout: every loop is shortened in
// lockstep, the running maximum energy e_n is tracked (it must never
// increase), and the search stops once the maximizing loop has been still
// for a window of rounds, then verifies it is a genuine closed geodesic of
// positive length. Work inside a round is distributed over threads by loop
// index, so results are byte-identical for any thread count.

#include <algorithm>
#include <cmath>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "group.hpp"
#include "loop.hpp"
#include "sweepout.hpp"

namespace birkhoff {

// Smallest even m with 2 kappa / m < r^2, doubled for safety margin, and
// never below 8. Guarantees every edge of an energy-kappa loop stays well
// inside the trusted radius through all shortening steps.
inline int choose_m(double kappa, double r) {
  if (!(r > 0.0)) throw usage_error("trusted radius must be positive");
  if (kappa < 0.0) throw usage_error("energy bound must be nonnegative");
  int m = 2;
  while (!(2.0 * kappa / m < r * r)) {
    m += 2;
    if (m > (1 << 26))
      throw usage_error("vertex count overflow: energy bound too large for "
                        "the trusted radius");
  }
  return std::max(8, 2 * m);
}

struct ShorteningConfig {
  double tol_energy = 1e-10;  // energy decrease per step at convergence
  double tol_vertex = 1e-9;   // max vertex displacement at convergence
  double tol_angle = 1e-6;    // largest corner angle of a found geodesic
  int max_iters = 10000;
  double min_length = -1.0;   // loops shorter than this are degenerate;
                              // negative means trusted_radius / 100
  int cauchy_window = 10;     // rounds of stillness required by minmax
  int threads = 1;
};

inline double effective_min_length(const ShorteningConfig& cfg,
                                   const MetricChart& chart) {
  return cfg.min_length >= 0.0 ? cfg.min_length
                               : chart.trusted_radius() / 100.0;
}

// One parity pass: replace every vertex of the given parity by the geodesic
// midpoint of its two neighbors (which wrap through the twist).
inline GeodesicLoop half_step(const GeodesicLoop& loop, int parity) {
  if (parity != 0 && parity != 1)
    throw usage_error("half_step parity must be 0 or 1");
  const int m = loop.m();
  auto vs = loop.vertices();
  // parity 0 moves odd vertices (keeps even), parity 1 the other way round
  for (int j = (parity == 0 ? 1 : 0); j < m; j += 2) {
    ChartPoint a = loop.effective_vertex(j - 1);
    ChartPoint b = loop.effective_vertex(j + 1);
    GeodesicSegment seg =
        connect(loop.chart_ptr(), a, b, loop.solver_options());
    vs[j] = midpoint(seg);
  }
  return loop.with_vertices(std::move(vs));
}

inline GeodesicLoop birkhoff_step(const GeodesicLoop& loop) {
  return half_step(half_step(loop, 0), 1);
}

// Max metric-weighted vertex displacement; second-order proxy for the true
// geodesic distance, exact enough at convergence scales.
inline double vertex_displacement(const GeodesicLoop& a,
                                  const GeodesicLoop& b) {
  double worst = 0.0;
  for (int k = 0; k < a.m(); ++k) {
    Vec d = b.vertex(k).coords - a.vertex(k).coords;
    Mat g = a.chart().metric_at(a.vertex(k));
    worst = std::max(worst, std::sqrt(d.dot(g * d)));
  }
  return worst;
}

enum class ShortenStatus { found, degenerate, no_convergence };

inline const char* to_string(ShortenStatus s) {
  switch (s) {
    case ShortenStatus::found: return "found";
    case ShortenStatus::degenerate: return "degenerate";
    default: return "no_convergence";
  }
}

struct ShorteningRecord {
  int iter = 0;
  double energy = 0.0;
  double length = 0.0;
  double max_disp = 0.0;
  std::string g_word = "e";  // renormalization element applied this step
};

struct ShorteningResult {
  ShortenStatus status = ShortenStatus::no_convergence;
  GeodesicLoop loop;
  AffineIsometry total_g;  // accumulated renormalization
  int iters = 0;
  double energy = 0.0;
  double length = 0.0;
  double max_angle = 0.0;
  std::vector<ShorteningRecord> trace;
};

// Shorten a single loop to a fixed point of D. Convergence demands three
// things at once: the energy drop, the vertex displacement, and the corner
// angles all below their tolerances. Loops collapsing below min_length stop
// as degenerate (they are contractible, not geodesics).
inline ShorteningResult shorten_to_limit(GeodesicLoop loop,
                                         const IsometryGroup* group,
                                         const ShorteningConfig& cfg = {}) {
  const double lmin = effective_min_length(cfg, loop.chart());
  ShorteningResult res{ShortenStatus::no_convergence,
                       loop,
                       AffineIsometry::identity(loop.chart().dim()),
                       0,
                       loop.energy(),
                       loop.length(),
                       loop.max_angle_defect(),
                       {}};
  double prev_energy = res.energy;
  for (int n = 1; n <= cfg.max_iters; ++n) {
    GeodesicLoop next = birkhoff_step(res.loop);
    const double disp = vertex_displacement(res.loop, next);
    std::string gw = "e";
    if (group) {
      auto rn = renormalize(next, *group);
      next = std::move(rn.loop);
      if (!rn.g.is_identity())
        res.total_g = rn.g.compose(res.total_g);
      gw = rn.g.word.str();
    }
    const double energy = next.energy();
    const double length = next.length();
    if (energy > prev_energy + 1e-12 * std::max(1.0, prev_energy))
      throw numeric_error("shortening step increased the energy");
    res.loop = std::move(next);
    res.iters = n;
    res.energy = energy;
    res.length = length;
    res.trace.push_back({n, energy, length, disp, gw});
    if (length < lmin) {
      res.status = ShortenStatus::degenerate;
      res.max_angle = res.loop.max_angle_defect();
      return res;
    }
    if (prev_energy - energy < cfg.tol_energy && disp < cfg.tol_vertex) {
      const double angle = res.loop.max_angle_defect();
      if (angle <= cfg.tol_angle) {
        res.status = ShortenStatus::found;
        res.max_angle = angle;
        return res;
      }
    }
    prev_energy = energy;
  }
  res.max_angle = res.loop.max_angle_defect();
  return res;
}

struct MinmaxRound {
  int n = 0;
  double e_n = 0.0;
  int argmax = 0;
  double max_disp = 0.0;       // displacement of the argmax loop this round
  std::string g_word = "e";    // renormalization applied to the argmax loop
};

struct MinmaxResult {
  ShortenStatus status = ShortenStatus::no_convergence;
  GeodesicLoop loop;  // the maximizing loop
  int rounds = 0;
  int argmax = 0;
  double energy = 0.0;
  double length = 0.0;
  double max_angle = 0.0;
  std::vector<MinmaxRound> trace;
};

namespace detail {

// Apply one shortening step to every loop, writing results by index so the
// outcome does not depend on the thread count.
inline void step_all(std::vector<GeodesicLoop>& loops, int threads) {
  const int n = static_cast<int>(loops.size());
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (auto& l : loops) l = birkhoff_step(l);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      try {
        for (int i = t; i < n; i += threads) loops[i] = birkhoff_step(loops[i]);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

// Min-max over a sweepout: shorten all loops in lockstep and watch the
// energy maximum. Succeeds when the maximizing loop has been still for
// cfg.cauchy_window consecutive rounds and verifies as a closed geodesic
// whose length exceeds the trusted radius; reports degenerate if the whole
// family collapses (max energy below the r^2/2 floor any nontrivial
// geodesic must clear).
inline MinmaxResult minmax(const Sweepout& sweepout,
                           const IsometryGroup* group,
                           const ShorteningConfig& cfg = {}) {
  if (sweepout.loops.empty())
    throw usage_error("minmax needs a nonempty sweepout");
  const double r = sweepout.chart->trusted_radius();
  std::vector<GeodesicLoop> loops = sweepout.loops;

  auto max_energy = [&]() {
    int arg = 0;
    double best = -1.0;
    for (int i = 0; i < static_cast<int>(loops.size()); ++i) {
      double e = loops[i].energy();
      if (e > best) {  // strict: ties keep the lowest index
        best = e;
        arg = i;
      }
    }
    return std::pair<double, int>(best, arg);
  };

  auto [e_prev, arg_prev] = max_energy();
  MinmaxResult res{ShortenStatus::no_convergence,
                   loops[arg_prev],
                   0,
                   arg_prev,
                   e_prev,
                   loops[arg_prev].length(),
                   0.0,
                   {}};
  int still_rounds = 0;
  for (int n = 1; n <= cfg.max_iters; ++n) {
    std::vector<GeodesicLoop> before = loops;
    detail::step_all(loops, cfg.threads);
    auto [e_n, arg] = max_energy();
    if (e_n > e_prev + 1e-12 * std::max(1.0, e_prev))
      throw numeric_error("min-max energy level increased");
    const double disp = vertex_displacement(before[arg], loops[arg]);
    std::string gw = "e";
    if (group) {
      auto rn = renormalize(loops[arg], *group);
      loops[arg] = std::move(rn.loop);
      gw = rn.g.word.str();
    }
    res.rounds = n;
    res.argmax = arg;
    res.energy = e_n;
    res.length = loops[arg].length();
    res.trace.push_back({n, e_n, arg, disp, gw});

    if (e_n < 0.5 * r * r) {
      // no loop of the family can reach a nontrivial geodesic any more
      res.status = ShortenStatus::degenerate;
      res.loop = loops[arg];
      res.max_angle = res.loop.max_angle_defect();
      return res;
    }

    still_rounds = disp < cfg.tol_vertex ? still_rounds + 1 : 0;
    if (still_rounds >= cfg.cauchy_window) {
      GeodesicLoop candidate = loops[arg];
      GeodesicLoop stepped = birkhoff_step(candidate);
      const double estep = std::abs(stepped.energy() - candidate.energy());
      const double angle = candidate.max_angle_defect();
      if (estep <= cfg.tol_energy && angle <= cfg.tol_angle) {
        if (!(candidate.length() > r))
          throw numeric_error(
              "min-max converged to a loop not longer than the trusted "
              "radius");
        if (!(candidate.energy() > 0.5 * r * r))
          throw numeric_error(
              "min-max converged below the nontriviality energy floor");
        res.status = ShortenStatus::found;
        res.loop = std::move(candidate);
        res.energy = res.loop.energy();
        res.length = res.loop.length();
        res.max_angle = angle;
        return res;
      }
      still_rounds = 0;  // not actually a geodesic yet; keep going
    }
    e_prev = e_n;
  }
  res.loop = loops[res.argmax];
  res.max_angle = res.loop.max_angle_defect();
  return res;
}

}  // namespace birkhoff
