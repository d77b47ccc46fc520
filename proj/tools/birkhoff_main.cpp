// Command-line front end for the closed-geodesic finder.
//
// Commands (from the config's "command" key or the --command flag):
//   shorten  relax one loop to a geodesic of the quotient, or collapse it
//   minmax   sweepout min-max search for a nontrivial geodesic
//   reduce   symmetry reduction on an exact sphere / flat-torus orbifold
//   verify   isometry, twisted-closure, and model-geodesic checks
//   exp      a single exponential-map shot
//
// Exit codes: 0 found / all checks pass, 2 degenerate (the honest "nothing
// nontrivial here" outcome), 3 no convergence, 4 invalid configuration,
// 5 numeric failure (diagnostic on stderr).

#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "birkhoff/config.hpp"
#include "birkhoff/io.hpp"
#include "birkhoff/orbifold.hpp"
#include "birkhoff/shortening.hpp"

namespace {

using namespace birkhoff;
namespace cfg = birkhoff::config;

int status_exit(ShortenStatus s) {
  switch (s) {
    case ShortenStatus::found: return 0;
    case ShortenStatus::degenerate: return 2;
    default: return 3;
  }
}

GeodesicLoop build_loop(const cfg::RunConfig& rc, const cfg::FamilySpec& spec,
                        int m) {
  LoopFamily fam = cfg::make_family(spec, *rc.chart, rc.seed);
  return single_loop(rc.chart, fam, m, rc.solver.geodesic);
}

Sweepout build_sweep(const cfg::RunConfig& rc, const cfg::FamilySpec& spec,
                     int m) {
  LoopFamily fam = cfg::make_family(spec, *rc.chart, rc.seed);
  return build_sweepout(rc.chart, fam, spec.grid_resolution, m,
                        rc.solver.geodesic);
}

void write_if(const std::string& path, const std::string& text) {
  if (!path.empty()) io::write_atomic(path, text);
}

int run_shorten(const cfg::RunConfig& rc) {
  int m = rc.solver.m;
  std::optional<GeodesicLoop> loop;
  if (m == 0) {
    GeodesicLoop probe = build_loop(rc, *rc.loop, cfg::kAutoProbeM);
    m = choose_m(probe.energy(), rc.chart->trusted_radius());
    loop = m == cfg::kAutoProbeM ? std::move(probe)
                                 : build_loop(rc, *rc.loop, m);
  } else {
    loop = build_loop(rc, *rc.loop, m);
  }
  const IsometryGroup* grp = rc.group ? &*rc.group : nullptr;
  ShorteningResult res =
      shorten_to_limit(std::move(*loop), grp, rc.solver.shortening);
  std::printf("shorten: %s m=%d iterations=%d length=%.12g energy=%.12g\n",
              to_string(res.status), m, res.iters, res.length, res.energy);
  write_if(rc.out, io::dump(io::result_json(res, m)));
  write_if(rc.trace, io::trace_jsonl(res.trace));
  write_if(rc.curve, io::curve_csv(res.loop));
  return status_exit(res.status);
}

int run_minmax(const cfg::RunConfig& rc) {
  int m = rc.solver.m;
  std::optional<Sweepout> sw;
  if (m == 0) {
    Sweepout probe = build_sweep(rc, *rc.sweepout, cfg::kAutoProbeM);
    m = choose_m(probe.kappa, rc.chart->trusted_radius());
    sw = m == cfg::kAutoProbeM ? std::move(probe)
                               : build_sweep(rc, *rc.sweepout, m);
  } else {
    sw = build_sweep(rc, *rc.sweepout, m);
  }
  const IsometryGroup* grp = rc.group ? &*rc.group : nullptr;
  MinmaxResult res = minmax(*sw, grp, rc.solver.shortening);
  std::printf("minmax: %s m=%d rounds=%d argmax=%d length=%.12g "
              "energy=%.12g\n",
              to_string(res.status), m, res.rounds, res.argmax, res.length,
              res.energy);
  write_if(rc.out, io::dump(io::result_json(res, m)));
  write_if(rc.trace, io::trace_jsonl(res.trace));
  write_if(rc.curve, io::curve_csv(res.loop));
  return status_exit(res.status);
}

int run_reduce(const cfg::RunConfig& rc) {
  DevelopableOrbifold orb = cfg::make_orbifold(*rc.orbifold);
  OrbifoldGeodesicResult res = find_closed_geodesic_via_reduction(orb);
  if (res.geodesic)
    std::printf("reduce: %s terminal=%s steps=%d length=%.12g\n",
                res.status.c_str(), res.chain.terminal.c_str(),
                static_cast<int>(res.chain.steps.size()), res.length);
  else
    std::printf("reduce: %s terminal=%s steps=%d\n", res.status.c_str(),
                res.chain.terminal.c_str(),
                static_cast<int>(res.chain.steps.size()));
  write_if(rc.out, io::dump(io::reduction_json(res)));
  if (res.geodesic) write_if(rc.curve, io::model_geodesic_csv(*res.geodesic));
  return res.status == "found" ? 0 : 2;
}

int run_verify(const cfg::RunConfig& rc) {
  io::Json checks = io::Json::array();
  bool all_pass = true;
  auto record = [&](io::Json check, bool pass) {
    check["pass"] = pass;
    all_pass = all_pass && pass;
    checks.push_back(std::move(check));
  };

  if (rc.orbifold && rc.orbifold->model != "chart") {
    DevelopableOrbifold orb = cfg::make_orbifold(*rc.orbifold);
    io::Json c;
    c["check"] = "model_group";
    c["order"] = static_cast<int>(orb.group.size());
    record(std::move(c), true);  // construction is the exactness check
    if (rc.geodesic) {
      ModelGeodesic geo;
      geo.kind = orb.model.kind;
      geo.gram = orb.model.gram;
      io::Json g;
      g["check"] = "model_geodesic";
      if (orb.model.kind == ModelKind::sphere) {
        if (rc.geodesic->u.size() == 0)
          throw config_error(rc.geodesic->ptr,
                             "sphere geodesics take a frame (u, v)");
        geo.u = rc.geodesic->u;
        geo.v = rc.geodesic->v;
      } else {
        if (rc.geodesic->base.size() == 0)
          throw config_error(rc.geodesic->ptr,
                             "torus geodesics take a line (base, dir)");
        geo.base = rc.geodesic->base;
        geo.dir = rc.geodesic->dir;
      }
      AffineIsometry twist = rc.geodesic->twist
                                 ? *rc.geodesic->twist
                                 : AffineIsometry::identity(orb.model.n);
      if (twist.dim() != orb.model.n)
        throw config_error(rc.geodesic->ptr + "/twist",
                           "dimension must match the model");
      try {
        TwistedGeodesicReport rep =
            is_closed_model_geodesic(orb.model, geo, twist);
        g["position_residual"] = rep.position_residual;
        g["velocity_residual"] = rep.velocity_residual;
        record(std::move(g), rep.pass);
      } catch (const config_error&) {
        throw;
      } catch (const error& e) {
        g["error"] = e.what();
        record(std::move(g), false);
      }
    }
  }

  if (rc.chart) {
    if (rc.group) {
      for (const auto& gen : rc.group->generators()) {
        IsometryReport rep = verify_isometry(*rc.chart, gen);
        io::Json c;
        c["check"] = "isometry";
        c["name"] = gen.word.str();
        c["max_violation"] = rep.worst;
        record(std::move(c), rep.pass);
      }
    }
    if (rc.loop) {
      int m = rc.solver.m == 0 ? cfg::kAutoProbeM : rc.solver.m;
      GeodesicLoop loop = build_loop(rc, *rc.loop, m);
      TwistedGeodesicReport rep = is_twisted_closed_geodesic(loop);
      const double angle = loop.max_angle_defect();
      io::Json c;
      c["check"] = "twisted_closure";
      c["position_residual"] = rep.position_residual;
      c["velocity_residual"] = rep.velocity_residual;
      c["interior_defect"] = rep.interior_defect;
      c["angle_defect"] = angle;
      record(std::move(c),
             rep.pass && angle <= rc.solver.shortening.tol_angle);
    }
  }

  io::Json out;
  out["command"] = "verify";
  out["status"] = all_pass ? "pass" : "fail";
  out["checks"] = std::move(checks);
  std::printf("verify: %s (%d checks)\n", all_pass ? "pass" : "fail",
              static_cast<int>(out["checks"].size()));
  write_if(rc.out, io::dump(out));
  if (all_pass) return 0;
  std::fprintf(stderr, "verify: a check failed; see the result JSON\n");
  return 5;
}

int run_exp(const cfg::RunConfig& rc) {
  GeodesicSegment seg = exp_map(rc.chart, ChartPoint{rc.exp->point},
                                rc.exp->velocity, rc.exp->steps);
  io::Json out;
  out["command"] = "exp";
  out["status"] = "pass";
  out["endpoint"] = io::to_json(seg.end().coords);
  out["final_velocity"] = io::to_json(seg.final_velocity());
  out["length"] = seg.length();
  out["speed_drift"] = seg.speed_drift();
  std::printf("exp: length=%.12g speed_drift=%.3g\n", seg.length(),
              seg.speed_drift());
  write_if(rc.out, io::dump(out));
  write_if(rc.curve, io::segment_csv(seg));
  return 0;
}

int dispatch(const cfg::RunConfig& rc) {
  if (rc.command == "shorten") return run_shorten(rc);
  if (rc.command == "minmax") return run_minmax(rc);
  if (rc.command == "reduce") return run_reduce(rc);
  if (rc.command == "verify") return run_verify(rc);
  return run_exp(rc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed geodesics via Birkhoff shortening, min-max sweepouts, "
               "and symmetry reduction"};
  std::string config_path, command, m_flag, out_flag, trace_flag;
  long long max_iters = -1, seed = -1, threads = -1;
  double tol_energy = -1.0;
  app.add_option("--config", config_path, "JSON run configuration")
      ->required();
  app.add_option("--command", command, "shorten|minmax|reduce|verify|exp")
      ->check(CLI::IsMember({"shorten", "minmax", "reduce", "verify", "exp"}));
  app.add_option("--m", m_flag, "vertex count: an even integer or \"auto\"");
  app.add_option("--max-iters", max_iters, "iteration cap");
  app.add_option("--tol-energy", tol_energy,
                 "energy-decrease tolerance at convergence");
  app.add_option("--seed", seed, "seed for randomized initial loops");
  app.add_option("--threads", threads, "worker threads for sweepout rounds");
  app.add_option("--out", out_flag, "result JSON path");
  app.add_option("--trace", trace_flag, "iteration trace path (JSON lines)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 4;  // --help exits cleanly; bad flags are config errors
  }

  try {
    cfg::RunConfig rc = cfg::load_run_config(config_path);
    if (!command.empty()) rc.command = command;
    if (!m_flag.empty()) {
      if (m_flag == "auto") {
        rc.solver.m = 0;
      } else {
        int m = 0;
        try {
          std::size_t used = 0;
          m = std::stoi(m_flag, &used);
          if (used != m_flag.size()) throw std::invalid_argument(m_flag);
        } catch (const std::exception&) {
          throw config_error("--m", "expected an even integer or \"auto\"");
        }
        if (m < 2 || m % 2 != 0)
          throw config_error("--m", "expected an even integer >= 2");
        rc.solver.m = m;
      }
    }
    if (max_iters >= 0) {
      if (max_iters < 1) throw config_error("--max-iters", "needs at least 1");
      rc.solver.shortening.max_iters = static_cast<int>(max_iters);
    }
    if (tol_energy >= 0.0) {
      if (!(tol_energy > 0.0))
        throw config_error("--tol-energy", "must be positive");
      rc.solver.shortening.tol_energy = tol_energy;
    }
    if (seed >= 0) rc.seed = static_cast<std::uint64_t>(seed);
    if (threads >= 0) {
      if (threads < 1) throw config_error("--threads", "needs at least 1");
      rc.solver.shortening.threads = static_cast<int>(threads);
    }
    if (!out_flag.empty()) rc.out = out_flag;
    if (!trace_flag.empty()) rc.trace = trace_flag;
    cfg::validate_for_command(rc);
    return dispatch(rc);
  } catch (const config_error& e) {
    std::fprintf(stderr, "config error at %s\n", e.what());
    return 4;
  } catch (const error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 5;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 5;
  }
}
