#pragma once
// Result serialization: JSON documents with a fixed key order, JSON-lines
// iteration traces, CSV curve samples, and atomic file writes. Every
// formatting path is deterministic, so identical runs produce byte-identical
// output files.

#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "chart.hpp"
#include "errors.hpp"
#include "geodesic.hpp"
#include "loop.hpp"
#include "orbifold.hpp"
#include "shortening.hpp"

namespace birkhoff::io {

using Json = nlohmann::ordered_json;

inline Json to_json(const Vec& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Json to_json(const Mat& m) {
  Json rows = Json::array();
  for (int r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json vertices_json(const GeodesicLoop& loop) {
  Json vs = Json::array();
  for (const auto& v : loop.vertices()) vs.push_back(to_json(v.coords));
  return vs;
}

// --- results ---------------------------------------------------------------

inline Json result_json(const ShorteningResult& r, int m) {
  Json out;
  out["command"] = "shorten";
  out["status"] = to_string(r.status);
  out["m"] = m;
  out["iterations"] = r.iters;
  out["length"] = r.length;
  out["energy"] = r.energy;
  out["angle_defect"] = r.max_angle;
  out["twist_word"] = r.loop.twist().word.str();
  out["vertices"] = vertices_json(r.loop);
  return out;
}

inline Json result_json(const MinmaxResult& r, int m) {
  Json out;
  out["command"] = "minmax";
  out["status"] = to_string(r.status);
  out["m"] = m;
  out["rounds"] = r.rounds;
  out["argmax"] = r.argmax;
  out["length"] = r.length;
  out["energy"] = r.energy;
  out["angle_defect"] = r.max_angle;
  out["twist_word"] = r.loop.twist().word.str();
  out["vertices"] = vertices_json(r.loop);
  return out;
}

inline Json model_geodesic_json(const ModelGeodesic& g) {
  Json out;
  if (g.kind == ModelKind::sphere) {
    out["model"] = "sphere";
    out["u"] = to_json(g.u);
    out["v"] = to_json(g.v);
    out["omega"] = g.omega;
  } else {
    out["model"] = "flat_torus";
    out["base"] = to_json(g.base);
    out["dir"] = to_json(g.dir);
  }
  return out;
}

inline Json reduction_json(const OrbifoldGeodesicResult& r) {
  Json out;
  out["command"] = "reduce";
  out["status"] = r.status;
  out["used_orientation_subgroup"] = r.chain.used_orientation_subgroup;
  out["terminal"] = r.chain.terminal;
  Json steps = Json::array();
  for (const auto& s : r.chain.steps) {
    Json step;
    step["stratum_dim"] = s.stratum_dim;
    step["point"] = to_json(s.p);
    step["isotropy_order"] = static_cast<int>(s.isotropy.size());
    step["origin"] = to_json(s.origin);
    step["basis"] = to_json(s.basis);
    step["stabilizer_order"] = static_cast<int>(s.stabilizer.size());
    step["induced_model"] = to_string(s.induced.model.kind);
    step["induced_dim"] = s.induced.model.dim();
    step["induced_group_order"] = static_cast<int>(s.induced.group.size());
    step["invariance_residual"] = s.invariance_residual;
    steps.push_back(std::move(step));
  }
  out["steps"] = std::move(steps);
  if (r.geodesic) {
    out["geodesic"] = model_geodesic_json(*r.geodesic);
    out["length"] = r.length;
    Json closure;
    closure["position_residual"] = r.closure.position_residual;
    closure["velocity_residual"] = r.closure.velocity_residual;
    out["closure"] = std::move(closure);
    out["invariance_residual"] = r.invariance_residual;
  } else {
    out["geodesic"] = nullptr;
  }
  return out;
}

// --- iteration traces (JSON lines, one record per round) --------------------

inline std::string trace_jsonl(const std::vector<ShorteningRecord>& trace) {
  std::string out;
  for (const auto& rec : trace) {
    Json line;
    line["n"] = rec.iter;
    line["e_n"] = rec.energy;
    line["argmax"] = 0;  // a single loop is its own maximizer
    line["g_word"] = rec.g_word;
    line["max_disp"] = rec.max_disp;
    out += line.dump();
    out += '\n';
  }
  return out;
}

inline std::string trace_jsonl(const std::vector<MinmaxRound>& trace) {
  std::string out;
  for (const auto& rec : trace) {
    Json line;
    line["n"] = rec.n;
    line["e_n"] = rec.e_n;
    line["argmax"] = rec.argmax;
    line["g_word"] = rec.g_word;
    line["max_disp"] = rec.max_disp;
    out += line.dump();
    out += '\n';
  }
  return out;
}

// --- curve sampling ----------------------------------------------------------

namespace detail {

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string csv_header(int dim) {
  std::string out = "t";
  for (int i = 0; i < dim; ++i) out += ",x" + std::to_string(i + 1);
  out += '\n';
  return out;
}

inline void csv_row(std::string& out, double t, const Vec& p) {
  out += format_double(t);
  for (int i = 0; i < p.size(); ++i) {
    out += ',';
    out += format_double(p[i]);
  }
  out += '\n';
}

}  // namespace detail

// Closed loop sampled at a fixed number of points per edge (the final edge's
// endpoint is the start of the first, so the trace has exactly m * per_edge
// rows).
inline std::string curve_csv(const GeodesicLoop& loop, int per_edge = 16) {
  if (per_edge < 1) throw usage_error("curve sampling needs per_edge >= 1");
  const int m = loop.m();
  std::string out = detail::csv_header(loop.chart().dim());
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < per_edge; ++j) {
      const double s = static_cast<double>(j) / per_edge;
      detail::csv_row(out, (k + s) / m, loop.edge(k).evaluate(s).coords);
    }
  return out;
}

// Open segment sampled inclusively (samples + 1 rows).
inline std::string segment_csv(const GeodesicSegment& seg, int samples = 16) {
  if (samples < 1) throw usage_error("curve sampling needs samples >= 1");
  std::string out = detail::csv_header(seg.start().dim());
  for (int j = 0; j <= samples; ++j) {
    const double t = static_cast<double>(j) / samples;
    detail::csv_row(out, t, seg.evaluate(t).coords);
  }
  return out;
}

// Exact model geodesic sampled over one period (samples rows; t = 1 wraps to
// the twisted image of t = 0).
inline std::string model_geodesic_csv(const ModelGeodesic& geo,
                                      int samples = 256) {
  if (samples < 1) throw usage_error("curve sampling needs samples >= 1");
  std::string out = detail::csv_header(static_cast<int>(geo.point(0.0).size()));
  for (int j = 0; j < samples; ++j) {
    const double t = static_cast<double>(j) / samples;
    detail::csv_row(out, t, geo.point(t));
  }
  return out;
}

// --- files -------------------------------------------------------------------

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// Write-then-rename so readers never observe a half-written file.
inline void write_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::FILE* f = std::fopen(tmp.c_str(), "wb");
    if (!f) throw usage_error("cannot open output file for writing: " + path);
    const std::size_t n = std::fwrite(text.data(), 1, text.size(), f);
    const bool ok = n == text.size() && std::fclose(f) == 0;
    if (!ok) {
      std::remove(tmp.c_str());
      throw usage_error("failed to write output file: " + path);
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw usage_error("failed to move output file into place: " + path);
  }
}

}  // namespace birkhoff::io
