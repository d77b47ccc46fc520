#pragma once
// Exception taxonomy for the library. The CLI maps config_error to exit
// code 4 and every other library error to exit code 5; "degenerate" and
// "no_convergence" outcomes are statuses on results, not exceptions.

#include <stdexcept>
#include <string>

namespace birkhoff {

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A point fell outside a chart's coordinate domain.
struct domain_error : error {
  using error::error;
};

// Geodesic integration left the chart domain; carries the parameter value at
// which the trajectory first crossed out.
struct domain_exit_error : error {
  double exit_parameter;
  domain_exit_error(const std::string& what, double t)
      : error(what), exit_parameter(t) {}
};

// Degenerate linear algebra: non-SPD metric, singular shooting Jacobian, a
// violated internal monotonicity assertion, and similar.
struct numeric_error : error {
  using error::error;
};

// The two-point geodesic solver failed to converge (typically: the points are
// not within the trusted uniqueness radius).
struct connectivity_error : error {
  using error::error;
};

// A curve was sampled too coarsely for the requested operation.
struct resolution_error : error {
  using error::error;
};

// Caller broke an API precondition (odd vertex count, mismatched m, ...).
struct usage_error : error {
  using error::error;
};

// A fundamental-domain representative could not be selected.
struct renormalization_error : error {
  using error::error;
};

// Text could not be parsed as an expression; position is a byte offset.
struct parse_error : error {
  std::size_t position;
  parse_error(const std::string& what, std::size_t pos)
      : error(what + " (at offset " + std::to_string(pos) + ")"),
        position(pos) {}
};

// Invalid run configuration; pointer is a JSON-pointer-style path to the
// offending key.
struct config_error : error {
  std::string pointer;
  config_error(const std::string& ptr, const std::string& what)
      : error(ptr + ": " + what), pointer(ptr) {}
};

}  // namespace birkhoff
