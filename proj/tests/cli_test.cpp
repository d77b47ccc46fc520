// End-to-end runs of the command-line binary against the bundled configs:
// exit codes, result documents, malformed-config rejection, and byte-level
// determinism of output files. The binary path and config directory come in
// as compile definitions so the suite works from any build directory.

#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#ifndef BIRKHOFF_CLI_PATH
#error "BIRKHOFF_CLI_PATH must point at the built binary"
#endif
#ifndef BIRKHOFF_CONFIGS_DIR
#error "BIRKHOFF_CONFIGS_DIR must point at the bundled configs"
#endif

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

std::string config_path(const std::string& name) {
  return std::string(BIRKHOFF_CONFIGS_DIR) + "/" + name;
}

// Runs the binary with the given arguments, discarding console output;
// returns the exit code.
int run(const std::string& args) {
  const std::string cmd =
      std::string(BIRKHOFF_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  REQUIRE(raw != -1);
  REQUIRE(WIFEXITED(raw));
  return WEXITSTATUS(raw);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json run_for_json(const std::string& config, int expected_exit,
                  const std::string& extra = "") {
  const std::string out = "cli_test_out.json";
  std::remove(out.c_str());
  const int code =
      run("--config " + config_path(config) + " --out " + out + " " + extra);
  CHECK(code == expected_exit);
  Json doc = Json::parse(read_file(out));
  std::remove(out.c_str());
  return doc;
}

}  // namespace

TEST_CASE("torus minmax finds the systole of the unit torus") {
  Json doc = run_for_json("torus_minmax_class_1_0.json", 0);
  CHECK(doc["command"] == "minmax");
  CHECK(doc["status"] == "found");
  CHECK(std::abs(doc["length"].get<double>() - 1.0) < 1e-6);
  CHECK(doc["twist_word"] == "t1");
}

TEST_CASE("a contractible circle in the plane shortens to a point") {
  const int code = run("--config " + config_path("plane_circle_shorten.json"));
  CHECK(code == 2);
}

TEST_CASE("sphere quotient reduction walks one stratum down") {
  Json doc = run_for_json("s3_z5_reduce.json", 0);
  CHECK(doc["status"] == "found");
  CHECK(doc["terminal"] == "dimension_1");
  REQUIRE(doc["steps"].size() == 1);
  CHECK(doc["steps"][0]["stratum_dim"] == 1);
  CHECK(doc["steps"][0]["isotropy_order"] == 5);
  CHECK(std::abs(doc["length"].get<double>() - 2.0 * M_PI) < 1e-9);
}

TEST_CASE("torus quotient reduction lands on the fixed circle") {
  Json doc = run_for_json("t3_z2_reduce.json", 0);
  CHECK(doc["terminal"] == "dimension_1");
  CHECK(std::abs(doc["length"].get<double>() - 1.0) < 1e-12);
}

TEST_CASE("even-dimensional isolated singularities report unresolved") {
  Json doc = run_for_json("s2_z2_reduce.json", 2);
  CHECK(doc["status"] == "reduced_to_even_isolated");
  CHECK(doc["terminal"] == "even_isolated");
  CHECK(doc["geodesic"].is_null());
}

TEST_CASE("verify passes the bundled certificates and fails the impostor") {
  CHECK(run("--config " + config_path("cylinder_core_verify.json")) == 0);
  CHECK(run("--config " + config_path("mobius_core_verify.json")) == 0);
  CHECK(run("--config " + config_path("flat_isometry_verify.json")) == 0);
  CHECK(run("--config " + config_path("circle_not_geodesic_verify.json")) ==
        5);
}

TEST_CASE("exp integrates a quarter meridian") {
  Json doc = run_for_json("exp_sphere.json", 0);
  CHECK(doc["command"] == "exp");
  CHECK(std::abs(doc["length"].get<double>() - 1.0) < 1e-10);
  CHECK(std::abs(doc["endpoint"][1].get<double>() - 1.0) < 1e-10);
}

TEST_CASE("every malformed config is rejected with exit code 4") {
  int seen = 0;
  for (const auto& entry :
       fs::directory_iterator(config_path("malformed"))) {
    if (entry.path().extension() != ".json") continue;
    ++seen;
    INFO(entry.path().filename().string());
    CHECK(run("--config " + entry.path().string()) == 4);
  }
  CHECK(seen == 10);
}

TEST_CASE("config file and flag errors exit with code 4") {
  CHECK(run("--config /nonexistent/config.json") == 4);
  CHECK(run("") == 4);  // --config is required
  CHECK(run("--config " + config_path("torus_class_1_0_shorten.json") +
            " --m 15") == 4);
  CHECK(run("--config " + config_path("torus_class_1_0_shorten.json") +
            " --m banana") == 4);
  CHECK(run("--config " + config_path("torus_class_1_0_shorten.json") +
            " --command explode") == 4);
  // overriding to a command whose payload is absent
  CHECK(run("--config " + config_path("torus_class_1_0_shorten.json") +
            " --command exp") == 4);
  CHECK(run("--help") == 0);
}

TEST_CASE("flag overrides reach the solver") {
  // capping iterations forces the no-convergence exit
  const int code = run("--config " +
                       config_path("torus_class_1_0_shorten.json") +
                       " --max-iters 3");
  CHECK(code == 3);
}

TEST_CASE("repeated runs are byte-identical") {
  const std::string a = "cli_det_a.json", b = "cli_det_b.json";
  const std::string ta = "cli_det_a.jsonl", tb = "cli_det_b.jsonl";
  const std::string base =
      "--config " + config_path("torus_minmax_class_1_0.json");
  REQUIRE(run(base + " --out " + a + " --trace " + ta) == 0);
  REQUIRE(run(base + " --out " + b + " --trace " + tb) == 0);
  CHECK(read_file(a) == read_file(b));
  CHECK(read_file(ta) == read_file(tb));

  SECTION("thread count does not leak into the output") {
    REQUIRE(run(base + " --threads 4 --out " + b) == 0);
    CHECK(read_file(a) == read_file(b));
  }

  SECTION("seeded random starts are reproducible") {
    const std::string rnd =
        "--config " + config_path("bumpy_random_shorten.json");
    REQUIRE(run(rnd + " --out " + a) == 2);
    REQUIRE(run(rnd + " --out " + b) == 2);
    CHECK(read_file(a) == read_file(b));
    // a different seed genuinely changes the run
    REQUIRE(run(rnd + " --seed 7 --out " + b) == 2);
    CHECK(read_file(a) != read_file(b));
  }

  std::remove(a.c_str());
  std::remove(b.c_str());
  std::remove(ta.c_str());
  std::remove(tb.c_str());
}
