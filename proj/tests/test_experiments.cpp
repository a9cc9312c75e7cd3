#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <string>

#include "flowforms/experiments.hpp"
#include "flowforms/types.hpp"
#include "json.hpp"

using namespace flowforms;
using experiments::run_config_text;
using njson = nlohmann::ordered_json;

TEST_CASE("config schema: rejections") {
  CHECK_THROWS_AS(run_config_text("not json"), ConfigError);
  CHECK_THROWS_AS(run_config_text("[1,2]"), ConfigError);
  CHECK_THROWS_AS(run_config_text(R"({"kind":"kelvin"})"), ConfigError);
  CHECK_THROWS_AS(run_config_text(R"({"experiment":"no-such-kind"})"),
                  ConfigError);
  // Unknown keys are rejected, with the offending key named.
  try {
    run_config_text(R"({"experiment":"kelvin","fieldd":"rigid-rotation-3d"})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("fieldd") != std::string::npos);
  }
  // Wrong value types.
  CHECK_THROWS_AS(run_config_text(R"({"experiment":"kelvin","T":"one"})"),
                  ConfigError);
  CHECK_THROWS_AS(
      run_config_text(R"({"experiment":"kelvin","loop":{"nodes":12.7}})"),
      ConfigError);
}

TEST_CASE("experiment kinds are sorted and dispatchable") {
  const auto kinds = experiments::experiment_kinds();
  REQUIRE(kinds.size() == 9);
  for (std::size_t i = 1; i < kinds.size(); ++i) CHECK(kinds[i - 1] < kinds[i]);
  CHECK(std::find(kinds.begin(), kinds.end(), "theorem11") != kinds.end());
}

TEST_CASE("hamiltonian invariant experiment") {
  const auto res = run_config_text(R"({
    "experiment": "hamiltonian-invariant",
    "name": "pendulum-loop",
    "T": 0.5,
    "h": 1e-3
  })");
  CHECK(res.kind == "hamiltonian-invariant");
  CHECK(res.name == "pendulum-loop");
  CHECK(res.passed);
  REQUIRE(res.verdicts.size() == 2);
  CHECK(res.verdicts[0].first == "invariant-drift");
  CHECK(res.verdicts[1].first == "symplectic-defect");

  const njson rep = njson::parse(res.report_json);
  CHECK(rep.at("passed").get<bool>());
  CHECK(std::abs(rep.at("loop_integral_initial").get<double>() +
                 M_PI * 0.16) < 1e-6);
  // CSV: header plus at least one row, stable shape.
  CHECK(res.tables_csv.rfind("experiment,checkpoint,statistic,value\n", 0) ==
        0);
  CHECK(res.tables_csv.find("invariant_drift") != std::string::npos);
}

TEST_CASE("kelvin experiment with an explicit loop") {
  const auto res = run_config_text(R"({
    "experiment": "kelvin",
    "field": "sine-swirl-3d",
    "T": 0.5,
    "h": 1e-3,
    "loop": {"center": [1.2, 0.0, 0.3], "radius": 0.5, "nodes": 128}
  })");
  CHECK(res.passed);
  const njson rep = njson::parse(res.report_json);
  CHECK(rep.at("parameters").at("field") == "sine-swirl-3d");
  CHECK(rep.at("drift").get<double>() <= 1e-6);
}

TEST_CASE("vorticity transport experiment with refinement order") {
  const auto res = run_config_text(R"({
    "experiment": "vorticity-transport",
    "field": "rigid-rotation-3d",
    "T": 0.4,
    "h": 2e-3,
    "tol": 1e-6,
    "refine": true,
    "probes": {"count": 6}
  })");
  CHECK(res.passed);
  const njson rep = njson::parse(res.report_json);
  CHECK(rep.contains("convergence_order"));
  const double order = rep.at("convergence_order").get<double>();
  CHECK(order >= 2.0);
}

TEST_CASE("liouville experiment") {
  const auto res = run_config_text(R"({"experiment":"liouville"})");
  CHECK(res.passed);
  REQUIRE(res.verdicts.size() == 2);
  CHECK(res.verdicts[0].first == "transport");
  CHECK(res.verdicts[1].first == "bernoulli");
}

TEST_CASE("symplectic classification experiments") {
  const auto weak = run_config_text(R"({
    "experiment": "symplectic-classify",
    "field": "taylor-green-2d",
    "nu": 0.1,
    "system": "dw",
    "expect": "weakly",
    "probes": {"count": 25}
  })");
  CHECK(weak.passed);
  // diag-sin trips the z-vector test yet every noise section is Hamiltonian,
  // so the flow is classified strongly symplectic.
  const auto diag = run_config_text(R"({
    "experiment": "symplectic-classify",
    "field": "taylor-green-2d",
    "nu": 0.1,
    "system": "diag-sin",
    "expect": "strongly",
    "probes": {"count": 25}
  })");
  CHECK(diag.passed);
  const njson drep = njson::parse(diag.report_json);
  CHECK(drep.at("max_z").get<double>() > 1e-2);
  const auto broken = run_config_text(R"({
    "experiment": "symplectic-classify",
    "field": "taylor-green-2d",
    "nu": 0.1,
    "system": "twisted",
    "expect": "not",
    "probes": {"count": 25}
  })");
  CHECK(broken.passed);
  const njson rep = njson::parse(broken.report_json);
  CHECK(rep.at("verdict") == "not");
}

TEST_CASE("contact classification experiment") {
  const auto res = run_config_text(R"({
    "experiment": "contact-classify",
    "field": "rigid-rotation-3d",
    "probes": {"count": 40}
  })");
  CHECK(res.passed);
  REQUIRE(res.verdicts.size() == 4);
  CHECK(res.verdicts[0].first == "nondegeneracy");
}

TEST_CASE("explicit probe points are accepted") {
  const auto res = run_config_text(R"({
    "experiment": "contact-classify",
    "field": "rigid-rotation-3d",
    "probes": {"points": [[0.4, 0.5, 0.1], [0.8, 0.2, -0.3]]}
  })");
  CHECK(res.passed);
  const njson rep = njson::parse(res.report_json);
  CHECK(rep.at("parameters").at("probes").get<int>() == 2);
}

TEST_CASE("drift correction: invalid start dimension") {
  CHECK_THROWS_AS(run_config_text(R"({
    "experiment": "drift-correction",
    "x0": [0.1, 0.2, 0.3]
  })"),
                  ConfigError);
}

TEST_CASE("reports are byte-deterministic across reruns") {
  const std::string cfg = R"({
    "experiment": "drift-correction",
    "system": "dw",
    "expect": "invariant",
    "T": 0.2,
    "h": 2e-3,
    "samples": 400,
    "checkpoints": [0.1, 0.2],
    "pairs": 2,
    "seed": 1234
  })";
  const auto a = run_config_text(cfg);
  const auto b = run_config_text(cfg);
  CHECK(a.passed);
  CHECK(a.report_json == b.report_json);
  CHECK(a.tables_csv == b.tables_csv);
  CHECK(a.report_json.find("weak-invariance") != std::string::npos);
}
