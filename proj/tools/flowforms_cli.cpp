// Command-line front end: run experiment configs, list the catalog, validate
// fields against their governing equations.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "flowforms/experiments.hpp"
#include "flowforms/fieldlib.hpp"
#include "flowforms/types.hpp"
#include "flowforms/util.hpp"

namespace {

using njson = nlohmann::ordered_json;
namespace ff = flowforms;

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ff::ConfigError("cannot write '" + path.string() + "'");
  out << bytes;
}

int cmd_run(const std::string& config_path) {
  std::ifstream in(config_path, std::ios::binary);
  if (!in) {
    std::cerr << "config error: cannot open '" << config_path << "'\n";
    return 2;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  const auto start = std::chrono::steady_clock::now();
  const ff::experiments::RunResult res = ff::experiments::run_config_text(text);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();

  njson manifest;
  manifest["artifact"] = "flowforms";
  manifest["version"] = FLOWFORMS_VERSION;
  manifest["experiment"] = res.kind;
  manifest["name"] = res.name;
  manifest["config_hash"] = ff::util::fnv1a_hex(text);
  manifest["wall_clock_seconds"] = wall;
  manifest["discarded_samples"] = res.discarded;
  njson verdicts = njson::object();
  for (const auto& [key, ok] : res.verdicts) verdicts[key] = ok;
  manifest["verdicts"] = verdicts;
  manifest["passed"] = res.passed;
  manifest["outputs"] = {
      {"report.json", ff::util::fnv1a_hex(res.report_json)},
      {"tables.csv", ff::util::fnv1a_hex(res.tables_csv)}};

  if (!res.output_dir.empty()) {
    const std::filesystem::path dir(res.output_dir);
    std::filesystem::create_directories(dir);
    write_file(dir / "report.json", res.report_json);
    write_file(dir / "tables.csv", res.tables_csv);
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  } else {
    std::cout << res.report_json;
  }

  for (const auto& [key, ok] : res.verdicts)
    std::cout << (ok ? "pass" : "FAIL") << "  " << key << "\n";
  std::cout << (res.passed ? "PASS" : "FAIL") << "  " << res.name << "  ("
            << ff::util::format_double(wall) << " s)\n";
  return res.passed ? 0 : 1;
}

int cmd_list() {
  std::cout << "fields:\n";
  for (const auto& id : ff::fieldlib::catalog_ids())
    std::cout << "  " << id << "\n";
  std::cout << "experiments:\n";
  for (const auto& kind : ff::experiments::experiment_kinds())
    std::cout << "  " << kind << "\n";
  std::cout << "defaults:\n"
            << "  workers: FLOWFORMS_WORKERS env var, else hardware threads\n"
            << "  theorem11: T=1 h=0.002 samples=20000 grid=26x26"
            << " checkpoints=0.25,0.5,0.75,1\n"
            << "  constantin-iyer: T=0.5 h=0.0025 samples=10000 points=10\n"
            << "  drift-correction: T=0.5 h=0.001 samples=10000 pairs=5\n"
            << "  kelvin / vorticity-transport: T=1 h=0.001\n"
            << "  classification probes: symplectic=50 contact=100"
            << " liouville=50\n";
  return 0;
}

int cmd_validate(const std::string& field_id, double nu, int probes) {
  const ff::fieldlib::VelocityField u = ff::fieldlib::by_id(field_id, nu);
  const ff::Vec lo = ff::Vec::Constant(u.dim, 0.3);
  const ff::Vec hi = ff::Vec::Constant(u.dim, 5.9);
  const auto points = ff::util::probe_box(lo, hi, probes);
  const auto rep =
      ff::fieldlib::residual_navier_stokes(u, points, {0.0, 0.25, 0.5});

  std::cout << "field: " << u.name << "\n"
            << "nu: " << ff::util::format_double(u.nu) << "\n"
            << "probes: " << rep.probes << "\n"
            << "max_momentum_residual: "
            << ff::util::format_double(rep.max_momentum) << "\n"
            << "max_divergence_residual: "
            << ff::util::format_double(rep.max_divergence) << "\n";
  if (!rep.validated) {
    std::cout << "FAIL  no pressure data; momentum residual unavailable\n";
    return 1;
  }
  const double threshold = 1e-8;
  const bool ok =
      rep.max_momentum <= threshold && rep.max_divergence <= threshold;
  std::cout << (ok ? "PASS" : "FAIL") << "  threshold "
            << ff::util::format_double(threshold) << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flowforms: stochastic flows, differential forms, circulation"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run a JSON experiment config");
  run->add_option("config", config_path, "path to the config file")
      ->required();

  app.add_subcommand("list", "List fields, experiment kinds and defaults");

  std::string field_id;
  double nu = 0.0;
  int probes = 60;
  auto* validate = app.add_subcommand(
      "validate", "Check a catalog field against its governing equations");
  validate->add_option("field", field_id, "catalog field id")->required();
  validate->add_option("--nu", nu, "viscosity (fields without the knob ignore it)");
  validate->add_option("--probes", probes, "number of probe points")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run->parsed()) return cmd_run(config_path);
    if (validate->parsed()) return cmd_validate(field_id, nu, probes);
    return cmd_list();
  } catch (const ff::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ff::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}
