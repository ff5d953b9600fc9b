#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <boost/version.hpp>
#include <json.hpp>

#include "biharm/error.hpp"
#include "commands.hpp"
#include "config.hpp"

namespace fs = std::filesystem;
using namespace biharm;
using namespace biharm::cli;

namespace {

enum Exit { ok = 0, config_error = 1, numerical_failure = 2, acceptance_failure = 3 };

const char* status_name(int code) {
  switch (code) {
    case ok: return "ok";
    case config_error: return "config_error";
    case numerical_failure: return "numerical_failure";
    default: return "acceptance_failure";
  }
}

nlohmann::json versions() {
  return {{"biharm", BIHARM_VERSION},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", BOOST_LIB_VERSION},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"cli11", CLI11_VERSION},
          {"compiler", __VERSION__},
          {"cplusplus", static_cast<long>(__cplusplus)}};
}

std::string to_ini(const nlohmann::json& eff) {
  std::string top, body;
  for (const auto& [name, v] : eff.items()) {
    if (v.is_string()) {
      top += name + " = " + v.get<std::string>() + "\n";
      continue;
    }
    body += "\n[" + name + "]\n";
    for (const auto& [k, s] : v.items()) body += k + " = " + s.get<std::string>() + "\n";
  }
  return top + body;
}

void report(const std::string& type, const std::string& message) {
  std::cerr << nlohmann::json{{"error", {{"type", type}, {"message", message}}}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"biharm experiment driver"};
  app.set_version_flag("--version", BIHARM_VERSION);
  std::string config_path, out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  bool verbose = false;
  app.add_option("--config", config_path, "Config file (key = value with [sections])")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_option("--seed", seed, "RNG seed, overrides [run] seed");
  app.add_option("--workers", workers, "Worker threads, overrides [run] workers")->check(CLI::Range(1, 256));
  app.add_flag("--verbose", verbose, "Progress on stderr");
  app.fallthrough();
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::pair<std::string, Command>>> commands = {
      {"tensor-selftest", {"Tensor algebra and null-variety recovery property suites", &tensor_selftest}},
      {"solve", {"Clamped biharmonic solver convergence study", &solve_study}},
      {"cgo-decay", {"CGO remainder decay profiles and Gamma traces", &cgo_decay}},
      {"local-extract", {"Pointwise coefficient cascade from CGO probes", &local_extract}},
      {"linearize", {"Mixed differences against the linearized equation", &linearize}},
      {"invert", {"Coefficient recovery from partial DN data", &invert}},
  };
  for (const auto& [name, entry] : commands) app.add_subcommand(name, entry.first);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return config_error;
  }

  std::string sub;
  Command cmd = nullptr;
  for (const auto& [name, entry] : commands)
    if (app.got_subcommand(name)) {
      sub = name;
      cmd = entry.second;
    }

  Config cfg;
  int code = ok;
  nlohmann::json error = nullptr;
  try {
    cfg = config_path.empty() ? Config{} : Config::load(config_path);
  } catch (const Error& e) {
    report("ConfigError", e.what());
    return config_error;
  }
  if (seed) cfg.set("run.seed", std::to_string(*seed));
  if (workers) cfg.set("run.workers", std::to_string(*workers));

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    report("ConfigError", "cannot create " + out_dir + ": " + ec.message());
    return config_error;
  }

  RunContext ctx(cfg, out_dir);
  ctx.verbose = verbose;
  Outcome outcome;
  try {
    ctx.seed = cfg.u64("run.seed", 1);
    ctx.workers = static_cast<int>(cfg.integer("run.workers", 1, 1, 256));
    outcome = cmd(ctx);
    if (!outcome.failures.empty()) code = acceptance_failure;
  } catch (const ConfigError& e) {
    code = config_error;
    error = {{"type", "ConfigError"}, {"message", e.what()}};
  } catch (const ConstraintError& e) {
    code = config_error;
    error = {{"type", "ConstraintError"}, {"message", e.what()}};
  } catch (const nlohmann::json::exception& e) {
    code = config_error;
    error = {{"type", "InputError"}, {"message", e.what()}};
  } catch (const NumericalError& e) {
    code = numerical_failure;
    error = {{"type", "NumericalError"}, {"message", e.what()}};
  } catch (const std::exception& e) {
    code = numerical_failure;
    error = {{"type", "Error"}, {"message", e.what()}};
  }

  const std::string hash = "fnv1a64:" + hex64(fnv1a64(cfg.canonical({"run.workers"})));
  try {
    if (error.is_null()) {
      ctx.write_json("results.json", {{"subcommand", sub},
                                      {"config_hash", hash},
                                      {"seed", ctx.seed},
                                      {"results", outcome.results},
                                      {"acceptance", {{"pass", outcome.failures.empty()},
                                                      {"failures", outcome.failures}}}});
    }
    ctx.write_text("config.effective.ini", to_ini(cfg.effective_json()));
    ctx.timings["total"] = RunContext::seconds_since(ctx.start);
    nlohmann::json manifest = {{"tool", "biharm_cli"},
                               {"subcommand", sub},
                               {"status", status_name(code)},
                               {"exit_code", code},
                               {"config_hash", hash},
                               {"config", cfg.effective_json()},
                               {"config_source", config_path},
                               {"seed", ctx.seed},
                               {"workers", ctx.workers},
                               {"inputs", ctx.inputs},
                               {"outputs", ctx.outputs},
                               {"versions", versions()},
                               {"timings_s", ctx.timings},
                               {"failures", outcome.failures},
                               {"error", error}};
    manifest["outputs"].push_back("manifest.json");
    ctx.write_json("manifest.json", manifest);
  } catch (const std::exception& e) {
    report("OutputError", e.what());
    return code == ok ? config_error : code;
  }

  if (!error.is_null()) report(error["type"], error["message"]);
  for (const auto& f : outcome.failures) std::cerr << "acceptance: " << f << '\n';
  std::cout << sub << ": " << status_name(code) << " (" << out_dir << ")\n";
  return code;
}
