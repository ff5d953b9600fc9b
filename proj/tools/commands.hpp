#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"

namespace biharm::cli {

struct RunContext {
  RunContext(const Config& c, std::filesystem::path dir) : cfg(c), out(std::move(dir)) {}

  const Config& cfg;
  std::filesystem::path out;
  std::uint64_t seed = 1;
  int workers = 1;
  bool verbose = false;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  nlohmann::json timings = nlohmann::json::object();
  nlohmann::json inputs = nlohmann::json::object();
  std::vector<std::string> outputs;

  void log(const std::string& msg) const;
  void write_json(const std::string& name, const nlohmann::json& j);
  void write_text(const std::string& name, const std::string& text);
  /// Records the file's hash and parsed JSON content under inputs[key].
  nlohmann::json read_input_json(const std::string& key, const std::string& path);

  template <class Fn>
  auto timed(const std::string& stage, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    log(stage);
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      timings[stage] = seconds_since(t0);
    } else {
      auto r = fn();
      timings[stage] = seconds_since(t0);
      return r;
    }
  }
  static double seconds_since(std::chrono::steady_clock::time_point t0);
};

struct Outcome {
  nlohmann::json results = nlohmann::json::object();
  std::vector<std::string> failures;  ///< acceptance checks that did not hold
};

using Command = Outcome (*)(RunContext&);

Outcome tensor_selftest(RunContext& ctx);
Outcome solve_study(RunContext& ctx);
Outcome cgo_decay(RunContext& ctx);
Outcome local_extract(RunContext& ctx);
Outcome linearize(RunContext& ctx);
Outcome invert(RunContext& ctx);

}  // namespace biharm::cli
