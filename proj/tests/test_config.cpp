#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "biharm/error.hpp"
#include "config.hpp"

using namespace biharm;
using namespace biharm::cli;

TEST_CASE("fnv1a64 reference vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  CHECK(hex64(0xaf63dc4c8601ec8cULL) == "af63dc4c8601ec8c");
  CHECK(hex64(0x1ULL) == "0000000000000001");
}

TEST_CASE("config values") {
  auto c = Config::parse("top = 1\n[grid]\nn = 31\ngamma = left:0:1, bottom:0:0.5\n[recovery]\neps = 1e-3\n"
                         "ranks = 0,1, 3\nscheme = symmetric\nflag = true\n");
  CHECK(c.integer("grid.n", 5, 5, 511) == 31);
  CHECK(c.words("grid.gamma", {}) == std::vector<std::string>{"left:0:1", "bottom:0:0.5"});
  CHECK(c.real("recovery.eps", 0.1, 0.0, 1.0) == doctest::Approx(1e-3));
  CHECK(c.integers("recovery.ranks", {}, 0, 3) == std::vector<int>{0, 1, 3});
  CHECK(c.choice("recovery.scheme", "forward", {"forward", "symmetric"}) == "symmetric");
  CHECK(c.flag("recovery.flag", false));
  CHECK(c.text("top", "") == "1");
  CHECK(c.real("recovery.lambda", 1e-8, 0.0, 1.0) == 1e-8);
  CHECK_NOTHROW(c.reject_unknown());

  SUBCASE("defaults are part of the effective config") {
    CHECK(c.canonical().find("recovery.lambda = 1e-08") != std::string::npos);
    CHECK(c.effective_json()["grid"]["n"] == "31");
  }
  SUBCASE("hash ignores excluded keys") {
    auto d = c;
    d.set("run.workers", "8");
    d.integer("run.workers", 1, 1, 256);
    CHECK(d.canonical({"run.workers"}) == c.canonical());
  }
}

TEST_CASE("config errors") {
  auto c = Config::parse("[grid]\nn = 3\nm = x\nlist = 1,a\n[extra]\nkey = 1\n");
  CHECK_THROWS_AS(c.integer("grid.n", 31, 5, 511), ConfigError);
  CHECK_THROWS_AS(c.integer("grid.m", 1, 0, 9), ConfigError);
  CHECK_THROWS_AS(c.reals("grid.list", {}, 0, 9), ConfigError);
  CHECK_THROWS_AS(c.choice("grid.n", "a", {"a", "b"}), ConfigError);
  CHECK_THROWS_AS(c.file("grid.m"), ConfigError);
  CHECK_THROWS_AS(c.reject_unknown(), ConfigError);
  CHECK_THROWS_AS(Config::parse("[grid\nn = 1\n"), ConfigError);
  CHECK_THROWS_AS(Config::load("/nonexistent/config.ini"), ConfigError);
}

TEST_CASE("config files resolve against the config directory") {
  const auto dir = std::filesystem::temp_directory_path() / "biharm_config_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "model.json") << "{}";
  std::ofstream(dir / "run.ini") << "[model]\ntrue = model.json\n";
  auto c = Config::load((dir / "run.ini").string());
  auto p = c.file("model.true");
  REQUIRE(p);
  CHECK(std::filesystem::equivalent(*p, dir / "model.json"));
  CHECK(!c.file("model.reference"));
  std::filesystem::remove_all(dir);
}
