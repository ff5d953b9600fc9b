#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace biharm::cli {

/// Flat key = value file with [sections]; keys are addressed as "section.key".
/// Every value read is recorded, defaults included, so the effective config can be
/// written back out and hashed.
class Config {
public:
  Config() = default;
  static Config load(const std::string& path);
  static Config parse(const std::string& text, std::string base_dir = ".");

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return raw_.count(key) > 0; }

  std::string text(const std::string& key, const std::string& def) const;
  std::string choice(const std::string& key, const std::string& def,
                     const std::vector<std::string>& allowed) const;
  double real(const std::string& key, double def, double lo, double hi) const;
  long integer(const std::string& key, long def, long lo, long hi) const;
  std::uint64_t u64(const std::string& key, std::uint64_t def) const;
  bool flag(const std::string& key, bool def) const;
  std::vector<double> reals(const std::string& key, const std::vector<double>& def, double lo,
                            double hi) const;
  std::vector<int> integers(const std::string& key, const std::vector<int>& def, int lo, int hi) const;
  std::vector<std::string> words(const std::string& key, const std::vector<std::string>& def) const;
  /// Existing file, resolved against the config file's directory; nullopt when unset.
  std::optional<std::string> file(const std::string& key) const;

  /// Throws ConfigError naming any key in the file that was never read.
  void reject_unknown() const;

  /// Sorted "section.key = value" lines of the effective config.
  std::string canonical(const std::vector<std::string>& exclude = {}) const;
  nlohmann::json effective_json() const;

private:
  const std::string* lookup(const std::string& key) const;
  void record(const std::string& key, const std::string& value) const;

  std::map<std::string, std::string> raw_;
  std::string base_dir_ = ".";
  mutable std::map<std::string, std::string> used_;
};

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

}  // namespace biharm::cli
