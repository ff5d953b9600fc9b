#include "config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "biharm/error.hpp"

namespace biharm::cli {

namespace fs = std::filesystem;

namespace {

std::string shortest(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  if (boost::algorithm::trim_copy(s).empty()) return parts;
  boost::algorithm::split(parts, s, boost::algorithm::is_any_of(","));
  for (auto& p : parts) boost::algorithm::trim(p);
  return parts;
}

double parse_real(const std::string& key, const std::string& s) {
  double v = 0;
  const char* end = s.data() + s.size();
  auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) throw ConfigError(key + ": not a number: '" + s + "'");
  return v;
}

long parse_integer(const std::string& key, const std::string& s) {
  long v = 0;
  const char* end = s.data() + s.size();
  auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) throw ConfigError(key + ": not an integer: '" + s + "'");
  return v;
}

template <class T>
void check_range(const std::string& key, T v, T lo, T hi) {
  if (!(v >= lo && v <= hi)) {
    std::ostringstream os;
    os << key << " = " << v << " outside [" << lo << ", " << hi << "]";
    throw ConfigError(os.str());
  }
}

}  // namespace

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  auto dir = fs::path(path).parent_path();
  return parse(ss.str(), dir.empty() ? "." : dir.string());
}

Config Config::parse(const std::string& text, std::string base_dir) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  Config c;
  c.base_dir_ = std::move(base_dir);
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      c.raw_[name] = boost::algorithm::trim_copy(node.data());
      continue;
    }
    for (const auto& [key, leaf] : node) {
      if (!leaf.empty()) throw ConfigError("nested keys are not supported: " + name + "." + key);
      c.raw_[name + "." + key] = boost::algorithm::trim_copy(leaf.data());
    }
  }
  return c;
}

void Config::set(const std::string& key, const std::string& value) { raw_[key] = value; }

const std::string* Config::lookup(const std::string& key) const {
  auto it = raw_.find(key);
  return it == raw_.end() ? nullptr : &it->second;
}

void Config::record(const std::string& key, const std::string& value) const { used_[key] = value; }

std::string Config::text(const std::string& key, const std::string& def) const {
  const auto* s = lookup(key);
  std::string v = s ? *s : def;
  record(key, v);
  return v;
}

std::string Config::choice(const std::string& key, const std::string& def,
                           const std::vector<std::string>& allowed) const {
  auto v = text(key, def);
  if (std::find(allowed.begin(), allowed.end(), v) == allowed.end())
    throw ConfigError(key + ": '" + v + "' is not one of " + boost::algorithm::join(allowed, ", "));
  return v;
}

double Config::real(const std::string& key, double def, double lo, double hi) const {
  const auto* s = lookup(key);
  const double v = s ? parse_real(key, *s) : def;
  check_range(key, v, lo, hi);
  record(key, s ? *s : shortest(v));
  return v;
}

long Config::integer(const std::string& key, long def, long lo, long hi) const {
  const auto* s = lookup(key);
  const long v = s ? parse_integer(key, *s) : def;
  check_range(key, v, lo, hi);
  record(key, std::to_string(v));
  return v;
}

std::uint64_t Config::u64(const std::string& key, std::uint64_t def) const {
  const auto* s = lookup(key);
  std::uint64_t v = def;
  if (s) {
    const char* end = s->data() + s->size();
    auto res = std::from_chars(s->data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) throw ConfigError(key + ": not an unsigned integer: '" + *s + "'");
  }
  record(key, std::to_string(v));
  return v;
}

bool Config::flag(const std::string& key, bool def) const {
  const auto v = choice(key, def ? "true" : "false", {"true", "false"});
  return v == "true";
}

std::vector<double> Config::reals(const std::string& key, const std::vector<double>& def, double lo,
                                  double hi) const {
  const auto* s = lookup(key);
  std::vector<double> out;
  if (s) {
    for (const auto& p : split_list(*s)) out.push_back(parse_real(key, p));
  } else {
    out = def;
  }
  std::vector<std::string> shown;
  for (double v : out) {
    check_range(key, v, lo, hi);
    shown.push_back(shortest(v));
  }
  record(key, boost::algorithm::join(shown, ","));
  return out;
}

std::vector<int> Config::integers(const std::string& key, const std::vector<int>& def, int lo, int hi) const {
  const auto* s = lookup(key);
  std::vector<int> out;
  if (s) {
    for (const auto& p : split_list(*s)) out.push_back(static_cast<int>(parse_integer(key, p)));
  } else {
    out = def;
  }
  std::vector<std::string> shown;
  for (int v : out) {
    check_range(key, v, lo, hi);
    shown.push_back(std::to_string(v));
  }
  record(key, boost::algorithm::join(shown, ","));
  return out;
}

std::vector<std::string> Config::words(const std::string& key, const std::vector<std::string>& def) const {
  const auto* s = lookup(key);
  auto out = s ? split_list(*s) : def;
  record(key, boost::algorithm::join(out, ","));
  return out;
}

std::optional<std::string> Config::file(const std::string& key) const {
  const auto* s = lookup(key);
  if (!s || s->empty()) return std::nullopt;
  fs::path p(*s);
  if (p.is_relative()) p = fs::path(base_dir_) / p;
  if (!fs::is_regular_file(p)) throw ConfigError(key + ": file not found: " + p.string());
  p = fs::canonical(p);
  record(key, p.string());
  return p.string();
}

void Config::reject_unknown() const {
  std::vector<std::string> unknown;
  for (const auto& [k, v] : raw_)
    if (!used_.count(k)) unknown.push_back(k);
  if (!unknown.empty()) throw ConfigError("unknown config keys: " + boost::algorithm::join(unknown, ", "));
}

std::string Config::canonical(const std::vector<std::string>& exclude) const {
  std::string out;
  for (const auto& [k, v] : used_) {
    if (std::find(exclude.begin(), exclude.end(), k) != exclude.end()) continue;
    out += k + " = " + v + "\n";
  }
  return out;
}

nlohmann::json Config::effective_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : used_) {
    const auto dot = k.find('.');
    if (dot == std::string::npos) j[k] = v;
    else j[k.substr(0, dot)][k.substr(dot + 1)] = v;
  }
  return j;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

}  // namespace biharm::cli
