#include "advlab/runconfig.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace advlab::cfg {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

RunConfig RunConfig::parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_text(ss.str(), path);
}

RunConfig RunConfig::parse_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::stringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (cfg.kv_.count(key))
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    cfg.kv_[key] = value;
  }
  return cfg;
}

std::string RunConfig::get(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError("missing required config key '" + key + "'");
  return it->second;
}

std::string RunConfig::get_or(const std::string& key, const std::string& def) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? def : it->second;
}

double RunConfig::get_double(const std::string& key) const {
  const std::string v = get(key);
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a number: '" + v + "'");
  }
}

double RunConfig::get_double_or(const std::string& key, double def) const {
  return has(key) ? get_double(key) : def;
}

long long RunConfig::get_int(const std::string& key) const {
  const std::string v = get(key);
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not an integer: '" + v + "'");
  }
}

long long RunConfig::get_int_or(const std::string& key, long long def) const {
  return has(key) ? get_int(key) : def;
}

std::uint64_t RunConfig::get_seed_or(const std::string& key, std::uint64_t def) const {
  if (!has(key)) return def;
  const long long v = get_int(key);
  if (v < 0) throw ConfigError("config key '" + key + "': seed must be non-negative");
  return static_cast<std::uint64_t>(v);
}

namespace {

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const std::string t = trim(cell);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

}  // namespace

std::vector<double> RunConfig::get_double_list_or(const std::string& key,
                                                  const std::vector<double>& def) const {
  if (!has(key)) return def;
  std::vector<double> out;
  for (const std::string& c : split_commas(get(key))) {
    try {
      out.push_back(std::stod(c));
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': not a number list");
    }
  }
  return out;
}

std::vector<std::size_t> RunConfig::get_size_list_or(
    const std::string& key, const std::vector<std::size_t>& def) const {
  if (!has(key)) return def;
  std::vector<std::size_t> out;
  for (const std::string& c : split_commas(get(key))) {
    try {
      const long long v = std::stoll(c);
      if (v < 0) throw std::invalid_argument(c);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': not a size list");
    }
  }
  return out;
}

void RunConfig::validate_keys(const std::vector<std::string>& allowed) const {
  std::vector<std::string> unknown;
  for (const auto& [k, v] : kv_)
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) unknown.push_back(k);
  if (!unknown.empty()) {
    std::string msg = "unknown config key(s):";
    for (const auto& k : unknown) msg += " '" + k + "'";
    throw ConfigError(msg);
  }
}

std::string RunConfig::canonical_text() const {
  std::string out;
  for (const auto& [k, v] : kv_) out += k + " = " + v + "\n";
  return out;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void write_manifest(const std::string& dir, const std::string& command,
                    const RunConfig& config) {
  // the output location is not part of the experiment identity
  RunConfig hashed;
  for (const auto& [k, v] : config.entries())
    if (k != "out") hashed.set(k, v);
  const std::string canon = hashed.canonical_text();
  const std::string path = dir + "/manifest.txt";
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ConfigError(path + ": cannot write manifest");
  std::fprintf(f, "advlab_version = %s\n", kVersion);
  std::fprintf(f, "command = %s\n", command.c_str());
  std::fprintf(f, "config_hash = %016llx\n",
               static_cast<unsigned long long>(fnv1a(canon)));
  std::fprintf(f, "# canonical config\n%s", canon.c_str());
  std::fclose(f);
}

}  // namespace advlab::cfg
