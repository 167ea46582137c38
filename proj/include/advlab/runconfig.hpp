#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace advlab::cfg {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat key=value run configuration ('#' comments, dotted keys as
// sections). Unknown keys are a hard error at validation time so that
// misspellings never silently fall back to defaults.
class RunConfig {
 public:
  static RunConfig parse_file(const std::string& path);
  static RunConfig parse_text(const std::string& text, const std::string& origin = "<text>");

  bool has(const std::string& key) const { return kv_.count(key) != 0; }
  std::string get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& def) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double def) const;
  long long get_int(const std::string& key) const;
  long long get_int_or(const std::string& key, long long def) const;
  std::uint64_t get_seed_or(const std::string& key, std::uint64_t def) const;
  std::vector<double> get_double_list_or(const std::string& key,
                                         const std::vector<double>& def) const;
  std::vector<std::size_t> get_size_list_or(const std::string& key,
                                            const std::vector<std::size_t>& def) const;

  void set(const std::string& key, const std::string& value) { kv_[key] = value; }

  // Throws ConfigError naming every key not in `allowed`.
  void validate_keys(const std::vector<std::string>& allowed) const;

  // Sorted key=value lines; the manifest hashes this.
  std::string canonical_text() const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

std::uint64_t fnv1a(const std::string& text);

// Writes <dir>/manifest.txt: tool version, command, config hash and the
// canonical config. Identical configs yield byte-identical manifests.
void write_manifest(const std::string& dir, const std::string& command,
                    const RunConfig& config);

constexpr const char* kVersion = "0.1.0";

}  // namespace advlab::cfg
