#pragma once

// Flat key=value run configuration. Values come from four layers; a higher
// layer wins regardless of the order in which layers are applied:
//   defaults < config file < environment (CFRANK_<KEY>) < command-line flags.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "cfrank/dna.hpp"
#include "cfrank/graph_mf.hpp"
#include "cfrank/primal_cr.hpp"
#include "cfrank/sql_rank.hpp"
#include "cfrank/synthetic.hpp"

namespace cfrank {

enum class ConfigLayer { kDefault = 0, kFile = 1, kEnv = 2, kFlag = 3 };

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};

/// Every recognised key with its default, in a stable order.
const std::vector<ConfigKey>& config_keys();

class RunConfig {
 public:
  RunConfig();

  /// Sets a known key at the given layer. Throws ConfigError for unknown keys.
  void set(const std::string& key, const std::string& value, ConfigLayer layer = ConfigLayer::kFlag);

  /// Reads "key = value" lines ('#' comments allowed) at the file layer.
  void load(std::istream& in);
  void load_file(const std::string& path);
  /// Applies CFRANK_<UPPERCASE KEY> variables found through `lookup`.
  void apply_env(const std::function<const char*(const char*)>& lookup);
  void apply_env();

  /// Writes every key as "key=value" in config_keys() order.
  void save(std::ostream& out) const;
  void save_file(const std::string& path) const;

  const std::string& get(const std::string& key) const;
  ConfigLayer layer(const std::string& key) const;
  bool has(const std::string& key) const { return !get(key).empty(); }
  double get_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<std::size_t> get_size_list(const std::string& key) const;

  /// Throws ConfigError when `key` is empty.
  const std::string& require(const std::string& key) const;

  MfHyper mf_hyper() const;
  CrHyper cr_hyper() const;
  ListHyper list_hyper() const;
  /// Uses bits/hashes when bits > 0, else sizes the filter from
  /// capacity and epsilon.
  DnaConfig dna_config() const;
  SyntheticSpec synthetic_spec() const;
  FeedbackMode feedback_mode() const;

  friend bool operator==(const RunConfig& a, const RunConfig& b) { return a.values_ == b.values_; }

 private:
  struct Entry {
    std::string value;
    ConfigLayer layer = ConfigLayer::kDefault;
  };
  std::map<std::string, Entry> entries_;
  std::map<std::string, std::string> values_;
};

}  // namespace cfrank
