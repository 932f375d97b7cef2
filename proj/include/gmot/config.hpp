#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "gmot/autograd.hpp"
#include "gmot/featnet.hpp"
#include "gmot/gnn.hpp"
#include "gmot/metrics.hpp"
#include "gmot/synth.hpp"
#include "gmot/tracker.hpp"

namespace gmot {

struct ConfigKey {
  const char* name;
  const char* default_value;
  const char* help;
};

/// Every key the engine understands, with defaults and one-line help.
const std::vector<ConfigKey>& config_registry();

/// Flat "key = value" settings. '#' starts a comment, blank lines are
/// skipped, dotted prefixes group related keys. Only registered keys are
/// accepted, anywhere.
class ConfigMap {
 public:
  /// Registry defaults only.
  static ConfigMap defaults();
  /// Defaults overlaid with the file's assignments.
  static ConfigMap from_file(const std::string& path);

  void parse_stream(std::istream& in, const std::string& source);
  /// Applies one "key=value" override (command-line syntax).
  void set(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  const std::string& get(const std::string& key) const;
  int get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;  // comma split

  /// Sorted effective settings; feeding this back as a config file
  /// reproduces the run.
  void write(std::ostream& out) const;

 private:
  std::map<std::string, std::string> values_;
};

/// Typed view over a ConfigMap, shared by every subcommand.
struct RunConfig {
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string class_filter = "Car";
  ScenarioConfig synth;
  FeatConfig feat;
  GnnConfig gnn;
  AdamConfig adam;
  int train_epochs = 10;
  TrackerConfig tracker;
  ClearConfig metrics;
  int recall_points = 40;
  std::vector<std::string> train_sequences;
  std::vector<std::string> val_sequences;
};

RunConfig make_run_config(const ConfigMap& map);

}  // namespace gmot
