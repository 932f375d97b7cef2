#include "gmot/config.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

#include "gmot/error.hpp"

namespace gmot {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

const std::vector<ConfigKey>& config_registry() {
  static const std::vector<ConfigKey> keys = {
      {"seed", "0", "master RNG seed for the whole run"},
      {"jobs", "1", "worker threads for metric sweeps (results are identical)"},
      {"class_filter", "Car", "object class to track and evaluate; empty keeps all"},

      {"feat.app2d_dim", "32", "image appearance embedding width"},
      {"feat.app3d_dim", "32", "point cloud appearance embedding width"},
      {"feat.branch_dim", "32", "per-branch width before fusion"},
      {"feat.node_dim", "64", "fused node feature width (also the graph width)"},
      {"feat.use_app2d", "true", "enable the image appearance branch"},
      {"feat.use_app3d", "true", "enable the point cloud appearance branch"},
      {"feat.use_mot2d", "true", "enable the image motion branch"},
      {"feat.use_mot3d", "true", "enable the 3d motion branch"},
      {"feat.provider", "stored", "appearance source: stored, file or zeros"},

      {"gnn.layers", "2", "graph interaction layers (0 disables message passing)"},
      {"gnn.hidden_dim", "64", "edge scorer hidden width"},
      {"gnn.margin", "0.2", "triplet margin"},
      {"gnn.lambda", "1.0", "triplet loss weight added to the affinity loss"},
      {"gnn.aggregation", "diff", "neighbor aggregation: diff or mean"},
      {"gnn.edge_input", "absdiff", "edge scorer input: absdiff or concat"},
      {"gnn.gate_radius", "0", "drop edges beyond this center distance in meters; 0 keeps all"},

      {"train.lr", "0.001", "Adam learning rate"},
      {"train.epochs", "10", "passes over the training problems"},
      {"train.beta1", "0.9", "Adam first moment decay"},
      {"train.beta2", "0.999", "Adam second moment decay"},
      {"train.eps", "1e-8", "Adam denominator floor"},

      {"tracker.min_hits", "3", "matches needed before a track is reported"},
      {"tracker.max_age", "2", "consecutive misses tolerated before deletion"},
      {"tracker.match_threshold", "0.5", "affinity below this leaves a pair unmatched"},
      {"tracker.matcher", "gnn", "association scores: gnn, embedding or greedy_iou"},
      {"tracker.greedy_min_iou", "0.01", "minimum overlap accepted by the greedy matcher"},

      {"metrics.iou_threshold", "0.25", "overlap needed to count a hypothesis as a match"},
      {"metrics.recall_points", "40", "recall samples in the integrated metrics"},
      {"metrics.criterion", "iou", "match criterion: iou or distance"},
      {"metrics.distance_threshold", "2.0", "meters, used when criterion = distance"},

      {"synth.preset", "random", "scenario shape: random, clean or crossing"},
      {"synth.objects", "6", "simultaneous objects per sequence"},
      {"synth.frames", "40", "frames per sequence"},
      {"synth.sequences", "1", "sequences to generate"},
      {"synth.world_extent", "40", "half width of the simulated ground patch in meters"},
      {"synth.sigma_pos", "0.05", "detection center noise in meters"},
      {"synth.sigma_dim", "0.02", "detection size noise in meters"},
      {"synth.sigma_yaw", "0.01", "detection heading noise in radians"},
      {"synth.dropout", "0", "probability a true object is not detected"},
      {"synth.fp_rate", "0", "expected clutter detections per frame"},
      {"synth.emb_dim", "32", "synthetic appearance embedding width"},
      {"synth.sigma_app", "0.05", "appearance noise before renormalization"},

      {"data.train_sequences", "", "comma separated sequence ids used by train"},
      {"data.val_sequences", "", "comma separated sequence ids used by eval after train"},
  };
  return keys;
}

ConfigMap ConfigMap::defaults() {
  ConfigMap map;
  for (const ConfigKey& key : config_registry()) map.values_[key.name] = key.default_value;
  return map;
}

ConfigMap ConfigMap::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config file: " + path);
  ConfigMap map = defaults();
  map.parse_stream(in, path);
  return map;
}

void ConfigMap::parse_stream(std::istream& in, const std::string& source) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string text = trim(line);
    if (text.empty()) continue;
    std::size_t eq = text.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::Parse,
                  source + ", line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(text.substr(0, eq));
    std::string value = trim(text.substr(eq + 1));
    if (key.empty()) {
      throw Error(ErrorCode::Parse,
                  source + ", line " + std::to_string(line_no) + ": empty key");
    }
    try {
      set(key, value);
    } catch (const Error& e) {
      throw Error(ErrorCode::Parse,
                  source + ", line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void ConfigMap::set(const std::string& assignment) {
  std::size_t eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "expected key=value, got: " + assignment);
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void ConfigMap::set(const std::string& key, const std::string& value) {
  for (const ConfigKey& known : config_registry()) {
    if (key == known.name) {
      values_[key] = value;
      return;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown config key: " + key);
}

const std::string& ConfigMap::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorCode::InvalidArgument, "unknown config key: " + key);
  return it->second;
}

int ConfigMap::get_int(const std::string& key) const {
  const std::string& text = get(key);
  int out = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::Parse, key + ": not an integer: " + text);
  }
  return out;
}

double ConfigMap::get_double(const std::string& key) const {
  const std::string& text = get(key);
  try {
    std::size_t used = 0;
    double out = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return out;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Parse, key + ": not a number: " + text);
  }
}

bool ConfigMap::get_bool(const std::string& key) const {
  const std::string& text = get(key);
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw Error(ErrorCode::Parse, key + ": expected true or false: " + text);
}

std::uint64_t ConfigMap::get_u64(const std::string& key) const {
  const std::string& text = get(key);
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::Parse, key + ": not an unsigned integer: " + text);
  }
  return out;
}

std::vector<std::string> ConfigMap::get_list(const std::string& key) const {
  const std::string& text = get(key);
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void ConfigMap::write(std::ostream& out) const {
  for (const auto& [key, value] : values_) out << key << " = " << value << "\n";
}

RunConfig make_run_config(const ConfigMap& map) {
  RunConfig rc;
  rc.seed = map.get_u64("seed");
  rc.jobs = map.get_int("jobs");
  if (rc.jobs < 1) throw Error(ErrorCode::InvalidArgument, "jobs must be at least 1");
  rc.class_filter = map.get("class_filter");

  rc.feat.app2d_dim = map.get_int("feat.app2d_dim");
  rc.feat.app3d_dim = map.get_int("feat.app3d_dim");
  rc.feat.branch_dim = map.get_int("feat.branch_dim");
  rc.feat.node_dim = map.get_int("feat.node_dim");
  rc.feat.use_app2d = map.get_bool("feat.use_app2d");
  rc.feat.use_app3d = map.get_bool("feat.use_app3d");
  rc.feat.use_mot2d = map.get_bool("feat.use_mot2d");
  rc.feat.use_mot3d = map.get_bool("feat.use_mot3d");
  rc.feat.provider = map.get("feat.provider");

  rc.gnn.layers = map.get_int("gnn.layers");
  rc.gnn.node_dim = rc.feat.node_dim;
  rc.gnn.hidden_dim = map.get_int("gnn.hidden_dim");
  rc.gnn.margin = map.get_double("gnn.margin");
  rc.gnn.lambda = map.get_double("gnn.lambda");
  rc.gnn.aggregation = map.get("gnn.aggregation");
  rc.gnn.edge_input = map.get("gnn.edge_input");
  rc.gnn.gate_radius = map.get_double("gnn.gate_radius");

  rc.adam.lr = map.get_double("train.lr");
  rc.adam.beta1 = map.get_double("train.beta1");
  rc.adam.beta2 = map.get_double("train.beta2");
  rc.adam.eps = map.get_double("train.eps");
  rc.train_epochs = map.get_int("train.epochs");

  rc.tracker.min_hits = map.get_int("tracker.min_hits");
  rc.tracker.max_age = map.get_int("tracker.max_age");
  rc.tracker.match_threshold = map.get_double("tracker.match_threshold");
  rc.tracker.matcher = map.get("tracker.matcher");
  rc.tracker.greedy_min_iou = map.get_double("tracker.greedy_min_iou");
  rc.tracker.class_filter = rc.class_filter;

  rc.metrics.iou_threshold = map.get_double("metrics.iou_threshold");
  rc.metrics.criterion = map.get("metrics.criterion");
  rc.metrics.distance_threshold = map.get_double("metrics.distance_threshold");
  rc.recall_points = map.get_int("metrics.recall_points");

  rc.synth.preset = map.get("synth.preset");
  rc.synth.objects = map.get_int("synth.objects");
  rc.synth.frames = map.get_int("synth.frames");
  rc.synth.sequences = map.get_int("synth.sequences");
  rc.synth.world_extent = map.get_double("synth.world_extent");
  rc.synth.sigma_pos = map.get_double("synth.sigma_pos");
  rc.synth.sigma_dim = map.get_double("synth.sigma_dim");
  rc.synth.sigma_yaw = map.get_double("synth.sigma_yaw");
  rc.synth.dropout = map.get_double("synth.dropout");
  rc.synth.fp_rate = map.get_double("synth.fp_rate");
  rc.synth.emb_dim = map.get_int("synth.emb_dim");
  rc.synth.sigma_app = map.get_double("synth.sigma_app");

  rc.train_sequences = map.get_list("data.train_sequences");
  rc.val_sequences = map.get_list("data.val_sequences");
  return rc;
}

}  // namespace gmot
