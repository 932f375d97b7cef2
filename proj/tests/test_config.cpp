#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "gmot/config.hpp"
#include "gmot/error.hpp"
#include "gmot/pipeline.hpp"
#include "gmot/synth.hpp"

using namespace gmot;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path fresh_dir(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

Detection det_at(double x, double z) {
  Detection d;
  d.box3d = Box3D{{x, 1.5, z}, 1.5, 1.6, 3.9, 0.0};
  d.score = 0.9;
  return d;
}

LabelRecord gt_at(int id, double x, double z) {
  LabelRecord r;
  r.track_id = id;
  r.class_label = "Car";
  r.h = 1.5;
  r.w = 1.6;
  r.l = 3.9;
  r.x = x;
  r.y = 1.5;
  r.z = z;
  return r;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("defaults come from the registry") {
  const ConfigMap cfg = ConfigMap::defaults();
  CHECK(cfg.get("seed") == "0");
  CHECK(cfg.get_int("train.epochs") == 10);
  CHECK(cfg.get("tracker.matcher") == "gnn");
  for (const ConfigKey& key : config_registry()) {
    CHECK(cfg.get(key.name) == key.default_value);
    CHECK(std::string(key.help).size() > 0);
  }
}

TEST_CASE("comments and blank lines are skipped") {
  std::istringstream in(
      "# a comment\n"
      "\n"
      "seed = 42\n"
      "   \n"
      "synth.objects=9   # trailing comment\n");
  ConfigMap cfg = ConfigMap::defaults();
  cfg.parse_stream(in, "inline");
  CHECK(cfg.get_u64("seed") == 42);
  CHECK(cfg.get_int("synth.objects") == 9);
}

TEST_CASE("unknown keys name the source and line") {
  std::istringstream in("seed = 1\nnonsense = 2\n");
  ConfigMap cfg = ConfigMap::defaults();
  try {
    cfg.parse_stream(in, "test.conf");
    FAIL("expected an unknown-key error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("unknown config key") != std::string::npos);
    CHECK(msg.find("nonsense") != std::string::npos);
    CHECK(msg.find("test.conf") != std::string::npos);
    CHECK(msg.find("2") != std::string::npos);
  }
}

TEST_CASE("malformed lines are rejected") {
  std::istringstream in("seed\n");
  ConfigMap cfg = ConfigMap::defaults();
  try {
    cfg.parse_stream(in, "bad.conf");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("expected key = value") != std::string::npos);
  }
}

TEST_CASE("command-line style overrides") {
  ConfigMap cfg = ConfigMap::defaults();
  cfg.set("synth.preset=crossing");
  CHECK(cfg.get("synth.preset") == "crossing");
  CHECK_THROWS_AS(cfg.set("no_equals_here"), Error);
  CHECK_THROWS_AS(cfg.set("imaginary.key=1"), Error);
}

TEST_CASE("typed getters validate their input") {
  ConfigMap cfg = ConfigMap::defaults();
  cfg.set("seed", "abc");
  CHECK_THROWS_AS(cfg.get_u64("seed"), Error);
  cfg.set("synth.objects", "1.5");
  CHECK_THROWS_AS(cfg.get_int("synth.objects"), Error);
  cfg.set("synth.sigma_pos", "wide");
  CHECK_THROWS_AS(cfg.get_double("synth.sigma_pos"), Error);
  cfg.set("feat.use_app2d", "maybe");
  CHECK_THROWS_AS(cfg.get_bool("feat.use_app2d"), Error);
  cfg.set("feat.use_app2d", "false");
  CHECK(cfg.get_bool("feat.use_app2d") == false);
}

TEST_CASE("lists split on commas") {
  ConfigMap cfg = ConfigMap::defaults();
  cfg.set("data.train_sequences", "0000,0002, 0005");
  CHECK(cfg.get_list("data.train_sequences") ==
        std::vector<std::string>{"0000", "0002", "0005"});
  cfg.set("data.train_sequences", "");
  CHECK(cfg.get_list("data.train_sequences").empty());
}

TEST_CASE("write and parse round-trip") {
  ConfigMap cfg = ConfigMap::defaults();
  cfg.set("seed", "123");
  cfg.set("gnn.layers", "3");
  std::ostringstream out;
  cfg.write(out);
  std::istringstream in(out.str());
  ConfigMap back = ConfigMap::defaults();
  back.parse_stream(in, "round-trip");
  for (const ConfigKey& key : config_registry())
    CHECK(back.get(key.name) == cfg.get(key.name));
}

TEST_CASE("missing config files fail loudly") {
  try {
    ConfigMap::from_file("/nonexistent/path.conf");
    FAIL("expected an io error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("cannot open config file") !=
          std::string::npos);
  }
}

TEST_CASE("the typed view mirrors the map") {
  ConfigMap cfg = ConfigMap::defaults();
  cfg.set("seed", "977");
  cfg.set("feat.node_dim", "48");
  cfg.set("tracker.min_hits", "2");
  cfg.set("metrics.iou_threshold", "0.5");
  const RunConfig rc = make_run_config(cfg);
  CHECK(rc.seed == 977);
  CHECK(rc.feat.node_dim == 48);
  CHECK(rc.gnn.node_dim == 48);  // the interaction width follows the fusion
  CHECK(rc.tracker.min_hits == 2);
  CHECK(rc.metrics.iou_threshold == 0.5);

  cfg.set("jobs", "0");
  CHECK_THROWS_AS(make_run_config(cfg), Error);
}

TEST_CASE("manifests replay as config files") {
  const auto dir = fresh_dir("gmot_manifest_test");
  ConfigMap cfg = ConfigMap::defaults();
  cfg.set("seed", "55");
  cfg.set("synth.preset", "clean");
  RunContext ctx = make_run_context(cfg, dir.string());
  ctx.notes.emplace_back("data", "/some/input");
  write_manifest(ctx, "synth");

  const std::string text = slurp(dir / "manifest.txt");
  CHECK(text.rfind("# graphmot 0.1.0 run manifest", 0) == 0);
  CHECK(text.find("# subcommand = synth") != std::string::npos);
  CHECK(text.find("# data = /some/input") != std::string::npos);

  const ConfigMap replay = ConfigMap::from_file((dir / "manifest.txt").string());
  for (const ConfigKey& key : config_registry())
    CHECK(replay.get(key.name) == cfg.get(key.name));
  std::filesystem::remove_all(dir);
}

TEST_CASE("timing files are json with a total") {
  const auto dir = fresh_dir("gmot_timing_test");
  write_timing(dir.string(), {{"load_seconds", 0.5}, {"total_seconds", 1.25}});
  const std::string text = slurp(dir / "timing.json");
  CHECK(text.find("\"load_seconds\"") != std::string::npos);
  CHECK(text.find("\"total_seconds\"") != std::string::npos);
  CHECK(text.find("1.25") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("parallel_for covers every slot and rethrows") {
  std::vector<int> slots(100, 0);
  parallel_for(100, 3, [&](int i) { slots[i] = i + 1; });
  for (int i = 0; i < 100; ++i) CHECK(slots[i] == i + 1);

  std::atomic<int> ran{0};
  try {
    parallel_for(10, 4, [&](int i) {
      ran.fetch_add(1);
      if (i == 7) throw Error(ErrorCode::Numeric, "boom in slot 7");
    });
    FAIL("expected the worker error to surface");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("boom in slot 7") != std::string::npos);
  }
  CHECK(ran.load() >= 1);
}

TEST_CASE("identity matching prefers the best overlap") {
  const std::vector<Detection> dets = {det_at(0, 10), det_at(8, 25),
                                       det_at(40, 70)};
  const std::vector<LabelRecord> gt = {gt_at(9, 0, 10), gt_at(7, 8, 25)};
  const std::vector<int> ids = frame_identities(dets, gt, 0.25);
  REQUIRE(ids.size() == 3);
  CHECK(ids[0] == 9);
  CHECK(ids[1] == 7);
  CHECK(ids[2] < 0);
}

TEST_CASE("training problems are teacher-forced frame pairs") {
  ScenarioConfig scfg;
  scfg.preset = "clean";
  scfg.objects = 3;
  scfg.frames = 6;
  const SynthScenario s = generate_scenario(scfg, 71);
  const SequenceData& seq = s.sequences[0].data;
  const std::vector<TrainProblem> problems =
      build_train_problems(seq, 0.25, "Car");
  REQUIRE(problems.size() == 5);

  for (std::size_t t = 0; t < problems.size(); ++t) {
    const AssociationProblem& p = problems[t].problem;
    REQUIRE(p.tracks.size() == seq.det_frames[t].size());
    REQUIRE(p.detections.size() == seq.det_frames[t + 1].size());
    // The track side is frame t verbatim.
    for (std::size_t i = 0; i < p.tracks.size(); ++i) {
      CHECK(p.tracks[i].last().box3d.center.x ==
            seq.det_frames[t][i].box3d.center.x);
      CHECK(p.tracks[i].last().box3d.center.z ==
            seq.det_frames[t][i].box3d.center.z);
    }
    // One history step from frame t-1 where an identity was visible there.
    const std::size_t want_hist = t == 0 ? 1 : 2;
    for (const Tracklet& track : p.tracks)
      CHECK(track.history.size() == want_hist);
    CHECK(problems[t].gt.matrix.rows == static_cast<int>(p.tracks.size()));
    CHECK(problems[t].gt.matrix.cols == static_cast<int>(p.detections.size()));
  }

  // Clean data supervises every pair on the diagonal identity.
  const Mat& m = problems[1].gt.matrix;
  double row_sum = 0.0;
  for (double v : m.v) row_sum += v;
  CHECK(row_sum == 3.0);
}

TEST_CASE("eval sequences keep dont-care rows on the gt side only") {
  std::vector<std::vector<LabelRecord>> gt(2);
  gt[0].push_back(gt_at(0, 0, 10));
  LabelRecord dc = gt_at(-1, 50, 60);
  dc.class_label = "DontCare";
  dc.dont_care = true;
  gt[0].push_back(dc);
  gt[1].push_back(gt_at(0, 0.5, 10));

  std::vector<LabelRecord> hyp;
  LabelRecord h = gt_at(7, 0, 10);
  h.frame = 0;
  h.score = 0.9;
  hyp.push_back(h);
  LabelRecord van = gt_at(8, 5, 20);
  van.frame = 1;
  van.class_label = "Van";
  hyp.push_back(van);

  const EvalSequence seq = make_eval_sequence(gt, hyp, "Car");
  REQUIRE(seq.gt.size() == 2);
  CHECK(seq.gt[0].size() == 2);  // real box plus the dont-care row
  REQUIRE(seq.hyp.size() == 2);
  CHECK(seq.hyp[0].size() == 1);
  CHECK(seq.hyp[1].empty());  // the van is filtered out

  LabelRecord bad = gt_at(9, 0, 10);
  bad.frame = -3;
  CHECK_THROWS_AS(make_eval_sequence(gt, {bad}, "Car"), Error);
}

TEST_CASE("eval loading pairs files by sequence id") {
  const auto root = fresh_dir("gmot_eval_pairs");
  std::filesystem::create_directories(root / "gt" / "label");
  std::filesystem::create_directories(root / "res" / "results");
  {
    std::ofstream gt(root / "gt" / "label" / "0000.txt");
    gt << "0 0 Car 0 0 0 0 0 10 10 1.5 1.6 3.9 0 1.5 10 0\n";
    std::ofstream gt2(root / "gt" / "label" / "0001.txt");
    gt2 << "0 0 Car 0 0 0 0 0 10 10 1.5 1.6 3.9 5 1.5 20 0\n";
    std::ofstream res(root / "res" / "results" / "0000.txt");
    res << "0 3 Car 0 0 0 0 0 10 10 1.5 1.6 3.9 0 1.5 10 0 0.9\n";
    // No result file for 0001: counts as empty hypotheses.
  }
  const std::vector<EvalSequence> seqs = load_eval_sequences(
      (root / "gt").string(), (root / "res").string(), "Car");
  REQUIRE(seqs.size() == 2);
  CHECK(seqs[0].hyp[0].size() == 1);
  bool any_hyp = false;
  for (const auto& frame : seqs[1].hyp) any_hyp = any_hyp || !frame.empty();
  CHECK(!any_hyp);

  CHECK_THROWS_AS(load_eval_sequences((root / "missing").string(),
                                      (root / "res").string(), "Car"),
                  Error);
  std::filesystem::remove_all(root);
}

}  // TEST_SUITE
