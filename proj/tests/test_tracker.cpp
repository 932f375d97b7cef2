#include <string>
#include <vector>

#include "doctest.h"
#include "gmot/error.hpp"
#include "gmot/metrics.hpp"
#include "gmot/synth.hpp"
#include "gmot/tracker.hpp"

using namespace gmot;

namespace {

Detection det_at(double x, double z, const char* cls = "Car") {
  Detection d;
  d.box3d = Box3D{{x, 1.5, z}, 1.5, 1.6, 3.9, 0.0};
  d.box2d = Box2D{100, 100, 140, 130};
  d.score = 0.9;
  d.class_label = cls;
  return d;
}

TrackerConfig greedy_cfg(int min_hits) {
  TrackerConfig cfg;
  cfg.matcher = "greedy_iou";
  cfg.min_hits = min_hits;
  return cfg;
}

Tracker make_greedy(const TrackerConfig& cfg) {
  return Tracker(cfg, nullptr, FeatConfig{}, GnnConfig{}, nullptr);
}

}  // namespace

TEST_SUITE("tracker") {

TEST_CASE("tentative tracks stay silent until confirmed") {
  Tracker tk = make_greedy(greedy_cfg(3));
  const std::vector<Detection> dets = {det_at(-5, 10), det_at(0, 15),
                                       det_at(5, 20)};
  CHECK(tk.step(0, dets).empty());
  REQUIRE(tk.tracks().size() == 3);
  for (const Tracklet& t : tk.tracks()) CHECK(t.state == TrackState::Tentative);

  CHECK(tk.step(1, dets).empty());
  const std::vector<LabelRecord> out = tk.step(2, dets);
  CHECK(out.size() == 3);
  for (const Tracklet& t : tk.tracks()) CHECK(t.state == TrackState::Confirmed);
}

TEST_CASE("min_hits of one confirms immediately") {
  Tracker tk = make_greedy(greedy_cfg(1));
  const std::vector<LabelRecord> out =
      tk.step(0, {det_at(-5, 10), det_at(0, 15), det_at(5, 20)});
  CHECK(out.size() == 3);
}

TEST_CASE("a silent gap ages tracks out") {
  TrackerConfig cfg = greedy_cfg(1);
  cfg.max_age = 2;
  Tracker tk = make_greedy(cfg);
  tk.step(0, {det_at(0, 10)});
  REQUIRE(tk.tracks().size() == 1);

  tk.step(1, {});  // miss 1
  tk.step(2, {});  // miss 2, still within max_age
  REQUIRE(tk.tracks().size() == 1);
  CHECK(tk.tracks()[0].misses == 2);
  tk.step(3, {});  // miss 3 exceeds max_age
  CHECK(tk.tracks().empty());
}

TEST_CASE("a match within the age window revives the track") {
  TrackerConfig cfg = greedy_cfg(1);
  cfg.max_age = 2;
  Tracker tk = make_greedy(cfg);
  const std::vector<LabelRecord> first = tk.step(0, {det_at(0, 10)});
  REQUIRE(first.size() == 1);
  const int id = first[0].track_id;

  tk.step(1, {});
  const std::vector<LabelRecord> back = tk.step(2, {det_at(0.2, 10.1)});
  REQUIRE(back.size() == 1);
  CHECK(back[0].track_id == id);
  CHECK(tk.tracks()[0].misses == 0);
}

TEST_CASE("emitted geometry is the matched detection verbatim") {
  Tracker tk = make_greedy(greedy_cfg(1));
  const Detection d = det_at(-3.25, 17.5);
  const std::vector<LabelRecord> out = tk.step(0, {d});
  REQUIRE(out.size() == 1);
  CHECK(out[0].x == d.box3d.center.x);
  CHECK(out[0].y == d.box3d.center.y);
  CHECK(out[0].z == d.box3d.center.z);
  CHECK(out[0].h == d.box3d.h);
  CHECK(out[0].w == d.box3d.w);
  CHECK(out[0].l == d.box3d.l);
  CHECK(out[0].rotation_y == d.box3d.yaw);
  CHECK(out[0].box2d.left == d.box2d.left);
  CHECK(out[0].score.has_value());
  CHECK(*out[0].score == d.score);
  CHECK(out[0].frame == 0);
}

TEST_CASE("frames must arrive in increasing order") {
  Tracker tk = make_greedy(greedy_cfg(1));
  tk.step(2, {det_at(0, 10)});
  CHECK_THROWS_AS(tk.step(2, {det_at(0, 10)}), Error);
  try {
    tk.step(1, {det_at(0, 10)});
    FAIL("expected a frame-order error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("increasing") != std::string::npos);
  }
}

TEST_CASE("the class filter ignores other labels") {
  Tracker tk = make_greedy(greedy_cfg(1));
  const std::vector<LabelRecord> out =
      tk.step(0, {det_at(0, 10, "Van"), det_at(5, 20, "Pedestrian")});
  CHECK(out.empty());
  CHECK(tk.tracks().empty());

  TrackerConfig open = greedy_cfg(1);
  open.class_filter = "";
  Tracker tk2 = make_greedy(open);
  CHECK(tk2.step(0, {det_at(0, 10, "Van")}).size() == 1);
}

TEST_CASE("the embedding matcher tracks a clean scenario perfectly") {
  ScenarioConfig scfg;
  scfg.preset = "clean";
  scfg.objects = 2;
  scfg.frames = 12;
  scfg.sigma_pos = 0.0;
  scfg.sigma_dim = 0.0;
  scfg.sigma_yaw = 0.0;
  scfg.sigma_app = 0.0;
  const SynthScenario s = generate_scenario(scfg, 55);
  const SequenceData& seq = s.sequences[0].data;

  TrackerConfig cfg;
  cfg.matcher = "embedding";
  cfg.min_hits = 1;
  const std::vector<LabelRecord> records =
      run_sequence(seq, cfg, nullptr, FeatConfig{}, GnnConfig{});

  EvalSequence ev;
  ev.gt = seq.gt_frames;
  ev.hyp = group_labels_by_frame(records, seq.num_frames);
  const ClearCounts counts = clear_metrics({ev});
  CHECK(counts.ids == 0);
  CHECK(counts.fn == 0);
  CHECK(counts.fp == 0);
  CHECK(counts.mota() == 1.0);
}

TEST_CASE("stepping a prefix matches the full run") {
  ScenarioConfig scfg;
  scfg.preset = "random";
  scfg.objects = 4;
  scfg.frames = 10;
  scfg.dropout = 0.2;
  const SynthScenario s = generate_scenario(scfg, 56);
  const SequenceData& seq = s.sequences[0].data;

  Tracker full = make_greedy(greedy_cfg(2));
  std::vector<LabelRecord> full_out;
  for (int f = 0; f < seq.num_frames; ++f)
    for (const LabelRecord& r : full.step(f, seq.det_frames[f]))
      full_out.push_back(r);

  Tracker prefix = make_greedy(greedy_cfg(2));
  std::vector<LabelRecord> prefix_out;
  for (int f = 0; f < 6; ++f)
    for (const LabelRecord& r : prefix.step(f, seq.det_frames[f]))
      prefix_out.push_back(r);

  std::size_t full_prefix_len = 0;
  while (full_prefix_len < full_out.size() &&
         full_out[full_prefix_len].frame < 6)
    ++full_prefix_len;
  REQUIRE(prefix_out.size() == full_prefix_len);
  for (std::size_t i = 0; i < prefix_out.size(); ++i) {
    CHECK(prefix_out[i].track_id == full_out[i].track_id);
    CHECK(prefix_out[i].x == full_out[i].x);
    CHECK(prefix_out[i].z == full_out[i].z);
  }
}

TEST_CASE("run_sequence is deterministic") {
  ScenarioConfig scfg;
  scfg.preset = "random";
  scfg.objects = 5;
  scfg.frames = 15;
  scfg.dropout = 0.1;
  scfg.fp_rate = 0.2;
  const SynthScenario s = generate_scenario(scfg, 57);

  TrackerConfig cfg;
  cfg.matcher = "embedding";
  cfg.min_hits = 2;
  const std::vector<LabelRecord> a =
      run_sequence(s.sequences[0].data, cfg, nullptr, FeatConfig{}, GnnConfig{});
  const std::vector<LabelRecord> b =
      run_sequence(s.sequences[0].data, cfg, nullptr, FeatConfig{}, GnnConfig{});
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].frame == b[i].frame);
    CHECK(a[i].track_id == b[i].track_id);
    CHECK(a[i].x == b[i].x);
    CHECK(a[i].score == b[i].score);
  }
}

TEST_CASE("the gnn matcher requires parameters") {
  TrackerConfig cfg;
  cfg.matcher = "gnn";
  CHECK_THROWS_AS(Tracker(cfg, nullptr, FeatConfig{}, GnnConfig{}, nullptr),
                  Error);
}

TEST_CASE("an unknown matcher is rejected") {
  TrackerConfig cfg;
  cfg.matcher = "psychic";
  CHECK_THROWS_AS(make_greedy(cfg), Error);
}

}  // TEST_SUITE
