#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "gmot/error.hpp"
#include "gmot/metrics.hpp"

using namespace gmot;

namespace {

LabelRecord make_rec(int frame, int id, double x, double z, double score = 0.9) {
  LabelRecord r;
  r.frame = frame;
  r.track_id = id;
  r.class_label = "Car";
  r.box2d = Box2D{0, 0, 10, 10};
  r.h = 1.5;
  r.w = 1.6;
  r.l = 3.9;
  r.x = x;
  r.y = 1.5;
  r.z = z;
  r.score = score;
  return r;
}

EvalSequence perfect_two_objects(int frames) {
  EvalSequence seq;
  for (int f = 0; f < frames; ++f) {
    seq.gt.push_back({make_rec(f, 0, -5 + 0.5 * f, 10),
                      make_rec(f, 1, 5 - 0.5 * f, 20)});
    seq.hyp.push_back({make_rec(f, 10, -5 + 0.5 * f, 10),
                       make_rec(f, 11, 5 - 0.5 * f, 20)});
  }
  return seq;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("a perfect result scores perfectly") {
  EvalSequence seq;
  for (int f = 0; f < 3; ++f) {
    seq.gt.push_back({make_rec(f, 0, 0.5 * f, 10)});
    seq.hyp.push_back({make_rec(f, 7, 0.5 * f, 10)});
  }
  const ClearCounts c = clear_metrics({seq});
  CHECK(c.gt == 3);
  CHECK(c.fp == 0);
  CHECK(c.fn == 0);
  CHECK(c.ids == 0);
  CHECK(c.frag == 0);
  CHECK(c.mota() == 1.0);
  CHECK(c.motp() == 1.0);
}

TEST_CASE("swapping ids on the last frame costs two switches") {
  EvalSequence seq = perfect_two_objects(4);
  std::swap(seq.hyp[3][0].track_id, seq.hyp[3][1].track_id);
  const ClearCounts c = clear_metrics({seq});
  CHECK(c.fp == 0);
  CHECK(c.fn == 0);
  CHECK(c.ids == 2);
  CHECK(c.frag == 0);
  CHECK(c.mota() == 0.75);
}

TEST_CASE("a missed middle frame is a miss and a fragmentation") {
  EvalSequence seq;
  for (int f = 0; f < 3; ++f) seq.gt.push_back({make_rec(f, 0, 0, 10)});
  seq.hyp.push_back({make_rec(0, 7, 0, 10)});
  seq.hyp.push_back({});
  seq.hyp.push_back({make_rec(2, 7, 0, 10)});
  const ClearCounts c = clear_metrics({seq});
  CHECK(c.fn == 1);
  CHECK(c.fp == 0);
  CHECK(c.ids == 0);
  CHECK(c.frag == 1);
  CHECK(c.mota() == 1.0 - 1.0 / 3.0);
}

TEST_CASE("an id change across a gap is a switch") {
  EvalSequence seq;
  for (int f = 0; f < 5; ++f) seq.gt.push_back({make_rec(f, 0, 0, 10)});
  seq.hyp.push_back({make_rec(0, 7, 0, 10)});
  seq.hyp.push_back({make_rec(1, 7, 0, 10)});
  seq.hyp.push_back({});
  seq.hyp.push_back({});
  seq.hyp.push_back({make_rec(4, 8, 0, 10)});
  const ClearCounts c = clear_metrics({seq});
  CHECK(c.fn == 2);
  CHECK(c.ids == 1);
  CHECK(c.frag == 1);
}

TEST_CASE("existing correspondences persist over better newcomers") {
  EvalSequence seq;
  seq.gt.push_back({make_rec(0, 0, 0, 10)});
  seq.gt.push_back({make_rec(1, 0, 0, 10)});
  seq.hyp.push_back({make_rec(0, 7, 0, 10)});
  // Frame 1: the original hypothesis drifts but still overlaps; a new one
  // sits dead center. The established pair must win.
  seq.hyp.push_back({make_rec(1, 7, 1.0, 10), make_rec(1, 8, 0, 10)});
  const ClearCounts c = clear_metrics({seq});
  CHECK(c.ids == 0);
  CHECK(c.fp == 1);
  CHECK(c.fn == 0);
}

TEST_CASE("duplicate ids within a frame are rejected") {
  EvalSequence seq;
  seq.gt.push_back({make_rec(0, 0, 0, 10)});
  seq.hyp.push_back({make_rec(0, 7, 0, 10), make_rec(0, 7, 5, 20)});
  CHECK_THROWS_AS(clear_metrics({seq}), Error);
  try {
    clear_metrics({seq});
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("duplicate track id") != std::string::npos);
  }
}

TEST_CASE("the scaled accuracy term and its clamps") {
  CHECK(smota_term(100, 10, 50, 2, 0.5) == doctest::Approx(0.76).epsilon(1e-12));
  CHECK(smota_term(100, 1000, 0, 0, 0.5) == 0.0);   // floor
  CHECK(smota_term(100, 0, 10, 0, 0.5) == 1.0);     // ceiling
  CHECK(smota_term(100, 0, 0, 0, 1.0) == 1.0);
}

TEST_CASE("the recall sweep picks the highest workable cutoff") {
  EvalSequence seq;
  const double conf[4] = {0.9, 0.8, 0.7, 0.6};
  for (int f = 0; f < 4; ++f) {
    seq.gt.push_back({make_rec(f, 0, 0, 10)});
    seq.hyp.push_back({make_rec(f, 7, 0, 10, conf[f])});
  }
  const auto th = threshold_for_recall({seq}, 0.5);
  REQUIRE(th.has_value());
  CHECK(*th == doctest::Approx(0.8).epsilon(1e-12));

  const auto above_all = threshold_for_recall({seq}, 0.0);
  REQUIRE(above_all.has_value());
  CHECK(*above_all > 0.9);

  EvalSequence junk;
  junk.gt.push_back({make_rec(0, 0, 0, 10)});
  junk.hyp.push_back({make_rec(0, 7, 30, 60, 0.9)});
  CHECK(!threshold_for_recall({junk}, 0.5).has_value());
}

TEST_CASE("a perfect run with graded confidences sweeps cleanly") {
  EvalSequence seq;
  for (int f = 0; f < 40; ++f) {
    seq.gt.push_back({make_rec(f, 0, 0.2 * f, 10)});
    seq.hyp.push_back({make_rec(f, 7, 0.2 * f, 10, 1.0 - f / 100.0)});
  }
  const AmotaResult r = amota_suite({seq}, 40);
  CHECK(r.samota == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.amota == doctest::Approx(41.0 / 80.0).epsilon(1e-12));
  CHECK(r.amotp == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(r.points.size() == 40);
  for (const RecallPoint& p : r.points) CHECK(p.reachable);
}

TEST_CASE("parallel sweeps match the serial ones") {
  EvalSequence seq;
  for (int f = 0; f < 25; ++f) {
    seq.gt.push_back({make_rec(f, 0, 0.2 * f, 10), make_rec(f, 1, -8, 20)});
    seq.hyp.push_back({make_rec(f, 7, 0.2 * f, 10, 1.0 - f / 50.0)});
    if (f % 3 != 0)
      seq.hyp[f].push_back(make_rec(f, 8, -8, 20, 0.5 + f / 100.0));
    if (f % 5 == 0)
      seq.hyp[f].push_back(make_rec(f, 9, 14, 30, 0.4));
  }
  const AmotaResult serial = amota_suite({seq}, 40, {}, 1);
  const AmotaResult parallel = amota_suite({seq}, 40, {}, 4);
  CHECK(serial.samota == parallel.samota);
  CHECK(serial.amota == parallel.amota);
  CHECK(serial.amotp == parallel.amotp);
  REQUIRE(serial.points.size() == parallel.points.size());
  for (std::size_t i = 0; i < serial.points.size(); ++i) {
    CHECK(serial.points[i].reachable == parallel.points[i].reachable);
    CHECK(serial.points[i].smota == parallel.points[i].smota);
    CHECK(serial.points[i].threshold == parallel.points[i].threshold);
  }
}

TEST_CASE("dont-care regions shield false positives") {
  ClearConfig cfg;
  EvalSequence seq;
  LabelRecord dc = make_rec(0, -1, 50, 60);
  dc.class_label = "DontCare";
  dc.dont_care = true;
  dc.box2d = Box2D{0, 0, 1000, 1000};
  LabelRecord real_gt = make_rec(0, 0, 0, 10);
  real_gt.box2d = Box2D{2000, 2000, 2040, 2040};
  seq.gt.push_back({real_gt, dc});

  LabelRecord matched = make_rec(0, 7, 0, 10);
  matched.box2d = Box2D{2000, 2000, 2040, 2040};
  LabelRecord stray = make_rec(0, 8, 50, 60);
  stray.box2d = Box2D{100, 100, 140, 140};  // inside the DontCare region
  seq.hyp.push_back({matched, stray});

  const ClearCounts shielded = clear_metrics({seq}, cfg);
  CHECK(shielded.fp == 0);
  CHECK(shielded.fn == 0);
  CHECK(shielded.gt == 1);  // DontCare rows are not targets

  seq.hyp[0][1].box2d = Box2D{3000, 3000, 3040, 3040};  // outside
  const ClearCounts exposed = clear_metrics({seq}, cfg);
  CHECK(exposed.fp == 1);
}

TEST_CASE("the distance criterion grades by closeness") {
  ClearConfig cfg;
  cfg.criterion = "distance";
  cfg.distance_threshold = 2.0;
  EvalSequence seq;
  seq.gt.push_back({make_rec(0, 0, 0, 10)});
  seq.hyp.push_back({make_rec(0, 7, 1.0, 10)});
  const ClearCounts c = clear_metrics({seq}, cfg);
  CHECK(c.fn == 0);
  CHECK(c.fp == 0);
  CHECK(c.motp() == doctest::Approx(0.5).epsilon(1e-12));

  seq.hyp[0][0].x = 2.5;  // beyond the threshold
  const ClearCounts miss = clear_metrics({seq}, cfg);
  CHECK(miss.fn == 1);
  CHECK(miss.fp == 1);
}

TEST_CASE("the average never beats the scaled average") {
  EvalSequence seq;
  for (int f = 0; f < 10; ++f) {
    seq.gt.push_back({make_rec(f, 0, 0.3 * f, 10), make_rec(f, 1, -6, 18)});
    seq.hyp.push_back({make_rec(f, 7, 0.3 * f, 10, 0.95 - f / 20.0)});
    if (f >= 5) seq.hyp[f].push_back(make_rec(f, 8, -6, 18, 0.3));
  }
  const AmotaResult r = amota_suite({seq}, 40);
  CHECK(r.amota <= r.samota + 1e-12);
}

TEST_CASE("the full report is internally consistent") {
  EvalSequence seq = perfect_two_objects(4);
  std::swap(seq.hyp[3][0].track_id, seq.hyp[3][1].track_id);
  const MetricsReport rep = evaluate({seq}, 40);
  CHECK(rep.gt == 8);
  CHECK(rep.ids == 2);
  CHECK(rep.mota ==
        1.0 - static_cast<double>(rep.fp + rep.fn + rep.ids) / rep.gt);
  CHECK(rep.points.size() == 40);
}

TEST_CASE("removing a true positive never helps") {
  const EvalSequence full = perfect_two_objects(3);
  const double before = clear_metrics({full}).mota();
  EvalSequence pruned = full;
  pruned.hyp[1].erase(pruned.hyp[1].begin());
  const double after = clear_metrics({pruned}).mota();
  CHECK(after < before);
}

TEST_CASE("within-frame ordering does not matter") {
  EvalSequence seq = perfect_two_objects(4);
  std::swap(seq.hyp[3][0].track_id, seq.hyp[3][1].track_id);
  EvalSequence shuffled = seq;
  for (auto& frame : shuffled.hyp) std::reverse(frame.begin(), frame.end());
  for (auto& frame : shuffled.gt) std::reverse(frame.begin(), frame.end());
  const ClearCounts a = clear_metrics({seq});
  const ClearCounts b = clear_metrics({shuffled});
  CHECK(a.fp == b.fp);
  CHECK(a.fn == b.fn);
  CHECK(a.ids == b.ids);
  CHECK(a.frag == b.frag);
  CHECK(a.overlap_sum == doctest::Approx(b.overlap_sum).epsilon(1e-12));
}

TEST_CASE("rendering hits the expected formats") {
  EvalSequence seq;
  for (int f = 0; f < 3; ++f) {
    seq.gt.push_back({make_rec(f, 0, 0.5 * f, 10)});
    seq.hyp.push_back({make_rec(f, 7, 0.5 * f, 10, 1.0 - f / 10.0)});
  }
  const MetricsReport rep = evaluate({seq}, 40);
  std::ostringstream table;
  render_report(rep, table);
  CHECK(table.str().find("MOTA") != std::string::npos);
  CHECK(table.str().find("100.00") != std::string::npos);
  std::ostringstream kv;
  render_report_kv(rep, kv);
  CHECK(kv.str().find("\nmota=1\n") != std::string::npos);
  CHECK(kv.str().find("ids=0") != std::string::npos);
}

TEST_CASE("recall point count must be positive") {
  const EvalSequence seq = perfect_two_objects(2);
  CHECK_THROWS_AS(amota_suite({seq}, 0), Error);
}

}  // TEST_SUITE
