#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "gmot/error.hpp"
#include "gmot/featnet.hpp"
#include "gmot/rng.hpp"

using namespace gmot;

namespace {

Box2D box2(double l, double t, double r, double b) { return Box2D{l, t, r, b}; }

Box3D box3(double x, double y, double z, double h = 1.5, double w = 1.6,
           double le = 3.9, double yaw = 0.0) {
  return Box3D{{x, y, z}, h, w, le, yaw};
}

Detection make_det(double x, double z, int app_dim) {
  Detection d;
  d.box3d = box3(x, 1.5, z);
  d.box2d = box2(100, 100, 140, 130);
  d.score = 0.9;
  d.app2d.assign(app_dim, 0.25f);
  d.app3d.assign(app_dim, -0.5f);
  return d;
}

Tracklet make_track(int id, const Box3D& b0, const Box3D& b1) {
  Tracklet t;
  t.id = id;
  t.history.push_back({0, b0, box2(10, 10, 20, 20), 0.8});
  t.history.push_back({1, b1, box2(12, 10, 22, 20), 0.8});
  t.cached_app2d.assign(4, 0.1f);
  t.cached_app3d.assign(4, 0.2f);
  return t;
}

FeatConfig small_cfg() {
  FeatConfig cfg;
  cfg.app2d_dim = 4;
  cfg.app3d_dim = 4;
  cfg.branch_dim = 6;
  cfg.node_dim = 8;
  return cfg;
}

}  // namespace

TEST_SUITE("featnet") {

TEST_CASE("2d motion of an unchanged box is zero") {
  const Box2D b = box2(5, 6, 25, 16);
  const auto f = motion_feat_2d(b, b);
  for (double v : f) CHECK(v == 0.0);
}

TEST_CASE("2d motion normalizes the shift by the previous size") {
  // 4x4 box centered at (10, 10) moving to (12, 10).
  const auto f = motion_feat_2d(box2(8, 8, 12, 12), box2(10, 8, 14, 12));
  CHECK(f[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(f[1] == doctest::Approx(0.0));
  CHECK(f[2] == doctest::Approx(0.0));
  CHECK(f[3] == doctest::Approx(0.0));
}

TEST_CASE("2d motion encodes growth as a log ratio") {
  // Doubled sides around a fixed center.
  const auto f = motion_feat_2d(box2(9, 9, 11, 11), box2(8, 8, 12, 12));
  CHECK(f[0] == doctest::Approx(0.0));
  CHECK(f[1] == doctest::Approx(0.0));
  CHECK(f[2] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(f[3] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("3d motion of an unchanged box is zero") {
  const Box3D b = box3(2, 1.5, 10);
  const auto f = motion_feat_3d(b, b);
  for (double v : f) CHECK(v == 0.0);
}

TEST_CASE("3d motion reports the raw displacement and wrapped heading") {
  const Box3D prev = box3(2, 1.5, 10);
  Box3D cur = prev;
  cur.center.x += 1.0;
  auto f = motion_feat_3d(prev, cur);
  CHECK(f[0] == doctest::Approx(1.0).epsilon(1e-12));
  for (int i = 1; i < 7; ++i) CHECK(f[i] == doctest::Approx(0.0));

  cur = prev;
  cur.yaw = prev.yaw + 3.0 * M_PI / 2.0;
  f = motion_feat_3d(prev, cur);
  CHECK(f[3] == doctest::Approx(-M_PI / 2.0).epsilon(1e-12));
}

TEST_CASE("3d motion is translation invariant") {
  const Box3D prev = box3(2, 1.5, 10, 1.5, 1.6, 3.9, 0.3);
  const Box3D cur = box3(2.7, 1.4, 11, 1.4, 1.7, 4.0, 0.5);
  Box3D prev_t = prev;
  Box3D cur_t = cur;
  for (Box3D* b : {&prev_t, &cur_t}) {
    b->center.x += 13.0;
    b->center.y -= 2.0;
    b->center.z += 40.0;
  }
  const auto a = motion_feat_3d(prev, cur);
  const auto b = motion_feat_3d(prev_t, cur_t);
  for (int i = 0; i < 7; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("zeros provider hands out zero appearance of the configured width") {
  FeatConfig cfg = small_cfg();
  cfg.provider = "zeros";
  Detection d = make_det(0, 10, 4);
  d.app2d.clear();  // provider must not need them
  d.app3d.clear();
  const RawFeatures raw = detection_raw(d, 0, cfg);
  REQUIRE(raw.app2d.size() == 4);
  REQUIRE(raw.app3d.size() == 4);
  for (double v : raw.app2d) CHECK(v == 0.0);
  for (double v : raw.app3d) CHECK(v == 0.0);
  for (double v : raw.mot2d) CHECK(v == 0.0);
  for (double v : raw.mot3d) CHECK(v == 0.0);
}

TEST_CASE("stored provider copies the attached vectors") {
  const FeatConfig cfg = small_cfg();
  const Detection d = make_det(0, 10, 4);
  const RawFeatures raw = detection_raw(d, 0, cfg);
  REQUIRE(raw.app2d.size() == 4);
  CHECK(raw.app2d[0] == doctest::Approx(0.25));
  CHECK(raw.app3d[2] == doctest::Approx(-0.5));
}

TEST_CASE("stored provider rejects a detection without vectors") {
  const FeatConfig cfg = small_cfg();
  Detection d = make_det(0, 10, 4);
  d.frame = 3;
  d.app3d.clear();
  CHECK_THROWS_AS(detection_raw(d, 1, cfg), Error);
  try {
    detection_raw(d, 1, cfg);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("frame 3") != std::string::npos);
  }
}

TEST_CASE("constant velocity prediction extrapolates the last step") {
  const Tracklet t = make_track(0, box3(0, 1.5, 10), box3(1, 1.5, 10.5));
  const Box3D p = predict_box3d(t);
  CHECK(p.center.x == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(p.center.z == doctest::Approx(11.0).epsilon(1e-12));
  CHECK(p.h == doctest::Approx(1.5));
}

TEST_CASE("a single observation predicts itself") {
  Tracklet t;
  t.history.push_back({0, box3(3, 1.5, 9), box2(10, 10, 20, 20), 0.8});
  const Box3D p = predict_box3d(t);
  CHECK(p.center.x == 3.0);
  CHECK(p.center.z == 9.0);
}

TEST_CASE("a stationary track stays put") {
  const Box3D b = box3(4, 1.5, 12);
  const Tracklet t = make_track(0, b, b);
  const Box3D p = predict_box3d(t);
  CHECK(p.center.x == doctest::Approx(4.0));
  CHECK(p.center.z == doctest::Approx(12.0));
}

TEST_CASE("2d prediction projects through the calibration when present") {
  // f = 100, principal point (50, 50).
  Mat34 P;
  P.m = {100, 0, 50, 0, 0, 100, 50, 0, 0, 0, 1, 0};
  const Tracklet t = make_track(0, box3(0, 1.5, 10), box3(0, 1.5, 10));
  const Box3D pred = predict_box3d(t);
  const Box2D with_calib = predict_box2d(t, pred, &P);
  // Box spans x in [-1.95, 1.95] at z in [9.2, 10.8]; the widest projected
  // extent comes from the nearest face.
  CHECK(with_calib.left == doctest::Approx(50.0 - 195.0 / 9.2).epsilon(1e-9));
  CHECK(with_calib.right == doctest::Approx(50.0 + 195.0 / 9.2).epsilon(1e-9));

  const Box2D no_calib = predict_box2d(t, pred, nullptr);
  // Image-space velocity is (2, 0) per the two history boxes.
  CHECK(no_calib.left == doctest::Approx(14.0).epsilon(1e-12));
  CHECK(no_calib.right == doctest::Approx(24.0).epsilon(1e-12));
  CHECK(no_calib.top == doctest::Approx(10.0));
}

TEST_CASE("fusion with zeroed parameters yields zero rows") {
  const FeatConfig cfg = small_cfg();
  ParamStore store;
  Rng rng = Rng::fork(1, 1);
  init_fusion_params(store, cfg, rng);
  for (const std::string& name : store.names()) {
    Tensor& t = store.get(name);
    std::fill(t.values_mut().begin(), t.values_mut().end(), 0.0);
  }
  const std::vector<RawFeatures> raw = {detection_raw(make_det(0, 10, 4), 0, cfg),
                                        detection_raw(make_det(2, 12, 4), 1, cfg)};
  const Tensor out = fuse(raw, store, cfg);
  REQUIRE(out.rows() == 2);
  REQUIRE(out.cols() == cfg.node_dim);
  for (double v : out.values()) CHECK(v == 0.0);
}

TEST_CASE("a disabled branch cannot influence the output") {
  FeatConfig cfg = small_cfg();
  cfg.use_mot3d = false;
  ParamStore store;
  Rng rng = Rng::fork(2, 1);
  init_fusion_params(store, cfg, rng);

  RawFeatures a = detection_raw(make_det(0, 10, 4), 0, cfg);
  RawFeatures b = a;
  b.mot3d = {9.0, -3.0, 4.0, 1.0, 0.5, 0.5, 0.5};
  const Tensor ya = fuse({a}, store, cfg);
  const Tensor yb = fuse({b}, store, cfg);
  REQUIRE(ya.values().size() == yb.values().size());
  for (std::size_t i = 0; i < ya.values().size(); ++i)
    CHECK(ya.values()[i] == yb.values()[i]);
}

TEST_CASE("fusion output shape is rows by node_dim") {
  const FeatConfig cfg = small_cfg();
  ParamStore store;
  Rng rng = Rng::fork(3, 1);
  init_fusion_params(store, cfg, rng);
  std::vector<RawFeatures> raw;
  for (int i = 0; i < 5; ++i) raw.push_back(detection_raw(make_det(i, 10 + i, 4), i, cfg));
  const Tensor out = fuse(raw, store, cfg);
  CHECK(out.rows() == 5);
  CHECK(out.cols() == 8);
  bool any_nonzero = false;
  for (double v : out.values()) any_nonzero = any_nonzero || v != 0.0;
  CHECK(any_nonzero);
}

}  // TEST_SUITE
