#pragma once

#include <array>
#include <string>
#include <vector>

#include "gmot/autograd.hpp"
#include "gmot/geometry.hpp"
#include "gmot/types.hpp"

namespace gmot {

/// Branch dims and masks for the four-branch feature extractor. A disabled
/// branch contributes a zero block of branch_dim so checkpoints keep their
/// shapes across ablations.
struct FeatConfig {
  int app2d_dim = 32;
  int app3d_dim = 32;
  int branch_dim = 32;
  int node_dim = 64;
  bool use_app2d = true;
  bool use_app3d = true;
  bool use_mot2d = true;
  bool use_mot3d = true;
  // zeros: appearance off. stored: use the vectors already attached to
  // detections (generator output or feat/ sidecars); missing vectors are
  // an error naming frame and detection index.
  std::string provider = "stored";
};

/// Per-object raw branch inputs before fusion.
struct RawFeatures {
  std::vector<double> app2d;
  std::vector<double> app3d;
  std::array<double, 4> mot2d{};
  std::array<double, 7> mot3d{};
};

/// (dcx / w_prev, dcy / h_prev, ln(w / w_prev), ln(h / h_prev)).
std::array<double, 4> motion_feat_2d(const Box2D& prev, const Box2D& cur);

/// (dx, dy, dz, wrapped dyaw, ln(h / h_prev), ln(w / w_prev), ln(l / l_prev)).
std::array<double, 7> motion_feat_3d(const Box3D& prev, const Box3D& cur);

/// Raw features for a fresh detection: appearance from the provider,
/// motion identically zero (no history, prev = cur).
RawFeatures detection_raw(const Detection& d, int det_index,
                          const FeatConfig& cfg);

/// Raw features for a tracklet at matching time: appearance cached from the
/// last matched detection, motion from (last observed box, predicted box).
RawFeatures track_raw(const Tracklet& t, const Box3D& pred3d,
                      const Box2D& pred2d, const FeatConfig& cfg);

/// Constant-velocity step from the last two observations; a single
/// observation predicts itself.
Box3D predict_box3d(const Tracklet& t);

/// Projection of the predicted 3D box when calib is given, otherwise the
/// last 2D box shifted by the image-space center velocity.
Box2D predict_box2d(const Tracklet& t, const Box3D& pred3d, const Mat34* calib);

/// Registers the four branch maps and the fusion head (names under "fuse.").
void init_fusion_params(ParamStore& store, const FeatConfig& cfg, Rng& rng);

/// Per branch: linear + rectified-linear to branch_dim; concatenate the four
/// blocks; linear + rectified-linear head to node_dim. Returns one row per
/// input object.
Tensor fuse(const std::vector<RawFeatures>& raw, ParamStore& params,
            const FeatConfig& cfg);

}  // namespace gmot
