#pragma once

#include <string>
#include <vector>

#include "gmot/autograd.hpp"
#include "gmot/featnet.hpp"
#include "gmot/gnn.hpp"
#include "gmot/kitti_io.hpp"
#include "gmot/types.hpp"

namespace gmot {

struct TrackerConfig {
  int min_hits = 3;       // consecutive hits to confirm
  int max_age = 2;        // missed frames tolerated before deletion
  double match_threshold = 0.5;
  // gnn: learned affinities. embedding: similarity of the stored appearance
  // vectors, exp(-d^2). greedy_iou: descending-overlap greedy on the last
  // observed boxes, the evaluation baseline.
  std::string matcher = "gnn";
  double greedy_min_iou = 0.01;
  std::string class_filter = "Car";  // empty accepts everything
};

/// Online tracker for one sequence. Feed frames in order; outputs carry the
/// matched detection geometry of confirmed tracks, never predicted boxes.
class Tracker {
 public:
  /// params may be null for the embedding and greedy_iou matchers. calib
  /// improves the 2D motion features and may be null.
  Tracker(const TrackerConfig& cfg, ParamStore* params,
          const FeatConfig& feat_cfg, const GnnConfig& gnn_cfg,
          const Mat34* calib);

  std::vector<LabelRecord> step(int frame,
                                const std::vector<Detection>& detections);

  const std::vector<Tracklet>& tracks() const { return tracks_; }

 private:
  AffinityMatrix affinities(const AssociationProblem& problem);
  Assignment greedy_iou_assignment(const AssociationProblem& problem) const;

  TrackerConfig cfg_;
  ParamStore* params_;
  FeatConfig feat_cfg_;
  GnnConfig gnn_cfg_;
  const Mat34* calib_;
  std::vector<Tracklet> tracks_;
  int next_id_ = 0;
  int last_frame_ = -1;
};

/// Folds step over every frame; returns all emitted records.
std::vector<LabelRecord> run_sequence(const SequenceData& seq,
                                      const TrackerConfig& cfg,
                                      ParamStore* params,
                                      const FeatConfig& feat_cfg,
                                      const GnnConfig& gnn_cfg);

}  // namespace gmot
