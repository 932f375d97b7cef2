#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gmot/geometry.hpp"

namespace gmot {

/// One per-frame observation from a detector. Appearance vectors are
/// optional (empty when not provided) and sized by the configured raw dims.
struct Detection {
  int frame = 0;
  Box3D box3d;
  Box2D box2d;
  double score = 0.0;
  std::string class_label = "Car";
  std::vector<float> app2d;
  std::vector<float> app3d;
};

struct TrackObservation {
  int frame = 0;
  Box3D box3d;
  Box2D box2d;
  double score = 0.0;
};

enum class TrackState { Tentative, Confirmed };

/// Cross-frame identity with observation history and lifecycle counters.
/// History frames are strictly increasing; ids are unique per sequence.
struct Tracklet {
  int id = 0;
  std::vector<TrackObservation> history;
  TrackState state = TrackState::Tentative;
  int hits = 0;
  int misses = 0;
  // Appearance cached at the last matched detection; served to the feature
  // branches until the next match.
  std::vector<float> cached_app2d;
  std::vector<float> cached_app3d;
  // Fused node feature from the last matched frame.
  std::vector<double> cached_feature;

  const TrackObservation& last() const { return history.back(); }
};

/// One frame-pair matching instance: M tracks at frame_t against N
/// detections at frame_t + 1.
struct AssociationProblem {
  std::vector<Tracklet> tracks;
  std::vector<Detection> detections;
  int frame_t = 0;

  int num_tracks() const { return static_cast<int>(tracks.size()); }
  int num_detections() const { return static_cast<int>(detections.size()); }
};

/// Partial matching: every track and detection index appears exactly once
/// across the three lists.
struct Assignment {
  std::vector<std::pair<int, int>> matches;  // (track_index, detection_index)
  std::vector<int> unmatched_tracks;
  std::vector<int> unmatched_detections;
};

/// Dense row-major matrix used for costs and affinities.
struct Mat {
  int rows = 0, cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(int r, int c, double fill = 0.0)
      : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, fill) {}
  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const {
    return v[static_cast<std::size_t>(r) * cols + c];
  }
};

using CostMatrix = Mat;
using AffinityMatrix = Mat;

}  // namespace gmot
