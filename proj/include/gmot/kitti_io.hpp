#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gmot/error.hpp"
#include "gmot/types.hpp"

namespace gmot {

/// One line of a KITTI tracking label or result file. Column order:
/// frame track_id type truncated occluded alpha bbox(l t r b)
/// dims(h w l) location(x y z) rotation_y [score]
struct LabelRecord {
  int frame = 0;
  int track_id = -1;
  std::string class_label;
  double truncated = 0.0;
  int occluded = 0;
  double alpha = 0.0;
  Box2D box2d;
  double h = 0.0, w = 0.0, l = 0.0;
  double x = 0.0, y = 0.0, z = 0.0;
  double rotation_y = 0.0;
  std::optional<double> score;
  bool dont_care = false;

  Box3D box3d() const { return Box3D{{x, y, z}, h, w, l, rotation_y}; }
};

/// Per-sequence bundle: contiguous per-frame buckets from frame 0.
struct SequenceData {
  std::string id;
  std::vector<std::vector<Detection>> det_frames;
  std::vector<std::vector<LabelRecord>> gt_frames;
  Mat34 P2;
  int num_frames = 0;
};

std::vector<LabelRecord> parse_labels(std::istream& in);

struct DetectionParseOptions {
  bool sort_by_score = false;        // descending within each frame
  const Mat34* calib = nullptr;      // recompute box2d from the 3D box
  int min_frames = 0;                // pad trailing empty buckets up to this
};

struct DetectionParseResult {
  std::vector<std::vector<Detection>> frames;
  int clamped_scores = 0;  // scores outside [0,1] clamped on ingest
};

/// Detection files use the label layout without track_id and with a
/// mandatory trailing score (17 columns).
DetectionParseResult parse_detections(std::istream& in,
                                      const DetectionParseOptions& opts = {});

/// Reads the "P2:" row of a KITTI calibration file.
Mat34 parse_calib(std::istream& in);

/// Writes records in KITTI label column order, score appended when present,
/// sorted by (frame, track_id). Floats use shortest round-trip formatting.
void write_results(const std::vector<LabelRecord>& records, std::ostream& out);

/// Writes detections in file order: label columns without track_id plus a
/// trailing score. Alpha is recomputed from heading and bearing.
void write_detections(const std::vector<std::vector<Detection>>& frames,
                      std::ostream& out);

/// Shortest decimal representation that parses back to the same double.
std::string format_float(double v);

std::vector<std::vector<LabelRecord>> group_labels_by_frame(
    const std::vector<LabelRecord>& records, int min_frames = 0);

}  // namespace gmot
