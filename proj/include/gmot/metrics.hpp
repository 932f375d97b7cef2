#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gmot/kitti_io.hpp"

namespace gmot {

struct ClearConfig {
  double iou_threshold = 0.25;
  // iou: match on 3D IoU >= threshold. distance: match on center distance
  // <= distance_threshold, overlap reported as 1 - d / threshold.
  std::string criterion = "iou";
  double distance_threshold = 2.0;
};

/// One sequence's evaluation input, both sides grouped per frame.
/// DontCare ground-truth rows shield overlapping hypotheses from FP
/// counting but are never matchable.
struct EvalSequence {
  std::vector<std::vector<LabelRecord>> gt;
  std::vector<std::vector<LabelRecord>> hyp;
};

struct ClearCounts {
  long long fp = 0, fn = 0, ids = 0, frag = 0;
  long long gt = 0, matches = 0;
  double overlap_sum = 0.0;

  double mota() const {
    return gt > 0 ? 1.0 - static_cast<double>(fp + fn + ids) / gt : 0.0;
  }
  double motp() const {
    return matches > 0 ? overlap_sum / matches : 0.0;
  }
};

/// CLEAR protocol per sequence, counts summed across sequences.
/// Correspondences persist while they keep meeting the criterion; the rest
/// rematch by optimal overlap each frame. Identity switches compare against
/// a trajectory's last known hypothesis, including across gaps.
ClearCounts clear_metrics(const std::vector<EvalSequence>& seqs,
                          const ClearConfig& cfg = {});

/// Highest confidence cutoff whose surviving hypotheses reach the target
/// recall; nullopt when unreachable. target <= 0 returns a cutoff above
/// every confidence.
std::optional<double> threshold_for_recall(const std::vector<EvalSequence>& seqs,
                                           double target,
                                           const ClearConfig& cfg = {});

/// One term of the scaled accuracy average:
/// 1 - (fp + fn + ids - (1 - r) * gt) / (r * gt), clamped into [0, 1].
double smota_term(long long gt, long long fp, long long fn, long long ids,
                  double r);

struct RecallPoint {
  double recall = 0.0;       // target r = k / L
  bool reachable = false;
  double threshold = 0.0;    // confidence cutoff used when reachable
  ClearCounts counts;
  double smota = 0.0;
  double amota_term = 0.0;
  double motp = 0.0;
};

struct AmotaResult {
  double samota = 0.0;
  double amota = 0.0;
  double amotp = 0.0;
  std::vector<RecallPoint> points;
};

/// Recall sweep over r = k / L for k = 1..L. Each reachable point filters
/// hypotheses at its cutoff and runs a fresh CLEAR pass; unreachable points
/// contribute zero. jobs > 1 evaluates candidate cutoffs concurrently with
/// identical results.
AmotaResult amota_suite(const std::vector<EvalSequence>& seqs,
                        int recall_points = 40, const ClearConfig& cfg = {},
                        int jobs = 1);

/// Headline CLEAR numbers on the unfiltered hypotheses plus the recall
/// sweep.
struct MetricsReport {
  double samota = 0.0, amota = 0.0, amotp = 0.0;
  double mota = 0.0, motp = 0.0;
  long long ids = 0, frag = 0, fp = 0, fn = 0, gt = 0;
  std::vector<RecallPoint> points;
};

MetricsReport evaluate(const std::vector<EvalSequence>& seqs,
                       int recall_points = 40, const ClearConfig& cfg = {},
                       int jobs = 1);

/// Aligned human-readable table; ratios as percentages with 2 decimals.
void render_report(const MetricsReport& report, std::ostream& out);

/// Machine-readable key=value lines, raw ratios.
void render_report_kv(const MetricsReport& report, std::ostream& out);

}  // namespace gmot
