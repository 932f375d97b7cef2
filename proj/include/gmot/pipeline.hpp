#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gmot/config.hpp"
#include "gmot/gnn.hpp"
#include "gmot/metrics.hpp"
#include "gmot/synth.hpp"

namespace gmot {

inline constexpr const char* kVersion = "0.1.0";

/// Everything a subcommand needs: the effective settings (what the manifest
/// records), their typed view, and where artifacts go.
struct RunContext {
  ConfigMap config;
  RunConfig rc;
  std::string output_dir;
  // "name = value" pairs recorded as manifest comments (input paths etc).
  std::vector<std::pair<std::string, std::string>> notes;
};

RunContext make_run_context(const ConfigMap& config,
                            const std::string& output_dir);

/// manifest.txt: version and invocation as comments, then every effective
/// setting, sorted. Reusable as a config file. No timestamps, so reruns are
/// byte-identical.
void write_manifest(const RunContext& ctx, const std::string& subcommand);

/// timing.json: wall-clock phase durations. The only artifact that varies
/// between identical runs, which is why it is a separate file.
void write_timing(const std::string& output_dir,
                  const std::vector<std::pair<std::string, double>>& seconds);

/// Runs fn(i) for i in [0, count) on up to jobs threads. fn must only touch
/// slot i of its outputs; exceptions rethrow on the caller thread.
void parallel_for(int count, int jobs, const std::function<void(int)>& fn);

// ---- subcommands ----

struct SynthSummary {
  int sequences = 0;
  long long gt_boxes = 0;
  long long detections = 0;
};

/// Generates the configured scenario and writes label/ det/ calib/ feat/
/// under the output dir.
SynthSummary run_synth(const RunContext& ctx);

struct TrainSummary {
  int epochs = 0;
  int problems = 0;  // supervised frame pairs per epoch
  double first_epoch_loss = 0.0;
  double final_epoch_loss = 0.0;
  std::string checkpoint_path;
};

/// Fits fusion + interaction weights on the frame pairs of the training
/// sequences; writes checkpoint.gnnw and train_log.txt.
TrainSummary run_train(const RunContext& ctx, const std::string& data_root,
                       const std::string& init_checkpoint = "");

struct TrackSummary {
  int sequences = 0;
  long long records = 0;
  long long frames = 0;
  std::string results_dir;
};

/// Runs the tracker over each sequence and writes results/ID.txt files.
/// checkpoint_path may be empty for the embedding and greedy matchers.
TrackSummary run_track(const RunContext& ctx, const std::string& data_root,
                       const std::string& checkpoint_path);

struct EvalSummary {
  MetricsReport report;
  std::string report_path;
};

/// Scores result files against ground truth; writes report.txt and
/// report.kv.
EvalSummary run_eval(const RunContext& ctx, const std::string& gt_root,
                     const std::string& result_root);

struct GradcheckSummary {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t parameters = 0;
  bool pass = false;
};

/// Checks the full model's backward pass against central differences on a
/// seeded 4-track / 3-detection problem; writes gradcheck.txt.
GradcheckSummary run_gradcheck(const RunContext& ctx, double tolerance = 1e-5);

struct BenchSummary {
  double iou3d_per_sec = 0.0;
  double assignments_per_sec = 0.0;
  double forwards_per_sec = 0.0;
};

/// Throughput of the three hot paths; writes bench.txt.
BenchSummary run_bench(const RunContext& ctx);

// ---- shared builders (also used by the test suites) ----

/// Supervised frame pairs for one sequence. The track side of pair t is
/// built from the detections of frame t-1 (previous same-identity detection
/// teacher-forced as history so motion features look like inference);
/// detections are frame t as-is. Pairs with an empty side are skipped.
std::vector<TrainProblem> build_train_problems(const SequenceData& seq,
                                               double iou_threshold,
                                               const std::string& class_filter);

/// Greedy best-overlap identity per detection against one GT frame
/// (the supervision matching); -1, -2, ... mark unmatched detections.
std::vector<int> frame_identities(const std::vector<Detection>& dets,
                                  const std::vector<LabelRecord>& gt,
                                  double iou_threshold);

/// Pairs result files with ground truth by sequence id. gt_root may be a
/// directory of ID.txt label files or a sequence root with a label/ subdir;
/// result_root likewise accepts a run output dir with a results/ subdir.
/// A missing result file counts as an empty hypothesis set.
std::vector<EvalSequence> load_eval_sequences(const std::string& gt_root,
                                              const std::string& result_root,
                                              const std::string& class_filter);

/// One in-memory evaluation input. Keeps hyp/gt records of the filtered
/// class; DontCare rows always survive on the GT side.
EvalSequence make_eval_sequence(const std::vector<std::vector<LabelRecord>>& gt,
                                const std::vector<LabelRecord>& hyp,
                                const std::string& class_filter);

}  // namespace gmot
