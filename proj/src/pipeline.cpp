#include "gmot/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "gmot/assoc.hpp"
#include "gmot/error.hpp"
#include "gmot/tracker.hpp"

namespace fs = std::filesystem;

namespace gmot {
namespace {

// RNG substreams per subcommand so adding one never shifts another.
constexpr std::uint64_t kStreamParams = 11;
constexpr std::uint64_t kStreamGradcheck = 12;
constexpr std::uint64_t kStreamBench = 13;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

std::vector<LabelRecord> read_label_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  try {
    return parse_labels(in);
  } catch (const ParseError& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

bool class_kept(const std::string& label, const std::string& filter) {
  return filter.empty() || label == filter;
}

std::vector<Detection> filter_detections(const std::vector<Detection>& in,
                                         const std::string& filter) {
  std::vector<Detection> out;
  for (const Detection& d : in)
    if (class_kept(d.class_label, filter)) out.push_back(d);
  return out;
}

// Keeps DontCare rows: they are matched by nothing but still shield
// hypotheses from FP counting.
std::vector<LabelRecord> filter_gt(const std::vector<LabelRecord>& in,
                                   const std::string& filter) {
  std::vector<LabelRecord> out;
  for (const LabelRecord& r : in)
    if (r.dont_care || class_kept(r.class_label, filter)) out.push_back(r);
  return out;
}

std::vector<std::string> resolve_sequence_ids(const RunContext& ctx,
                                              const std::vector<std::string>& wanted,
                                              const std::string& data_root) {
  (void)ctx;
  if (!wanted.empty()) return wanted;
  std::vector<std::string> ids = list_sequence_ids(data_root);
  if (ids.empty())
    throw Error(ErrorCode::Io, "no sequences under " + data_root);
  return ids;
}

std::vector<std::string> list_txt_stems(const fs::path& dir) {
  std::vector<std::string> out;
  if (!fs::is_directory(dir))
    throw Error(ErrorCode::Io, "not a directory: " + dir.string());
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".txt")
      out.push_back(entry.path().stem().string());
  std::sort(out.begin(), out.end());
  return out;
}

Box3D random_vehicle_box(Rng& rng) {
  Box3D b;
  b.center = {rng.uniform(-15.0, 15.0), rng.uniform(0.8, 2.2),
              rng.uniform(8.0, 40.0)};
  b.h = rng.uniform(1.3, 1.8);
  b.w = rng.uniform(1.5, 1.9);
  b.l = rng.uniform(3.2, 4.6);
  b.yaw = rng.uniform(-3.1, 3.1);
  return b;
}

Box2D random_image_box(Rng& rng) {
  Box2D b;
  b.left = rng.uniform(200.0, 900.0);
  b.top = rng.uniform(120.0, 260.0);
  b.right = b.left + rng.uniform(60.0, 180.0);
  b.bottom = b.top + rng.uniform(40.0, 140.0);
  return b;
}

std::vector<float> random_unit(Rng& rng, int dim) {
  std::vector<float> v(static_cast<std::size_t>(dim));
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (float& x : v) {
      x = static_cast<float>(rng.normal());
      norm2 += static_cast<double>(x) * x;
    }
  } while (norm2 < 1e-12);
  const float inv = static_cast<float>(1.0 / std::sqrt(norm2));
  for (float& x : v) x *= inv;
  return v;
}

}  // namespace

RunContext make_run_context(const ConfigMap& config,
                            const std::string& output_dir) {
  RunContext ctx;
  ctx.config = config;
  ctx.rc = make_run_config(config);
  ctx.output_dir = output_dir;
  return ctx;
}

void write_manifest(const RunContext& ctx, const std::string& subcommand) {
  fs::create_directories(ctx.output_dir);
  std::ofstream out = open_out(fs::path(ctx.output_dir) / "manifest.txt");
  out << "# graphmot " << kVersion << " run manifest\n";
  out << "# subcommand = " << subcommand << "\n";
  for (const auto& [key, value] : ctx.notes)
    out << "# " << key << " = " << value << "\n";
  out << "# rerun with --config <this file> and the paths above\n";
  ctx.config.write(out);
}

void write_timing(const std::string& output_dir,
                  const std::vector<std::pair<std::string, double>>& seconds) {
  std::ofstream out = open_out(fs::path(output_dir) / "timing.json");
  out << "{\n";
  for (std::size_t i = 0; i < seconds.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", seconds[i].second);
    out << "  \"" << seconds[i].first << "\": " << buf
        << (i + 1 < seconds.size() ? ",\n" : "\n");
  }
  out << "}\n";
}

void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  const int workers = std::min(std::max(jobs, 1), count);
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

SynthSummary run_synth(const RunContext& ctx) {
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(ctx.output_dir);

  const SynthScenario scenario = generate_scenario(ctx.rc.synth, ctx.rc.seed);
  write_scenario(scenario, ctx.output_dir);

  SynthSummary summary;
  summary.sequences = static_cast<int>(scenario.sequences.size());
  for (const SynthSequence& seq : scenario.sequences) {
    for (const auto& frame : seq.data.gt_frames)
      summary.gt_boxes += static_cast<long long>(frame.size());
    for (const auto& frame : seq.data.det_frames)
      summary.detections += static_cast<long long>(frame.size());
  }

  write_manifest(ctx, "synth");
  write_timing(ctx.output_dir, {{"total_seconds", seconds_since(start)}});
  return summary;
}

std::vector<int> frame_identities(const std::vector<Detection>& dets,
                                  const std::vector<LabelRecord>& gt,
                                  double iou_threshold) {
  struct Cand {
    double iou;
    int det, gt_index;
  };
  std::vector<Cand> cands;
  for (int d = 0; d < static_cast<int>(dets.size()); ++d)
    for (int g = 0; g < static_cast<int>(gt.size()); ++g) {
      if (gt[static_cast<std::size_t>(g)].dont_care) continue;
      const double iou = iou3d(dets[static_cast<std::size_t>(d)].box3d,
                               gt[static_cast<std::size_t>(g)].box3d());
      if (iou >= iou_threshold) cands.push_back({iou, d, g});
    }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.det != b.det) return a.det < b.det;
    return a.gt_index < b.gt_index;
  });
  std::vector<int> ids(dets.size(), 0);
  std::vector<bool> det_used(dets.size(), false), gt_used(gt.size(), false);
  std::vector<bool> resolved(dets.size(), false);
  for (const Cand& c : cands) {
    if (det_used[static_cast<std::size_t>(c.det)] ||
        gt_used[static_cast<std::size_t>(c.gt_index)])
      continue;
    det_used[static_cast<std::size_t>(c.det)] = true;
    gt_used[static_cast<std::size_t>(c.gt_index)] = true;
    ids[static_cast<std::size_t>(c.det)] =
        gt[static_cast<std::size_t>(c.gt_index)].track_id;
    resolved[static_cast<std::size_t>(c.det)] = true;
  }
  int next_negative = -1;
  for (std::size_t d = 0; d < dets.size(); ++d)
    if (!resolved[d]) ids[d] = next_negative--;
  return ids;
}

std::vector<TrainProblem> build_train_problems(const SequenceData& seq,
                                               double iou_threshold,
                                               const std::string& class_filter) {
  const std::size_t frames =
      std::min(seq.det_frames.size(), seq.gt_frames.size());
  std::vector<std::vector<Detection>> dets(frames);
  std::vector<std::vector<LabelRecord>> gt(frames);
  std::vector<std::vector<int>> ids(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    dets[f] = filter_detections(seq.det_frames[f], class_filter);
    gt[f] = filter_gt(seq.gt_frames[f], class_filter);
    ids[f] = frame_identities(dets[f], gt[f], iou_threshold);
  }

  std::vector<TrainProblem> problems;
  for (std::size_t f = 1; f < frames; ++f) {
    if (dets[f - 1].empty() || dets[f].empty()) continue;
    TrainProblem tp;
    tp.problem.frame_t = static_cast<int>(f) - 1;
    tp.problem.detections = dets[f];
    for (std::size_t k = 0; k < dets[f - 1].size(); ++k) {
      const Detection& d = dets[f - 1][k];
      Tracklet t;
      t.id = static_cast<int>(k);
      t.state = TrackState::Confirmed;
      // Teacher forcing: splice in the previous same-identity detection so
      // the motion branch sees the two-frame history it gets at inference.
      const int identity = ids[f - 1][k];
      if (identity >= 0 && f >= 2) {
        for (std::size_t p = 0; p < dets[f - 2].size(); ++p) {
          if (ids[f - 2][p] != identity) continue;
          const Detection& prev = dets[f - 2][p];
          t.history.push_back(
              {prev.frame, prev.box3d, prev.box2d, prev.score});
          break;
        }
      }
      t.history.push_back({d.frame, d.box3d, d.box2d, d.score});
      t.hits = static_cast<int>(t.history.size());
      t.cached_app2d = d.app2d;
      t.cached_app3d = d.app3d;
      tp.problem.tracks.push_back(std::move(t));
    }
    tp.gt = make_gt_assignment(tp.problem, gt[f - 1], gt[f], iou_threshold);
    tp.calib = seq.P2;
    tp.has_calib = true;
    problems.push_back(std::move(tp));
  }
  return problems;
}

TrainSummary run_train(const RunContext& ctx, const std::string& data_root,
                       const std::string& init_checkpoint) {
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(ctx.output_dir);
  const RunConfig& rc = ctx.rc;
  if (rc.train_epochs < 1)
    throw Error(ErrorCode::InvalidArgument, "train.epochs must be at least 1");

  const std::vector<std::string> ids =
      resolve_sequence_ids(ctx, rc.train_sequences, data_root);
  const std::vector<SequenceData> seqs = load_sequence_dir(data_root, ids);
  double load_s = seconds_since(start);

  std::vector<TrainProblem> problems;
  for (const SequenceData& seq : seqs) {
    std::vector<TrainProblem> sp =
        build_train_problems(seq, 0.25, rc.class_filter);
    problems.insert(problems.end(), std::make_move_iterator(sp.begin()),
                    std::make_move_iterator(sp.end()));
  }
  if (problems.empty())
    throw Error(ErrorCode::InvalidArgument,
                "no supervised frame pairs under " + data_root +
                    " (labels missing?)");

  ParamStore params;
  if (!init_checkpoint.empty()) {
    params.load(init_checkpoint);
  } else {
    Rng rng = Rng::fork(rc.seed, kStreamParams);
    init_fusion_params(params, rc.feat, rng);
    init_gnn_params(params, rc.gnn, rng);
  }

  const auto train_start = std::chrono::steady_clock::now();
  std::ofstream log = open_out(fs::path(ctx.output_dir) / "train_log.txt");
  TrainSummary summary;
  for (int epoch = 1; epoch <= rc.train_epochs; ++epoch) {
    const EpochStats stats =
        train_epoch(problems, params, rc.feat, rc.gnn, rc.adam);
    if (epoch == 1) summary.first_epoch_loss = stats.mean_loss;
    summary.final_epoch_loss = stats.mean_loss;
    summary.problems = stats.problems;
    log << "epoch " << epoch << " loss " << format_float(stats.mean_loss)
        << " problems " << stats.problems << "\n";
  }
  summary.epochs = rc.train_epochs;
  const double train_s = seconds_since(train_start);

  const fs::path ckpt = fs::path(ctx.output_dir) / "checkpoint.gnnw";
  params.save(ckpt.string());
  summary.checkpoint_path = ckpt.string();

  RunContext noted = ctx;
  noted.notes.emplace_back("data", data_root);
  if (!init_checkpoint.empty())
    noted.notes.emplace_back("init_checkpoint", init_checkpoint);
  write_manifest(noted, "train");
  write_timing(ctx.output_dir, {{"load_seconds", load_s},
                                {"train_seconds", train_s},
                                {"total_seconds", seconds_since(start)}});
  return summary;
}

TrackSummary run_track(const RunContext& ctx, const std::string& data_root,
                       const std::string& checkpoint_path) {
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(ctx.output_dir);
  const RunConfig& rc = ctx.rc;

  ParamStore params;
  ParamStore* params_ptr = nullptr;
  if (rc.tracker.matcher == "gnn") {
    if (checkpoint_path.empty())
      throw Error(ErrorCode::InvalidArgument,
                  "the gnn matcher needs --checkpoint");
    params.load(checkpoint_path);
    params_ptr = &params;
  }

  const std::vector<std::string> ids =
      resolve_sequence_ids(ctx, rc.val_sequences, data_root);
  const std::vector<SequenceData> seqs = load_sequence_dir(data_root, ids);
  const double load_s = seconds_since(start);

  const auto track_start = std::chrono::steady_clock::now();
  std::vector<std::vector<LabelRecord>> results(seqs.size());
  parallel_for(static_cast<int>(seqs.size()), rc.jobs, [&](int i) {
    results[static_cast<std::size_t>(i)] =
        run_sequence(seqs[static_cast<std::size_t>(i)], rc.tracker, params_ptr,
                     rc.feat, rc.gnn);
  });
  const double track_s = seconds_since(track_start);

  const fs::path results_dir = fs::path(ctx.output_dir) / "results";
  fs::create_directories(results_dir);
  TrackSummary summary;
  summary.sequences = static_cast<int>(seqs.size());
  summary.results_dir = results_dir.string();
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    std::ofstream out = open_out(results_dir / (seqs[i].id + ".txt"));
    write_results(results[i], out);
    summary.records += static_cast<long long>(results[i].size());
    summary.frames += static_cast<long long>(seqs[i].det_frames.size());
  }

  RunContext noted = ctx;
  noted.notes.emplace_back("data", data_root);
  if (!checkpoint_path.empty())
    noted.notes.emplace_back("checkpoint", checkpoint_path);
  write_manifest(noted, "track");
  const double fps = track_s > 0.0 ? summary.frames / track_s : 0.0;
  write_timing(ctx.output_dir, {{"load_seconds", load_s},
                                {"track_seconds", track_s},
                                {"frames_per_second", fps},
                                {"total_seconds", seconds_since(start)}});
  return summary;
}

EvalSequence make_eval_sequence(const std::vector<std::vector<LabelRecord>>& gt,
                                const std::vector<LabelRecord>& hyp,
                                const std::string& class_filter) {
  int frames = static_cast<int>(gt.size());
  for (const LabelRecord& r : hyp) frames = std::max(frames, r.frame + 1);

  EvalSequence seq;
  seq.gt.resize(static_cast<std::size_t>(frames));
  for (std::size_t f = 0; f < gt.size(); ++f)
    seq.gt[f] = filter_gt(gt[f], class_filter);
  seq.hyp.resize(static_cast<std::size_t>(frames));
  for (const LabelRecord& r : hyp) {
    if (r.dont_care || !class_kept(r.class_label, class_filter)) continue;
    if (r.frame < 0)
      throw Error(ErrorCode::InvalidArgument, "hypothesis with negative frame");
    seq.hyp[static_cast<std::size_t>(r.frame)].push_back(r);
  }
  return seq;
}

std::vector<EvalSequence> load_eval_sequences(const std::string& gt_root,
                                              const std::string& result_root,
                                              const std::string& class_filter) {
  fs::path gt_dir(gt_root);
  if (fs::is_directory(gt_dir / "label")) gt_dir /= "label";
  fs::path result_dir(result_root);
  if (fs::is_directory(result_dir / "results")) result_dir /= "results";

  const std::vector<std::string> ids = list_txt_stems(gt_dir);
  if (ids.empty())
    throw Error(ErrorCode::Io, "no ground truth files under " + gt_dir.string());

  std::vector<EvalSequence> seqs;
  seqs.reserve(ids.size());
  for (const std::string& id : ids) {
    const std::vector<LabelRecord> gt_records =
        read_label_file(gt_dir / (id + ".txt"));
    std::vector<LabelRecord> hyp_records;
    const fs::path result_file = result_dir / (id + ".txt");
    if (fs::exists(result_file)) hyp_records = read_label_file(result_file);
    seqs.push_back(make_eval_sequence(group_labels_by_frame(gt_records),
                                      hyp_records, class_filter));
  }
  return seqs;
}

EvalSummary run_eval(const RunContext& ctx, const std::string& gt_root,
                     const std::string& result_root) {
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(ctx.output_dir);
  const RunConfig& rc = ctx.rc;

  const std::vector<EvalSequence> seqs =
      load_eval_sequences(gt_root, result_root, rc.class_filter);
  EvalSummary summary;
  summary.report = evaluate(seqs, rc.recall_points, rc.metrics, rc.jobs);

  const fs::path report_path = fs::path(ctx.output_dir) / "report.txt";
  {
    std::ofstream out = open_out(report_path);
    render_report(summary.report, out);
  }
  {
    std::ofstream out = open_out(fs::path(ctx.output_dir) / "report.kv");
    render_report_kv(summary.report, out);
  }
  summary.report_path = report_path.string();

  RunContext noted = ctx;
  noted.notes.emplace_back("gt", gt_root);
  noted.notes.emplace_back("results", result_root);
  write_manifest(noted, "eval");
  write_timing(ctx.output_dir, {{"total_seconds", seconds_since(start)}});
  return summary;
}

GradcheckSummary run_gradcheck(const RunContext& ctx, double tolerance) {
  fs::create_directories(ctx.output_dir);
  const RunConfig& rc = ctx.rc;
  Rng rng = Rng::fork(rc.seed, kStreamGradcheck);

  // Seeded 4-track / 3-detection pair exercising every branch: two-frame
  // histories for real motion features, identities 0..2 shared across the
  // frames so both losses are active.
  TrainProblem tp;
  tp.problem.frame_t = 1;
  const int M = 4, N = 3;
  for (int i = 0; i < M; ++i) {
    Tracklet t;
    t.id = i;
    t.state = TrackState::Confirmed;
    Box3D cur = random_vehicle_box(rng);
    Box3D prev = cur;
    prev.center.x -= rng.uniform(-0.6, 0.6);
    prev.center.z -= rng.uniform(0.2, 1.0);
    Box2D cur2d = random_image_box(rng);
    Box2D prev2d = cur2d;
    const double shift = rng.uniform(-12.0, 12.0);
    prev2d.left -= shift;
    prev2d.right -= shift;
    t.history.push_back({0, prev, prev2d, 1.0});
    t.history.push_back({1, cur, cur2d, 1.0});
    t.hits = 2;
    t.cached_app2d = random_unit(rng, rc.feat.app2d_dim);
    t.cached_app3d = random_unit(rng, rc.feat.app3d_dim);
    tp.problem.tracks.push_back(std::move(t));
  }
  for (int j = 0; j < N; ++j) {
    Detection d;
    d.frame = 2;
    d.box3d = random_vehicle_box(rng);
    d.box2d = random_image_box(rng);
    d.score = rng.uniform(0.6, 1.0);
    d.app2d = random_unit(rng, rc.feat.app2d_dim);
    d.app3d = random_unit(rng, rc.feat.app3d_dim);
    tp.problem.detections.push_back(std::move(d));
  }
  tp.gt.matrix = Mat(M, N, 0.0);
  tp.gt.track_ids = {0, 1, 2, -1};
  tp.gt.det_ids = {0, 1, 2};
  for (int k = 0; k < N; ++k) tp.gt.matrix.at(k, k) = 1.0;

  ParamStore params;
  init_fusion_params(params, rc.feat, rng);
  init_gnn_params(params, rc.gnn, rng);
  // Jitter every parameter so the check runs at a generic point. Fresh
  // biases are exactly zero and detections have exactly-zero motion input,
  // which would park rectifier pre-activations on their kink, where central
  // differences disagree with any one-sided derivative.
  for (const std::string& name : params.names())
    for (double& v : params.get(name).values_mut()) v += rng.uniform(-0.1, 0.1);

  std::vector<int> identities = tp.gt.track_ids;
  identities.insert(identities.end(), tp.gt.det_ids.begin(),
                    tp.gt.det_ids.end());
  const auto loss_fn = [&]() {
    const Tensor feats =
        problem_node_features(tp.problem, params, rc.feat, nullptr);
    const InteractionGraph graph = build_graph(tp.problem, feats, rc.gnn);
    const GnnForward fwd = gnn_forward(graph, params, rc.gnn);
    return add(affinity_loss(fwd.affinities, tp.gt.matrix),
               scale(triplet_loss(fwd.node_feats.back(), identities, M,
                                  rc.gnn.margin),
                     rc.gnn.lambda));
  };

  const GradCheckResult result = grad_check(params, loss_fn);
  GradcheckSummary summary;
  summary.max_rel_error = result.max_rel_error;
  summary.worst_param = result.worst_param;
  summary.parameters = params.total_size();
  summary.pass = result.passed(tolerance);

  std::ofstream out = open_out(fs::path(ctx.output_dir) / "gradcheck.txt");
  out << "parameters " << summary.parameters << "\n";
  out << "max_rel_error " << format_float(summary.max_rel_error) << "\n";
  if (!result.worst_param.empty())
    out << "worst " << result.worst_param << "[" << result.worst_index << "]\n";
  out << "tolerance " << format_float(tolerance) << "\n";
  out << "status " << (summary.pass ? "PASS" : "FAIL") << "\n";

  write_manifest(ctx, "gradcheck");
  return summary;
}

BenchSummary run_bench(const RunContext& ctx) {
  fs::create_directories(ctx.output_dir);
  const RunConfig& rc = ctx.rc;
  Rng rng = Rng::fork(rc.seed, kStreamBench);
  BenchSummary summary;

  const auto rate = [](long long ops, double secs) {
    return secs > 0.0 ? ops / secs : 0.0;
  };
  // Repeats each kernel until it has run for at least ~0.2 s.
  const auto measure = [&](const std::function<void()>& op, long long batch) {
    long long ops = 0;
    const auto t0 = std::chrono::steady_clock::now();
    do {
      op();
      ops += batch;
    } while (seconds_since(t0) < 0.2);
    return rate(ops, seconds_since(t0));
  };

  std::vector<std::pair<Box3D, Box3D>> pairs;
  for (int i = 0; i < 1000; ++i) {
    Box3D a = random_vehicle_box(rng);
    Box3D b = a;
    b.center.x += rng.uniform(-2.0, 2.0);
    b.center.z += rng.uniform(-2.0, 2.0);
    b.yaw += rng.uniform(-0.5, 0.5);
    pairs.emplace_back(a, b);
  }
  double sink = 0.0;
  summary.iou3d_per_sec = measure(
      [&] {
        for (const auto& [a, b] : pairs) sink += iou3d(a, b);
      },
      static_cast<long long>(pairs.size()));

  std::vector<CostMatrix> costs;
  for (int i = 0; i < 64; ++i) {
    CostMatrix c(16, 16);
    for (double& v : c.v) v = rng.uniform();
    costs.push_back(std::move(c));
  }
  summary.assignments_per_sec = measure(
      [&] {
        for (const CostMatrix& c : costs) sink += solve_assignment(c).front();
      },
      static_cast<long long>(costs.size()));

  GnnConfig gcfg = rc.gnn;
  ParamStore params;
  Rng prng = Rng::fork(rc.seed, kStreamParams);
  init_fusion_params(params, rc.feat, prng);
  init_gnn_params(params, gcfg, prng);
  AssociationProblem problem;
  const int side = 8;
  for (int i = 0; i < side; ++i) {
    Tracklet t;
    t.id = i;
    Box3D b = random_vehicle_box(rng);
    t.history.push_back({0, b, random_image_box(rng), 1.0});
    t.hits = 1;
    t.cached_app2d = random_unit(rng, rc.feat.app2d_dim);
    t.cached_app3d = random_unit(rng, rc.feat.app3d_dim);
    problem.tracks.push_back(std::move(t));
    Detection d;
    d.frame = 1;
    d.box3d = random_vehicle_box(rng);
    d.box2d = random_image_box(rng);
    d.score = 1.0;
    d.app2d = random_unit(rng, rc.feat.app2d_dim);
    d.app3d = random_unit(rng, rc.feat.app3d_dim);
    problem.detections.push_back(std::move(d));
  }
  NoGradGuard ng;
  summary.forwards_per_sec = measure(
      [&] {
        const Tensor feats =
            problem_node_features(problem, params, rc.feat, nullptr);
        const InteractionGraph graph = build_graph(problem, feats, gcfg);
        sink += gnn_forward(graph, params, gcfg).affinities.back().values()[0];
      },
      1);

  std::ofstream out = open_out(fs::path(ctx.output_dir) / "bench.txt");
  char buf[96];
  std::snprintf(buf, sizeof buf, "iou3d_per_sec %.0f\n", summary.iou3d_per_sec);
  out << buf;
  std::snprintf(buf, sizeof buf, "assignments_16x16_per_sec %.0f\n",
                summary.assignments_per_sec);
  out << buf;
  std::snprintf(buf, sizeof buf, "gnn_forwards_8x8_per_sec %.0f\n",
                summary.forwards_per_sec);
  out << buf;
  if (!std::isfinite(sink)) out << "# sink overflow\n";

  write_manifest(ctx, "bench");
  return summary;
}

}  // namespace gmot
