#include "gmot/tracker.hpp"

#include <algorithm>
#include <cmath>

#include "gmot/assoc.hpp"
#include "gmot/error.hpp"

namespace gmot {

Tracker::Tracker(const TrackerConfig& cfg, ParamStore* params,
                 const FeatConfig& feat_cfg, const GnnConfig& gnn_cfg,
                 const Mat34* calib)
    : cfg_(cfg),
      params_(params),
      feat_cfg_(feat_cfg),
      gnn_cfg_(gnn_cfg),
      calib_(calib) {
  if (cfg.min_hits < 1)
    throw Error(ErrorCode::InvalidArgument, "min_hits must be at least 1");
  if (cfg.max_age < 0)
    throw Error(ErrorCode::InvalidArgument, "max_age must be non-negative");
  if (cfg.matcher == "gnn" && params == nullptr)
    throw Error(ErrorCode::InvalidArgument,
                "the gnn matcher needs model parameters");
  if (cfg.matcher != "gnn" && cfg.matcher != "embedding" &&
      cfg.matcher != "greedy_iou")
    throw Error(ErrorCode::InvalidArgument,
                "unknown matcher '" + cfg.matcher + "'");
}

namespace {

double embedding_affinity(const std::vector<float>& a,
                          const std::vector<float>& b) {
  if (a.empty() || b.empty() || a.size() != b.size()) return 0.0;
  double d2 = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = static_cast<double>(a[k]) - b[k];
    d2 += d * d;
  }
  return std::exp(-d2);
}

}  // namespace

AffinityMatrix Tracker::affinities(const AssociationProblem& problem) {
  const int M = problem.num_tracks(), N = problem.num_detections();
  AffinityMatrix aff(M, N);
  if (cfg_.matcher == "embedding") {
    for (int i = 0; i < M; ++i) {
      const Tracklet& t = problem.tracks[static_cast<std::size_t>(i)];
      for (int j = 0; j < N; ++j) {
        const Detection& d = problem.detections[static_cast<std::size_t>(j)];
        aff.at(i, j) = !t.cached_app2d.empty() && !d.app2d.empty()
                           ? embedding_affinity(t.cached_app2d, d.app2d)
                           : embedding_affinity(t.cached_app3d, d.app3d);
      }
    }
    return aff;
  }
  if (cfg_.matcher != "gnn")
    throw Error(ErrorCode::InvalidArgument,
                "unknown matcher '" + cfg_.matcher + "'");
  NoGradGuard ng;
  const Tensor feats =
      problem_node_features(problem, *params_, feat_cfg_, calib_);
  const InteractionGraph graph = build_graph(problem, feats, gnn_cfg_);
  const GnnForward fwd = gnn_forward(graph, *params_, gnn_cfg_);
  const Tensor& last = fwd.affinities.back();
  aff.v = last.values();
  return aff;
}

Assignment Tracker::greedy_iou_assignment(const AssociationProblem& problem) const {
  const int M = problem.num_tracks(), N = problem.num_detections();
  struct Cand {
    double iou;
    int i, j;
  };
  std::vector<Cand> cands;
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < N; ++j) {
      const double iou =
          iou3d(problem.tracks[static_cast<std::size_t>(i)].last().box3d,
                problem.detections[static_cast<std::size_t>(j)].box3d);
      if (iou >= cfg_.greedy_min_iou) cands.push_back({iou, i, j});
    }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  Assignment out;
  std::vector<bool> ti(static_cast<std::size_t>(M), false),
      dj(static_cast<std::size_t>(N), false);
  for (const Cand& c : cands) {
    if (ti[static_cast<std::size_t>(c.i)] || dj[static_cast<std::size_t>(c.j)])
      continue;
    ti[static_cast<std::size_t>(c.i)] = true;
    dj[static_cast<std::size_t>(c.j)] = true;
    out.matches.emplace_back(c.i, c.j);
  }
  for (int i = 0; i < M; ++i)
    if (!ti[static_cast<std::size_t>(i)]) out.unmatched_tracks.push_back(i);
  for (int j = 0; j < N; ++j)
    if (!dj[static_cast<std::size_t>(j)]) out.unmatched_detections.push_back(j);
  return out;
}

std::vector<LabelRecord> Tracker::step(int frame,
                                       const std::vector<Detection>& detections) {
  if (frame <= last_frame_)
    throw Error(ErrorCode::InvalidArgument,
                "frames must arrive in increasing order: got " +
                    std::to_string(frame) + " after " +
                    std::to_string(last_frame_));
  last_frame_ = frame;

  AssociationProblem problem;
  problem.frame_t = frame - 1;
  problem.tracks = tracks_;
  for (const Detection& d : detections) {
    if (!cfg_.class_filter.empty() && d.class_label != cfg_.class_filter)
      continue;
    problem.detections.push_back(d);
  }

  Assignment assignment;
  if (cfg_.matcher == "greedy_iou")
    assignment = greedy_iou_assignment(problem);
  else
    assignment = match_with_gating(affinities(problem), cfg_.match_threshold);

  std::vector<LabelRecord> outputs;
  const auto emit = [&outputs, frame](const Tracklet& t, const Detection& d) {
    LabelRecord r;
    r.frame = frame;
    r.track_id = t.id;
    r.class_label = d.class_label;
    r.alpha = wrap_angle(d.box3d.yaw -
                         std::atan2(d.box3d.center.x, d.box3d.center.z));
    r.box2d = d.box2d;
    r.h = d.box3d.h;
    r.w = d.box3d.w;
    r.l = d.box3d.l;
    r.x = d.box3d.center.x;
    r.y = d.box3d.center.y;
    r.z = d.box3d.center.z;
    r.rotation_y = d.box3d.yaw;
    r.score = d.score;
    outputs.push_back(std::move(r));
  };

  std::vector<bool> matched(tracks_.size(), false);
  for (const auto& [i, j] : assignment.matches) {
    Tracklet& t = tracks_[static_cast<std::size_t>(i)];
    const Detection& d = problem.detections[static_cast<std::size_t>(j)];
    matched[static_cast<std::size_t>(i)] = true;
    t.history.push_back({frame, d.box3d, d.box2d, d.score});
    ++t.hits;
    t.misses = 0;
    if (!d.app2d.empty()) t.cached_app2d = d.app2d;
    if (!d.app3d.empty()) t.cached_app3d = d.app3d;
    if (t.hits >= cfg_.min_hits) t.state = TrackState::Confirmed;
    if (t.state == TrackState::Confirmed) emit(t, d);
  }

  std::vector<Tracklet> kept;
  kept.reserve(tracks_.size() + assignment.unmatched_detections.size());
  for (std::size_t i = 0; i < tracks_.size(); ++i) {
    Tracklet& t = tracks_[i];
    if (!matched[i]) {
      ++t.misses;
      if (t.misses > cfg_.max_age) continue;
    }
    kept.push_back(std::move(t));
  }
  for (int j : assignment.unmatched_detections) {
    const Detection& d = problem.detections[static_cast<std::size_t>(j)];
    Tracklet t;
    t.id = next_id_++;
    t.history.push_back({frame, d.box3d, d.box2d, d.score});
    t.hits = 1;
    t.misses = 0;
    t.cached_app2d = d.app2d;
    t.cached_app3d = d.app3d;
    t.state = t.hits >= cfg_.min_hits ? TrackState::Confirmed
                                      : TrackState::Tentative;
    if (t.state == TrackState::Confirmed) emit(t, d);
    kept.push_back(std::move(t));
  }
  tracks_ = std::move(kept);
  return outputs;
}

std::vector<LabelRecord> run_sequence(const SequenceData& seq,
                                      const TrackerConfig& cfg,
                                      ParamStore* params,
                                      const FeatConfig& feat_cfg,
                                      const GnnConfig& gnn_cfg) {
  Tracker tracker(cfg, params, feat_cfg, gnn_cfg, &seq.P2);
  std::vector<LabelRecord> all;
  for (int f = 0; f < static_cast<int>(seq.det_frames.size()); ++f) {
    std::vector<LabelRecord> out =
        tracker.step(f, seq.det_frames[static_cast<std::size_t>(f)]);
    all.insert(all.end(), std::make_move_iterator(out.begin()),
               std::make_move_iterator(out.end()));
  }
  return all;
}

}  // namespace gmot
