#include "gmot/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "gmot/error.hpp"

namespace gmot {

InteractionGraph build_graph(const AssociationProblem& problem,
                             Tensor node_feats, const GnnConfig& cfg) {
  InteractionGraph g;
  g.num_tracks = problem.num_tracks();
  g.num_detections = problem.num_detections();
  if (node_feats.rows() != g.num_tracks + g.num_detections)
    throw Error(ErrorCode::InvalidArgument,
                "build_graph: " + std::to_string(node_feats.rows()) +
                    " feature rows for " +
                    std::to_string(g.num_tracks + g.num_detections) +
                    " objects");
  g.features = std::move(node_feats);
  for (int i = 0; i < g.num_tracks; ++i) {
    const Box3D& tb = problem.tracks[static_cast<std::size_t>(i)].last().box3d;
    for (int j = 0; j < g.num_detections; ++j) {
      const Box3D& db = problem.detections[static_cast<std::size_t>(j)].box3d;
      if (cfg.gate_radius > 0.0 && center_distance(tb, db) > cfg.gate_radius)
        continue;
      g.edges.emplace_back(i, j);
    }
  }
  return g;
}

void init_gnn_params(ParamStore& store, const GnnConfig& cfg, Rng& rng) {
  const int D = cfg.node_dim;
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = "gnn.layer" + std::to_string(l);
    store.add_glorot(p + ".Ws", D, D, rng);
    store.add_glorot(p + ".Wn", D, D, rng);
  }
  const int edge_in = cfg.edge_input == "concat" ? 2 * D : D;
  store.add_glorot("gnn.edge.W1", edge_in, cfg.hidden_dim, rng);
  store.add("gnn.edge.b1", 1, cfg.hidden_dim);
  store.add_glorot("gnn.edge.W2", cfg.hidden_dim, 1, rng);
  store.add("gnn.edge.b2", 1, 1);
}

namespace {

// Row r of the result selects one endpoint of edge r, so matmul with the
// node features lays the edge endpoints out in edge order.
Tensor endpoint_selector(const std::vector<std::pair<int, int>>& edges,
                         int num_nodes, bool pick_track, int num_tracks) {
  const int rows = static_cast<int>(edges.size());
  std::vector<double> data(static_cast<std::size_t>(rows) * num_nodes, 0.0);
  for (int r = 0; r < rows; ++r) {
    const int node = pick_track
                         ? edges[static_cast<std::size_t>(r)].first
                         : num_tracks + edges[static_cast<std::size_t>(r)].second;
    data[static_cast<std::size_t>(r) * num_nodes + node] = 1.0;
  }
  return Tensor::constant(rows, num_nodes, std::move(data));
}

// Shared two-layer edge regressor on every edge, scattered into M x N.
// Pairs removed by gating keep affinity 0.
Tensor stage_affinity(const Tensor& feats, const InteractionGraph& g,
                      ParamStore& params, const GnnConfig& cfg) {
  const int M = g.num_tracks, N = g.num_detections;
  const int E = static_cast<int>(g.edges.size());
  if (M == 0 || N == 0 || E == 0) return Tensor::zeros(M, N);
  const int nodes = M + N;
  const Tensor tr = matmul(endpoint_selector(g.edges, nodes, true, M), feats);
  const Tensor de = matmul(endpoint_selector(g.edges, nodes, false, M), feats);
  Tensor input;
  if (cfg.edge_input == "concat") {
    const Tensor parts[2] = {tr, de};
    input = concat_cols(std::span<const Tensor>(parts, 2));
  } else if (cfg.edge_input == "absdiff") {
    input = abs(sub(tr, de));
  } else {
    throw Error(ErrorCode::InvalidArgument,
                "unknown edge input '" + cfg.edge_input + "'");
  }
  const Tensor hidden =
      relu(add_rowvec(matmul(input, params.get("gnn.edge.W1")),
                      params.get("gnn.edge.b1")));
  Tensor scores = sigmoid(add_rowvec(matmul(hidden, params.get("gnn.edge.W2")),
                                     params.get("gnn.edge.b2")));
  if (E < M * N) {
    std::vector<double> scatter(static_cast<std::size_t>(M) * N * E, 0.0);
    for (int e = 0; e < E; ++e) {
      const auto [i, j] = g.edges[static_cast<std::size_t>(e)];
      scatter[(static_cast<std::size_t>(i) * N + j) * E + e] = 1.0;
    }
    scores = matmul(Tensor::constant(M * N, E, std::move(scatter)), scores);
  }
  return reshape(scores, M, N);
}

void check_finite(const Tensor& t, int stage) {
  for (double v : t.values())
    if (!std::isfinite(v))
      throw Error(ErrorCode::Numeric,
                  "gnn stage " + std::to_string(stage) +
                      ": non-finite activation (diverged training?)");
}

}  // namespace

GnnForward gnn_forward(const InteractionGraph& graph, ParamStore& params,
                       const GnnConfig& cfg) {
  const int M = graph.num_tracks, N = graph.num_detections;
  const int nodes = M + N;
  GnnForward out;

  Tensor h = graph.features;
  check_finite(h, 0);
  out.node_feats.push_back(h);
  out.affinities.push_back(stage_affinity(h, graph, params, cfg));
  if (cfg.layers == 0 || nodes == 0) {
    for (int l = 0; l < cfg.layers; ++l) {
      out.node_feats.push_back(h);
      out.affinities.push_back(stage_affinity(h, graph, params, cfg));
    }
    return out;
  }

  // Neighbor-mean operator and has-neighbor mask, both constants of the
  // edge set.
  std::vector<int> degree(static_cast<std::size_t>(nodes), 0);
  for (const auto& [i, j] : graph.edges) {
    ++degree[static_cast<std::size_t>(i)];
    ++degree[static_cast<std::size_t>(M + j)];
  }
  std::vector<double> adj(static_cast<std::size_t>(nodes) * nodes, 0.0);
  for (const auto& [i, j] : graph.edges) {
    adj[static_cast<std::size_t>(i) * nodes + (M + j)] +=
        1.0 / degree[static_cast<std::size_t>(i)];
    adj[static_cast<std::size_t>(M + j) * nodes + i] +=
        1.0 / degree[static_cast<std::size_t>(M + j)];
  }
  const Tensor A = Tensor::constant(nodes, nodes, std::move(adj));
  const int D = h.cols();
  std::vector<double> mask_data(static_cast<std::size_t>(nodes) * D, 0.0);
  for (int n = 0; n < nodes; ++n)
    if (degree[static_cast<std::size_t>(n)] > 0)
      std::fill(mask_data.begin() + static_cast<std::size_t>(n) * D,
                mask_data.begin() + static_cast<std::size_t>(n + 1) * D, 1.0);
  const Tensor mask = Tensor::constant(nodes, D, std::move(mask_data));

  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = "gnn.layer" + std::to_string(l);
    Tensor agg = matmul(A, h);  // mean over neighbors; zero when none
    if (cfg.aggregation == "diff")
      agg = sub(agg, mul(mask, h));
    else if (cfg.aggregation != "mean")
      throw Error(ErrorCode::InvalidArgument,
                  "unknown aggregation '" + cfg.aggregation + "'");
    h = relu(add(matmul(h, params.get(p + ".Ws")),
                 matmul(agg, params.get(p + ".Wn"))));
    check_finite(h, l + 1);
    out.node_feats.push_back(h);
    out.affinities.push_back(stage_affinity(h, graph, params, cfg));
  }
  return out;
}

Tensor triplet_loss(const Tensor& node_feats, const std::vector<int>& identities,
                    int num_tracks, double margin) {
  const int total = node_feats.rows();
  if (static_cast<int>(identities.size()) != total)
    throw Error(ErrorCode::InvalidArgument,
                "triplet_loss: " + std::to_string(identities.size()) +
                    " labels for " + std::to_string(total) + " nodes");
  const int M = num_tracks, N = total - num_tracks;
  if (M <= 0 || N <= 0) return Tensor::scalar(0.0);

  // All cross-frame distances, built once and shared by both anchor sides.
  const Tensor eps = Tensor::scalar(1e-12);
  std::vector<std::vector<Tensor>> dist(static_cast<std::size_t>(M));
  const int nodes = total;
  const auto node_row = [&](int n) {
    std::vector<double> sel(static_cast<std::size_t>(nodes), 0.0);
    sel[static_cast<std::size_t>(n)] = 1.0;
    return matmul(Tensor::constant(1, nodes, std::move(sel)), node_feats);
  };
  std::vector<Tensor> rows;
  rows.reserve(static_cast<std::size_t>(nodes));
  for (int n = 0; n < nodes; ++n) rows.push_back(node_row(n));
  for (int i = 0; i < M; ++i) {
    dist[static_cast<std::size_t>(i)].reserve(static_cast<std::size_t>(N));
    for (int j = 0; j < N; ++j) {
      const Tensor diff = sub(rows[static_cast<std::size_t>(i)],
                              rows[static_cast<std::size_t>(M + j)]);
      dist[static_cast<std::size_t>(i)].push_back(
          sqrt(add(sum(mul(diff, diff)), eps)));
    }
  }

  // An anchor needs a positive and a negative in the opposite frame.
  // Negative ids label unmatched nodes and never count as the same identity.
  Tensor loss_sum;
  int anchors = 0;
  const Tensor m = Tensor::scalar(margin);
  const auto add_anchor = [&](int id, const std::function<Tensor(int)>& d,
                              int opposite_count,
                              const std::function<int(int)>& opposite_id) {
    int best_pos = -1, best_neg = -1;
    double best_pos_v = -1.0, best_neg_v = 0.0;
    for (int k = 0; k < opposite_count; ++k) {
      const bool same = id >= 0 && opposite_id(k) == id;
      const double v = d(k).item();
      if (same) {
        if (v > best_pos_v) {
          best_pos_v = v;
          best_pos = k;
        }
      } else if (best_neg == -1 || v < best_neg_v) {
        best_neg_v = v;
        best_neg = k;
      }
    }
    if (best_pos < 0 || best_neg < 0) return;
    const Tensor l = relu(add(sub(d(best_pos), d(best_neg)), m));
    loss_sum = loss_sum.defined() ? add(loss_sum, l) : l;
    ++anchors;
  };
  for (int i = 0; i < M; ++i)
    add_anchor(
        identities[static_cast<std::size_t>(i)],
        [&](int j) { return dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; },
        N, [&](int j) { return identities[static_cast<std::size_t>(M + j)]; });
  for (int j = 0; j < N; ++j)
    add_anchor(
        identities[static_cast<std::size_t>(M + j)],
        [&](int i) { return dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; },
        M, [&](int i) { return identities[static_cast<std::size_t>(i)]; });

  if (anchors == 0) return Tensor::scalar(0.0);
  return scale(loss_sum, 1.0 / anchors);
}

Tensor affinity_loss(const std::vector<Tensor>& affinities, const Mat& gt) {
  if (affinities.empty())
    throw Error(ErrorCode::InvalidArgument, "affinity_loss: no stages");
  Tensor total;
  for (const Tensor& a : affinities) {
    if (a.rows() != gt.rows || a.cols() != gt.cols)
      throw Error(ErrorCode::InvalidArgument,
                  "affinity_loss: prediction " + std::to_string(a.rows()) +
                      "x" + std::to_string(a.cols()) + ", target " +
                      std::to_string(gt.rows) + "x" + std::to_string(gt.cols));
    if (a.size() == 0) continue;
    // -mean(y log a + (1 - y) log(1 - a)); the 1e-12 shift keeps saturated
    // sigmoids out of log(0).
    const Tensor eps = Tensor::constant(
        a.rows(), a.cols(),
        std::vector<double>(a.size(), 1e-12));
    const Tensor y = Tensor::constant(gt.rows, gt.cols, gt.v);
    std::vector<double> inv(gt.v.size());
    std::transform(gt.v.begin(), gt.v.end(), inv.begin(),
                   [](double v) { return 1.0 - v; });
    const Tensor one_minus_y = Tensor::constant(gt.rows, gt.cols, std::move(inv));
    std::vector<double> ones(a.size(), 1.0);
    const Tensor one = Tensor::constant(a.rows(), a.cols(), std::move(ones));
    const Tensor term = add(mul(y, log(add(a, eps))),
                            mul(one_minus_y, log(add(sub(one, a), eps))));
    const Tensor stage = scale(mean(term), -1.0);
    total = total.defined() ? add(total, stage) : stage;
  }
  if (!total.defined()) return Tensor::scalar(0.0);
  return total;
}

GtAssignment make_gt_assignment(const AssociationProblem& problem,
                                const std::vector<LabelRecord>& gt_t,
                                const std::vector<LabelRecord>& gt_t1,
                                double iou_threshold) {
  const int M = problem.num_tracks();
  const int N = problem.num_detections();
  GtAssignment out;
  out.matrix = Mat(M, N, 0.0);
  out.track_ids.assign(static_cast<std::size_t>(M), 0);
  out.det_ids.assign(static_cast<std::size_t>(N), 0);

  int next_negative = -1;
  const auto assign_side = [&](const std::vector<Box3D>& boxes,
                               const std::vector<LabelRecord>& gt,
                               std::vector<int>& ids) {
    struct Cand {
      double iou;
      int node, gt_index;
    };
    std::vector<Cand> cands;
    for (int n = 0; n < static_cast<int>(boxes.size()); ++n)
      for (int g = 0; g < static_cast<int>(gt.size()); ++g) {
        if (gt[static_cast<std::size_t>(g)].dont_care) continue;
        const double iou =
            iou3d(boxes[static_cast<std::size_t>(n)],
                  gt[static_cast<std::size_t>(g)].box3d());
        if (iou >= iou_threshold) cands.push_back({iou, n, g});
      }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.iou != b.iou) return a.iou > b.iou;
      if (a.node != b.node) return a.node < b.node;
      return a.gt_index < b.gt_index;
    });
    std::vector<bool> node_used(boxes.size(), false), gt_used(gt.size(), false);
    std::vector<int> result(boxes.size(), 0);
    std::vector<bool> resolved(boxes.size(), false);
    for (const Cand& c : cands) {
      if (node_used[static_cast<std::size_t>(c.node)] ||
          gt_used[static_cast<std::size_t>(c.gt_index)])
        continue;
      node_used[static_cast<std::size_t>(c.node)] = true;
      gt_used[static_cast<std::size_t>(c.gt_index)] = true;
      result[static_cast<std::size_t>(c.node)] =
          gt[static_cast<std::size_t>(c.gt_index)].track_id;
      resolved[static_cast<std::size_t>(c.node)] = true;
    }
    for (std::size_t n = 0; n < boxes.size(); ++n)
      if (!resolved[n]) result[n] = next_negative--;
    ids = std::move(result);
  };

  std::vector<Box3D> track_boxes, det_boxes;
  for (const Tracklet& t : problem.tracks) track_boxes.push_back(t.last().box3d);
  for (const Detection& d : problem.detections) det_boxes.push_back(d.box3d);
  assign_side(track_boxes, gt_t, out.track_ids);
  assign_side(det_boxes, gt_t1, out.det_ids);

  for (int i = 0; i < M; ++i)
    for (int j = 0; j < N; ++j)
      if (out.track_ids[static_cast<std::size_t>(i)] >= 0 &&
          out.track_ids[static_cast<std::size_t>(i)] ==
              out.det_ids[static_cast<std::size_t>(j)])
        out.matrix.at(i, j) = 1.0;
  return out;
}

Tensor problem_node_features(const AssociationProblem& problem,
                             ParamStore& params, const FeatConfig& feat_cfg,
                             const Mat34* calib) {
  std::vector<RawFeatures> raw;
  raw.reserve(problem.tracks.size() + problem.detections.size());
  for (const Tracklet& t : problem.tracks) {
    const Box3D pred3d = predict_box3d(t);
    const Box2D pred2d = predict_box2d(t, pred3d, calib);
    raw.push_back(track_raw(t, pred3d, pred2d, feat_cfg));
  }
  int det_index = 0;
  for (const Detection& d : problem.detections)
    raw.push_back(detection_raw(d, det_index++, feat_cfg));
  return fuse(raw, params, feat_cfg);
}

double problem_loss(const TrainProblem& tp, ParamStore& params,
                    const FeatConfig& feat_cfg, const GnnConfig& cfg) {
  NoGradGuard ng;
  const Tensor feats = problem_node_features(
      tp.problem, params, feat_cfg, tp.has_calib ? &tp.calib : nullptr);
  const InteractionGraph graph = build_graph(tp.problem, feats, cfg);
  const GnnForward fwd = gnn_forward(graph, params, cfg);
  std::vector<int> identities = tp.gt.track_ids;
  identities.insert(identities.end(), tp.gt.det_ids.begin(), tp.gt.det_ids.end());
  const Tensor loss =
      add(affinity_loss(fwd.affinities, tp.gt.matrix),
          scale(triplet_loss(fwd.node_feats.back(), identities,
                             tp.problem.num_tracks(), cfg.margin),
                cfg.lambda));
  return loss.item();
}

EpochStats train_epoch(const std::vector<TrainProblem>& problems,
                       ParamStore& params, const FeatConfig& feat_cfg,
                       const GnnConfig& cfg, const AdamConfig& adam) {
  if (problems.empty())
    throw Error(ErrorCode::InvalidArgument, "train_epoch: empty dataset");
  EpochStats stats;
  double loss_acc = 0.0;
  for (const TrainProblem& tp : problems) {
    if (tp.problem.num_tracks() == 0 || tp.problem.num_detections() == 0)
      continue;
    const Tensor feats = problem_node_features(
        tp.problem, params, feat_cfg, tp.has_calib ? &tp.calib : nullptr);
    const InteractionGraph graph = build_graph(tp.problem, feats, cfg);
    const GnnForward fwd = gnn_forward(graph, params, cfg);
    std::vector<int> identities = tp.gt.track_ids;
    identities.insert(identities.end(), tp.gt.det_ids.begin(),
                      tp.gt.det_ids.end());
    const Tensor loss =
        add(affinity_loss(fwd.affinities, tp.gt.matrix),
            scale(triplet_loss(fwd.node_feats.back(), identities,
                               tp.problem.num_tracks(), cfg.margin),
                  cfg.lambda));
    const double value = loss.item();
    if (!std::isfinite(value))
      throw Error(ErrorCode::Numeric,
                  "train_epoch: non-finite loss at problem " +
                      std::to_string(stats.problems));
    backward(loss);
    params.adam_step(adam);
    loss_acc += value;
    ++stats.problems;
  }
  stats.mean_loss = stats.problems > 0 ? loss_acc / stats.problems : 0.0;
  return stats;
}

}  // namespace gmot
