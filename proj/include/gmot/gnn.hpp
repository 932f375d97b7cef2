#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gmot/autograd.hpp"
#include "gmot/featnet.hpp"
#include "gmot/kitti_io.hpp"
#include "gmot/types.hpp"

namespace gmot {

struct GnnConfig {
  int layers = 2;        // aggregation rounds; affinities exist at every stage
  int node_dim = 64;
  int hidden_dim = 64;   // edge regressor hidden width
  double margin = 0.2;   // triplet margin
  double lambda = 1.0;   // weight of the triplet term in the total loss
  std::string aggregation = "diff";    // diff | mean
  std::string edge_input = "absdiff";  // absdiff | concat
  double gate_radius = 0.0;            // meters; 0 keeps the full bipartite set
};

/// Bipartite interaction graph over one frame pair. Node order is tracks
/// then detections; edges never connect nodes of the same frame.
struct InteractionGraph {
  Tensor features;  // (M + N) x D fused node features
  int num_tracks = 0;
  int num_detections = 0;
  std::vector<std::pair<int, int>> edges;  // (track index, detection index)
};

/// Full bipartite edges, except pairs farther apart than gate_radius when
/// gating is on. Center distances come from the problem's boxes.
InteractionGraph build_graph(const AssociationProblem& problem,
                             Tensor node_feats, const GnnConfig& cfg);

/// Stage s holds the features after s aggregation rounds and the affinity
/// matrix regressed from them, so there are layers + 1 of each. The final
/// stage's matrix drives matching. Gated-out pairs keep affinity 0.
struct GnnForward {
  std::vector<Tensor> node_feats;  // each (M + N) x D
  std::vector<Tensor> affinities;  // each M x N
};

/// Registers per-layer aggregation weights and the shared edge regressor
/// (names under "gnn.").
void init_gnn_params(ParamStore& store, const GnnConfig& cfg, Rng& rng);

GnnForward gnn_forward(const InteractionGraph& graph, ParamStore& params,
                       const GnnConfig& cfg);

/// Batch-hard triplet loss over the frame pair. Anchors are nodes with at
/// least one same-identity and one different-identity node in the opposite
/// frame; distances are Euclidean; per anchor max(0, max_pos - min_neg + m);
/// mean over anchors. Negative identity labels never match anything.
Tensor triplet_loss(const Tensor& node_feats, const std::vector<int>& identities,
                    int num_tracks, double margin);

/// Mean binary cross-entropy per stage, summed over stages.
Tensor affinity_loss(const std::vector<Tensor>& affinities, const Mat& gt);

/// Supervision targets: each node is matched one-to-one to a ground-truth
/// box of its frame by descending 3D overlap (ties broken by lower node
/// index, then lower ground-truth index); overlaps under iou_threshold and
/// leftovers get unique negative ids. Entry (i, j) of the matrix is 1 iff
/// track i and detection j received the same id.
struct GtAssignment {
  Mat matrix;                  // M x N, entries 0/1
  std::vector<int> track_ids;  // size M
  std::vector<int> det_ids;    // size N
};

GtAssignment make_gt_assignment(const AssociationProblem& problem,
                                const std::vector<LabelRecord>& gt_t,
                                const std::vector<LabelRecord>& gt_t1,
                                double iou_threshold = 0.25);

/// One supervised frame pair, ready for forward + loss.
struct TrainProblem {
  AssociationProblem problem;
  GtAssignment gt;
  Mat34 calib;
  bool has_calib = false;
};

struct EpochStats {
  double mean_loss = 0.0;
  int problems = 0;
};

/// Forward, total loss (affinity + lambda * triplet on the final stage),
/// backward, optimizer step, per problem in order. Skips problems with an
/// empty side. Aborts with a diagnostic on a non-finite loss.
EpochStats train_epoch(const std::vector<TrainProblem>& problems,
                       ParamStore& params, const FeatConfig& feat_cfg,
                       const GnnConfig& cfg, const AdamConfig& adam);

/// The loss train_epoch would step on, without touching the parameters.
double problem_loss(const TrainProblem& problem, ParamStore& params,
                    const FeatConfig& feat_cfg, const GnnConfig& cfg);

/// Fused node features for a frame pair: tracks (motion vs their predicted
/// boxes) first, then detections (zero motion).
Tensor problem_node_features(const AssociationProblem& problem,
                             ParamStore& params, const FeatConfig& feat_cfg,
                             const Mat34* calib);

}  // namespace gmot
