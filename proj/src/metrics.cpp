#include "gmot/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <thread>

#include "gmot/assoc.hpp"
#include "gmot/error.hpp"
#include "gmot/geometry.hpp"

namespace gmot {

namespace {

constexpr double kBlocked = 1e6;  // dominates any sum of valid match costs

double pair_overlap(const LabelRecord& gt, const LabelRecord& hyp,
                    const ClearConfig& cfg) {
  if (cfg.criterion == "distance") {
    const double d = center_distance(gt.box3d(), hyp.box3d());
    if (d > cfg.distance_threshold) return -1.0;
    return 1.0 - d / cfg.distance_threshold;
  }
  const double iou = iou3d(gt.box3d(), hyp.box3d());
  return iou >= cfg.iou_threshold ? iou : -1.0;
}

void check_unique_ids(const std::vector<LabelRecord>& frame, int frame_index,
                      const char* side) {
  std::set<int> seen;
  for (const LabelRecord& r : frame) {
    if (r.dont_care) continue;
    if (!seen.insert(r.track_id).second)
      throw Error(ErrorCode::InvalidArgument,
                  std::string(side) + " frame " + std::to_string(frame_index) +
                      ": duplicate track id " + std::to_string(r.track_id));
  }
}

// Fraction of the hypothesis 2D box covered by the DontCare region.
bool inside_dont_care(const LabelRecord& hyp,
                      const std::vector<const LabelRecord*>& dont_care,
                      double threshold) {
  const Box2D& h = hyp.box2d;
  if (!h.valid()) return false;
  for (const LabelRecord* dc : dont_care) {
    const Box2D& d = dc->box2d;
    const double iw = std::min(h.right, d.right) - std::max(h.left, d.left);
    const double ih = std::min(h.bottom, d.bottom) - std::max(h.top, d.top);
    if (iw <= 0.0 || ih <= 0.0) continue;
    if (iw * ih / h.area() >= threshold) return true;
  }
  return false;
}

struct TrajectoryState {
  int last_hyp = -1;        // last matched hypothesis id
  bool ever_tracked = false;
  bool in_gap = false;      // tracked earlier, currently untracked
};

ClearCounts clear_one_sequence(const EvalSequence& seq, const ClearConfig& cfg) {
  ClearCounts c;
  std::map<int, TrajectoryState> trajectories;
  std::map<int, int> active;  // gt id -> hyp id correspondence from frame-1

  const std::size_t frames = std::max(seq.gt.size(), seq.hyp.size());
  for (std::size_t f = 0; f < frames; ++f) {
    static const std::vector<LabelRecord> empty;
    const std::vector<LabelRecord>& gt_all =
        f < seq.gt.size() ? seq.gt[f] : empty;
    const std::vector<LabelRecord>& hyp_frame =
        f < seq.hyp.size() ? seq.hyp[f] : empty;
    check_unique_ids(gt_all, static_cast<int>(f), "ground truth");
    check_unique_ids(hyp_frame, static_cast<int>(f), "hypotheses");

    std::vector<const LabelRecord*> gt_frame, dont_care;
    for (const LabelRecord& r : gt_all)
      (r.dont_care ? dont_care : gt_frame).push_back(&r);
    c.gt += static_cast<long long>(gt_frame.size());

    const int G = static_cast<int>(gt_frame.size());
    const int H = static_cast<int>(hyp_frame.size());
    std::vector<int> gt_match(static_cast<std::size_t>(G), -1);
    std::vector<int> hyp_match(static_cast<std::size_t>(H), -1);
    std::vector<double> match_overlap(static_cast<std::size_t>(G), 0.0);

    std::map<int, int> hyp_index;
    for (int j = 0; j < H; ++j)
      hyp_index[hyp_frame[static_cast<std::size_t>(j)].track_id] = j;

    // Keep the correspondences from the previous frame that still meet the
    // criterion.
    for (int i = 0; i < G; ++i) {
      const LabelRecord& g = *gt_frame[static_cast<std::size_t>(i)];
      auto prev = active.find(g.track_id);
      if (prev == active.end()) continue;
      auto j = hyp_index.find(prev->second);
      if (j == hyp_index.end()) continue;
      if (hyp_match[static_cast<std::size_t>(j->second)] != -1) continue;
      const double ov =
          pair_overlap(g, hyp_frame[static_cast<std::size_t>(j->second)], cfg);
      if (ov < 0.0) continue;
      gt_match[static_cast<std::size_t>(i)] = j->second;
      hyp_match[static_cast<std::size_t>(j->second)] = i;
      match_overlap[static_cast<std::size_t>(i)] = ov;
    }

    // Optimal completion for the rest: max matches first (blocked pairs
    // cost enough to dominate), then max overlap.
    std::vector<int> free_gt, free_hyp;
    for (int i = 0; i < G; ++i)
      if (gt_match[static_cast<std::size_t>(i)] == -1) free_gt.push_back(i);
    for (int j = 0; j < H; ++j)
      if (hyp_match[static_cast<std::size_t>(j)] == -1) free_hyp.push_back(j);
    if (!free_gt.empty() && !free_hyp.empty()) {
      Mat cost(static_cast<int>(free_gt.size()),
               static_cast<int>(free_hyp.size()));
      for (std::size_t a = 0; a < free_gt.size(); ++a)
        for (std::size_t b = 0; b < free_hyp.size(); ++b) {
          const double ov = pair_overlap(
              *gt_frame[static_cast<std::size_t>(free_gt[a])],
              hyp_frame[static_cast<std::size_t>(free_hyp[b])], cfg);
          cost.at(static_cast<int>(a), static_cast<int>(b)) =
              ov < 0.0 ? kBlocked : 1.0 - ov;
        }
      const std::vector<int> row_to_col = solve_assignment(cost);
      for (std::size_t a = 0; a < free_gt.size(); ++a) {
        const int b = row_to_col[a];
        if (b < 0) continue;
        const double ov = pair_overlap(
            *gt_frame[static_cast<std::size_t>(free_gt[a])],
            hyp_frame[static_cast<std::size_t>(free_hyp[static_cast<std::size_t>(b)])],
            cfg);
        if (ov < 0.0) continue;
        gt_match[static_cast<std::size_t>(free_gt[a])] =
            free_hyp[static_cast<std::size_t>(b)];
        hyp_match[static_cast<std::size_t>(
            free_hyp[static_cast<std::size_t>(b)])] = free_gt[a];
        match_overlap[static_cast<std::size_t>(free_gt[a])] = ov;
      }
    }

    // Counts and trajectory bookkeeping.
    active.clear();
    for (int i = 0; i < G; ++i) {
      const LabelRecord& g = *gt_frame[static_cast<std::size_t>(i)];
      TrajectoryState& traj = trajectories[g.track_id];
      const int j = gt_match[static_cast<std::size_t>(i)];
      if (j < 0) {
        ++c.fn;
        if (traj.ever_tracked) traj.in_gap = true;
        continue;
      }
      const int hyp_id = hyp_frame[static_cast<std::size_t>(j)].track_id;
      if (traj.last_hyp != -1 && traj.last_hyp != hyp_id) ++c.ids;
      if (traj.in_gap) {
        ++c.frag;
        traj.in_gap = false;
      }
      traj.last_hyp = hyp_id;
      traj.ever_tracked = true;
      ++c.matches;
      c.overlap_sum += match_overlap[static_cast<std::size_t>(i)];
      active[g.track_id] = hyp_id;
    }
    for (int j = 0; j < H; ++j) {
      if (hyp_match[static_cast<std::size_t>(j)] != -1) continue;
      if (inside_dont_care(hyp_frame[static_cast<std::size_t>(j)], dont_care,
                           cfg.iou_threshold))
        continue;
      ++c.fp;
    }
  }
  return c;
}

}  // namespace

ClearCounts clear_metrics(const std::vector<EvalSequence>& seqs,
                          const ClearConfig& cfg) {
  ClearCounts total;
  for (const EvalSequence& seq : seqs) {
    const ClearCounts c = clear_one_sequence(seq, cfg);
    total.fp += c.fp;
    total.fn += c.fn;
    total.ids += c.ids;
    total.frag += c.frag;
    total.gt += c.gt;
    total.matches += c.matches;
    total.overlap_sum += c.overlap_sum;
  }
  return total;
}

double smota_term(long long gt, long long fp, long long fn, long long ids,
                  double r) {
  if (gt <= 0 || r <= 0.0) return 0.0;
  const double num = static_cast<double>(fp + fn + ids) -
                     (1.0 - r) * static_cast<double>(gt);
  // The upper clamp keeps the term at 1 when the achieved recall overshoots
  // the target between two confidence cutoffs.
  return std::min(1.0, std::max(0.0, 1.0 - num / (r * static_cast<double>(gt))));
}

namespace {

std::vector<EvalSequence> filter_by_score(const std::vector<EvalSequence>& seqs,
                                          double cutoff) {
  std::vector<EvalSequence> out;
  out.reserve(seqs.size());
  for (const EvalSequence& seq : seqs) {
    EvalSequence f;
    f.gt = seq.gt;
    f.hyp.resize(seq.hyp.size());
    for (std::size_t i = 0; i < seq.hyp.size(); ++i)
      for (const LabelRecord& r : seq.hyp[i])
        if (r.score.value_or(1.0) >= cutoff) f.hyp[i].push_back(r);
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<double> distinct_scores_desc(const std::vector<EvalSequence>& seqs) {
  std::set<double> scores;
  for (const EvalSequence& seq : seqs)
    for (const auto& frame : seq.hyp)
      for (const LabelRecord& r : frame) scores.insert(r.score.value_or(1.0));
  return std::vector<double>(scores.rbegin(), scores.rend());
}

// Shared lazy evaluation of the sweep: one CLEAR pass per candidate cutoff,
// computed at most once.
struct SweepCache {
  const std::vector<EvalSequence>* seqs = nullptr;
  const ClearConfig* cfg = nullptr;
  std::vector<double> cutoffs;  // descending
  std::vector<std::optional<ClearCounts>> counts;

  const ClearCounts& at(std::size_t k) {
    if (!counts[k])
      counts[k] = clear_metrics(filter_by_score(*seqs, cutoffs[k]), *cfg);
    return *counts[k];
  }
  double recall(std::size_t k) {
    const ClearCounts& c = at(k);
    return c.gt > 0 ? static_cast<double>(c.gt - c.fn) / c.gt : 0.0;
  }
};

std::optional<std::size_t> cutoff_for_recall(SweepCache& cache, double target) {
  for (std::size_t k = 0; k < cache.cutoffs.size(); ++k)
    if (cache.recall(k) >= target) return k;
  return std::nullopt;
}

}  // namespace

std::optional<double> threshold_for_recall(const std::vector<EvalSequence>& seqs,
                                           double target,
                                           const ClearConfig& cfg) {
  SweepCache cache;
  cache.seqs = &seqs;
  cache.cfg = &cfg;
  cache.cutoffs = distinct_scores_desc(seqs);
  if (target <= 0.0)
    return cache.cutoffs.empty() ? 1.0 : cache.cutoffs.front() + 1.0;
  cache.counts.assign(cache.cutoffs.size(), std::nullopt);
  const auto k = cutoff_for_recall(cache, target);
  if (!k) return std::nullopt;
  return cache.cutoffs[*k];
}

AmotaResult amota_suite(const std::vector<EvalSequence>& seqs,
                        int recall_points, const ClearConfig& cfg, int jobs) {
  if (recall_points < 1)
    throw Error(ErrorCode::InvalidArgument,
                "recall_points must be positive, got " +
                    std::to_string(recall_points));
  SweepCache cache;
  cache.seqs = &seqs;
  cache.cfg = &cfg;
  cache.cutoffs = distinct_scores_desc(seqs);
  cache.counts.assign(cache.cutoffs.size(), std::nullopt);

  if (jobs > 1 && !cache.cutoffs.empty()) {
    // Precompute every candidate concurrently; results are exact counts,
    // so the outcome matches the lazy path bit for bit.
    std::vector<std::thread> workers;
    std::atomic<std::size_t> next{0};
    const int n = std::min<int>(jobs, static_cast<int>(cache.cutoffs.size()));
    std::vector<std::optional<ClearCounts>>& slots = cache.counts;
    for (int w = 0; w < n; ++w)
      workers.emplace_back([&]() {
        while (true) {
          const std::size_t k = next.fetch_add(1);
          if (k >= cache.cutoffs.size()) return;
          slots[k] =
              clear_metrics(filter_by_score(seqs, cache.cutoffs[k]), cfg);
        }
      });
    for (std::thread& w : workers) w.join();
  }

  AmotaResult out;
  const int L = recall_points;
  // Sum first, divide once: a run whose every point scores 1 must average
  // to exactly 1.
  double samota_sum = 0.0, amota_sum = 0.0, amotp_sum = 0.0;
  for (int k = 1; k <= L; ++k) {
    RecallPoint p;
    p.recall = static_cast<double>(k) / L;
    const auto idx = cutoff_for_recall(cache, p.recall);
    if (idx) {
      p.reachable = true;
      p.threshold = cache.cutoffs[*idx];
      p.counts = cache.at(*idx);
      p.smota = smota_term(p.counts.gt, p.counts.fp, p.counts.fn, p.counts.ids,
                           p.recall);
      p.amota_term =
          p.counts.gt > 0
              ? std::max(0.0, 1.0 - static_cast<double>(p.counts.fp + p.counts.fn +
                                                        p.counts.ids) /
                                        static_cast<double>(p.counts.gt))
              : 0.0;
      p.motp = p.counts.motp();
    }
    samota_sum += p.smota;
    amota_sum += p.amota_term;
    amotp_sum += p.motp;
    out.points.push_back(p);
  }
  out.samota = samota_sum / L;
  out.amota = amota_sum / L;
  out.amotp = amotp_sum / L;
  return out;
}

MetricsReport evaluate(const std::vector<EvalSequence>& seqs, int recall_points,
                       const ClearConfig& cfg, int jobs) {
  MetricsReport report;
  const ClearCounts full = clear_metrics(seqs, cfg);
  report.mota = full.mota();
  report.motp = full.motp();
  report.ids = full.ids;
  report.frag = full.frag;
  report.fp = full.fp;
  report.fn = full.fn;
  report.gt = full.gt;
  AmotaResult sweep = amota_suite(seqs, recall_points, cfg, jobs);
  report.samota = sweep.samota;
  report.amota = sweep.amota;
  report.amotp = sweep.amotp;
  report.points = std::move(sweep.points);
  return report;
}

namespace {

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * v);
  return buf;
}

}  // namespace

void render_report(const MetricsReport& report, std::ostream& out) {
  out << "metric      value\n";
  out << "---------   --------\n";
  const auto row = [&](const char* name, const std::string& v) {
    out << name;
    for (std::size_t i = std::string(name).size(); i < 12; ++i) out << ' ';
    out << v << '\n';
  };
  row("sAMOTA", pct(report.samota));
  row("AMOTA", pct(report.amota));
  row("AMOTP", pct(report.amotp));
  row("MOTA", pct(report.mota));
  row("MOTP", pct(report.motp));
  row("IDS", std::to_string(report.ids));
  row("FRAG", std::to_string(report.frag));
  row("FP", std::to_string(report.fp));
  row("FN", std::to_string(report.fn));
  row("GT", std::to_string(report.gt));
  out << '\n';
  out << "recall  reachable  threshold  fp      fn      ids   smota   motp\n";
  for (const RecallPoint& p : report.points) {
    char line[160];
    if (p.reachable)
      std::snprintf(line, sizeof(line),
                    "%.3f   yes        %-9.4g  %-6lld  %-6lld  %-4lld  %.4f  %.4f",
                    p.recall, p.threshold, p.counts.fp, p.counts.fn,
                    p.counts.ids, p.smota, p.motp);
    else
      std::snprintf(line, sizeof(line), "%.3f   no", p.recall);
    out << line << '\n';
  }
}

void render_report_kv(const MetricsReport& report, std::ostream& out) {
  out << "samota=" << format_float(report.samota) << '\n';
  out << "amota=" << format_float(report.amota) << '\n';
  out << "amotp=" << format_float(report.amotp) << '\n';
  out << "mota=" << format_float(report.mota) << '\n';
  out << "motp=" << format_float(report.motp) << '\n';
  out << "ids=" << report.ids << '\n';
  out << "frag=" << report.frag << '\n';
  out << "fp=" << report.fp << '\n';
  out << "fn=" << report.fn << '\n';
  out << "gt=" << report.gt << '\n';
}

}  // namespace gmot
