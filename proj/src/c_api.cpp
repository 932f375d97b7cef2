#include "graphmot.h"

#include <algorithm>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "gmot/assoc.hpp"
#include "gmot/config.hpp"
#include "gmot/error.hpp"
#include "gmot/geometry.hpp"
#include "gmot/pipeline.hpp"
#include "gmot/tracker.hpp"

namespace {

thread_local std::string g_last_error;

gmot_status map_code(gmot::ErrorCode code) {
  switch (code) {
    case gmot::ErrorCode::InvalidArgument:
      return GMOT_ERROR_INVALID_ARGUMENT;
    case gmot::ErrorCode::Parse:
      return GMOT_ERROR_PARSE;
    case gmot::ErrorCode::Io:
      return GMOT_ERROR_IO;
    case gmot::ErrorCode::Numeric:
      return GMOT_ERROR_NUMERIC;
  }
  return GMOT_ERROR_UNKNOWN;
}

template <typename Fn>
gmot_status guarded(Fn&& fn) noexcept {
  try {
    fn();
    g_last_error.clear();
    return GMOT_OK;
  } catch (const gmot::Error& e) {
    g_last_error = e.what();
    return map_code(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return GMOT_ERROR_UNKNOWN;
  } catch (...) {
    g_last_error = "unknown error";
    return GMOT_ERROR_UNKNOWN;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw gmot::Error(gmot::ErrorCode::InvalidArgument, what);
}

gmot::RunContext context_for(const gmot_config* cfg, const char* output_dir);

gmot::Detection to_detection(const gmot_detection& in, int frame,
                             const std::string& class_label) {
  gmot::Detection d;
  d.frame = frame;
  d.box3d = gmot::Box3D{{in.x, in.y, in.z}, in.h, in.w, in.l, in.yaw};
  d.box2d = gmot::Box2D{in.left, in.top, in.right, in.bottom};
  d.score = in.score;
  d.class_label = class_label;
  if (in.app2d && in.app2d_len > 0)
    d.app2d.assign(in.app2d, in.app2d + in.app2d_len);
  if (in.app3d && in.app3d_len > 0)
    d.app3d.assign(in.app3d, in.app3d + in.app3d_len);
  return d;
}

}  // namespace

struct gmot_config {
  gmot::ConfigMap map = gmot::ConfigMap::defaults();
};

struct gmot_tracker {
  gmot::RunConfig rc;
  gmot::ParamStore params;
  bool learned = false;
  std::string class_label;
  std::unique_ptr<gmot::Tracker> impl;
  std::vector<gmot_track> out;
};

namespace {

gmot::RunContext context_for(const gmot_config* cfg, const char* output_dir) {
  require(cfg != nullptr, "cfg is NULL");
  require(output_dir != nullptr, "output_dir is NULL");
  return gmot::make_run_context(cfg->map, output_dir);
}

}  // namespace

extern "C" {

const char* gmot_version(void) { return gmot::kVersion; }

const char* gmot_last_error(void) { return g_last_error.c_str(); }

gmot_config* gmot_config_create(void) {
  try {
    return new gmot_config();
  } catch (...) {
    return nullptr;
  }
}

void gmot_config_destroy(gmot_config* cfg) { delete cfg; }

gmot_status gmot_config_load_file(gmot_config* cfg, const char* path) {
  return guarded([&] {
    require(cfg != nullptr, "cfg is NULL");
    require(path != nullptr, "path is NULL");
    gmot::ConfigMap loaded = gmot::ConfigMap::from_file(path);
    cfg->map = std::move(loaded);
  });
}

gmot_status gmot_config_set(gmot_config* cfg, const char* key,
                            const char* value) {
  return guarded([&] {
    require(cfg != nullptr, "cfg is NULL");
    require(key != nullptr, "key is NULL");
    require(value != nullptr, "value is NULL");
    cfg->map.set(key, value);
  });
}

gmot_status gmot_config_get(const gmot_config* cfg, const char* key,
                            char* buffer, size_t buffer_size) {
  return guarded([&] {
    require(cfg != nullptr, "cfg is NULL");
    require(key != nullptr, "key is NULL");
    require(buffer != nullptr, "buffer is NULL");
    const std::string& value = cfg->map.get(key);
    require(buffer_size > value.size(), "buffer too small");
    std::memcpy(buffer, value.c_str(), value.size() + 1);
  });
}

gmot_status gmot_run_synth(const gmot_config* cfg, const char* output_dir) {
  return guarded([&] { gmot::run_synth(context_for(cfg, output_dir)); });
}

gmot_status gmot_run_train(const gmot_config* cfg, const char* data_dir,
                           const char* init_checkpoint, const char* output_dir,
                           double* final_loss) {
  return guarded([&] {
    require(data_dir != nullptr, "data_dir is NULL");
    const gmot::TrainSummary summary =
        gmot::run_train(context_for(cfg, output_dir), data_dir,
                        init_checkpoint ? init_checkpoint : "");
    if (final_loss) *final_loss = summary.final_epoch_loss;
  });
}

gmot_status gmot_run_track(const gmot_config* cfg, const char* data_dir,
                           const char* checkpoint, const char* output_dir) {
  return guarded([&] {
    require(data_dir != nullptr, "data_dir is NULL");
    gmot::run_track(context_for(cfg, output_dir), data_dir,
                    checkpoint ? checkpoint : "");
  });
}

gmot_status gmot_run_eval(const gmot_config* cfg, const char* gt_dir,
                          const char* result_dir, const char* output_dir,
                          gmot_metrics* metrics) {
  return guarded([&] {
    require(gt_dir != nullptr, "gt_dir is NULL");
    require(result_dir != nullptr, "result_dir is NULL");
    const gmot::EvalSummary summary =
        gmot::run_eval(context_for(cfg, output_dir), gt_dir, result_dir);
    if (metrics) {
      const gmot::MetricsReport& r = summary.report;
      *metrics = gmot_metrics{r.samota, r.amota, r.amotp, r.mota, r.motp,
                              r.ids,    r.frag,  r.fp,    r.fn,   r.gt};
    }
  });
}

gmot_status gmot_run_gradcheck(const gmot_config* cfg, const char* output_dir,
                               double tolerance, double* max_rel_error) {
  return guarded([&] {
    const gmot::GradcheckSummary summary =
        gmot::run_gradcheck(context_for(cfg, output_dir), tolerance);
    if (max_rel_error) *max_rel_error = summary.max_rel_error;
    if (!summary.pass)
      throw gmot::Error(gmot::ErrorCode::Numeric,
                        "gradient check failed: max relative error " +
                            gmot::format_float(summary.max_rel_error) +
                            " exceeds " + gmot::format_float(tolerance) +
                            " (worst " + summary.worst_param + ")");
  });
}

gmot_status gmot_run_bench(const gmot_config* cfg, const char* output_dir,
                           gmot_bench_stats* stats) {
  return guarded([&] {
    const gmot::BenchSummary summary =
        gmot::run_bench(context_for(cfg, output_dir));
    if (stats)
      *stats = gmot_bench_stats{summary.iou3d_per_sec,
                                summary.assignments_per_sec,
                                summary.forwards_per_sec};
  });
}

gmot_status gmot_tracker_create(const gmot_config* cfg, const char* checkpoint,
                                gmot_tracker** out) {
  return guarded([&] {
    require(cfg != nullptr, "cfg is NULL");
    require(out != nullptr, "out is NULL");
    auto handle = std::make_unique<gmot_tracker>();
    handle->rc = gmot::make_run_config(cfg->map);
    if (handle->rc.tracker.matcher == "gnn") {
      require(checkpoint != nullptr, "the gnn matcher needs a checkpoint");
      handle->params.load(checkpoint);
      handle->learned = true;
    }
    handle->class_label = handle->rc.tracker.class_filter.empty()
                              ? "Car"
                              : handle->rc.tracker.class_filter;
    handle->impl = std::make_unique<gmot::Tracker>(
        handle->rc.tracker, handle->learned ? &handle->params : nullptr,
        handle->rc.feat, handle->rc.gnn, nullptr);
    *out = handle.release();
  });
}

void gmot_tracker_destroy(gmot_tracker* tracker) { delete tracker; }

gmot_status gmot_tracker_step(gmot_tracker* tracker, int frame,
                              const gmot_detection* detections, size_t count,
                              const gmot_track** tracks, size_t* track_count) {
  return guarded([&] {
    require(tracker != nullptr, "tracker is NULL");
    require(detections != nullptr || count == 0, "detections is NULL");
    require(tracks != nullptr, "tracks is NULL");
    require(track_count != nullptr, "track_count is NULL");
    std::vector<gmot::Detection> dets;
    dets.reserve(count);
    for (size_t i = 0; i < count; ++i)
      dets.push_back(to_detection(detections[i], frame, tracker->class_label));
    const std::vector<gmot::LabelRecord> records =
        tracker->impl->step(frame, dets);
    tracker->out.clear();
    tracker->out.reserve(records.size());
    for (const gmot::LabelRecord& r : records) {
      gmot_track t;
      t.track_id = r.track_id;
      t.x = r.x;
      t.y = r.y;
      t.z = r.z;
      t.h = r.h;
      t.w = r.w;
      t.l = r.l;
      t.yaw = r.rotation_y;
      t.left = r.box2d.left;
      t.top = r.box2d.top;
      t.right = r.box2d.right;
      t.bottom = r.box2d.bottom;
      t.score = r.score.value_or(1.0);
      tracker->out.push_back(t);
    }
    *tracks = tracker->out.data();
    *track_count = tracker->out.size();
  });
}

double gmot_iou2d(const double a[4], const double b[4]) {
  if (!a || !b) return 0.0;
  return gmot::iou2d(gmot::Box2D{a[0], a[1], a[2], a[3]},
                     gmot::Box2D{b[0], b[1], b[2], b[3]});
}

double gmot_iou3d(const gmot_detection* a, const gmot_detection* b) {
  if (!a || !b) return 0.0;
  return gmot::iou3d(gmot::Box3D{{a->x, a->y, a->z}, a->h, a->w, a->l, a->yaw},
                     gmot::Box3D{{b->x, b->y, b->z}, b->h, b->w, b->l, b->yaw});
}

gmot_status gmot_solve_assignment(const double* cost, int rows, int cols,
                                  int* row_to_col) {
  return guarded([&] {
    require(rows >= 0 && cols >= 0, "negative dimensions");
    require(cost != nullptr || rows * cols == 0, "cost is NULL");
    require(row_to_col != nullptr || rows == 0, "row_to_col is NULL");
    gmot::CostMatrix m(rows, cols);
    if (cost)
      std::copy(cost, cost + static_cast<std::size_t>(rows) * cols,
                m.v.begin());
    const std::vector<int> assignment = gmot::solve_assignment(m);
    std::copy(assignment.begin(), assignment.end(), row_to_col);
  });
}

}  // extern "C"
