#include "gmot/featnet.hpp"

#include <algorithm>
#include <cmath>

#include "gmot/error.hpp"

namespace gmot {

std::array<double, 4> motion_feat_2d(const Box2D& prev, const Box2D& cur) {
  return {(cur.cx() - prev.cx()) / prev.width(),
          (cur.cy() - prev.cy()) / prev.height(),
          std::log(cur.width() / prev.width()),
          std::log(cur.height() / prev.height())};
}

std::array<double, 7> motion_feat_3d(const Box3D& prev, const Box3D& cur) {
  return {cur.center.x - prev.center.x,
          cur.center.y - prev.center.y,
          cur.center.z - prev.center.z,
          wrap_angle(cur.yaw - prev.yaw),
          std::log(cur.h / prev.h),
          std::log(cur.w / prev.w),
          std::log(cur.l / prev.l)};
}

namespace {

std::vector<double> appearance_or_error(const std::vector<float>& stored,
                                        int want_dim, const char* branch,
                                        int frame, int index,
                                        const std::string& provider) {
  if (provider == "zeros")
    return std::vector<double>(static_cast<std::size_t>(want_dim), 0.0);
  if (provider != "stored" && provider != "file")
    throw Error(ErrorCode::InvalidArgument,
                "unknown appearance provider '" + provider + "'");
  if (stored.empty())
    throw Error(ErrorCode::InvalidArgument,
                std::string(branch) + ": frame " + std::to_string(frame) +
                    ", detection " + std::to_string(index) +
                    ": no appearance entry");
  if (static_cast<int>(stored.size()) != want_dim)
    throw Error(ErrorCode::InvalidArgument,
                std::string(branch) + ": frame " + std::to_string(frame) +
                    ", detection " + std::to_string(index) + ": dim " +
                    std::to_string(stored.size()) + ", configured " +
                    std::to_string(want_dim));
  return std::vector<double>(stored.begin(), stored.end());
}

}  // namespace

RawFeatures detection_raw(const Detection& d, int det_index,
                          const FeatConfig& cfg) {
  RawFeatures r;
  r.app2d = appearance_or_error(d.app2d, cfg.app2d_dim, "app2d", d.frame,
                                det_index, cfg.provider);
  r.app3d = appearance_or_error(d.app3d, cfg.app3d_dim, "app3d", d.frame,
                                det_index, cfg.provider);
  // prev = cur for a fresh detection, so both motion vectors stay zero.
  return r;
}

RawFeatures track_raw(const Tracklet& t, const Box3D& pred3d,
                      const Box2D& pred2d, const FeatConfig& cfg) {
  RawFeatures r;
  r.app2d = appearance_or_error(t.cached_app2d, cfg.app2d_dim, "app2d",
                                t.last().frame, t.id, cfg.provider);
  r.app3d = appearance_or_error(t.cached_app3d, cfg.app3d_dim, "app3d",
                                t.last().frame, t.id, cfg.provider);
  if (t.last().box2d.valid() && pred2d.valid())
    r.mot2d = motion_feat_2d(t.last().box2d, pred2d);
  r.mot3d = motion_feat_3d(t.last().box3d, pred3d);
  return r;
}

Box3D predict_box3d(const Tracklet& t) {
  const TrackObservation& last = t.last();
  Box3D pred = last.box3d;
  if (t.history.size() >= 2) {
    const TrackObservation& prev = t.history[t.history.size() - 2];
    const double dt = last.frame - prev.frame;
    if (dt > 0.0) {
      pred.center.x += (last.box3d.center.x - prev.box3d.center.x) / dt;
      pred.center.y += (last.box3d.center.y - prev.box3d.center.y) / dt;
      pred.center.z += (last.box3d.center.z - prev.box3d.center.z) / dt;
    }
  }
  return pred;
}

Box2D predict_box2d(const Tracklet& t, const Box3D& pred3d, const Mat34* calib) {
  if (calib != nullptr) {
    if (auto projected = project_box(pred3d, *calib)) return *projected;
  }
  const TrackObservation& last = t.last();
  Box2D pred = last.box2d;
  if (t.history.size() >= 2) {
    const TrackObservation& prev = t.history[t.history.size() - 2];
    const double dt = last.frame - prev.frame;
    if (dt > 0.0 && prev.box2d.valid() && last.box2d.valid()) {
      const double dx = (last.box2d.cx() - prev.box2d.cx()) / dt;
      const double dy = (last.box2d.cy() - prev.box2d.cy()) / dt;
      pred.left += dx;
      pred.right += dx;
      pred.top += dy;
      pred.bottom += dy;
    }
  }
  return pred;
}

void init_fusion_params(ParamStore& store, const FeatConfig& cfg, Rng& rng) {
  const auto branch = [&](const std::string& name, int in_dim) {
    store.add_glorot("fuse." + name + ".W", in_dim, cfg.branch_dim, rng);
    store.add("fuse." + name + ".b", 1, cfg.branch_dim);
  };
  branch("app2d", cfg.app2d_dim);
  branch("app3d", cfg.app3d_dim);
  branch("mot2d", 4);
  branch("mot3d", 7);
  store.add_glorot("fuse.head.W", 4 * cfg.branch_dim, cfg.node_dim, rng);
  store.add("fuse.head.b", 1, cfg.node_dim);
}

namespace {

Tensor branch_block(const std::vector<RawFeatures>& raw, ParamStore& params,
                    const FeatConfig& cfg, const std::string& name,
                    bool enabled, int in_dim,
                    const std::function<const double*(const RawFeatures&)>& sel) {
  const int n = static_cast<int>(raw.size());
  if (!enabled) return Tensor::zeros(n, cfg.branch_dim);
  std::vector<double> data(static_cast<std::size_t>(n) * in_dim);
  for (int i = 0; i < n; ++i) {
    const double* src = sel(raw[static_cast<std::size_t>(i)]);
    std::copy(src, src + in_dim, data.begin() + static_cast<std::size_t>(i) * in_dim);
  }
  Tensor x = Tensor::constant(n, in_dim, std::move(data));
  const Tensor& W = params.get("fuse." + name + ".W");
  if (W.rows() != in_dim)
    throw Error(ErrorCode::InvalidArgument,
                "fuse." + name + ": input dim " + std::to_string(in_dim) +
                    ", weight expects " + std::to_string(W.rows()));
  return relu(add_rowvec(matmul(x, W), params.get("fuse." + name + ".b")));
}

}  // namespace

Tensor fuse(const std::vector<RawFeatures>& raw, ParamStore& params,
            const FeatConfig& cfg) {
  const int n = static_cast<int>(raw.size());
  for (int i = 0; i < n; ++i) {
    const RawFeatures& r = raw[static_cast<std::size_t>(i)];
    if (static_cast<int>(r.app2d.size()) != cfg.app2d_dim ||
        static_cast<int>(r.app3d.size()) != cfg.app3d_dim)
      throw Error(ErrorCode::InvalidArgument,
                  "fuse: object " + std::to_string(i) +
                      " appearance dims do not match the config");
    for (double v : r.mot2d)
      if (!std::isfinite(v))
        throw Error(ErrorCode::Numeric,
                    "fuse: object " + std::to_string(i) +
                        " has a non-finite 2D motion feature");
    for (double v : r.mot3d)
      if (!std::isfinite(v))
        throw Error(ErrorCode::Numeric,
                    "fuse: object " + std::to_string(i) +
                        " has a non-finite 3D motion feature");
  }
  const Tensor blocks[4] = {
      branch_block(raw, params, cfg, "app2d", cfg.use_app2d, cfg.app2d_dim,
                   [](const RawFeatures& r) { return r.app2d.data(); }),
      branch_block(raw, params, cfg, "app3d", cfg.use_app3d, cfg.app3d_dim,
                   [](const RawFeatures& r) { return r.app3d.data(); }),
      branch_block(raw, params, cfg, "mot2d", cfg.use_mot2d, 4,
                   [](const RawFeatures& r) { return r.mot2d.data(); }),
      branch_block(raw, params, cfg, "mot3d", cfg.use_mot3d, 7,
                   [](const RawFeatures& r) { return r.mot3d.data(); }),
  };
  const Tensor cat = concat_cols(std::span<const Tensor>(blocks, 4));
  return relu(add_rowvec(matmul(cat, params.get("fuse.head.W")),
                         params.get("fuse.head.b")));
}

}  // namespace gmot
