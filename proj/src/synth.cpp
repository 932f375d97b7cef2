#include "gmot/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "gmot/error.hpp"
#include "gmot/feat_file.hpp"
#include "gmot/rng.hpp"

namespace gmot {

namespace {

constexpr double kDepthMin = 6.0;

Mat34 synth_calib() {
  // Pinhole with KITTI-like intrinsics.
  Mat34 P;
  P.m = {721.5, 0.0, 609.5, 0.0,  //
         0.0, 721.5, 172.8, 0.0,  //
         0.0, 0.0, 1.0, 0.0};
  return P;
}

struct Pose {
  double x = 0.0, z = 0.0, yaw = 0.0;
};

struct ObjectPath {
  int id = 0;
  double h = 1.5, w = 1.6, l = 3.9;
  int spawn = 0;
  std::vector<Pose> poses;  // poses[k] is the pose at frame spawn + k

  bool alive_at(int frame) const {
    return frame >= spawn && frame < spawn + static_cast<int>(poses.size());
  }
  const Pose& at(int frame) const {
    return poses[static_cast<std::size_t>(frame - spawn)];
  }
};

double heading(double vx, double vz) { return std::atan2(-vz, vx); }

void sample_dims(ObjectPath& o, Rng& rng) {
  o.h = rng.uniform(1.4, 1.7);
  o.w = rng.uniform(1.5, 1.8);
  o.l = rng.uniform(3.5, 4.5);
}

std::vector<ObjectPath> build_clean(const ScenarioConfig& cfg, Rng& rng) {
  std::vector<ObjectPath> objects;
  const double half = 0.45 * cfg.world_extent;
  const double z_lo = kDepthMin + 4.0;
  const double z_hi = kDepthMin + cfg.world_extent - 4.0;
  for (int i = 0; i < cfg.objects; ++i) {
    ObjectPath o;
    o.id = i;
    sample_dims(o, rng);
    const double t = cfg.objects > 1
                         ? static_cast<double>(i) / (cfg.objects - 1)
                         : 0.5;
    const double z = z_lo + t * (z_hi - z_lo);
    const double dir = (i % 2 == 0) ? 1.0 : -1.0;
    const double speed = rng.uniform(0.4, 0.8) * 2.0 * half / cfg.frames;
    double x = -dir * half;
    for (int f = 0; f < cfg.frames; ++f) {
      o.poses.push_back({x, z, heading(dir * speed, 0.0)});
      x += dir * speed;
    }
    objects.push_back(std::move(o));
  }
  return objects;
}

std::vector<ObjectPath> build_crossing(const ScenarioConfig& cfg, Rng& rng) {
  if (cfg.objects % 2 != 0)
    throw Error(ErrorCode::InvalidArgument,
                "crossing preset needs an even object count, got " +
                    std::to_string(cfg.objects));
  std::vector<ObjectPath> objects;
  const double half = 0.45 * cfg.world_extent;
  const int pairs = cfg.objects / 2;
  for (int p = 0; p < pairs; ++p) {
    // One pair per depth band; the two members swap sides through x = 0
    // at mid sequence, where position alone cannot separate them. The
    // second member runs half a step out of phase so the meeting point
    // falls between frames: right after it, each last box sits closer to
    // the other object's detection, which flips any position-only matcher
    // deterministically instead of leaving a tie.
    const double z = kDepthMin + 6.0 + 9.0 * p + rng.uniform(-1.0, 1.0);
    const double speed = 2.0 * half / cfg.frames * rng.uniform(0.9, 1.1);
    const double phase = speed * rng.uniform(0.4, 0.6);
    for (int side = 0; side < 2; ++side) {
      ObjectPath o;
      o.id = 2 * p + side;
      sample_dims(o, rng);
      const double dir = side == 0 ? 1.0 : -1.0;
      double x = -dir * (speed * cfg.frames / 2.0) + (side == 1 ? phase : 0.0);
      for (int f = 0; f < cfg.frames; ++f) {
        o.poses.push_back({x, z, heading(dir * speed, 0.0)});
        x += dir * speed;
      }
      objects.push_back(std::move(o));
    }
  }
  return objects;
}

std::vector<ObjectPath> build_random(const ScenarioConfig& cfg, Rng& rng) {
  std::vector<ObjectPath> objects;
  const double half = 0.4 * cfg.world_extent;
  const double z_lo = kDepthMin + 3.0;
  const double z_hi = kDepthMin + cfg.world_extent - 3.0;
  for (int i = 0; i < cfg.objects; ++i) {
    ObjectPath o;
    o.id = i;
    sample_dims(o, rng);
    o.spawn = static_cast<int>(rng.uniform() * (cfg.frames / 3 + 1));
    const int lifetime =
        cfg.frames / 2 +
        static_cast<int>(rng.uniform() * (cfg.frames - cfg.frames / 2 + 1));
    const int last = std::min(cfg.frames, o.spawn + lifetime);

    double x = rng.uniform(-half, half);
    double z = rng.uniform(z_lo, z_hi);
    double tx = rng.uniform(-half, half);
    double tz = rng.uniform(z_lo, z_hi);
    double speed = rng.uniform(0.3, 1.0);
    double yaw = heading(tx - x, tz - z);
    for (int f = o.spawn; f < last; ++f) {
      o.poses.push_back({x, z, yaw});
      double dx = tx - x, dz = tz - z;
      double dist = std::sqrt(dx * dx + dz * dz);
      while (dist < speed) {
        // Arrived; pick the next waypoint and keep moving.
        tx = rng.uniform(-half, half);
        tz = rng.uniform(z_lo, z_hi);
        speed = rng.uniform(0.3, 1.0);
        dx = tx - x;
        dz = tz - z;
        dist = std::sqrt(dx * dx + dz * dz);
      }
      x += speed * dx / dist;
      z += speed * dz / dist;
      yaw = heading(dx, dz);
    }
    objects.push_back(std::move(o));
  }
  return objects;
}

std::vector<double> unit_vector(int dim, Rng& rng) {
  std::vector<double> v(static_cast<std::size_t>(dim));
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (double& c : v) {
      c = rng.normal();
      norm2 += c * c;
    }
  } while (norm2 < 1e-12);
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& c : v) c *= inv;
  return v;
}

std::vector<float> noisy_embedding(const std::vector<double>& base,
                                   double sigma, Rng& rng) {
  std::vector<double> v(base.size());
  double norm2 = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    v[i] = base[i] + sigma * rng.normal();
    norm2 += v[i] * v[i];
  }
  const double inv = norm2 > 1e-12 ? 1.0 / std::sqrt(norm2) : 0.0;
  std::vector<float> out(base.size());
  for (std::size_t i = 0; i < base.size(); ++i)
    out[i] = static_cast<float>(v[i] * inv);
  return out;
}

Box3D make_box(const Pose& p, double h, double w, double l) {
  // Camera sits 1.65 m above the ground plane; box origin is the bottom
  // face, so every object rests at y = 1.65.
  return Box3D{{p.x, 1.65, p.z}, h, w, l, wrap_angle(p.yaw)};
}

Box2D project_or_zero(const Box3D& b, const Mat34& P) {
  if (auto r = project_box(b, P)) return *r;
  return Box2D{};
}

SynthSequence generate_sequence(const ScenarioConfig& cfg, std::uint64_t seed,
                                int index) {
  const std::uint64_t base = seed + 977ull * static_cast<std::uint64_t>(index);
  Rng motion_rng = Rng::fork(base, 1);
  Rng noise_rng = Rng::fork(base, 2);
  Rng app_rng = Rng::fork(base, 3);
  Rng clutter_rng = Rng::fork(base, 4);

  std::vector<ObjectPath> objects;
  if (cfg.preset == "clean")
    objects = build_clean(cfg, motion_rng);
  else if (cfg.preset == "crossing")
    objects = build_crossing(cfg, motion_rng);
  else if (cfg.preset == "random")
    objects = build_random(cfg, motion_rng);
  else
    throw Error(ErrorCode::InvalidArgument,
                "unknown scenario preset '" + cfg.preset + "'");

  std::vector<std::vector<double>> bases;
  bases.reserve(objects.size());
  for (std::size_t i = 0; i < objects.size(); ++i)
    bases.push_back(unit_vector(cfg.emb_dim, app_rng));

  SynthSequence seq;
  seq.data.P2 = synth_calib();
  seq.data.num_frames = cfg.frames;
  seq.data.det_frames.assign(static_cast<std::size_t>(cfg.frames), {});
  seq.data.gt_frames.assign(static_cast<std::size_t>(cfg.frames), {});
  seq.det_identities.assign(static_cast<std::size_t>(cfg.frames), {});

  const double half = 0.5 * cfg.world_extent;
  for (int f = 0; f < cfg.frames; ++f) {
    for (const ObjectPath& o : objects) {
      if (!o.alive_at(f)) continue;
      const Pose& p = o.at(f);
      const Box3D gt_box = make_box(p, o.h, o.w, o.l);

      LabelRecord gt;
      gt.frame = f;
      gt.track_id = o.id;
      gt.class_label = "Car";
      gt.alpha = wrap_angle(gt_box.yaw - std::atan2(gt_box.center.x, gt_box.center.z));
      gt.box2d = project_or_zero(gt_box, seq.data.P2);
      gt.h = gt_box.h;
      gt.w = gt_box.w;
      gt.l = gt_box.l;
      gt.x = gt_box.center.x;
      gt.y = gt_box.center.y;
      gt.z = gt_box.center.z;
      gt.rotation_y = gt_box.yaw;
      seq.data.gt_frames[static_cast<std::size_t>(f)].push_back(gt);

      if (noise_rng.uniform() < cfg.dropout) continue;
      Detection d;
      d.frame = f;
      d.box3d = gt_box;
      d.box3d.center.x += cfg.sigma_pos * noise_rng.normal();
      d.box3d.center.z += cfg.sigma_pos * noise_rng.normal();
      d.box3d.h = std::max(0.2, d.box3d.h + cfg.sigma_dim * noise_rng.normal());
      d.box3d.w = std::max(0.2, d.box3d.w + cfg.sigma_dim * noise_rng.normal());
      d.box3d.l = std::max(0.2, d.box3d.l + cfg.sigma_dim * noise_rng.normal());
      d.box3d.yaw = wrap_angle(d.box3d.yaw + cfg.sigma_yaw * noise_rng.normal());
      d.box2d = project_or_zero(d.box3d, seq.data.P2);
      d.score = noise_rng.uniform(0.7, 1.0);
      d.app2d = noisy_embedding(bases[static_cast<std::size_t>(o.id)],
                                cfg.sigma_app, app_rng);
      d.app3d = noisy_embedding(bases[static_cast<std::size_t>(o.id)],
                                cfg.sigma_app, app_rng);
      seq.data.det_frames[static_cast<std::size_t>(f)].push_back(std::move(d));
      seq.det_identities[static_cast<std::size_t>(f)].push_back(o.id);
    }

    const int clutter = clutter_rng.poisson(cfg.fp_rate);
    for (int c = 0; c < clutter; ++c) {
      Detection d;
      d.frame = f;
      Pose p;
      p.x = clutter_rng.uniform(-half, half);
      p.z = clutter_rng.uniform(kDepthMin, kDepthMin + cfg.world_extent);
      p.yaw = clutter_rng.uniform(-3.14159265358979323846, 3.14159265358979323846);
      d.box3d = make_box(p, clutter_rng.uniform(1.3, 1.8),
                         clutter_rng.uniform(1.4, 1.9),
                         clutter_rng.uniform(3.2, 4.8));
      d.box2d = project_or_zero(d.box3d, seq.data.P2);
      d.score = clutter_rng.uniform(0.3, 0.7);
      const std::vector<double> base = unit_vector(cfg.emb_dim, clutter_rng);
      d.app2d = noisy_embedding(base, cfg.sigma_app, clutter_rng);
      d.app3d = noisy_embedding(base, cfg.sigma_app, clutter_rng);
      seq.data.det_frames[static_cast<std::size_t>(f)].push_back(std::move(d));
      seq.det_identities[static_cast<std::size_t>(f)].push_back(-1);
    }
  }
  return seq;
}

std::string sequence_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d", index);
  return buf;
}

}  // namespace

SynthScenario generate_scenario(const ScenarioConfig& cfg, std::uint64_t seed) {
  if (cfg.frames < 2)
    throw Error(ErrorCode::InvalidArgument, "scenario needs at least 2 frames");
  if (cfg.objects < 1)
    throw Error(ErrorCode::InvalidArgument, "scenario needs at least 1 object");
  if (cfg.sequences < 1)
    throw Error(ErrorCode::InvalidArgument, "scenario needs at least 1 sequence");
  if (cfg.emb_dim < 1)
    throw Error(ErrorCode::InvalidArgument, "embedding dim must be positive");
  if (cfg.world_extent < 10.0)
    throw Error(ErrorCode::InvalidArgument, "world extent must be at least 10");

  SynthScenario scenario;
  for (int s = 0; s < cfg.sequences; ++s) {
    SynthSequence seq = generate_sequence(cfg, seed, s);
    seq.data.id = sequence_name(s);
    scenario.sequences.push_back(std::move(seq));
  }
  return scenario;
}

void write_scenario(const SynthScenario& scenario, const std::string& root) {
  namespace fs = std::filesystem;
  for (const char* sub : {"label", "det", "calib", "feat"})
    fs::create_directories(fs::path(root) / sub);

  for (const SynthSequence& seq : scenario.sequences) {
    const std::string& id = seq.data.id;
    {
      std::ofstream out(fs::path(root) / "label" / (id + ".txt"));
      if (!out) throw Error(ErrorCode::Io, "cannot write labels for " + id);
      std::vector<LabelRecord> flat;
      for (const auto& frame : seq.data.gt_frames)
        flat.insert(flat.end(), frame.begin(), frame.end());
      write_results(flat, out);
    }
    {
      std::ofstream out(fs::path(root) / "det" / (id + ".txt"));
      if (!out) throw Error(ErrorCode::Io, "cannot write detections for " + id);
      write_detections(seq.data.det_frames, out);
    }
    {
      std::ofstream out(fs::path(root) / "calib" / (id + ".txt"));
      if (!out) throw Error(ErrorCode::Io, "cannot write calib for " + id);
      out << "P2:";
      for (double v : seq.data.P2.m) out << ' ' << format_float(v);
      out << '\n';
    }
    std::vector<std::vector<float>> rows2d, rows3d;
    for (const auto& frame : seq.data.det_frames)
      for (const Detection& d : frame) {
        rows2d.push_back(d.app2d);
        rows3d.push_back(d.app3d);
      }
    const std::uint32_t dim =
        rows2d.empty() ? 0 : static_cast<std::uint32_t>(rows2d[0].size());
    FeatFile::write((fs::path(root) / "feat" / (id + ".app2d.feat")).string(),
                    dim, rows2d);
    FeatFile::write((fs::path(root) / "feat" / (id + ".app3d.feat")).string(),
                    dim, rows3d);
  }
}

std::vector<std::string> list_sequence_ids(const std::string& root) {
  namespace fs = std::filesystem;
  const fs::path det_dir = fs::path(root) / "det";
  if (!fs::is_directory(det_dir))
    throw Error(ErrorCode::Io, "no det/ directory under " + root);
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(det_dir)) {
    if (!entry.is_regular_file()) continue;
    const fs::path p = entry.path();
    if (p.extension() == ".txt") ids.push_back(p.stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<SequenceData> load_sequence_dir(
    const std::string& root, const std::vector<std::string>& ids) {
  namespace fs = std::filesystem;
  std::vector<SequenceData> out;
  for (const std::string& id : ids) {
    SequenceData seq;
    seq.id = id;

    const fs::path calib_path = fs::path(root) / "calib" / (id + ".txt");
    {
      std::ifstream in(calib_path);
      if (!in)
        throw Error(ErrorCode::Io, "cannot open " + calib_path.string());
      seq.P2 = parse_calib(in);
    }

    const fs::path label_path = fs::path(root) / "label" / (id + ".txt");
    int gt_frames = 0;
    if (fs::exists(label_path)) {
      std::ifstream in(label_path);
      if (!in)
        throw Error(ErrorCode::Io, "cannot open " + label_path.string());
      seq.gt_frames = group_labels_by_frame(parse_labels(in));
      gt_frames = static_cast<int>(seq.gt_frames.size());
    }

    const fs::path det_path = fs::path(root) / "det" / (id + ".txt");
    {
      std::ifstream in(det_path);
      if (!in) throw Error(ErrorCode::Io, "cannot open " + det_path.string());
      DetectionParseOptions opts;
      opts.min_frames = gt_frames;
      DetectionParseResult res = parse_detections(in, opts);
      seq.det_frames = std::move(res.frames);
    }
    if (static_cast<int>(seq.gt_frames.size()) <
        static_cast<int>(seq.det_frames.size()))
      seq.gt_frames.resize(seq.det_frames.size());
    seq.num_frames = static_cast<int>(seq.det_frames.size());

    for (const char* branch : {"app2d", "app3d"}) {
      const fs::path feat_path =
          fs::path(root) / "feat" / (id + "." + branch + ".feat");
      if (!fs::exists(feat_path)) continue;
      const FeatFile feats = FeatFile::load(feat_path.string());
      std::uint32_t row = 0;
      for (auto& frame : seq.det_frames)
        for (Detection& d : frame) {
          if (row >= feats.rows())
            throw Error(ErrorCode::Parse,
                        feat_path.string() + ": has " +
                            std::to_string(feats.rows()) +
                            " rows but the sequence has more detections");
          const auto r = feats.row(row++);
          std::vector<float>& dst =
              std::string(branch) == "app2d" ? d.app2d : d.app3d;
          dst.assign(r.begin(), r.end());
        }
      if (row != feats.rows())
        throw Error(ErrorCode::Parse,
                    feat_path.string() + ": has " + std::to_string(feats.rows()) +
                        " rows but the sequence has " + std::to_string(row) +
                        " detections");
    }
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace gmot
