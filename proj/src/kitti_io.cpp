#include "gmot/kitti_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace gmot {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

double parse_double(const std::string& tok, int line, int field) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || p != last)
    throw ParseError(line, field, "expected a number, got '" + tok + "'");
  return v;
}

int parse_int(const std::string& tok, int line, int field) {
  // KITTI files carry occasional "0.0"-style integers; accept via double.
  const double v = parse_double(tok, line, field);
  return static_cast<int>(v);
}

LabelRecord record_from_tokens(const std::vector<std::string>& t, int line,
                               bool with_track_id) {
  LabelRecord r;
  int f = 0;
  r.frame = parse_int(t[f], line, f + 1);
  ++f;
  if (with_track_id) {
    r.track_id = parse_int(t[f], line, f + 1);
    ++f;
  }
  r.class_label = t[f++];
  r.dont_care = (r.class_label == "DontCare");
  r.truncated = parse_double(t[f], line, f + 1);
  ++f;
  r.occluded = parse_int(t[f], line, f + 1);
  ++f;
  r.alpha = parse_double(t[f], line, f + 1);
  ++f;
  r.box2d.left = parse_double(t[f], line, f + 1);
  ++f;
  r.box2d.top = parse_double(t[f], line, f + 1);
  ++f;
  r.box2d.right = parse_double(t[f], line, f + 1);
  ++f;
  r.box2d.bottom = parse_double(t[f], line, f + 1);
  ++f;
  r.h = parse_double(t[f], line, f + 1);
  ++f;
  r.w = parse_double(t[f], line, f + 1);
  ++f;
  r.l = parse_double(t[f], line, f + 1);
  ++f;
  r.x = parse_double(t[f], line, f + 1);
  ++f;
  r.y = parse_double(t[f], line, f + 1);
  ++f;
  r.z = parse_double(t[f], line, f + 1);
  ++f;
  r.rotation_y = parse_double(t[f], line, f + 1);
  ++f;
  if (f < static_cast<int>(t.size())) {
    r.score = parse_double(t[f], line, f + 1);
  }
  if (r.frame < 0) throw ParseError(line, 1, "negative frame index");
  return r;
}

}  // namespace

std::vector<LabelRecord> parse_labels(std::istream& in) {
  std::vector<LabelRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::vector<std::string> t = split_ws(line);
    if (t.empty()) continue;
    if (t.size() != 17 && t.size() != 18)
      throw ParseError(line_no, static_cast<int>(t.size()),
                       "expected 17 or 18 fields, got " +
                           std::to_string(t.size()));
    out.push_back(record_from_tokens(t, line_no, /*with_track_id=*/true));
  }
  return out;
}

DetectionParseResult parse_detections(std::istream& in,
                                      const DetectionParseOptions& opts) {
  DetectionParseResult res;
  std::string line;
  int line_no = 0;
  int max_frame = opts.min_frames - 1;
  std::vector<Detection> flat;
  while (std::getline(in, line)) {
    ++line_no;
    const std::vector<std::string> t = split_ws(line);
    if (t.empty()) continue;
    if (t.size() != 17)
      throw ParseError(line_no, static_cast<int>(t.size()),
                       "expected 17 fields, got " + std::to_string(t.size()));
    const LabelRecord r = record_from_tokens(t, line_no, /*with_track_id=*/false);
    Detection d;
    d.frame = r.frame;
    d.class_label = r.class_label;
    d.box3d = r.box3d();
    d.box2d = r.box2d;
    double s = r.score.value();  // mandatory 17th field
    if (s < 0.0 || s > 1.0) {
      s = std::clamp(s, 0.0, 1.0);
      ++res.clamped_scores;
    }
    d.score = s;
    if (opts.calib != nullptr) {
      if (auto projected = project_box(d.box3d, *opts.calib)) d.box2d = *projected;
    }
    max_frame = std::max(max_frame, d.frame);
    flat.push_back(std::move(d));
  }
  res.frames.assign(static_cast<std::size_t>(max_frame + 1), {});
  for (Detection& d : flat) res.frames[static_cast<std::size_t>(d.frame)].push_back(std::move(d));
  if (opts.sort_by_score) {
    for (auto& bucket : res.frames) {
      std::stable_sort(bucket.begin(), bucket.end(),
                       [](const Detection& a, const Detection& b) {
                         return a.score > b.score;
                       });
    }
  }
  return res;
}

Mat34 parse_calib(std::istream& in) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::vector<std::string> t = split_ws(line);
    if (t.empty()) continue;
    if (t[0] == "P2:" || t[0] == "P2") {
      if (t.size() != 13)
        throw ParseError(line_no, static_cast<int>(t.size()),
                         "P2 expects 12 values, got " +
                             std::to_string(t.size() - 1));
      Mat34 P;
      for (int i = 0; i < 12; ++i) P.m[static_cast<std::size_t>(i)] = parse_double(t[static_cast<std::size_t>(i + 1)], line_no, i + 2);
      return P;
    }
  }
  throw Error(ErrorCode::Parse, "calibration stream has no P2 line");
}

std::string format_float(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

void write_results(const std::vector<LabelRecord>& records, std::ostream& out) {
  std::vector<const LabelRecord*> sorted;
  sorted.reserve(records.size());
  for (const LabelRecord& r : records) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const LabelRecord* a, const LabelRecord* b) {
                     if (a->frame != b->frame) return a->frame < b->frame;
                     return a->track_id < b->track_id;
                   });
  for (const LabelRecord* r : sorted) {
    out << r->frame << ' ' << r->track_id << ' ' << r->class_label << ' '
        << format_float(r->truncated) << ' ' << r->occluded << ' '
        << format_float(r->alpha) << ' ' << format_float(r->box2d.left) << ' '
        << format_float(r->box2d.top) << ' ' << format_float(r->box2d.right)
        << ' ' << format_float(r->box2d.bottom) << ' ' << format_float(r->h)
        << ' ' << format_float(r->w) << ' ' << format_float(r->l) << ' '
        << format_float(r->x) << ' ' << format_float(r->y) << ' '
        << format_float(r->z) << ' ' << format_float(r->rotation_y);
    if (r->score) out << ' ' << format_float(*r->score);
    out << '\n';
  }
}

void write_detections(const std::vector<std::vector<Detection>>& frames,
                      std::ostream& out) {
  for (std::size_t f = 0; f < frames.size(); ++f) {
    for (const Detection& d : frames[f]) {
      const double alpha =
          wrap_angle(d.box3d.yaw - std::atan2(d.box3d.center.x, d.box3d.center.z));
      out << f << ' ' << d.class_label << " 0 0 " << format_float(alpha) << ' '
          << format_float(d.box2d.left) << ' ' << format_float(d.box2d.top)
          << ' ' << format_float(d.box2d.right) << ' '
          << format_float(d.box2d.bottom) << ' ' << format_float(d.box3d.h)
          << ' ' << format_float(d.box3d.w) << ' ' << format_float(d.box3d.l)
          << ' ' << format_float(d.box3d.center.x) << ' '
          << format_float(d.box3d.center.y) << ' '
          << format_float(d.box3d.center.z) << ' '
          << format_float(d.box3d.yaw) << ' ' << format_float(d.score) << '\n';
    }
  }
}

std::vector<std::vector<LabelRecord>> group_labels_by_frame(
    const std::vector<LabelRecord>& records, int min_frames) {
  int max_frame = min_frames - 1;
  for (const LabelRecord& r : records) max_frame = std::max(max_frame, r.frame);
  std::vector<std::vector<LabelRecord>> frames(
      static_cast<std::size_t>(max_frame + 1));
  for (const LabelRecord& r : records) frames[static_cast<std::size_t>(r.frame)].push_back(r);
  return frames;
}

}  // namespace gmot
