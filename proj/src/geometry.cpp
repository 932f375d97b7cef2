#include "gmot/geometry.hpp"

#include <algorithm>
#include <vector>

namespace gmot {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kAreaEps = 1e-12;

struct Point2 {
  double x, y;
};

double shoelace(const std::vector<Point2>& p) {
  double s = 0.0;
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& a = p[i];
    const Point2& b = p[(i + 1) % n];
    s += a.x * b.y - b.x * a.y;
  }
  return 0.5 * s;
}

// BEV footprint in the (x, z) ground plane, counter-clockwise.
std::vector<Point2> bev_footprint(const Box3D& b) {
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  const double hl = 0.5 * b.l;
  const double hw = 0.5 * b.w;
  // Local corners (length along x, width along z), rotated about y:
  // world x = c*lx + s*lz, world z = -s*lx + c*lz.
  const double lx[4] = {hl, hl, -hl, -hl};
  const double lz[4] = {hw, -hw, -hw, hw};
  std::vector<Point2> poly(4);
  for (int i = 0; i < 4; ++i) {
    poly[i] = {b.center.x + c * lx[i] + s * lz[i],
               b.center.z - s * lx[i] + c * lz[i]};
  }
  if (shoelace(poly) < 0.0) std::reverse(poly.begin(), poly.end());
  return poly;
}

// Sutherland-Hodgman clip of a convex subject against a convex CCW clipper.
std::vector<Point2> clip_convex(std::vector<Point2> subject,
                                const std::vector<Point2>& clip) {
  const std::size_t n = clip.size();
  for (std::size_t e = 0; e < n && !subject.empty(); ++e) {
    const Point2 a = clip[e];
    const Point2 b = clip[(e + 1) % n];
    const double ex = b.x - a.x;
    const double ey = b.y - a.y;
    std::vector<Point2> out;
    out.reserve(subject.size() + 1);
    const std::size_t m = subject.size();
    for (std::size_t i = 0; i < m; ++i) {
      const Point2 cur = subject[i];
      const Point2 nxt = subject[(i + 1) % m];
      const double side_cur = ex * (cur.y - a.y) - ey * (cur.x - a.x);
      const double side_nxt = ex * (nxt.y - a.y) - ey * (nxt.x - a.x);
      if (side_cur >= 0.0) out.push_back(cur);
      if ((side_cur > 0.0 && side_nxt < 0.0) ||
          (side_cur < 0.0 && side_nxt > 0.0)) {
        const double t = side_cur / (side_cur - side_nxt);
        out.push_back({cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)});
      }
    }
    subject = std::move(out);
  }
  return subject;
}

}  // namespace

double wrap_angle(double a) {
  double y = std::fmod(a + kPi, 2.0 * kPi);
  if (y < 0.0) y += 2.0 * kPi;
  return y - kPi;
}

double iou2d(const Box2D& a, const Box2D& b) {
  const double ix = std::min(a.right, b.right) - std::max(a.left, b.left);
  const double iy = std::min(a.bottom, b.bottom) - std::max(a.top, b.top);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double bev_intersection_area(const Box3D& a, const Box3D& b) {
  const std::vector<Point2> pa = bev_footprint(a);
  const std::vector<Point2> pb = bev_footprint(b);
  const std::vector<Point2> inter = clip_convex(pa, pb);
  if (inter.size() < 3) return 0.0;
  const double area = std::abs(shoelace(inter));
  return area < kAreaEps ? 0.0 : area;
}

double iou3d(const Box3D& a, const Box3D& b) {
  const double inter_area = bev_intersection_area(a, b);
  if (inter_area <= 0.0) return 0.0;
  // y points down: the box spans [center.y - h, center.y].
  const double dy = std::min(a.center.y, b.center.y) -
                    std::max(a.center.y - a.h, b.center.y - b.h);
  if (dy <= 0.0) return 0.0;
  const double inter = inter_area * dy;
  const double uni = a.volume() + b.volume() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double center_distance(const Box3D& a, const Box3D& b) {
  const double dx = a.center.x - b.center.x;
  const double dy = a.center.y - b.center.y;
  const double dz = a.center.z - b.center.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

std::array<Vec3, 8> box_corners(const Box3D& b) {
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  const double hl = 0.5 * b.l;
  const double hw = 0.5 * b.w;
  const double lx[8] = {hl, hl, -hl, -hl, hl, hl, -hl, -hl};
  const double lz[8] = {hw, -hw, -hw, hw, hw, -hw, -hw, hw};
  const double ly[8] = {0, 0, 0, 0, -b.h, -b.h, -b.h, -b.h};
  std::array<Vec3, 8> out;
  for (int i = 0; i < 8; ++i) {
    out[i] = {b.center.x + c * lx[i] + s * lz[i], b.center.y + ly[i],
              b.center.z - s * lx[i] + c * lz[i]};
  }
  return out;
}

std::optional<Box2D> project_box(const Box3D& b, const Mat34& P) {
  const std::array<Vec3, 8> corners = box_corners(b);
  Box2D out{1e300, 1e300, -1e300, -1e300};
  for (const Vec3& p : corners) {
    const double w = P.row_dot(2, p);
    if (w <= 0.0) return std::nullopt;
    const double u = P.row_dot(0, p) / w;
    const double v = P.row_dot(1, p) / w;
    out.left = std::min(out.left, u);
    out.right = std::max(out.right, u);
    out.top = std::min(out.top, v);
    out.bottom = std::max(out.bottom, v);
  }
  return out;
}

}  // namespace gmot
