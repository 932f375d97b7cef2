#pragma once

#include <array>
#include <cmath>
#include <optional>

namespace gmot {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

/// Axis-aligned image box in pixels.
struct Box2D {
  double left = 0.0, top = 0.0, right = 0.0, bottom = 0.0;

  double width() const { return right - left; }
  double height() const { return bottom - top; }
  double cx() const { return 0.5 * (left + right); }
  double cy() const { return 0.5 * (top + bottom); }
  double area() const { return width() * height(); }
  bool valid() const {
    return std::isfinite(left) && std::isfinite(top) && std::isfinite(right) &&
           std::isfinite(bottom) && left < right && top < bottom;
  }
};

/// Oriented 3D box in camera coordinates (x right, y down, z forward).
/// `center` is the bottom-face center; `yaw` rotates about the vertical
/// (y) axis; dims are (h, w, l) with l along the local x axis.
struct Box3D {
  Vec3 center;
  double h = 0.0, w = 0.0, l = 0.0;
  double yaw = 0.0;

  double volume() const { return h * w * l; }
  bool valid() const {
    return h > 0.0 && w > 0.0 && l > 0.0 && std::isfinite(center.x) &&
           std::isfinite(center.y) && std::isfinite(center.z) &&
           std::isfinite(h) && std::isfinite(w) && std::isfinite(l) &&
           std::isfinite(yaw);
  }
};

/// Row-major 3x4 projection matrix (KITTI P2 layout).
struct Mat34 {
  std::array<double, 12> m{};
  double row_dot(int r, const Vec3& p) const {
    return m[r * 4 + 0] * p.x + m[r * 4 + 1] * p.y + m[r * 4 + 2] * p.z +
           m[r * 4 + 3];
  }
};

/// Wraps an angle into [-pi, pi).
double wrap_angle(double a);

double iou2d(const Box2D& a, const Box2D& b);

/// BEV footprint intersection area via convex polygon clipping.
double bev_intersection_area(const Box3D& a, const Box3D& b);

/// Volume IoU: BEV polygon intersection times vertical overlap over union.
/// Clipped footprints below 1e-12 m^2 count as empty.
double iou3d(const Box3D& a, const Box3D& b);

double center_distance(const Box3D& a, const Box3D& b);

/// The 8 corners of the box, bottom face first (y = center.y), in world
/// coordinates.
std::array<Vec3, 8> box_corners(const Box3D& b);

/// Axis-aligned hull of the 8 projected corners. Empty if any corner is at
/// or behind the camera plane; callers fall back to a stored 2D box.
std::optional<Box2D> project_box(const Box3D& b, const Mat34& P);

}  // namespace gmot
