#pragma once

// Independent reference implementations the test suites compare against.
// Deliberately naive: correctness over speed.

#include <algorithm>
#include <climits>
#include <cmath>
#include <numeric>
#include <vector>

#include "gmot/geometry.hpp"
#include "gmot/rng.hpp"
#include "gmot/types.hpp"

namespace oracle {

// Exhaustive minimum over all one-to-one assignments of min(M, N) pairs.
// Integer-valued costs only, so equality checks are exact.
inline long long brute_force_min_cost(const gmot::Mat& cost) {
  int rows = cost.rows, cols = cost.cols;
  if (rows == 0 || cols == 0) return 0;
  const bool flip = rows > cols;
  if (flip) std::swap(rows, cols);
  const auto at = [&](int r, int c) {
    return static_cast<long long>(
        std::llround(flip ? cost.at(c, r) : cost.at(r, c)));
  };
  std::vector<int> perm(static_cast<std::size_t>(cols));
  std::iota(perm.begin(), perm.end(), 0);
  long long best = LLONG_MAX;
  do {
    long long total = 0;
    for (int r = 0; r < rows; ++r) total += at(r, perm[static_cast<std::size_t>(r)]);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

struct BoxFrame {
  double cx, cy, cz;
  double cos_yaw, sin_yaw;
  double hl, hw, h;
};

inline BoxFrame box_frame(const gmot::Box3D& b) {
  return {b.center.x, b.center.y,     b.center.z, std::cos(b.yaw),
          std::sin(b.yaw), 0.5 * b.l, 0.5 * b.w,  b.h};
}

// Camera convention: y points down, the box spans [center.y - h, center.y],
// length along the local x axis, width along local z.
inline bool point_in_box(const BoxFrame& f, double x, double y, double z) {
  if (y > f.cy || y < f.cy - f.h) return false;
  const double dx = x - f.cx;
  const double dz = z - f.cz;
  const double lx = f.cos_yaw * dx - f.sin_yaw * dz;
  const double lz = f.sin_yaw * dx + f.cos_yaw * dz;
  return std::abs(lx) <= f.hl && std::abs(lz) <= f.hw;
}

// Uniform rejection sampling over the pair's shared bounding volume. The
// bound uses each footprint's circumradius, so it never clips the boxes.
inline double monte_carlo_iou3d(const gmot::Box3D& a, const gmot::Box3D& b,
                                long long samples, gmot::Rng& rng) {
  const auto pad = [](const gmot::Box3D& box) {
    return 0.5 * std::sqrt(box.l * box.l + box.w * box.w);
  };
  const double ra = pad(a), rb = pad(b);
  const double x0 = std::min(a.center.x - ra, b.center.x - rb);
  const double x1 = std::max(a.center.x + ra, b.center.x + rb);
  const double z0 = std::min(a.center.z - ra, b.center.z - rb);
  const double z1 = std::max(a.center.z + ra, b.center.z + rb);
  const double y0 = std::min(a.center.y - a.h, b.center.y - b.h);
  const double y1 = std::max(a.center.y, b.center.y);
  const BoxFrame fa = box_frame(a), fb = box_frame(b);
  long long in_a = 0, in_b = 0, in_both = 0;
  for (long long s = 0; s < samples; ++s) {
    const double x = rng.uniform(x0, x1);
    const double y = rng.uniform(y0, y1);
    const double z = rng.uniform(z0, z1);
    const bool pa = point_in_box(fa, x, y, z);
    const bool pb = point_in_box(fb, x, y, z);
    in_a += pa;
    in_b += pb;
    in_both += pa && pb;
  }
  const long long in_union = in_a + in_b - in_both;
  if (in_union <= 0) return 0.0;
  return static_cast<double>(in_both) / static_cast<double>(in_union);
}

}  // namespace oracle
