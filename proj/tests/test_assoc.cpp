#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "gmot/assoc.hpp"
#include "gmot/error.hpp"
#include "gmot/rng.hpp"
#include "support/oracles.hpp"

using namespace gmot;

namespace {

Mat mat(int rows, int cols, std::vector<double> v) {
  Mat m(rows, cols);
  m.v = std::move(v);
  return m;
}

long long assignment_cost(const Mat& cost, const std::vector<int>& row_to_col) {
  long long total = 0;
  for (int r = 0; r < cost.rows; ++r)
    if (row_to_col[r] >= 0)
      total += std::llround(cost.at(r, row_to_col[r]));
  return total;
}

}  // namespace

TEST_SUITE("assoc") {

TEST_CASE("the textbook three by three case") {
  const Mat cost = mat(3, 3, {4, 1, 3, 2, 0, 5, 3, 2, 2});
  const std::vector<int> r2c = solve_assignment(cost);
  REQUIRE(r2c == std::vector<int>{1, 0, 2});
  CHECK(assignment_cost(cost, r2c) == 5);
}

TEST_CASE("a zero diagonal wins on ties") {
  Mat cost(3, 3, 1.0);
  for (int i = 0; i < 3; ++i) cost.at(i, i) = 0.0;
  CHECK(solve_assignment(cost) == std::vector<int>{0, 1, 2});
}

TEST_CASE("all-equal costs resolve to the identity pairing") {
  const Mat cost(2, 3, 0.0);
  CHECK(solve_assignment(cost) == std::vector<int>{0, 1});
}

TEST_CASE("wide and tall rectangles") {
  // 2 rows, 3 cols: both rows assigned.
  const Mat wide = mat(2, 3, {5, 1, 9, 2, 8, 7});
  const std::vector<int> w = solve_assignment(wide);
  REQUIRE(w.size() == 2);
  CHECK(w[0] == 1);
  CHECK(w[1] == 0);

  // 3 rows, 2 cols: exactly one row stays out and no column repeats.
  const Mat tall = mat(3, 2, {5, 1, 2, 8, 9, 7});
  const std::vector<int> t = solve_assignment(tall);
  REQUIRE(t.size() == 3);
  int unassigned = 0;
  std::vector<int> used;
  for (int c : t) {
    if (c < 0) {
      ++unassigned;
      continue;
    }
    CHECK(std::find(used.begin(), used.end(), c) == used.end());
    used.push_back(c);
  }
  CHECK(unassigned == 1);
  CHECK(assignment_cost(tall, t) == 3);  // rows 0 and 1 on cols 1 and 0
}

TEST_CASE("a constant shift never changes the solution") {
  Rng rng = Rng::fork(40, 1);
  for (int iter = 0; iter < 50; ++iter) {
    const int n = 2 + static_cast<int>(rng.next_u64() % 4);
    Mat cost(n, n);
    for (double& v : cost.v)
      v = static_cast<double>(static_cast<int>(rng.next_u64() % 19)) - 9.0;
    Mat shifted = cost;
    for (double& v : shifted.v) v += 137.0;
    CHECK(solve_assignment(cost) == solve_assignment(shifted));
  }
}

TEST_CASE("non-finite costs are rejected") {
  Mat cost(2, 2, 1.0);
  cost.at(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(solve_assignment(cost), Error);
  cost.at(1, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(solve_assignment(cost), Error);
}

TEST_CASE("random matrices match the brute-force optimum") {
  Rng rng = Rng::fork(41, 1);
  for (int iter = 0; iter < 100; ++iter) {
    const int rows = 1 + static_cast<int>(rng.next_u64() % 5);
    const int cols = 1 + static_cast<int>(rng.next_u64() % 5);
    Mat cost(rows, cols);
    for (double& v : cost.v)
      v = static_cast<double>(static_cast<int>(rng.next_u64() % 30)) - 9.0;
    const std::vector<int> r2c = solve_assignment(cost);

    // Structure: every assigned column distinct, min(rows, cols) pairs.
    std::vector<int> used;
    for (int c : r2c)
      if (c >= 0) {
        CHECK(std::find(used.begin(), used.end(), c) == used.end());
        used.push_back(c);
      }
    CHECK(static_cast<int>(used.size()) == std::min(rows, cols));
    CHECK(assignment_cost(cost, r2c) == oracle::brute_force_min_cost(cost));
  }
}

TEST_CASE("gating splits matches at the threshold") {
  const Mat aff = mat(2, 2, {0.9, 0.2, 0.3, 0.8});
  const Assignment a = match_with_gating(aff, 0.5);
  REQUIRE(a.matches.size() == 2);
  CHECK(a.matches[0] == std::pair<int, int>{0, 0});
  CHECK(a.matches[1] == std::pair<int, int>{1, 1});
  CHECK(a.unmatched_tracks.empty());
  CHECK(a.unmatched_detections.empty());
}

TEST_CASE("everything below the threshold goes unmatched") {
  const Mat aff = mat(2, 2, {0.4, 0.2, 0.3, 0.1});
  const Assignment a = match_with_gating(aff, 0.5);
  CHECK(a.matches.empty());
  CHECK(a.unmatched_tracks == std::vector<int>{0, 1});
  CHECK(a.unmatched_detections == std::vector<int>{0, 1});
}

TEST_CASE("a mixed case keeps only confident pairs") {
  const Mat aff = mat(2, 3, {0.9, 0.1, 0.1, 0.1, 0.2, 0.3});
  const Assignment a = match_with_gating(aff, 0.5);
  REQUIRE(a.matches.size() == 1);
  CHECK(a.matches[0] == std::pair<int, int>{0, 0});
  CHECK(a.unmatched_tracks == std::vector<int>{1});
  REQUIRE(a.unmatched_detections.size() == 2);
}

TEST_CASE("empty sides produce empty matchings") {
  const Assignment none = match_with_gating(Mat(0, 0), 0.5);
  CHECK(none.matches.empty());
  CHECK(none.unmatched_tracks.empty());
  CHECK(none.unmatched_detections.empty());

  const Assignment dets_only = match_with_gating(Mat(0, 3), 0.5);
  CHECK(dets_only.matches.empty());
  CHECK(dets_only.unmatched_detections == std::vector<int>{0, 1, 2});

  const Assignment tracks_only = match_with_gating(Mat(2, 0), 0.5);
  CHECK(tracks_only.matches.empty());
  CHECK(tracks_only.unmatched_tracks == std::vector<int>{0, 1});
}

}  // TEST_SUITE
