#include "gmot/assoc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gmot/error.hpp"

namespace gmot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Shortest augmenting path for one unassigned row. Reduced costs stay
// non-negative because u starts at the row minima. Scanning the free
// columns in reverse makes ties resolve to the lowest column index.
int augment(const Mat& cost, int cur_row, std::vector<double>& u,
            std::vector<double>& v, std::vector<int>& path,
            std::vector<int>& row4col, std::vector<double>& sp,
            std::vector<bool>& sr, std::vector<bool>& sc, double* out_min) {
  const int nc = cost.cols;
  std::fill(sr.begin(), sr.end(), false);
  std::fill(sc.begin(), sc.end(), false);
  std::fill(sp.begin(), sp.end(), kInf);

  std::vector<int> remaining(static_cast<std::size_t>(nc));
  for (int j = 0; j < nc; ++j)
    remaining[static_cast<std::size_t>(j)] = nc - j - 1;
  int num_remaining = nc;

  double min_val = 0.0;
  int i = cur_row;
  int sink = -1;
  while (sink == -1) {
    sr[static_cast<std::size_t>(i)] = true;
    int index = -1;
    double lowest = kInf;
    for (int it = 0; it < num_remaining; ++it) {
      const int j = remaining[static_cast<std::size_t>(it)];
      const double r = min_val + cost.at(i, j) - u[static_cast<std::size_t>(i)] -
                       v[static_cast<std::size_t>(j)];
      if (r < sp[static_cast<std::size_t>(j)]) {
        path[static_cast<std::size_t>(j)] = i;
        sp[static_cast<std::size_t>(j)] = r;
      }
      if (sp[static_cast<std::size_t>(j)] < lowest ||
          (sp[static_cast<std::size_t>(j)] == lowest &&
           row4col[static_cast<std::size_t>(j)] == -1)) {
        lowest = sp[static_cast<std::size_t>(j)];
        index = it;
      }
    }
    min_val = lowest;
    const int j = remaining[static_cast<std::size_t>(index)];
    if (row4col[static_cast<std::size_t>(j)] == -1)
      sink = j;
    else
      i = row4col[static_cast<std::size_t>(j)];
    sc[static_cast<std::size_t>(j)] = true;
    remaining[static_cast<std::size_t>(index)] =
        remaining[static_cast<std::size_t>(--num_remaining)];
  }
  *out_min = min_val;
  return sink;
}

std::vector<int> solve_rows_le_cols(const Mat& cost) {
  const int nr = cost.rows, nc = cost.cols;
  std::vector<double> u(static_cast<std::size_t>(nr), 0.0);
  std::vector<double> v(static_cast<std::size_t>(nc), 0.0);
  for (int i = 0; i < nr; ++i) {
    double lo = kInf;
    for (int j = 0; j < nc; ++j) lo = std::min(lo, cost.at(i, j));
    u[static_cast<std::size_t>(i)] = lo;
  }
  std::vector<int> col4row(static_cast<std::size_t>(nr), -1);
  std::vector<int> row4col(static_cast<std::size_t>(nc), -1);
  std::vector<int> path(static_cast<std::size_t>(nc), -1);
  std::vector<double> sp(static_cast<std::size_t>(nc));
  std::vector<bool> sr(static_cast<std::size_t>(nr)), sc(static_cast<std::size_t>(nc));

  for (int cur_row = 0; cur_row < nr; ++cur_row) {
    double min_val = 0.0;
    const int sink =
        augment(cost, cur_row, u, v, path, row4col, sp, sr, sc, &min_val);
    u[static_cast<std::size_t>(cur_row)] += min_val;
    for (int i = 0; i < nr; ++i)
      if (sr[static_cast<std::size_t>(i)] && i != cur_row)
        u[static_cast<std::size_t>(i)] +=
            min_val -
            sp[static_cast<std::size_t>(col4row[static_cast<std::size_t>(i)])];
    for (int j = 0; j < nc; ++j)
      if (sc[static_cast<std::size_t>(j)])
        v[static_cast<std::size_t>(j)] -= min_val - sp[static_cast<std::size_t>(j)];

    int j = sink;
    while (true) {
      const int i = path[static_cast<std::size_t>(j)];
      row4col[static_cast<std::size_t>(j)] = i;
      std::swap(col4row[static_cast<std::size_t>(i)], j);
      if (i == cur_row) break;
    }
  }
  return col4row;
}

}  // namespace

std::vector<int> solve_assignment(const CostMatrix& cost) {
  for (double c : cost.v)
    if (!std::isfinite(c))
      throw Error(ErrorCode::InvalidArgument,
                  "assignment cost matrix has a non-finite entry");
  if (cost.rows == 0 || cost.cols == 0)
    return std::vector<int>(static_cast<std::size_t>(cost.rows), -1);
  if (cost.rows <= cost.cols) return solve_rows_le_cols(cost);

  Mat t(cost.cols, cost.rows);
  for (int i = 0; i < cost.rows; ++i)
    for (int j = 0; j < cost.cols; ++j) t.at(j, i) = cost.at(i, j);
  const std::vector<int> col_to_row = solve_rows_le_cols(t);
  std::vector<int> row_to_col(static_cast<std::size_t>(cost.rows), -1);
  for (int j = 0; j < cost.cols; ++j)
    if (col_to_row[static_cast<std::size_t>(j)] >= 0)
      row_to_col[static_cast<std::size_t>(col_to_row[static_cast<std::size_t>(j)])] = j;
  return row_to_col;
}

Assignment match_with_gating(const AffinityMatrix& affinity, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw Error(ErrorCode::InvalidArgument,
                "match threshold must lie in (0, 1), got " +
                    std::to_string(threshold));
  Mat cost(affinity.rows, affinity.cols);
  for (std::size_t k = 0; k < affinity.v.size(); ++k) cost.v[k] = 1.0 - affinity.v[k];
  const std::vector<int> row_to_col = solve_assignment(cost);

  Assignment out;
  std::vector<bool> det_used(static_cast<std::size_t>(affinity.cols), false);
  for (int i = 0; i < affinity.rows; ++i) {
    const int j = row_to_col[static_cast<std::size_t>(i)];
    if (j >= 0 && affinity.at(i, j) >= threshold) {
      out.matches.emplace_back(i, j);
      det_used[static_cast<std::size_t>(j)] = true;
    } else {
      out.unmatched_tracks.push_back(i);
    }
  }
  for (int j = 0; j < affinity.cols; ++j)
    if (!det_used[static_cast<std::size_t>(j)]) out.unmatched_detections.push_back(j);
  return out;
}

}  // namespace gmot
