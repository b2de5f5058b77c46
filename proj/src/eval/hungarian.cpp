#include "opencon/eval/hungarian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "opencon/core/error.hpp"

namespace opencon::eval {

namespace {

// Shortest augmenting path with potentials, 1-based internally. Returns the
// column matched to each row and the optimal cost.
std::pair<std::vector<int>, double> solve_square(const Matrix& a) {
  const std::size_t n = a.rows();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  double cost = 0.0;
  for (std::size_t j = 1; j <= n; ++j) row_to_col[p[j] - 1] = static_cast<int>(j - 1);
  for (std::size_t i = 0; i < n; ++i) cost += a(i, static_cast<std::size_t>(row_to_col[i]));
  return {row_to_col, cost};
}

Matrix pad_square(const Matrix& cost) {
  const std::size_t n = std::max(cost.rows(), cost.cols());
  Matrix sq(n, n);
  for (std::size_t i = 0; i < cost.rows(); ++i)
    for (std::size_t j = 0; j < cost.cols(); ++j) sq(i, j) = cost(i, j);
  return sq;
}

void check_finite(const Matrix& cost) {
  for (double c : cost.storage()) {
    if (!std::isfinite(c)) fail(ErrorCode::InvalidArgument, "assignment costs must be finite");
  }
}

// Minimum over the rows > `fixed` and the columns not yet taken.
double remaining_cost(const Matrix& sq, std::size_t fixed, const std::vector<char>& taken) {
  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < sq.cols(); ++j)
    if (!taken[j]) cols.push_back(j);
  const std::size_t k = cols.size();
  if (k == 0) return 0.0;
  Matrix sub(k, k);
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < k; ++c) sub(r, c) = sq(fixed + 1 + r, cols[c]);
  return solve_square(sub).second;
}

}  // namespace

double hungarian_cost(const Matrix& cost) {
  check_finite(cost);
  if (cost.rows() == 0 || cost.cols() == 0) return 0.0;
  return solve_square(pad_square(cost)).second;
}

Assignment hungarian(const Matrix& cost) {
  check_finite(cost);
  Assignment out;
  if (cost.rows() == 0) return out;
  if (cost.cols() == 0) {
    out.row_to_col.assign(cost.rows(), -1);
    return out;
  }
  const Matrix sq = pad_square(cost);
  const std::size_t n = sq.rows();
  const double optimum = solve_square(sq).second;

  double scale = 0.0;
  for (double c : sq.storage()) scale = std::max(scale, std::abs(c));
  const double tol = 1e-9 * (1.0 + scale * static_cast<double>(n));

  // Fix rows one at a time to the smallest column that still admits an
  // optimal completion.
  std::vector<char> taken(n, 0);
  std::vector<int> chosen(n, -1);
  double spent = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (taken[j]) continue;
      taken[j] = 1;
      const double total = spent + sq(i, j) + remaining_cost(sq, i, taken);
      if (total <= optimum + tol) {
        chosen[i] = static_cast<int>(j);
        spent += sq(i, j);
        break;
      }
      taken[j] = 0;
    }
  }

  out.row_to_col.assign(cost.rows(), -1);
  for (std::size_t i = 0; i < cost.rows(); ++i) {
    const int j = chosen[i];
    if (j >= 0 && static_cast<std::size_t>(j) < cost.cols()) {
      out.row_to_col[i] = j;
      out.cost += cost(i, static_cast<std::size_t>(j));
    }
  }
  return out;
}

}  // namespace opencon::eval
