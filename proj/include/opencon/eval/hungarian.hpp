#pragma once

#include <vector>

#include "opencon/core/matrix.hpp"

namespace opencon::eval {

struct Assignment {
  std::vector<int> row_to_col;  // -1 for rows matched to padding
  double cost = 0.0;
};

// Minimum-cost injective assignment of rows to columns. Rectangular input is
// padded to square with zeros. Among optimal assignments the lexicographically
// smallest row_to_col (over the padded square) is returned.
Assignment hungarian(const Matrix& cost);

// Optimal total cost only (no tie-breaking work).
double hungarian_cost(const Matrix& cost);

}  // namespace opencon::eval
