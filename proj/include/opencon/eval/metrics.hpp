#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace opencon::eval {

// counts[i][j] = #samples with predicted id pred_ids[i] and true id true_ids[j].
struct ContingencyMatrix {
  std::vector<int> pred_ids;
  std::vector<int> true_ids;
  std::vector<std::vector<std::size_t>> counts;
  std::size_t total = 0;
};

ContingencyMatrix contingency(std::span<const int> predictions, std::span<const int> truth);

// Fraction of samples on the diagonal of the best injective pred -> true map.
double matched_accuracy(const ContingencyMatrix& table);
double matched_accuracy(std::span<const int> predictions, std::span<const int> truth);

struct AccuracyTriple {
  double all = 0.0;
  double novel = 0.0;
  double seen = 0.0;

  friend bool operator==(const AccuracyTriple&, const AccuracyTriple&) = default;
};

struct AccuracyOptions {
  // Known ids are label-aligned; pin them instead of letting them rematch in "all".
  bool strict_known = false;
};

// Classes [0, n_known) are known. seen: exact match on known-truth samples;
// novel: matched accuracy on novel-truth samples; all: matched accuracy over
// everything. An empty subset reports 0.
AccuracyTriple accuracy_triple(std::span<const int> predictions, std::span<const int> truth, std::size_t n_known,
                               AccuracyOptions options = {});

}  // namespace opencon::eval
