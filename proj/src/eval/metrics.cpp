#include "opencon/eval/metrics.hpp"

#include <algorithm>

#include "opencon/core/error.hpp"
#include "opencon/eval/hungarian.hpp"

namespace opencon::eval {

namespace {

std::vector<int> distinct(std::span<const int> ids) {
  std::vector<int> out(ids.begin(), ids.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::size_t index_of(const std::vector<int>& sorted, int id) {
  return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), id) - sorted.begin());
}

}  // namespace

ContingencyMatrix contingency(std::span<const int> predictions, std::span<const int> truth) {
  if (predictions.size() != truth.size()) fail(ErrorCode::ShapeMismatch, "one prediction per ground-truth label");
  ContingencyMatrix t;
  t.pred_ids = distinct(predictions);
  t.true_ids = distinct(truth);
  t.counts.assign(t.pred_ids.size(), std::vector<std::size_t>(t.true_ids.size(), 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++t.counts[index_of(t.pred_ids, predictions[i])][index_of(t.true_ids, truth[i])];
  }
  t.total = truth.size();
  return t;
}

double matched_accuracy(const ContingencyMatrix& table) {
  if (table.total == 0) return 0.0;
  const std::size_t rows = table.pred_ids.size(), cols = table.true_ids.size();
  Matrix cost(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) cost(i, j) = -static_cast<double>(table.counts[i][j]);
  const Assignment a = hungarian(cost);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (a.row_to_col[i] >= 0) hits += table.counts[i][static_cast<std::size_t>(a.row_to_col[i])];
  }
  return static_cast<double>(hits) / static_cast<double>(table.total);
}

double matched_accuracy(std::span<const int> predictions, std::span<const int> truth) {
  return matched_accuracy(contingency(predictions, truth));
}

AccuracyTriple accuracy_triple(std::span<const int> predictions, std::span<const int> truth, std::size_t n_known,
                               AccuracyOptions options) {
  if (predictions.size() != truth.size()) fail(ErrorCode::ShapeMismatch, "one prediction per ground-truth label");
  if (truth.empty()) fail(ErrorCode::EmptyEvaluationSet, "nothing to evaluate");
  const int known = static_cast<int>(n_known);

  AccuracyTriple acc;
  std::size_t seen_total = 0, seen_hits = 0;
  std::vector<int> novel_pred, novel_truth;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < known) {
      ++seen_total;
      seen_hits += predictions[i] == truth[i];
    } else {
      novel_pred.push_back(predictions[i]);
      novel_truth.push_back(truth[i]);
    }
  }
  if (seen_total > 0) acc.seen = static_cast<double>(seen_hits) / static_cast<double>(seen_total);
  if (!novel_truth.empty()) acc.novel = matched_accuracy(novel_pred, novel_truth);

  if (!options.strict_known) {
    acc.all = matched_accuracy(predictions, truth);
  } else {
    // Known predictions score only on their own label; the rest is matched
    // against the novel truths.
    std::size_t hits = 0;
    std::vector<int> rest_pred, rest_truth;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (predictions[i] >= 0 && predictions[i] < known) {
        hits += predictions[i] == truth[i];
      } else {
        rest_pred.push_back(predictions[i]);
        // Known truths cannot be matched by a non-known prediction.
        rest_truth.push_back(truth[i] < known ? -1 - truth[i] : truth[i]);
      }
    }
    if (!rest_truth.empty()) {
      ContingencyMatrix t = contingency(rest_pred, rest_truth);
      for (std::size_t j = 0; j < t.true_ids.size(); ++j) {
        if (t.true_ids[j] < 0)
          for (auto& row : t.counts) row[j] = 0;
      }
      hits += static_cast<std::size_t>(matched_accuracy(t) * static_cast<double>(t.total) + 0.5);
    }
    acc.all = static_cast<double>(hits) / static_cast<double>(truth.size());
  }
  return acc;
}

}  // namespace opencon::eval
