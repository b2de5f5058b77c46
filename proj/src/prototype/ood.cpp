#include "opencon/prototype/ood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "opencon/core/error.hpp"
#include "opencon/core/numeric.hpp"

namespace opencon::prototype {

double calibrate_threshold(const Matrix& labeled, const PrototypeStore& store, double p) {
  if (labeled.rows() == 0) fail(ErrorCode::EmptyScores, "no labeled views to calibrate on");
  if (!(p >= 0.0 && p <= 100.0)) fail(ErrorCode::InvalidArgument, "percentile outside [0, 100]");
  if (p == 0.0) return std::numeric_limits<double>::infinity();
  std::vector<double> scores(labeled.rows());
  for (std::size_t i = 0; i < labeled.rows(); ++i) scores[i] = known_score(labeled.row(i), store);
  return percentile_threshold(scores, p);
}

GateResult ood_gate(const Matrix& unlabeled, const PrototypeStore& store, double threshold, GateMode mode) {
  GateResult g;
  g.threshold = threshold;
  const std::size_t n = unlabeled.rows();
  bool sample_verdict = false;
  for (std::size_t v = 0; v < n; ++v) {
    bool novel;
    if (mode == GateMode::PerSample && v % 2 == 1) {
      novel = sample_verdict;
    } else {
      novel = known_score(unlabeled.row(v), store) < threshold;
      sample_verdict = novel;
    }
    (novel ? g.novel_view_ids : g.rejected_view_ids).push_back(v);
  }
  return g;
}

OodScore parse_ood_score(std::string_view name) {
  if (name == "max_cosine") return OodScore::MaxCosine;
  if (name == "msp") return OodScore::Msp;
  if (name == "energy") return OodScore::Energy;
  fail(ErrorCode::UnknownVariant, "unknown OOD score '" + std::string(name) + "'");
}

std::string_view to_string(OodScore s) {
  switch (s) {
    case OodScore::MaxCosine: return "max_cosine";
    case OodScore::Msp: return "msp";
    case OodScore::Energy: return "energy";
  }
  return "unknown";
}

double ood_score(std::span<const double> z, const PrototypeStore& store, OodScore variant, double tau) {
  if (variant == OodScore::MaxCosine) return known_score(z, store);
  if (!(tau > 0.0)) fail(ErrorCode::InvalidTemperature, "tau must be > 0");
  Vec logits(store.known_ids.size());
  for (std::size_t i = 0; i < logits.size(); ++i) logits[i] = dot(store.means.row(store.known_ids[i]), z) / tau;
  switch (variant) {
    case OodScore::Msp: {
      const Vec p = softmax(logits, 1.0);
      return *std::max_element(p.begin(), p.end());
    }
    case OodScore::Energy:
      return tau * log_sum_exp(logits);
    default:
      fail(ErrorCode::UnknownVariant, "unhandled OOD score");
  }
}

DetectionMetrics detection_metrics(std::span<const double> id_scores, std::span<const double> ood_scores) {
  if (id_scores.empty() || ood_scores.empty()) fail(ErrorCode::EmptyScores, "detection needs both score sets");
  DetectionMetrics m;

  // Rank statistic: sort the OOD scores once, count below/equal per ID score.
  std::vector<double> ood(ood_scores.begin(), ood_scores.end());
  std::sort(ood.begin(), ood.end());
  double wins = 0.0;
  for (double s : id_scores) {
    const auto lo = std::lower_bound(ood.begin(), ood.end(), s);
    const auto hi = std::upper_bound(ood.begin(), ood.end(), s);
    wins += static_cast<double>(lo - ood.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  m.auroc = wins / (static_cast<double>(id_scores.size()) * static_cast<double>(ood.size()));

  std::vector<double> id(id_scores.begin(), id_scores.end());
  std::sort(id.begin(), id.end());
  // Largest t with |{id >= t}| >= 0.95 n: the ceil(0.95 n)-th largest score.
  const auto n = id.size();
  const auto keep = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n) - 1e-9));
  const double t = id[n - std::max<std::size_t>(keep, 1)];
  const auto false_pos = ood.end() - std::lower_bound(ood.begin(), ood.end(), t);
  m.fpr95 = static_cast<double>(false_pos) / static_cast<double>(ood.size());
  return m;
}

}  // namespace opencon::prototype
