#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "opencon/core/matrix.hpp"
#include "opencon/prototype/store.hpp"

namespace opencon::prototype {

struct GateResult {
  std::vector<std::size_t> novel_view_ids;     // A_n
  std::vector<std::size_t> rejected_view_ids;  // predicted known
  double threshold = 0.0;
};

// Threshold from the known-prototype scores of the labeled views at
// percentile p. p == 0 returns +inf so that every unlabeled view is gated.
double calibrate_threshold(const Matrix& labeled, const PrototypeStore& store, double p);

enum class GateMode { PerView, PerSample };

// A view is novel iff its known score is strictly below the threshold. In
// PerSample mode both views of a sample follow the verdict of view 0.
GateResult ood_gate(const Matrix& unlabeled, const PrototypeStore& store, double threshold,
                    GateMode mode = GateMode::PerView);

enum class OodScore { MaxCosine, Msp, Energy };

OodScore parse_ood_score(std::string_view name);
std::string_view to_string(OodScore s);

// Higher means more in-distribution.
double ood_score(std::span<const double> z, const PrototypeStore& store, OodScore variant, double tau);

struct DetectionMetrics {
  double auroc = 0.0;
  double fpr95 = 0.0;
};

// AUROC by the rank statistic (ties count one half); FPR95 at the largest
// threshold that keeps at least 95% of in-distribution scores.
DetectionMetrics detection_metrics(std::span<const double> id_scores, std::span<const double> ood_scores);

}  // namespace opencon::prototype
