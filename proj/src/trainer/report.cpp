#include "opencon/trainer/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace opencon::trainer {

namespace {

// Infinite thresholds (p = 0) have no JSON spelling; they become null.
nlohmann::ordered_json real(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

}  // namespace

nlohmann::ordered_json to_json(const EpochReport& r) {
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  j["loss_total"] = real(r.loss_total);
  j["loss_l"] = real(r.loss_l);
  j["loss_u"] = real(r.loss_u);
  j["loss_n"] = real(r.loss_n);
  j["kl"] = real(r.kl);
  j["lambda_threshold"] = real(r.lambda_threshold);
  j["gated_fraction"] = r.gated_fraction;
  if (r.accuracy) {
    j["acc_all"] = r.accuracy->all;
    j["acc_novel"] = r.accuracy->novel;
    j["acc_seen"] = r.accuracy->seen;
  } else {
    j["acc_all"] = nullptr;
    j["acc_novel"] = nullptr;
    j["acc_seen"] = nullptr;
  }
  j["active_prototypes"] = r.active_prototypes;
  return j;
}

nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["acc_all"] = r.accuracy.all;
  j["acc_novel"] = r.accuracy.novel;
  j["acc_seen"] = r.accuracy.seen;
  j["converged_clusters"] = r.converged_clusters;
  j["predicted_clusters"] = r.predicted_clusters;
  j["samples"] = r.truth.size();
  auto det = nlohmann::ordered_json::object();
  for (const auto& row : r.detection) {
    det[std::string(prototype::to_string(row.score))] = {{"auroc", row.metrics.auroc}, {"fpr95", row.metrics.fpr95}};
  }
  j["ood_detection"] = det;
  return j;
}

nlohmann::ordered_json to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["epochs"] = c.epochs;
  j["batch_labeled"] = c.batch_labeled;
  j["batch_unlabeled"] = c.batch_unlabeled;
  j["lambda_n"] = c.weights.lambda_n;
  j["lambda_l"] = c.weights.lambda_l;
  j["lambda_u"] = c.weights.lambda_u;
  j["tau_n"] = c.weights.tau_n;
  j["tau_l"] = c.weights.tau_l;
  j["tau_u"] = c.weights.tau_u;
  j["kl_weight"] = c.weights.kl_weight;
  j["prototype_momentum"] = c.prototype_momentum;
  j["percentile"] = c.effective_percentile();
  j["lr"] = c.lr;
  j["momentum"] = c.momentum;
  j["weight_decay"] = c.weight_decay;
  j["seed"] = c.seed;
  j["embed_dim"] = c.embed_dim;
  j["hidden_dim"] = c.hidden_dim;
  j["num_prototypes"] = c.num_prototypes;
  j["noise_sigma"] = c.augment.noise_sigma;
  j["mask_prob"] = c.augment.mask_prob;
  j["drop_l"] = c.drop_l;
  j["drop_u"] = c.drop_u;
  j["drop_n"] = c.drop_n;
  j["drop_kl"] = c.drop_kl;
  j["use_modified_loss"] = c.use_modified_loss;
  j["calibration"] = std::string(to_string(c.calibration));
  j["gate_mode"] = std::string(to_string(c.gate_mode));
  j["warm_start"] = c.warm_start;
  j["early_stop"] = c.early_stop;
  j["eval_every"] = c.eval_every;
  j["eval_on_test"] = c.eval_on_test;
  j["strict_known"] = c.strict_known;
  j["ood_temperature"] = c.ood_temperature;
  return j;
}

std::string ablation_table(const std::vector<AblationRow>& rows) {
  std::size_t width = 7;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-*s  %6s  %6s  %6s  %8s\n", static_cast<int>(width), "variant", "all", "novel",
                "seen", "clusters");
  os << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-*s  %6.2f  %6.2f  %6.2f  %8zu\n", static_cast<int>(width), r.name.c_str(),
                  100.0 * r.report.accuracy.all, 100.0 * r.report.accuracy.novel, 100.0 * r.report.accuracy.seen,
                  r.report.converged_clusters);
    os << line;
  }
  return os.str();
}

}  // namespace opencon::trainer
