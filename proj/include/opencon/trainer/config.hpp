#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "opencon/data/augment.hpp"
#include "opencon/encoder/optimizer.hpp"
#include "opencon/objective/losses.hpp"
#include "opencon/prototype/ood.hpp"

namespace opencon::trainer {

enum class Calibration { PerBatch, PerEpoch };

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_labeled = 64;
  std::size_t batch_unlabeled = 64;
  objective::LossWeights weights;
  double prototype_momentum = 0.9;  // gamma in the moving-average update
  double percentile = 70.0;
  double lr = 0.02;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::uint64_t seed = 1;

  std::size_t embed_dim = 128;
  std::size_t hidden_dim = 0;      // 0 => twice the input width
  std::size_t num_prototypes = 0;  // 0 => number of classes in the split
  data::AugmentConfig augment;

  bool drop_l = false;
  bool drop_u = false;
  bool drop_n = false;
  bool drop_kl = false;
  bool use_modified_loss = false;
  double p_override = -1.0;  // >= 0 replaces `percentile`

  Calibration calibration = Calibration::PerBatch;
  prototype::GateMode gate_mode = prototype::GateMode::PerView;
  bool warm_start = true;
  bool early_stop = false;
  std::size_t eval_every = 1;  // 0 => final epoch only
  bool eval_on_test = false;
  bool strict_known = false;  // "all" accuracy keeps known ids fixed
  double ood_temperature = 0.1;

  double effective_percentile() const { return p_override >= 0.0 ? p_override : percentile; }
  objective::LossToggles toggles() const;
  encoder::SgdConfig sgd() const;

  // Throws InvalidArgument (or the component error) on the first bad field.
  void validate() const;
};

// Flat `key = value` configuration using the field names above
// (weights use lambda_n, tau_l, ...; augmentation uses noise_sigma, mask_prob).
void set_config_key(TrainConfig& config, std::string_view key, std::string_view value);
std::vector<std::string> config_keys();
TrainConfig parse_config_text(std::string_view text, TrainConfig base = {});
TrainConfig load_config_file(const std::string& path, TrainConfig base = {});

std::string_view to_string(Calibration c);
std::string_view to_string(prototype::GateMode m);

}  // namespace opencon::trainer
