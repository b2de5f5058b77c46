#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "opencon/core/rng.hpp"
#include "opencon/data/dataset.hpp"
#include "opencon/encoder/mlp.hpp"
#include "opencon/eval/metrics.hpp"
#include "opencon/prototype/ood.hpp"
#include "opencon/prototype/store.hpp"
#include "opencon/trainer/config.hpp"

namespace opencon::trainer {

struct EpochReport {
  std::size_t epoch = 0;
  double loss_total = 0.0;
  double loss_l = 0.0;
  double loss_u = 0.0;
  double loss_n = 0.0;
  double kl = 0.0;
  double lambda_threshold = 0.0;  // mean over the epoch's calibrations
  double gated_fraction = 0.0;
  std::optional<eval::AccuracyTriple> accuracy;  // absent on epochs without evaluation
  std::size_t active_prototypes = 0;

  friend bool operator==(const EpochReport&, const EpochReport&) = default;
};

// Everything needed to continue a run from an epoch boundary.
struct TrainState {
  encoder::Mlp mlp;
  encoder::Mlp velocity;
  prototype::PrototypeStore store;
  Rng data_rng{0, Stream::Data};
  Rng augment_rng{0, Stream::Augment};
  std::size_t next_epoch = 0;
};

// Fresh network and prototypes from the Init stream, with the optional
// known-prototype warm start from the initial encoder.
TrainState init_state(const TrainConfig& config, const data::SplitDataset& split);

using EpochCallback = std::function<void(const EpochReport&, const TrainState&)>;

// Runs epochs [state.next_epoch, config.epochs). Throws NonFiniteLoss with a
// state dump when any loss component stops being finite.
std::vector<EpochReport> train(const TrainConfig& config, const data::SplitDataset& split, TrainState& state,
                               const EpochCallback& on_epoch = {});

struct DetectionRow {
  prototype::OodScore score;
  prototype::DetectionMetrics metrics;
};

struct EvalReport {
  eval::AccuracyTriple accuracy;
  std::vector<int> predictions;
  std::vector<int> truth;
  std::size_t converged_clusters = 0;   // prototypes assigned during the last epoch
  std::size_t predicted_clusters = 0;   // distinct predicted ids on the evaluation pool
  std::vector<DetectionRow> detection;  // known vs novel truth; empty if either side is missing
};

const std::vector<data::Sample>& evaluation_pool(const TrainConfig& config, const data::SplitDataset& split);

EvalReport evaluate(const TrainConfig& config, const data::SplitDataset& split, const TrainState& state);

struct Variant {
  std::string name;
  TrainConfig config;
};

// Presets: "loss-components", "p-sweep", "modified", "warm-start".
std::vector<Variant> ablation_preset(const std::string& name, const TrainConfig& base);

struct AblationRow {
  std::string name;
  EvalReport report;
  std::vector<EpochReport> epochs;
};

std::vector<AblationRow> ablate(const std::vector<Variant>& variants, const data::SplitDataset& split);

}  // namespace opencon::trainer
