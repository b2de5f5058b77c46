#pragma once

#include <cstddef>
#include <vector>

#include "opencon/encoder/mlp.hpp"

namespace opencon::encoder {

struct SgdConfig {
  double lr = 0.02;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  // Fractions of the epoch budget where the rate is multiplied by decay_factor.
  std::vector<double> milestones{0.5, 0.75};
  double decay_factor = 0.1;
  std::size_t total_epochs = 100;
};

// SGD with momentum; weight decay applies to weight matrices only:
//   v <- momentum * v + g + decay * theta;  theta <- theta - lr(epoch) * v
class Sgd {
 public:
  Sgd(SgdConfig config, const Mlp& like);

  double lr_at(std::size_t epoch) const;
  void step(Mlp& mlp, const MlpGradients& grads, std::size_t epoch);

  const SgdConfig& config() const { return config_; }
  const Mlp& velocity() const { return velocity_; }
  Mlp& velocity() { return velocity_; }

 private:
  SgdConfig config_;
  Mlp velocity_;
};

}  // namespace opencon::encoder
