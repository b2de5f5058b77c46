#include "opencon/encoder/optimizer.hpp"

#include <string>

#include "opencon/core/error.hpp"
#include "opencon/simd/kernels.hpp"

namespace opencon::encoder {

Sgd::Sgd(SgdConfig config, const Mlp& like) : config_(std::move(config)), velocity_(zeros_like(like)) {
  if (!(config_.lr > 0.0)) fail(ErrorCode::InvalidArgument, "learning rate must be > 0");
  for (std::size_t i = 0; i < config_.milestones.size(); ++i) {
    const double m = config_.milestones[i];
    if (!(m > 0.0 && m < 1.0) || (i > 0 && !(m > config_.milestones[i - 1]))) {
      fail(ErrorCode::InvalidArgument, "milestones must be strictly increasing fractions in (0, 1)");
    }
  }
}

double Sgd::lr_at(std::size_t epoch) const {
  double lr = config_.lr;
  for (double m : config_.milestones) {
    if (static_cast<double>(epoch) >= m * static_cast<double>(config_.total_epochs)) {
      lr *= config_.decay_factor;
    }
  }
  return lr;
}

void Sgd::step(Mlp& mlp, const MlpGradients& grads, std::size_t epoch) {
  if (grads.w1.rows() != mlp.w1.rows() || grads.w1.cols() != mlp.w1.cols() ||
      grads.w2.rows() != mlp.w2.rows() || grads.w2.cols() != mlp.w2.cols() ||
      grads.b1.size() != mlp.b1.size() || grads.b2.size() != mlp.b2.size()) {
    fail(ErrorCode::ShapeMismatch, "gradient shapes do not match parameters");
  }
  const double lr = lr_at(epoch);
  const double mu = config_.momentum;
  const double wd = config_.weight_decay;
  simd::momentum_step(mlp.w1.size(), mlp.w1.data(), velocity_.w1.data(), grads.w1.data(), lr, mu, wd);
  simd::momentum_step(mlp.b1.size(), mlp.b1.data(), velocity_.b1.data(), grads.b1.data(), lr, mu, 0.0);
  simd::momentum_step(mlp.w2.size(), mlp.w2.data(), velocity_.w2.data(), grads.w2.data(), lr, mu, wd);
  simd::momentum_step(mlp.b2.size(), mlp.b2.data(), velocity_.b2.data(), grads.b2.data(), lr, mu, 0.0);
}

}  // namespace opencon::encoder
