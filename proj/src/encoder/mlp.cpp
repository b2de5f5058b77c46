#include "opencon/encoder/mlp.hpp"

#include <cmath>
#include <string>

#include "opencon/core/error.hpp"
#include "opencon/core/numeric.hpp"
#include "opencon/simd/kernels.hpp"

namespace opencon::encoder {

Mlp make_mlp(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim) {
  if (input_dim == 0 || hidden_dim == 0 || output_dim == 0) {
    fail(ErrorCode::InvalidDimension, "MLP dimensions must be positive");
  }
  return Mlp{Matrix(hidden_dim, input_dim), Vec(hidden_dim, 0.0), Matrix(output_dim, hidden_dim),
             Vec(output_dim, 0.0)};
}

Mlp zeros_like(const Mlp& mlp) {
  return make_mlp(mlp.input_dim(), mlp.hidden_dim(), mlp.output_dim());
}

Mlp init_mlp(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim, Rng& rng) {
  Mlp mlp = make_mlp(input_dim, hidden_dim, output_dim);
  const double bound1 = std::sqrt(6.0 / static_cast<double>(input_dim));
  const double bound2 = std::sqrt(6.0 / static_cast<double>(hidden_dim));
  for (double& w : mlp.w1.storage()) w = bound1 * (2.0 * rng.uniform() - 1.0);
  for (double& w : mlp.w2.storage()) w = bound2 * (2.0 * rng.uniform() - 1.0);
  return mlp;
}

Tape forward(const Mlp& mlp, std::span<const double> input) {
  if (input.size() != mlp.input_dim()) {
    fail(ErrorCode::DimensionMismatch, "input has " + std::to_string(input.size()) +
                                           " features, encoder expects " +
                                           std::to_string(mlp.input_dim()));
  }
  const std::size_t h = mlp.hidden_dim();
  const std::size_t d = mlp.output_dim();
  Tape t;
  t.input.assign(input.begin(), input.end());
  t.pre_activation.resize(h);
  simd::matvec(mlp.w1.data(), h, mlp.input_dim(), input.data(), t.pre_activation.data());
  t.hidden.resize(h);
  for (std::size_t i = 0; i < h; ++i) {
    t.pre_activation[i] += mlp.b1[i];
    t.hidden[i] = t.pre_activation[i] > 0.0 ? t.pre_activation[i] : 0.0;
  }
  t.raw_output.resize(d);
  simd::matvec(mlp.w2.data(), d, h, t.hidden.data(), t.raw_output.data());
  for (std::size_t i = 0; i < d; ++i) t.raw_output[i] += mlp.b2[i];
  t.raw_norm = norm(t.raw_output);
  if (!(t.raw_norm > kNormEpsilon)) {
    fail(ErrorCode::DegenerateVector, "encoder output collapsed to zero");
  }
  t.embedding.resize(d);
  for (std::size_t i = 0; i < d; ++i) t.embedding[i] = t.raw_output[i] / t.raw_norm;
  return t;
}

Vec embed(const Mlp& mlp, std::span<const double> input) { return forward(mlp, input).embedding; }

void accumulate_backward(const Mlp& mlp, const Tape& tape, std::span<const double> grad_embedding,
                         MlpGradients& grads) {
  const std::size_t m = mlp.input_dim();
  const std::size_t h = mlp.hidden_dim();
  const std::size_t d = mlp.output_dim();
  if (tape.input.size() != m || tape.hidden.size() != h || tape.embedding.size() != d ||
      grad_embedding.size() != d) {
    fail(ErrorCode::TapeMismatch, "tape does not belong to this network");
  }
  if (grads.input_dim() != m || grads.hidden_dim() != h || grads.output_dim() != d) {
    fail(ErrorCode::ShapeMismatch, "gradient buffer shape differs from the network");
  }

  // Through z = v / |v|: dv = (g - z (z^T g)) / |v|.
  const double radial = dot(tape.embedding, grad_embedding);
  Vec grad_raw(d);
  for (std::size_t i = 0; i < d; ++i) {
    grad_raw[i] = (grad_embedding[i] - tape.embedding[i] * radial) / tape.raw_norm;
  }
  simd::outer_add(grads.w2.data(), d, h, grad_raw.data(), tape.hidden.data());
  for (std::size_t i = 0; i < d; ++i) grads.b2[i] += grad_raw[i];

  Vec grad_pre(h);
  simd::matvec_t(mlp.w2.data(), d, h, grad_raw.data(), grad_pre.data());
  for (std::size_t i = 0; i < h; ++i) {
    if (!(tape.pre_activation[i] > 0.0)) grad_pre[i] = 0.0;
  }
  simd::outer_add(grads.w1.data(), h, m, grad_pre.data(), tape.input.data());
  for (std::size_t i = 0; i < h; ++i) grads.b1[i] += grad_pre[i];
}

MlpGradients backward(const Mlp& mlp, const Tape& tape, std::span<const double> grad_embedding) {
  MlpGradients g = zeros_like(mlp);
  accumulate_backward(mlp, tape, grad_embedding, g);
  return g;
}

bool all_finite(const Mlp& mlp) {
  return opencon::all_finite(mlp.w1.storage()) && opencon::all_finite(mlp.b1) &&
         opencon::all_finite(mlp.w2.storage()) && opencon::all_finite(mlp.b2);
}

}  // namespace opencon::encoder
