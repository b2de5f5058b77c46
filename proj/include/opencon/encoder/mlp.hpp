#pragma once

#include <cstddef>
#include <span>

#include "opencon/core/matrix.hpp"
#include "opencon/core/rng.hpp"

namespace opencon::encoder {

// Two-layer projection head: z = normalize(W2 relu(W1 x + b1) + b2).
struct Mlp {
  Matrix w1;  // hidden x input
  Vec b1;     // hidden
  Matrix w2;  // output x hidden
  Vec b2;     // output

  std::size_t input_dim() const { return w1.cols(); }
  std::size_t hidden_dim() const { return w1.rows(); }
  std::size_t output_dim() const { return w2.rows(); }
  std::size_t num_parameters() const { return w1.size() + b1.size() + w2.size() + b2.size(); }

  friend bool operator==(const Mlp&, const Mlp&) = default;
};

// Parameter gradients share the network's shapes.
using MlpGradients = Mlp;

Mlp zeros_like(const Mlp& mlp);
Mlp make_mlp(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim);

// Kaiming-uniform fan-in weights (bound sqrt(6 / fan_in)), zero biases.
Mlp init_mlp(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim, Rng& rng);

struct Tape {
  Vec input;
  Vec pre_activation;  // W1 x + b1
  Vec hidden;          // relu(pre_activation)
  Vec raw_output;      // W2 h + b2, before normalization
  double raw_norm = 0.0;
  Vec embedding;       // raw_output / raw_norm
};

// Throws DimensionMismatch on a wrong input size and DegenerateVector when the
// raw output norm is <= 1e-12.
Tape forward(const Mlp& mlp, std::span<const double> input);
Vec embed(const Mlp& mlp, std::span<const double> input);

// Adds d(loss)/d(params) for one forward pass into `grads`.
void accumulate_backward(const Mlp& mlp, const Tape& tape, std::span<const double> grad_embedding,
                         MlpGradients& grads);
MlpGradients backward(const Mlp& mlp, const Tape& tape, std::span<const double> grad_embedding);

bool all_finite(const Mlp& mlp);

}  // namespace opencon::encoder
