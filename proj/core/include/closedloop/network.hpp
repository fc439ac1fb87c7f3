#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "closedloop/rng.hpp"

namespace closedloop {

/// Fully connected network with tanh hidden layers and a linear output layer.
/// Parameters are stored flat, layer by layer, weights (row-major, out x in)
/// followed by biases.
struct MlpShape {
  int input = 0;
  std::vector<int> hidden{64, 64, 64};
  int output = 1;

  int layer_count() const { return static_cast<int>(hidden.size()) + 1; }
  int layer_in(int layer) const { return layer == 0 ? input : hidden[static_cast<std::size_t>(layer - 1)]; }
  int layer_out(int layer) const {
    return layer == layer_count() - 1 ? output : hidden[static_cast<std::size_t>(layer)];
  }
  std::size_t weight_offset(int layer) const;
  std::size_t bias_offset(int layer) const { return weight_offset(layer) + static_cast<std::size_t>(layer_in(layer) * layer_out(layer)); }
  std::size_t parameter_count() const { return weight_offset(layer_count()); }

  bool operator==(const MlpShape&) const = default;
};

/// Flat parameter vector with a gradient buffer of identical length.
struct ParameterSet {
  MlpShape shape;
  std::vector<double> values;
  std::vector<double> grads;
  std::uint64_t step = 0;

  ParameterSet() = default;
  explicit ParameterSet(MlpShape s)
      : shape(std::move(s)), values(shape.parameter_count(), 0.0), grads(shape.parameter_count(), 0.0) {}

  std::size_t size() const { return values.size(); }
  void zero_grad() { std::fill(grads.begin(), grads.end(), 0.0); }
};

/// Activations kept for the backward pass: [0] is the input, [l + 1] the
/// output of layer l.
struct MlpCache {
  std::vector<std::vector<double>> activations;
  std::span<const double> output() const { return activations.back(); }
};

void mlp_forward(const MlpShape& shape, std::span<const double> params, std::span<const double> input,
                 MlpCache& cache);
std::vector<double> mlp_forward(const MlpShape& shape, std::span<const double> params,
                                std::span<const double> input);

/// Vector-Jacobian product. Accumulates into grad_params; writes grad_input
/// when it is non-empty.
void mlp_backward(const MlpShape& shape, std::span<const double> params, const MlpCache& cache,
                  std::span<const double> grad_output, std::span<double> grad_params, std::span<double> grad_input);

/// Rows of d output / d input for the first `rows` outputs, row-major
/// (rows x input).
std::vector<double> mlp_input_jacobian(const MlpShape& shape, std::span<const double> params, const MlpCache& cache,
                                       int rows);

/// Glorot-uniform weights, zero biases.
void init_mlp(const MlpShape& shape, std::span<double> params, Rng& rng);

}  // namespace closedloop
