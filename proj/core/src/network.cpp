#include "closedloop/network.hpp"

#include <cmath>

#include "closedloop/error.hpp"

namespace closedloop {

std::size_t MlpShape::weight_offset(int layer) const {
  std::size_t offset = 0;
  for (int l = 0; l < layer; ++l) {
    offset += static_cast<std::size_t>(layer_in(l) * layer_out(l) + layer_out(l));
  }
  return offset;
}

void mlp_forward(const MlpShape& shape, std::span<const double> params, std::span<const double> input,
                 MlpCache& cache) {
  if (static_cast<int>(input.size()) != shape.input) throw Error("mlp input dimension mismatch");
  if (params.size() != shape.parameter_count()) throw Error("mlp parameter count mismatch");
  const int layers = shape.layer_count();
  cache.activations.resize(static_cast<std::size_t>(layers + 1));
  cache.activations[0].assign(input.begin(), input.end());
  for (int l = 0; l < layers; ++l) {
    const int n_in = shape.layer_in(l);
    const int n_out = shape.layer_out(l);
    const double* w = params.data() + shape.weight_offset(l);
    const double* b = params.data() + shape.bias_offset(l);
    const std::vector<double>& x = cache.activations[static_cast<std::size_t>(l)];
    std::vector<double>& y = cache.activations[static_cast<std::size_t>(l + 1)];
    y.resize(static_cast<std::size_t>(n_out));
    const bool hidden = l + 1 < layers;
    for (int r = 0; r < n_out; ++r) {
      const double* row = w + static_cast<std::ptrdiff_t>(r) * n_in;
      double acc = b[r];
      for (int c = 0; c < n_in; ++c) acc += row[c] * x[static_cast<std::size_t>(c)];
      y[static_cast<std::size_t>(r)] = hidden ? std::tanh(acc) : acc;
    }
  }
}

std::vector<double> mlp_forward(const MlpShape& shape, std::span<const double> params,
                                std::span<const double> input) {
  MlpCache cache;
  mlp_forward(shape, params, input, cache);
  return cache.activations.back();
}

void mlp_backward(const MlpShape& shape, std::span<const double> params, const MlpCache& cache,
                  std::span<const double> grad_output, std::span<double> grad_params, std::span<double> grad_input) {
  const int layers = shape.layer_count();
  if (static_cast<int>(grad_output.size()) != shape.output) throw Error("mlp output gradient dimension mismatch");
  if (grad_params.size() != shape.parameter_count()) throw Error("mlp gradient buffer size mismatch");

  std::vector<double> delta(grad_output.begin(), grad_output.end());
  std::vector<double> prev;
  for (int l = layers - 1; l >= 0; --l) {
    const int n_in = shape.layer_in(l);
    const int n_out = shape.layer_out(l);
    const double* w = params.data() + shape.weight_offset(l);
    double* gw = grad_params.data() + shape.weight_offset(l);
    double* gb = grad_params.data() + shape.bias_offset(l);
    const std::vector<double>& x = cache.activations[static_cast<std::size_t>(l)];
    if (l + 1 < layers) {
      // Through tanh: dy/dz = 1 - y^2.
      const std::vector<double>& y = cache.activations[static_cast<std::size_t>(l + 1)];
      for (int r = 0; r < n_out; ++r) {
        delta[static_cast<std::size_t>(r)] *= 1.0 - y[static_cast<std::size_t>(r)] * y[static_cast<std::size_t>(r)];
      }
    }
    const bool need_prev = l > 0 || !grad_input.empty();
    if (need_prev) prev.assign(static_cast<std::size_t>(n_in), 0.0);
    for (int r = 0; r < n_out; ++r) {
      const double d = delta[static_cast<std::size_t>(r)];
      if (d == 0.0) continue;
      gb[r] += d;
      double* grow = gw + static_cast<std::ptrdiff_t>(r) * n_in;
      const double* wrow = w + static_cast<std::ptrdiff_t>(r) * n_in;
      for (int c = 0; c < n_in; ++c) grow[c] += d * x[static_cast<std::size_t>(c)];
      if (need_prev) {
        for (int c = 0; c < n_in; ++c) prev[static_cast<std::size_t>(c)] += d * wrow[c];
      }
    }
    if (need_prev) delta.swap(prev);
  }
  if (!grad_input.empty()) {
    if (static_cast<int>(grad_input.size()) != shape.input) throw Error("mlp input gradient dimension mismatch");
    std::copy(delta.begin(), delta.end(), grad_input.begin());
  }
}

std::vector<double> mlp_input_jacobian(const MlpShape& shape, std::span<const double> params, const MlpCache& cache,
                                       int rows) {
  if (rows < 1 || rows > shape.output) throw Error("mlp_input_jacobian: bad row count");
  const int layers = shape.layer_count();
  // J holds d output_k / d activation of the current layer, one row per k.
  int width = shape.output;
  std::vector<double> J(static_cast<std::size_t>(rows * width), 0.0);
  for (int k = 0; k < rows; ++k) J[static_cast<std::size_t>(k * width + k)] = 1.0;
  for (int l = layers - 1; l >= 0; --l) {
    const int n_in = shape.layer_in(l);
    const int n_out = shape.layer_out(l);
    const double* w = params.data() + shape.weight_offset(l);
    if (l + 1 < layers) {
      const std::vector<double>& y = cache.activations[static_cast<std::size_t>(l + 1)];
      for (int k = 0; k < rows; ++k) {
        for (int r = 0; r < n_out; ++r) {
          J[static_cast<std::size_t>(k * n_out + r)] *= 1.0 - y[static_cast<std::size_t>(r)] * y[static_cast<std::size_t>(r)];
        }
      }
    }
    std::vector<double> next(static_cast<std::size_t>(rows * n_in), 0.0);
    for (int k = 0; k < rows; ++k) {
      double* out = next.data() + static_cast<std::ptrdiff_t>(k) * n_in;
      for (int r = 0; r < n_out; ++r) {
        const double d = J[static_cast<std::size_t>(k * n_out + r)];
        if (d == 0.0) continue;
        const double* wrow = w + static_cast<std::ptrdiff_t>(r) * n_in;
        for (int c = 0; c < n_in; ++c) out[c] += d * wrow[c];
      }
    }
    J.swap(next);
    width = n_in;
  }
  return J;
}

void init_mlp(const MlpShape& shape, std::span<double> params, Rng& rng) {
  if (params.size() != shape.parameter_count()) throw Error("mlp parameter count mismatch");
  for (int l = 0; l < shape.layer_count(); ++l) {
    const int n_in = shape.layer_in(l);
    const int n_out = shape.layer_out(l);
    const double limit = std::sqrt(6.0 / (n_in + n_out));
    double* w = params.data() + shape.weight_offset(l);
    for (int k = 0; k < n_in * n_out; ++k) w[k] = rng.uniform(-limit, limit);
    double* b = params.data() + shape.bias_offset(l);
    for (int k = 0; k < n_out; ++k) b[k] = 0.0;
  }
}

}  // namespace closedloop
