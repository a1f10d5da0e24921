#include "xslice/dqn/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace xslice::dqn {

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

MlpParams MlpParams::zeros_like() const {
  MlpParams z = *this;
  for (auto& l : z.layers) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  return z;
}

void MlpParams::validate() const {
  if (layers.empty()) throw std::invalid_argument("mlp: no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const std::string where = "mlp layer " + std::to_string(i);
    if (l.in < 1 || l.out < 1) throw std::invalid_argument(where + ": empty shape");
    if (l.weights.size() != static_cast<std::size_t>(l.in) * l.out ||
        l.bias.size() != static_cast<std::size_t>(l.out)) {
      throw std::invalid_argument(where + ": storage does not match shape");
    }
    if (i > 0 && layers[i - 1].out != l.in) throw std::invalid_argument(where + ": chain mismatch");
    for (double v : l.weights) {
      if (!std::isfinite(v)) throw std::invalid_argument(where + ": non-finite weight");
    }
    for (double v : l.bias) {
      if (!std::isfinite(v)) throw std::invalid_argument(where + ": non-finite bias");
    }
  }
}

bool operator==(const DenseLayer& a, const DenseLayer& b) {
  return a.in == b.in && a.out == b.out && a.weights == b.weights && a.bias == b.bias;
}

bool operator==(const MlpParams& a, const MlpParams& b) { return a.layers == b.layers; }

MlpParams make_mlp(int input, std::span<const int> hidden, int output, Rng& rng) {
  MlpParams p;
  int in = input;
  auto add = [&](int out) {
    DenseLayer l{in, out, std::vector<double>(static_cast<std::size_t>(in) * out),
                 std::vector<double>(static_cast<std::size_t>(out), 0.0)};
    const double limit = std::sqrt(6.0 / in);
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& w : l.weights) w = dist(rng);
    p.layers.push_back(std::move(l));
    in = out;
  };
  for (int h : hidden) add(h);
  add(output);
  p.validate();
  return p;
}

ForwardTrace forward_batch(const MlpParams& params, std::span<const double> inputs, int batch,
                           Backend backend) {
  if (inputs.size() != static_cast<std::size_t>(batch) * params.input_size()) {
    throw std::invalid_argument("forward: input dimension " + std::to_string(inputs.size()) +
                                " does not match network input " +
                                std::to_string(params.input_size()));
  }
  ForwardTrace t;
  t.batch = batch;
  t.activations.reserve(params.layers.size() + 1);
  t.activations.emplace_back(inputs.begin(), inputs.end());
  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    const auto& l = params.layers[li];
    std::vector<double> y(static_cast<std::size_t>(batch) * l.out);
    kernels::dense_forward(backend, t.activations.back(), l.weights, l.bias, y, batch, l.in, l.out);
    if (li + 1 < params.layers.size()) {
      for (auto& v : y) v = v > 0.0 ? v : 0.0;
    }
    t.activations.push_back(std::move(y));
  }
  return t;
}

std::vector<double> forward(const MlpParams& params, std::span<const double> input,
                            Backend backend) {
  auto t = forward_batch(params, input, 1, backend);
  return std::move(t.activations.back());
}

void backward(const MlpParams& params, const ForwardTrace& trace, std::span<const double> d_output,
              MlpParams& grad, Backend backend) {
  const int batch = trace.batch;
  std::vector<double> delta(d_output.begin(), d_output.end());
  for (std::size_t li = params.layers.size(); li-- > 0;) {
    const auto& l = params.layers[li];
    auto& g = grad.layers[li];
    const auto& x = trace.activations[li];
    kernels::dense_backward_params(backend, x, delta, g.weights, g.bias, batch, l.in, l.out);
    if (li == 0) break;
    std::vector<double> dx(static_cast<std::size_t>(batch) * l.in);
    kernels::dense_backward_input(backend, delta, l.weights, dx, batch, l.in, l.out);
    // ReLU derivative of the previous layer's output; x holds post-activation
    // values, so x > 0 exactly where the unit was active.
    for (std::size_t i = 0; i < dx.size(); ++i) {
      if (!(x[i] > 0.0)) dx[i] = 0.0;
    }
    delta = std::move(dx);
  }
}

}  // namespace xslice::dqn
