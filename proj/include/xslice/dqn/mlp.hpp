#pragma once

#include <span>
#include <vector>

#include "xslice/dqn/kernels.hpp"
#include "xslice/rng.hpp"

namespace xslice::dqn {

using kernels::Backend;

struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;     // out
};

// Affine layers with ReLU between them and a linear output layer.
struct MlpParams {
  std::vector<DenseLayer> layers;

  int input_size() const { return layers.empty() ? 0 : layers.front().in; }
  int output_size() const { return layers.empty() ? 0 : layers.back().out; }
  std::size_t parameter_count() const;

  // Same shapes, all entries zero.
  MlpParams zeros_like() const;
  // Throws std::invalid_argument if the layer chain or sizes are inconsistent
  // or any entry is non-finite.
  void validate() const;
};

bool operator==(const DenseLayer& a, const DenseLayer& b);
bool operator==(const MlpParams& a, const MlpParams& b);

// Uniform He-style init: U(-sqrt(6 / fan_in), sqrt(6 / fan_in)), zero bias.
MlpParams make_mlp(int input, std::span<const int> hidden, int output, Rng& rng);

std::vector<double> forward(const MlpParams& params, std::span<const double> input,
                            Backend backend = Backend::serial);

// Batched forward keeping every layer's post-activation output for backprop.
// activations[0] is the input, activations[L] the linear output.
struct ForwardTrace {
  int batch = 0;
  std::vector<std::vector<double>> activations;
};

ForwardTrace forward_batch(const MlpParams& params, std::span<const double> inputs, int batch,
                           Backend backend = Backend::serial);

// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output).
void backward(const MlpParams& params, const ForwardTrace& trace, std::span<const double> d_output,
              MlpParams& grad, Backend backend = Backend::serial);

}  // namespace xslice::dqn
