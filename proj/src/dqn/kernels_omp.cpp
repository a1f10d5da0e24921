#include <omp.h>

#include "xslice/dqn/kernels.hpp"

namespace xslice::dqn::kernels::omp {

// Below this many multiply-adds the fork/join costs more than it saves.
constexpr long kParallelThreshold = 1 << 14;

void dense_forward(std::span<const double> x, std::span<const double> w,
                   std::span<const double> bias, std::span<double> y, int batch, int in, int out) {
  if (batch < serial::kTransposeMinBatch) {
    serial::dense_forward(x, w, bias, y, batch, in, out);
    return;
  }
  const long work = static_cast<long>(batch) * in * out;
  const auto wt = serial::transposed(w, in, out);
#pragma omp parallel for schedule(static) if (work > kParallelThreshold)
  for (int b = 0; b < batch; ++b) {
    serial::forward_row(x.data() + static_cast<std::size_t>(b) * in, wt, bias,
                        y.data() + static_cast<std::size_t>(b) * out, in, out);
  }
}

void dense_backward_params(std::span<const double> x, std::span<const double> dy,
                           std::span<double> grad_w, std::span<double> grad_b, int batch, int in,
                           int out) {
  const long work = static_cast<long>(batch) * in * out;
#pragma omp parallel for schedule(static) if (work > kParallelThreshold)
  for (int o = 0; o < out; ++o) {
    double* gw = grad_w.data() + static_cast<std::size_t>(o) * in;
    double gb = grad_b[o];
    for (int b = 0; b < batch; ++b) {
      const double g = dy[static_cast<std::size_t>(b) * out + o];
      if (g == 0.0) continue;
      const double* xb = x.data() + static_cast<std::size_t>(b) * in;
      for (int i = 0; i < in; ++i) gw[i] += g * xb[i];
      gb += g;
    }
    grad_b[o] = gb;
  }
}

void dense_backward_input(std::span<const double> dy, std::span<const double> w,
                          std::span<double> dx, int batch, int in, int out) {
  const long work = static_cast<long>(batch) * in * out;
#pragma omp parallel for schedule(static) if (work > kParallelThreshold)
  for (int b = 0; b < batch; ++b) {
    double* dxb = dx.data() + static_cast<std::size_t>(b) * in;
    for (int i = 0; i < in; ++i) dxb[i] = 0.0;
    for (int o = 0; o < out; ++o) {
      const double g = dy[static_cast<std::size_t>(b) * out + o];
      if (g == 0.0) continue;
      const double* wo = w.data() + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) dxb[i] += g * wo[i];
    }
  }
}

}  // namespace xslice::dqn::kernels::omp
