#include "xslice/dqn/kernels.hpp"

#include <vector>

namespace xslice::dqn::kernels::serial {

// w transposed to in x out so the inner loop runs over contiguous outputs.
// Each y[b, o] still sums bias first, then i ascending.
std::span<const double> transposed(std::span<const double> w, int in, int out) {
  static thread_local std::vector<double> wt;
  wt.resize(static_cast<std::size_t>(in) * out);
  for (int o = 0; o < out; ++o) {
    for (int i = 0; i < in; ++i) {
      wt[static_cast<std::size_t>(i) * out + o] = w[static_cast<std::size_t>(o) * in + i];
    }
  }
  return wt;
}

void forward_row(const double* xb, std::span<const double> wt, std::span<const double> bias,
                 double* yb, int in, int out) {
  for (int o = 0; o < out; ++o) yb[o] = bias[o];
  for (int i = 0; i < in; ++i) {
    const double xi = xb[i];
    if (xi == 0.0) continue;  // ReLU zeros
    const double* wi = wt.data() + static_cast<std::size_t>(i) * out;
    for (int o = 0; o < out; ++o) yb[o] += xi * wi[o];
  }
}

void forward_row_direct(const double* xb, std::span<const double> w, std::span<const double> bias,
                        double* yb, int in, int out) {
  // Same summation order as forward_row; four outputs in flight for ILP.
  int o = 0;
  for (; o + 4 <= out; o += 4) {
    const double* w0 = w.data() + static_cast<std::size_t>(o) * in;
    const double* w1 = w0 + in;
    const double* w2 = w1 + in;
    const double* w3 = w2 + in;
    double a0 = bias[o], a1 = bias[o + 1], a2 = bias[o + 2], a3 = bias[o + 3];
    for (int i = 0; i < in; ++i) {
      const double xi = xb[i];
      if (xi == 0.0) continue;
      a0 += xi * w0[i];
      a1 += xi * w1[i];
      a2 += xi * w2[i];
      a3 += xi * w3[i];
    }
    yb[o] = a0;
    yb[o + 1] = a1;
    yb[o + 2] = a2;
    yb[o + 3] = a3;
  }
  for (; o < out; ++o) {
    const double* wo = w.data() + static_cast<std::size_t>(o) * in;
    double a = bias[o];
    for (int i = 0; i < in; ++i) {
      if (xb[i] != 0.0) a += xb[i] * wo[i];
    }
    yb[o] = a;
  }
}

void dense_forward(std::span<const double> x, std::span<const double> w,
                   std::span<const double> bias, std::span<double> y, int batch, int in, int out) {
  if (batch < kTransposeMinBatch) {
    for (int b = 0; b < batch; ++b) {
      forward_row_direct(x.data() + static_cast<std::size_t>(b) * in, w, bias,
                         y.data() + static_cast<std::size_t>(b) * out, in, out);
    }
    return;
  }
  const auto wt = transposed(w, in, out);
  for (int b = 0; b < batch; ++b) {
    forward_row(x.data() + static_cast<std::size_t>(b) * in, wt, bias,
                y.data() + static_cast<std::size_t>(b) * out, in, out);
  }
}

void dense_backward_params(std::span<const double> x, std::span<const double> dy,
                           std::span<double> grad_w, std::span<double> grad_b, int batch, int in,
                           int out) {
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

}  // namespace xslice::dqn::kernels::serial

namespace xslice::dqn::kernels {

void dense_forward(Backend backend, std::span<const double> x, std::span<const double> w,
                   std::span<const double> bias, std::span<double> y, int batch, int in, int out) {
  if (backend == Backend::openmp) {
    omp::dense_forward(x, w, bias, y, batch, in, out);
  } else {
    serial::dense_forward(x, w, bias, y, batch, in, out);
  }
}

void dense_backward_params(Backend backend, std::span<const double> x, std::span<const double> dy,
                           std::span<double> grad_w, std::span<double> grad_b, int batch, int in,
                           int out) {
  if (backend == Backend::openmp) {
    omp::dense_backward_params(x, dy, grad_w, grad_b, batch, in, out);
  } else {
    serial::dense_backward_params(x, dy, grad_w, grad_b, batch, in, out);
  }
}

void dense_backward_input(Backend backend, std::span<const double> dy, std::span<const double> w,
                          std::span<double> dx, int batch, int in, int out) {
  if (backend == Backend::openmp) {
    omp::dense_backward_input(dy, w, dx, batch, in, out);
  } else {
    serial::dense_backward_input(dy, w, dx, batch, in, out);
  }
}

}  // namespace xslice::dqn::kernels
