#pragma once

#include <span>

// Dense-layer kernels. Every output element is accumulated by one thread in
// a fixed order, so the OpenMP variants are bitwise identical to the serial
// reference for any thread count.
namespace xslice::dqn::kernels {

enum class Backend { serial, openmp };

// y[b, o] = bias[o] + sum_i x[b, i] * w[o, i]   (w is out x in, row-major)
void dense_forward(Backend backend, std::span<const double> x, std::span<const double> w,
                   std::span<const double> bias, std::span<double> y, int batch, int in, int out);

// grad_w[o, i] += sum_b dy[b, o] * x[b, i];  grad_b[o] += sum_b dy[b, o]
void dense_backward_params(Backend backend, std::span<const double> x, std::span<const double> dy,
                           std::span<double> grad_w, std::span<double> grad_b, int batch, int in,
                           int out);

// dx[b, i] = sum_o dy[b, o] * w[o, i]
void dense_backward_input(Backend backend, std::span<const double> dy, std::span<const double> w,
                          std::span<double> dx, int batch, int in, int out);

namespace serial {
// Below this batch size the weights are used in place instead of transposed.
inline constexpr int kTransposeMinBatch = 8;
void forward_row_direct(const double* xb, std::span<const double> w, std::span<const double> bias,
                        double* yb, int in, int out);
// Helpers shared with the OpenMP variant. `transposed` returns a
// thread-local buffer valid until the next call on the same thread.
std::span<const double> transposed(std::span<const double> w, int in, int out);
void forward_row(const double* xb, std::span<const double> wt, std::span<const double> bias,
                 double* yb, int in, int out);
void dense_forward(std::span<const double> x, std::span<const double> w,
                   std::span<const double> bias, std::span<double> y, int batch, int in, int out);
void dense_backward_params(std::span<const double> x, std::span<const double> dy,
                           std::span<double> grad_w, std::span<double> grad_b, int batch, int in,
                           int out);
void dense_backward_input(std::span<const double> dy, std::span<const double> w,
                          std::span<double> dx, int batch, int in, int out);
}  // namespace serial

namespace omp {
void dense_forward(std::span<const double> x, std::span<const double> w,
                   std::span<const double> bias, std::span<double> y, int batch, int in, int out);
void dense_backward_params(std::span<const double> x, std::span<const double> dy,
                           std::span<double> grad_w, std::span<double> grad_b, int batch, int in,
                           int out);
void dense_backward_input(std::span<const double> dy, std::span<const double> w,
                          std::span<double> dx, int batch, int in, int out);
}  // namespace omp

}  // namespace xslice::dqn::kernels
