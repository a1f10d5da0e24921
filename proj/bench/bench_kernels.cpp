// Serial vs OpenMP dense kernels at the agent network sizes.
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "xslice/dqn/kernels.hpp"

namespace {

using xslice::dqn::kernels::Backend;

std::vector<double> filled(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

template <Backend B>
void BM_Forward(benchmark::State& st) {
  const int batch = static_cast<int>(st.range(0));
  const int in = static_cast<int>(st.range(1));
  const int out = static_cast<int>(st.range(2));
  auto x = filled(static_cast<std::size_t>(batch) * in, 1);
  auto w = filled(static_cast<std::size_t>(out) * in, 2);
  auto b = filled(static_cast<std::size_t>(out), 3);
  std::vector<double> y(static_cast<std::size_t>(batch) * out);
  for (auto _ : st) {
    xslice::dqn::kernels::dense_forward(B, x, w, b, y, batch, in, out);
    benchmark::DoNotOptimize(y.data());
  }
  st.SetItemsProcessed(st.iterations() * batch * in * out);
}

template <Backend B>
void BM_BackwardParams(benchmark::State& st) {
  const int batch = static_cast<int>(st.range(0));
  const int in = static_cast<int>(st.range(1));
  const int out = static_cast<int>(st.range(2));
  auto x = filled(static_cast<std::size_t>(batch) * in, 1);
  auto dy = filled(static_cast<std::size_t>(batch) * out, 4);
  std::vector<double> gw(static_cast<std::size_t>(out) * in), gb(static_cast<std::size_t>(out));
  for (auto _ : st) {
    xslice::dqn::kernels::dense_backward_params(B, x, dy, gw, gb, batch, in, out);
    benchmark::DoNotOptimize(gw.data());
  }
  st.SetItemsProcessed(st.iterations() * batch * in * out);
}

template <Backend B>
void BM_BackwardInput(benchmark::State& st) {
  const int batch = static_cast<int>(st.range(0));
  const int in = static_cast<int>(st.range(1));
  const int out = static_cast<int>(st.range(2));
  auto dy = filled(static_cast<std::size_t>(batch) * out, 4);
  auto w = filled(static_cast<std::size_t>(out) * in, 2);
  std::vector<double> dx(static_cast<std::size_t>(batch) * in);
  for (auto _ : st) {
    xslice::dqn::kernels::dense_backward_input(B, dy, w, dx, batch, in, out);
    benchmark::DoNotOptimize(dx.data());
  }
  st.SetItemsProcessed(st.iterations() * batch * in * out);
}

void shapes(benchmark::internal::Benchmark* b) {
  b->Args({64, 12, 64})->Args({64, 64, 256})->Args({64, 256, 256})->Args({1, 256, 256});
}

}  // namespace

BENCHMARK(BM_Forward<Backend::serial>)->Apply(shapes);
BENCHMARK(BM_Forward<Backend::openmp>)->Apply(shapes);
BENCHMARK(BM_BackwardParams<Backend::serial>)->Apply(shapes);
BENCHMARK(BM_BackwardParams<Backend::openmp>)->Apply(shapes);
BENCHMARK(BM_BackwardInput<Backend::serial>)->Apply(shapes);
BENCHMARK(BM_BackwardInput<Backend::openmp>)->Apply(shapes);

BENCHMARK_MAIN();
