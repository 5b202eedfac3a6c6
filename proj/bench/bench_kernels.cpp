// Fast (im2col + Eigen, OpenMP batch) kernels against the reference loops.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>
#include <omp.h>

#include "gyrocal/estimator.hpp"
#include "gyrocal/nn/kernels.hpp"
#include "gyrocal/nn/network.hpp"

using namespace gyrocal;
using namespace gyrocal::nn;

namespace {

std::vector<double> randn(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<double> v(n);
  for (double& x : v) x = nd(rng);
  return v;
}

// conv1 and conv2 of the default network at 1 s windows.
ConvDims conv_case(int which) {
  return which == 0 ? ConvDims{3, 200, 16, 7, 1} : ConvDims{16, 48, 32, 7, 1};
}

template <Backend B>
void BM_ConvForward(benchmark::State& st) {
  const ConvDims d = conv_case(static_cast<int>(st.range(0)));
  const auto in = randn(static_cast<std::size_t>(d.in_channels) * d.length, 1);
  const auto w = randn(static_cast<std::size_t>(d.out_channels) * d.in_channels * d.kernel, 2);
  const auto b = randn(d.out_channels, 3);
  std::vector<double> out(static_cast<std::size_t>(d.out_channels) * d.out_length()), col(d.col_size());
  for (auto _ : st) {
    if constexpr (B == Backend::Fast) fast::conv1d_forward(d, in.data(), w.data(), b.data(), out.data(), col.data());
    else reference::conv1d_forward(d, in.data(), w.data(), b.data(), out.data(), col.data());
    benchmark::DoNotOptimize(out.data());
  }
}

template <Backend B>
void BM_ConvBackward(benchmark::State& st) {
  const ConvDims d = conv_case(static_cast<int>(st.range(0)));
  const auto in = randn(static_cast<std::size_t>(d.in_channels) * d.length, 1);
  const auto w = randn(static_cast<std::size_t>(d.out_channels) * d.in_channels * d.kernel, 2);
  const auto b = randn(d.out_channels, 3);
  const auto dout = randn(static_cast<std::size_t>(d.out_channels) * d.out_length(), 4);
  std::vector<double> out(dout.size()), col(d.col_size()), dcol(d.col_size());
  std::vector<double> dw(w.size()), db(b.size()), din(in.size());
  fast::conv1d_forward(d, in.data(), w.data(), b.data(), out.data(), col.data());
  for (auto _ : st) {
    if constexpr (B == Backend::Fast) {
      fast::conv1d_backward(d, in.data(), w.data(), dout.data(), dw.data(), db.data(), din.data(), col.data(), dcol.data());
    } else {
      reference::conv1d_backward(d, in.data(), w.data(), dout.data(), dw.data(), db.data(), din.data(), col.data(),
                                 dcol.data());
    }
    benchmark::DoNotOptimize(din.data());
  }
}

template <Backend B>
void BM_MaxPool(benchmark::State& st) {
  const PoolDims d{16, 194, 4, 4};
  const auto in = randn(static_cast<std::size_t>(d.channels) * d.length, 5);
  std::vector<double> out(static_cast<std::size_t>(d.channels) * d.out_length());
  std::vector<int> idx(out.size());
  for (auto _ : st) {
    if constexpr (B == Backend::Fast) fast::maxpool_forward(d, in.data(), out.data(), idx.data());
    else reference::maxpool_forward(d, in.data(), out.data(), idx.data());
    benchmark::DoNotOptimize(out.data());
  }
}

template <Backend B>
void BM_Dense(benchmark::State& st) {
  const int n_in = 32 * 10, n_out = 64;
  const auto x = randn(n_in, 6), w = randn(static_cast<std::size_t>(n_in) * n_out, 7), b = randn(n_out, 8);
  std::vector<double> y(n_out);
  for (auto _ : st) {
    if constexpr (B == Backend::Fast) fast::dense_forward(n_in, n_out, x.data(), w.data(), b.data(), y.data());
    else reference::dense_forward(n_in, n_out, x.data(), w.data(), b.data(), y.data());
    benchmark::DoNotOptimize(y.data());
  }
}

// One mini-batch gradient of the default network; range(0) = threads, range(1) = fast.
void BM_BatchGradient(benchmark::State& st) {
  const int threads = static_cast<int>(st.range(0));
  Network net = BiasNetSpec{}.build(1);
  net.set_backend(st.range(1) ? Backend::Fast : Backend::Reference);
  const std::size_t batch = 32;
  const auto x = randn(batch * net.input_shape().size(), 9);
  const auto y = randn(batch * 3, 10);
  std::vector<const double*> ptrs;
  for (std::size_t i = 0; i < batch; ++i) ptrs.push_back(x.data() + i * net.input_shape().size());
  std::vector<double> grad(net.parameter_count());
  BatchGradient bg(net, threads);
  for (auto _ : st) {
    benchmark::DoNotOptimize(bg.compute(net, ptrs, y, grad));
  }
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * batch));
}

void batch_args(benchmark::internal::Benchmark* b) {
  for (int fast : {0, 1}) {
    b->Args({1, fast});
    if (omp_get_max_threads() > 1) b->Args({omp_get_max_threads(), fast});
  }
}

}  // namespace

BENCHMARK(BM_ConvForward<Backend::Reference>)->Arg(0)->Arg(1);
BENCHMARK(BM_ConvForward<Backend::Fast>)->Arg(0)->Arg(1);
BENCHMARK(BM_ConvBackward<Backend::Reference>)->Arg(0)->Arg(1);
BENCHMARK(BM_ConvBackward<Backend::Fast>)->Arg(0)->Arg(1);
BENCHMARK(BM_MaxPool<Backend::Reference>);
BENCHMARK(BM_MaxPool<Backend::Fast>);
BENCHMARK(BM_Dense<Backend::Reference>);
BENCHMARK(BM_Dense<Backend::Fast>);
BENCHMARK(BM_BatchGradient)->Apply(batch_args)->UseRealTime();

BENCHMARK_MAIN();
