// Kernel benchmarks: OpenMP kernels against the serial reference, on the
// geometries the network actually runs (6x6/s2/p2 samplers, 1x1 weightings,
// 3x3 heads).

#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>
#include <vector>

#include "hbpn/kernels.hpp"
#include "hbpn/reference.hpp"

using namespace hbpn;

namespace {

struct Problem {
  Shape4 xs;
  ConvSpec spec;
  std::vector<float> x, w, b, y, dy, dx, dw, db;
  Shape4 ys;

  Problem(Shape4 in, ConvSpec s, bool transposed) : xs(in), spec(s) {
    std::mt19937 rng(1);
    std::uniform_real_distribution<float> d(-1.0f, 1.0f);
    const int oh = transposed ? deconv_out_extent(in.h, s, "h")
                              : conv_out_extent(in.h, s, "h");
    const int ow = transposed ? deconv_out_extent(in.w, s, "w")
                              : conv_out_extent(in.w, s, "w");
    ys = Shape4{in.n, s.out_channels, oh, ow};
    auto fill = [&](std::vector<float>& v, std::int64_t n) {
      v.resize(n);
      for (auto& e : v) e = d(rng);
    };
    fill(x, xs.numel());
    fill(w, s.weight_count());
    fill(b, s.out_channels);
    fill(dy, ys.numel());
    y.assign(ys.numel(), 0.0f);
    dx.assign(xs.numel(), 0.0f);
    dw.assign(w.size(), 0.0f);
    db.assign(b.size(), 0.0f);
  }
};

// the stride-2 sampler of a depth-1 block at base width 64
Problem& sampler_problem() {
  static Problem p(Shape4{1, 64, 32, 32}, ConvSpec{64, 128, 6, 2, 2}, false);
  return p;
}

Problem& deconv_problem() {
  static Problem p(Shape4{1, 128, 16, 16}, ConvSpec{128, 64, 6, 2, 2}, true);
  return p;
}

Problem& pointwise_problem() {
  static Problem p(Shape4{1, 128, 32, 32}, ConvSpec{128, 128, 1, 1, 0}, false);
  return p;
}

void set_threads_from_state(const benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
}

}  // namespace

static void BM_conv2d_fwd_reference(benchmark::State& state) {
  Problem& p = sampler_problem();
  for (auto _ : state) {
    reference::conv2d_fwd(p.x.data(), p.xs.n, p.xs.c, p.xs.h, p.xs.w,
                          p.w.data(), p.b.data(), p.spec.out_channels,
                          p.spec.kernel, p.spec.stride, p.spec.padding,
                          p.y.data());
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_conv2d_fwd_reference)->Unit(benchmark::kMillisecond);

static void BM_conv2d_fwd_parallel(benchmark::State& state) {
  set_threads_from_state(state);
  Problem& p = sampler_problem();
  for (auto _ : state) {
    kernels::conv2d_fwd(p.x.data(), p.xs, p.w.data(), p.b.data(), p.spec,
                        p.y.data());
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_conv2d_fwd_parallel)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

static void BM_conv2d_bwd_input_reference(benchmark::State& state) {
  Problem& p = sampler_problem();
  for (auto _ : state) {
    reference::conv2d_bwd_input(p.dy.data(), p.xs.n, p.xs.c, p.xs.h, p.xs.w,
                                p.w.data(), p.spec.out_channels, p.spec.kernel,
                                p.spec.stride, p.spec.padding, p.dx.data());
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_conv2d_bwd_input_reference)->Unit(benchmark::kMillisecond);

static void BM_conv2d_bwd_input_parallel(benchmark::State& state) {
  set_threads_from_state(state);
  Problem& p = sampler_problem();
  for (auto _ : state) {
    kernels::conv2d_bwd_input(p.dy.data(), p.xs, p.w.data(), p.spec,
                              p.dx.data());
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_conv2d_bwd_input_parallel)
    ->Arg(1)
    ->Arg(2)
    ->Unit(benchmark::kMillisecond);

static void BM_conv2d_bwd_params_reference(benchmark::State& state) {
  Problem& p = sampler_problem();
  for (auto _ : state) {
    reference::conv2d_bwd_params(p.dy.data(), p.x.data(), p.xs.n, p.xs.c,
                                 p.xs.h, p.xs.w, p.spec.out_channels,
                                 p.spec.kernel, p.spec.stride, p.spec.padding,
                                 p.dw.data(), p.db.data());
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_conv2d_bwd_params_reference)->Unit(benchmark::kMillisecond);

static void BM_conv2d_bwd_params_parallel(benchmark::State& state) {
  set_threads_from_state(state);
  Problem& p = sampler_problem();
  for (auto _ : state) {
    kernels::conv2d_bwd_params(p.dy.data(), p.x.data(), p.xs, p.spec,
                               p.dw.data(), p.db.data());
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_conv2d_bwd_params_parallel)
    ->Arg(1)
    ->Arg(2)
    ->Unit(benchmark::kMillisecond);

static void BM_deconv2d_fwd_reference(benchmark::State& state) {
  Problem& p = deconv_problem();
  for (auto _ : state) {
    reference::deconv2d_fwd(p.x.data(), p.xs.n, p.xs.c, p.xs.h, p.xs.w,
                            p.w.data(), p.b.data(), p.spec.out_channels,
                            p.spec.kernel, p.spec.stride, p.spec.padding,
                            p.y.data());
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_deconv2d_fwd_reference)->Unit(benchmark::kMillisecond);

static void BM_deconv2d_fwd_parallel(benchmark::State& state) {
  set_threads_from_state(state);
  Problem& p = deconv_problem();
  for (auto _ : state) {
    kernels::deconv2d_fwd(p.x.data(), p.xs, p.w.data(), p.b.data(), p.spec,
                          p.y.data());
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_deconv2d_fwd_parallel)
    ->Arg(1)
    ->Arg(2)
    ->Unit(benchmark::kMillisecond);

static void BM_pointwise_fwd_parallel(benchmark::State& state) {
  set_threads_from_state(state);
  Problem& p = pointwise_problem();
  for (auto _ : state) {
    kernels::conv2d_fwd(p.x.data(), p.xs, p.w.data(), p.b.data(), p.spec,
                        p.y.data());
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_pointwise_fwd_parallel)
    ->Arg(1)
    ->Arg(2)
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
