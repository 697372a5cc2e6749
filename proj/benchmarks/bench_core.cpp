#include <benchmark/benchmark.h>

#include <vector>

#include "splitnet/archspec.hpp"
#include "splitnet/losses.hpp"
#include "splitnet/model.hpp"
#include "splitnet/rng.hpp"
#include "splitnet/view.hpp"

using namespace splitnet;

namespace {

MemberModel make_model(int width, std::uint64_t seed) {
  ModelConfig cfg;
  cfg.input_shape = {2};
  cfg.hidden_widths = {width, width};
  cfg.num_classes = 3;
  return MemberModel(cfg, 0, seed);
}

Tensor make_batch(std::size_t n) {
  Rng rng(1);
  Tensor x({n, 2});
  for (double& v : x.data) v = rng.normal();
  return x;
}

}  // namespace

static void BM_Forward(benchmark::State& state) {
  auto model = make_model(static_cast<int>(state.range(0)), 7);
  const Tensor batch = make_batch(128);
  for (auto _ : state) {
    Tensor out = model.forward(batch);
    benchmark::DoNotOptimize(out.data.data());
  }
}
BENCHMARK(BM_Forward)->Arg(45)->Arg(64)->Arg(128);

static void BM_ForwardBackward(benchmark::State& state) {
  auto model = make_model(static_cast<int>(state.range(0)), 7);
  const Tensor batch = make_batch(128);
  std::vector<int> labels(128);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 3);
  for (auto _ : state) {
    model.zero_grad();
    Tensor logits = model.forward(batch);
    TotalLoss loss = total_loss({logits}, labels, 0.0);
    model.backward(loss.grad_logits[0]);
    benchmark::DoNotOptimize(loss.total);
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(45)->Arg(64);

static void BM_TotalLoss(benchmark::State& state) {
  Rng rng(3);
  std::vector<Tensor> logits;
  for (int m = 0; m < static_cast<int>(state.range(0)); ++m) {
    Tensor z({128, 3});
    for (double& v : z.data) v = rng.normal();
    logits.push_back(z);
  }
  std::vector<int> labels(128);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 3);
  for (auto _ : state) {
    TotalLoss loss = total_loss(logits, labels, 0.5);
    benchmark::DoNotOptimize(loss.total);
  }
}
BENCHMARK(BM_TotalLoss)->Arg(2)->Arg(4);

static void BM_ApplyView(benchmark::State& state) {
  const Tensor batch = make_batch(128);
  ViewPipeline pl;
  pl.seed = 9;
  pl.jitter_sigma = 0.15;
  pl.erase_p = 0.3;
  pl.mixup_alpha = 0.2;
  int epoch = 0;
  for (auto _ : state) {
    MixupInfo mix;
    Tensor out = apply_view(pl, batch, epoch++ % 200, 0, &mix);
    benchmark::DoNotOptimize(out.data.data());
  }
}
BENCHMARK(BM_ApplyView);

static void BM_CostReport(benchmark::State& state) {
  ArchSpec spec;
  spec.family = Family::wrn;
  spec.depth = 28;
  spec.widen_factor = 10;
  for (auto _ : state) {
    auto report = cost_report(spec, FlopConvention::mac);
    benchmark::DoNotOptimize(report.total_params);
  }
}
BENCHMARK(BM_CostReport);

BENCHMARK_MAIN();
