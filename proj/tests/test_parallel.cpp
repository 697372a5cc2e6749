#include <doctest.h>

#include "splitnet/datagen.hpp"
#include "splitnet/errors.hpp"
#include "splitnet/parallel.hpp"
#include "splitnet/rng.hpp"
#include "splitnet/train.hpp"

using namespace splitnet;

namespace {

std::vector<MemberModel> make_members(int s, std::uint64_t seed) {
  ModelConfig cfg;
  cfg.input_shape = {2};
  cfg.hidden_widths = {16, 16};
  cfg.num_classes = 3;
  std::vector<MemberModel> models;
  for (int m = 0; m < s; ++m) models.emplace_back(cfg, m, seed + m);
  return models;
}

Tensor make_batch(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Tensor x({n, 2});
  for (double& v : x.data) v = rng.normal();
  return x;
}

TrainConfig tiny_config(bool parallel) {
  TrainConfig cfg;
  cfg.s = 2;
  cfg.max_epoch = 4;
  cfg.slow_epoch = 2;
  cfg.cot_warm_epochs = 2;
  cfg.batch_size = 32;
  cfg.base_seed = 77;
  cfg.hidden_widths = {12, 12};
  cfg.parallel_members = parallel;
  return cfg;
}

}  // namespace

TEST_CASE("bench validates its inputs") {
  auto models = make_members(2, 5);
  const Tensor batch = make_batch(16, 1);
  CHECK_THROWS_AS(bench(models, batch, BenchMode::concurrent, 0, 10), ValidationError);
  CHECK_THROWS_AS(bench(models, batch, BenchMode::sequential, 1, 3), ValidationError);
  std::vector<MemberModel> none;
  CHECK_THROWS_AS(bench(none, batch, BenchMode::sequential, 1, 10), ValidationError);
}

TEST_CASE("sequential and concurrent modes produce bitwise-equal ensembles") {
  auto models = make_members(3, 11);
  const Tensor batch = make_batch(40, 2);
  const auto seq = bench(models, batch, BenchMode::sequential, 1, 10);
  const auto par = bench(models, batch, BenchMode::concurrent, 2, 10);
  CHECK(seq.ensemble_scores.data == par.ensemble_scores.data);
  // three warm-up repetitions are dropped from the timings
  CHECK(seq.report.wall_ms.size() == 7);
  CHECK(par.report.wall_ms.size() == 7);
  CHECK(seq.report.median_ms > 0.0);
  CHECK(par.report.p95_ms >= par.report.median_ms);
}

TEST_CASE("a single member behaves the same in both modes") {
  auto models = make_members(1, 3);
  const Tensor batch = make_batch(24, 4);
  const auto seq = bench(models, batch, BenchMode::sequential, 1, 10);
  const auto par = bench(models, batch, BenchMode::concurrent, 2, 10);
  CHECK(seq.ensemble_scores.data == par.ensemble_scores.data);
  const Tensor direct = models[0].forward(batch);
  CHECK(seq.ensemble_scores.data == direct.data);
}

TEST_CASE("bench_pair fills the relative speedup") {
  auto models = make_members(2, 7);
  const Tensor batch = make_batch(32, 6);
  const auto [seq, par] = bench_pair(models, batch, 2, 10);
  CHECK(par.report.speedup_vs_sequential ==
        doctest::Approx(seq.report.median_ms / par.report.median_ms).epsilon(1e-9));
  const auto j = to_json(par.report);
  CHECK(j.at("mode") == "concurrent");
  CHECK(j.at("speedup_vs_sequential").get<double>() > 0.0);
}

TEST_CASE("threaded training is bitwise identical to sequential training") {
  const Dataset train_set = make_spirals(60, 3, 0.15, 100);
  const Dataset test_set = make_spirals(20, 3, 0.15, 200);
  const auto a = train(tiny_config(false), train_set, test_set);
  const auto b = train(tiny_config(true), train_set, test_set);
  REQUIRE(a.models.size() == b.models.size());
  for (std::size_t m = 0; m < a.models.size(); ++m) {
    const auto pa = a.models[m].params();
    const auto pb = b.models[m].params();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t k = 0; k < pa.size(); ++k)
      CHECK(pa[k]->value.data == pb[k]->value.data);
  }
  REQUIRE(a.record.epochs.size() == b.record.epochs.size());
  for (std::size_t e = 0; e < a.record.epochs.size(); ++e) {
    CHECK(a.record.epochs[e].ce_member == b.record.epochs[e].ce_member);
    CHECK(a.record.epochs[e].cot == b.record.epochs[e].cot);
    CHECK(a.record.epochs[e].acc_ensemble == b.record.epochs[e].acc_ensemble);
  }
}
