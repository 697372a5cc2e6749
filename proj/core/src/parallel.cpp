#include "splitnet/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

#include "splitnet/errors.hpp"

namespace splitnet {

namespace {

constexpr int kWarmupReps = 3;

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  if (v.empty()) return 0.0;
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

std::vector<Tensor> run_members(std::vector<MemberModel>& models, const Tensor& batch,
                                BenchMode mode, int workers) {
  std::vector<Tensor> outputs(models.size());
  if (mode == BenchMode::sequential || workers == 1) {
    for (std::size_t m = 0; m < models.size(); ++m) outputs[m] = models[m].forward(batch);
    return outputs;
  }
  // Each member runs on exactly one lane; lanes never share a member.
  const int lanes = std::min<int>(workers, static_cast<int>(models.size()));
  std::vector<std::thread> pool;
  pool.reserve(lanes);
  for (int lane = 0; lane < lanes; ++lane) {
    pool.emplace_back([&, lane]() {
      for (std::size_t m = lane; m < models.size(); m += lanes)
        outputs[m] = models[m].forward(batch);
    });
  }
  for (auto& t : pool) t.join();
  return outputs;
}

}  // namespace

BenchResult bench(std::vector<MemberModel>& models, const Tensor& batch, BenchMode mode,
                  int workers, int repetitions, const EnsembleRule& rule) {
  if (models.empty()) throw ValidationError("bench: no models");
  if (workers < 1) throw ValidationError("bench: workers must be >= 1");
  if (repetitions < 10) throw ValidationError("bench: repetitions must be >= 10");

  BenchResult result;
  result.report.mode = mode;
  result.report.batch_size = batch.shape.empty() ? 0 : batch.shape[0];
  result.report.repetitions = repetitions;
  result.report.workers = mode == BenchMode::sequential ? 1 : workers;

  for (int rep = 0; rep < repetitions; ++rep) {
    const auto start = std::chrono::steady_clock::now();
    auto outputs = run_members(models, batch, mode, workers);
    const auto stop = std::chrono::steady_clock::now();
    // Combination happens outside the timed region in member-index order.
    result.ensemble_scores = combine(rule, outputs);
    if (rep >= kWarmupReps) {
      const double ms = std::chrono::duration<double, std::milli>(stop - start).count();
      result.report.wall_ms.push_back(ms);
    }
  }
  result.report.median_ms = percentile(result.report.wall_ms, 0.5);
  result.report.p95_ms = percentile(result.report.wall_ms, 0.95);
  return result;
}

std::pair<BenchResult, BenchResult> bench_pair(std::vector<MemberModel>& models,
                                               const Tensor& batch, int workers,
                                               int repetitions) {
  auto seq = bench(models, batch, BenchMode::sequential, 1, repetitions);
  auto par = bench(models, batch, BenchMode::concurrent, workers, repetitions);
  seq.report.speedup_vs_sequential = 1.0;
  par.report.speedup_vs_sequential =
      par.report.median_ms > 0.0 ? seq.report.median_ms / par.report.median_ms : 0.0;
  return {std::move(seq), std::move(par)};
}

nlohmann::json to_json(const LatencyReport& report) {
  return nlohmann::json{
      {"schema_version", 1},
      {"mode", report.mode == BenchMode::sequential ? "sequential" : "concurrent"},
      {"batch_size", report.batch_size},
      {"repetitions", report.repetitions},
      {"workers", report.workers},
      {"wall_ms", report.wall_ms},
      {"median_ms", report.median_ms},
      {"p95_ms", report.p95_ms},
      {"speedup_vs_sequential", report.speedup_vs_sequential}};
}

}  // namespace splitnet
