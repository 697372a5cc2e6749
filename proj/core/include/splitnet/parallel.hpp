#pragma once

#include <vector>

#include <json.hpp>

#include "splitnet/ensemble.hpp"
#include "splitnet/model.hpp"

namespace splitnet {

enum class BenchMode { sequential, concurrent };

struct LatencyReport {
  BenchMode mode = BenchMode::sequential;
  std::size_t batch_size = 0;
  int repetitions = 0;
  int workers = 1;
  std::vector<double> wall_ms;  // per repetition, warm-ups already dropped
  double median_ms = 0.0;
  double p95_ms = 0.0;
  double speedup_vs_sequential = 0.0;  // filled by bench_pair
};

struct BenchResult {
  LatencyReport report;
  Tensor ensemble_scores;  // combined output of the last repetition
};

// Times S frozen members on one batch. Sequential runs members one after
// another on the calling thread; concurrent fans them out over `workers`
// lanes. Both modes combine member outputs in member-index order, so the
// ensemble scores are bitwise identical across modes.
BenchResult bench(std::vector<MemberModel>& models, const Tensor& batch, BenchMode mode,
                  int workers, int repetitions = 13, const EnsembleRule& rule = {});

// Runs both modes and fills speedup_vs_sequential on the concurrent report.
std::pair<BenchResult, BenchResult> bench_pair(std::vector<MemberModel>& models,
                                               const Tensor& batch, int workers,
                                               int repetitions = 13);

nlohmann::json to_json(const LatencyReport& report);

}  // namespace splitnet
