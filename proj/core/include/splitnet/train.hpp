#pragma once

#include <string>
#include <vector>

#include "splitnet/datagen.hpp"
#include "splitnet/model.hpp"
#include "splitnet/schedule.hpp"

namespace splitnet {

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double lambda = 0.0;
  std::vector<double> ce_member;   // mean over batches
  double cot = 0.0;                // mean over batches (0 when S = 1)
  std::vector<double> acc_member;  // test accuracy
  double acc_ensemble = 0.0;
};

struct TrainRecord {
  std::vector<EpochRecord> epochs;
  double final_test_cot = 0.0;  // co-training loss on the test set (S >= 2)
  std::vector<std::string> checkpoint_paths;
};

struct TrainResult {
  TrainRecord record;
  std::vector<MemberModel> models;
};

// Divide-and-co-train loop. Each member sees its own randomized view of every
// batch; members are stepped in member-index order; the test set is scored
// each epoch per member and as a pre-softmax-average ensemble.
TrainResult train(const TrainConfig& cfg, const Dataset& train_set, const Dataset& test_set);

// metrics.csv: epoch, lr, lambda, ce_member_i..., cot, acc_member_i..., acc_ensemble
void write_metrics_csv(const TrainRecord& record, int s, const std::string& path);

}  // namespace splitnet
