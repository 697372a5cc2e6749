#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace splitnet {

struct TrainConfig {
  int s = 1;
  int max_epoch = 200;
  int slow_epoch = 5;       // learning-rate warm-up span
  double lr = 0.1;          // peak learning rate
  double momentum = 0.9;
  double wd = 0.0;          // already adjusted by the division policy
  double lambda_cot = 0.5;  // peak co-training weight
  int cot_warm_epochs = 40;
  int batch_size = 128;
  std::uint64_t base_seed = 0;
  bool single_precision = false;
  bool parallel_members = false;

  // member architecture
  std::vector<int> hidden_widths = {64, 64};

  // member view pipeline
  double jitter_sigma = 0.2;
  double erase_p = 0.3;
  double mixup_alpha = 0.05;
};

void validate(const TrainConfig& cfg);
nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

// Linear warm-up to the peak, then cosine decay to zero at max_epoch.
double lr_schedule(int epoch, const TrainConfig& cfg);

// Linear ramp of the co-training weight from 0 over cot_warm_epochs.
double lambda_schedule(int epoch, const TrainConfig& cfg);

}  // namespace splitnet
