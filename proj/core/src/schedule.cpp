#include "splitnet/schedule.hpp"

#include <cmath>
#include <numbers>

#include "splitnet/errors.hpp"

namespace splitnet {

void validate(const TrainConfig& cfg) {
  if (cfg.s < 1) throw ValidationError("config: s must be >= 1");
  if (cfg.max_epoch < 1) throw ValidationError("config: max_epoch must be positive");
  if (cfg.slow_epoch >= cfg.max_epoch) throw ValidationError("config: slow_epoch must be < max_epoch");
  if (cfg.slow_epoch < 0) throw ValidationError("config: slow_epoch must be >= 0");
  if (cfg.cot_warm_epochs > cfg.max_epoch)
    throw ValidationError("config: cot_warm_epochs must be <= max_epoch");
  if (cfg.lambda_cot < 0.0) throw ValidationError("config: lambda_cot must be >= 0");
  if (cfg.lr <= 0.0) throw ValidationError("config: lr must be positive");
  if (cfg.batch_size < 1) throw ValidationError("config: batch_size must be positive");
}

double lr_schedule(int epoch, const TrainConfig& cfg) {
  if (epoch < 0 || epoch > cfg.max_epoch) throw ValidationError("lr_schedule: epoch out of range");
  if (epoch < cfg.slow_epoch)
    return cfg.lr * static_cast<double>(epoch) / static_cast<double>(cfg.slow_epoch);
  const double t = static_cast<double>(epoch - cfg.slow_epoch) /
                   static_cast<double>(cfg.max_epoch - cfg.slow_epoch);
  return 0.5 * cfg.lr * (1.0 + std::cos(std::numbers::pi * t));
}

double lambda_schedule(int epoch, const TrainConfig& cfg) {
  if (epoch < 0 || epoch >= cfg.max_epoch) throw ValidationError("lambda_schedule: epoch out of range");
  if (cfg.cot_warm_epochs <= 0) return cfg.lambda_cot;
  const double ramp = static_cast<double>(epoch) / static_cast<double>(cfg.cot_warm_epochs);
  return cfg.lambda_cot * std::min(ramp, 1.0);
}

nlohmann::json to_json(const TrainConfig& cfg) {
  return nlohmann::json{{"schema_version", 1},
                        {"s", cfg.s},
                        {"max_epoch", cfg.max_epoch},
                        {"slow_epoch", cfg.slow_epoch},
                        {"lr", cfg.lr},
                        {"momentum", cfg.momentum},
                        {"wd", cfg.wd},
                        {"lambda_cot", cfg.lambda_cot},
                        {"cot_warm_epochs", cfg.cot_warm_epochs},
                        {"batch_size", cfg.batch_size},
                        {"base_seed", cfg.base_seed},
                        {"single_precision", cfg.single_precision},
                        {"parallel_members", cfg.parallel_members},
                        {"hidden_widths", cfg.hidden_widths},
                        {"jitter_sigma", cfg.jitter_sigma},
                        {"erase_p", cfg.erase_p},
                        {"mixup_alpha", cfg.mixup_alpha}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  cfg.s = j.value("s", cfg.s);
  cfg.max_epoch = j.value("max_epoch", cfg.max_epoch);
  cfg.slow_epoch = j.value("slow_epoch", cfg.slow_epoch);
  cfg.lr = j.value("lr", cfg.lr);
  cfg.momentum = j.value("momentum", cfg.momentum);
  cfg.wd = j.value("wd", cfg.wd);
  cfg.lambda_cot = j.value("lambda_cot", cfg.lambda_cot);
  cfg.cot_warm_epochs = j.value("cot_warm_epochs", cfg.cot_warm_epochs);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.base_seed = j.value("base_seed", cfg.base_seed);
  cfg.single_precision = j.value("single_precision", cfg.single_precision);
  cfg.parallel_members = j.value("parallel_members", cfg.parallel_members);
  cfg.hidden_widths = j.value("hidden_widths", cfg.hidden_widths);
  cfg.jitter_sigma = j.value("jitter_sigma", cfg.jitter_sigma);
  cfg.erase_p = j.value("erase_p", cfg.erase_p);
  cfg.mixup_alpha = j.value("mixup_alpha", cfg.mixup_alpha);
  validate(cfg);
  return cfg;
}

}  // namespace splitnet
