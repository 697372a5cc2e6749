#pragma once

#include <vector>

#include "splitnet/tensor.hpp"

namespace splitnet {

enum class CombineMode { average, max_confidence };

struct EnsembleRule {
  CombineMode combine = CombineMode::average;
  bool apply_softmax_first = false;  // default: average raw outputs
};

// Combine S equal-shaped (batch, C) score batches into one.
Tensor combine(const EnsembleRule& rule, const std::vector<Tensor>& scores);

std::vector<int> argmax_rows(const Tensor& scores);

double accuracy(const Tensor& scores, const std::vector<int>& labels);

struct WeightSpread {
  // one (x, y) pair per member, PCA-projected
  std::vector<std::pair<double, double>> coordinates;
  double spread = 0.0;  // standard deviation of all coordinates
};

// Project S flattened final-layer weight vectors to 2-D via PCA of the
// centered Gram matrix; spread is the diversity statistic.
WeightSpread weight_spread(const std::vector<std::vector<double>>& weights);

}  // namespace splitnet
