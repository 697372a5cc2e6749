#pragma once

#include <vector>

#include "splitnet/tensor.hpp"
#include "splitnet/view.hpp"

namespace splitnet {

struct ProbBatch {
  Tensor values;  // (batch, C)
  bool normalized = false;
};

// Numerically stable row-wise softmax.
ProbBatch softmax(const Tensor& logits);

// Mean cross entropy with one-hot targets. With an active mixup record the
// target is lambda * y + (1 - lambda) * y[perm].
double cross_entropy(const ProbBatch& p, const std::vector<int>& labels,
                     const MixupInfo& mix = MixupInfo{});

// Generalized Jensen-Shannon divergence H(mean p_i) - mean H(p_i), natural
// log, mean over the batch. Zero iff all members agree; at most ln S.
double cot_loss(const std::vector<ProbBatch>& probs);

struct TotalLoss {
  double total = 0.0;
  std::vector<double> ce_terms;  // one per member
  double cot = 0.0;
  double lambda = 0.0;
  std::vector<Tensor> grad_logits;  // d total / d z_i
};

// sum_i CE(softmax(z_i), y) + lambda * cot(softmax(z_1)..softmax(z_S)),
// with analytic gradients w.r.t. every member's logits.
TotalLoss total_loss(const std::vector<Tensor>& logits, const std::vector<int>& labels,
                     double lambda, const std::vector<MixupInfo>& mixups = {});

}  // namespace splitnet
