#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "splitnet/tensor.hpp"

namespace splitnet {

// Batch-wise mixup record; targets are mixed in the loss.
struct MixupInfo {
  bool active = false;
  double lambda = 1.0;
  std::vector<std::size_t> perm;  // partner index per sample
};

// Member-specific augmentation pipeline. Randomness for a call is derived
// entirely from (seed, member_index, epoch, batch_index), so pipelines are
// immutable and concurrently applicable.
struct ViewPipeline {
  int member_index = 0;
  std::uint64_t seed = 0;

  // vector data
  double jitter_sigma = 0.0;

  // image data
  double flip_p = 0.0;
  int pad = 0;
  double erase_p = 0.0;
  std::pair<double, double> erase_area = {0.02, 0.4};
  double erase_fill = 0.0;

  // both
  double mixup_alpha = 0.0;
};

// Returns the augmented batch; never changes the tensor shape. When the
// pipeline has mixup enabled and `mixup` is non-null, the drawn
// (lambda, permutation) pair is reported there for the loss.
Tensor apply_view(const ViewPipeline& pipeline, const Tensor& batch, int epoch,
                  int batch_index, MixupInfo* mixup = nullptr);

}  // namespace splitnet
