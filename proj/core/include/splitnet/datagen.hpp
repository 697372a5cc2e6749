#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splitnet/tensor.hpp"

namespace splitnet {

struct Dataset {
  Tensor features;  // (N, F) or (N, C, H, W)
  std::vector<int> labels;
  std::string split = "train";
  int num_classes = 0;

  std::size_t size() const { return labels.size(); }
};

// Interleaved noisy spiral arms in 2-D. With sigma = 0 points lie exactly on
// the analytic arms. Deterministic per seed.
Dataset make_spirals(int n_per_class, int classes, double sigma, std::uint64_t seed,
                     double turns = 14.0, double r_min = 0.3, double r_max = 3.0);

// Isotropic Gaussian blobs around points on a circle.
Dataset make_blobs(int n_per_class, int classes, double sigma, std::uint64_t seed,
                   double radius = 2.0);

// CSV with header f0..fk,label. Only flat (N, F) feature tensors.
void save_csv(const Dataset& ds, const std::string& path);
Dataset load_csv(const std::string& path);

// Raw little-endian float64 tensor file with a JSON sidecar (path + ".json").
void save_raw(const Dataset& ds, const std::string& path);
Dataset load_raw(const std::string& path);

}  // namespace splitnet
