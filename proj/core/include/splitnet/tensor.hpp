#pragma once

#include <cstddef>
#include <vector>

namespace splitnet {

// Dense row-major tensor of 64-bit reals.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s);

  std::size_t size() const { return data.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }

  double& at2(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
  double at2(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
  void fill(double v);
  bool all_finite() const;
};

std::size_t shape_size(const std::vector<std::size_t>& shape);

}  // namespace splitnet
