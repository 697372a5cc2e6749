#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "splitnet/rng.hpp"
#include "splitnet/tensor.hpp"

namespace splitnet {

struct ParamTensor {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor momentum;
  bool decay = false;  // weight decay applies to conv/fc weights only
};

class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& input) = 0;
  // Accumulates parameter gradients and returns the gradient w.r.t. the input.
  virtual Tensor backward(const Tensor& grad_output) = 0;
  virtual std::vector<ParamTensor*> params() { return {}; }
  virtual void init(Rng& rng) { (void)rng; }
  virtual std::string kind() const = 0;
};

struct ModelConfig {
  std::vector<std::size_t> input_shape;  // {features} or {channels, h, w}
  std::vector<int> hidden_widths;
  int num_classes = 2;
};

struct LoadedCheckpoint;

// One small network: an MLP for vector inputs, or a two-stage 3x3 conv net
// with global average pooling for image-shaped inputs.
class MemberModel {
 public:
  MemberModel(ModelConfig cfg, int member_index, std::uint64_t seed);

  Tensor forward(const Tensor& batch);
  void backward(const Tensor& grad_logits);
  void zero_grad();
  void sgd_step(double lr, double momentum, double wd);

  // Kaiming-normal re-initialization; deterministic for a fixed seed.
  void reinit(std::uint64_t seed);

  std::vector<ParamTensor*> params();
  std::vector<const ParamTensor*> params() const;
  const ModelConfig& config() const { return cfg_; }
  int member_index() const { return member_index_; }
  std::uint64_t seed() const { return seed_; }

  // Flattened classifier weights, used for the weight-spread analysis.
  std::vector<double> final_layer_weights() const;

  void save_checkpoint(const std::string& path, int epoch,
                       const std::string& spec_hash) const;
  static LoadedCheckpoint load_checkpoint(const std::string& path);

 private:
  void build();

  ModelConfig cfg_;
  int member_index_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<std::unique_ptr<Layer>> layers_;
  bool forward_done_ = false;
};

struct LoadedCheckpoint {
  MemberModel model;
  int epoch = 0;
  std::string spec_hash;
};

// Kaiming-normal initialization; deterministic for a fixed seed.
void init_params(MemberModel& model, std::uint64_t seed);

}  // namespace splitnet
