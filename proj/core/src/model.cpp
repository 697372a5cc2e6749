#include "splitnet/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "splitnet/errors.hpp"

namespace splitnet {

namespace {

class AffineLayer : public Layer {
 public:
  AffineLayer(std::size_t in, std::size_t out, const std::string& name) : in_(in), out_(out) {
    weight_.name = name + ".weight";
    weight_.value = Tensor({in, out});
    weight_.grad = Tensor({in, out});
    weight_.momentum = Tensor({in, out});
    weight_.decay = true;
    bias_.name = name + ".bias";
    bias_.value = Tensor({out});
    bias_.grad = Tensor({out});
    bias_.momentum = Tensor({out});
  }

  Tensor forward(const Tensor& input) override {
    if (input.shape.size() != 2 || input.shape[1] != in_)
      throw ValidationError("affine: input width mismatch");
    cached_input_ = input;
    const std::size_t batch = input.shape[0];
    Tensor out({batch, out_});
    const double* w = weight_.value.data.data();
    for (std::size_t b = 0; b < batch; ++b) {
      double* o = out.data.data() + b * out_;
      for (std::size_t j = 0; j < out_; ++j) o[j] = bias_.value.data[j];
      const double* x = input.data.data() + b * in_;
      for (std::size_t k = 0; k < in_; ++k) {
        const double xv = x[k];
        const double* wr = w + k * out_;
        for (std::size_t j = 0; j < out_; ++j) o[j] += xv * wr[j];
      }
    }
    return out;
  }

  Tensor backward(const Tensor& grad_output) override {
    const std::size_t batch = cached_input_.shape[0];
    if (grad_output.shape.size() != 2 || grad_output.shape[0] != batch || grad_output.shape[1] != out_)
      throw ValidationError("affine: gradient shape mismatch");
    Tensor grad_input({batch, in_});
    double* gw = weight_.grad.data.data();
    const double* w = weight_.value.data.data();
    for (std::size_t b = 0; b < batch; ++b) {
      const double* x = cached_input_.data.data() + b * in_;
      const double* go = grad_output.data.data() + b * out_;
      double* gi = grad_input.data.data() + b * in_;
      for (std::size_t j = 0; j < out_; ++j) bias_.grad.data[j] += go[j];
      for (std::size_t k = 0; k < in_; ++k) {
        const double xv = x[k];
        double* gwr = gw + k * out_;
        const double* wr = w + k * out_;
        double acc = 0.0;
        for (std::size_t j = 0; j < out_; ++j) {
          gwr[j] += xv * go[j];
          acc += wr[j] * go[j];
        }
        gi[k] = acc;
      }
    }
    return grad_input;
  }

  std::vector<ParamTensor*> params() override { return {&weight_, &bias_}; }

  void init(Rng& rng) override {
    const double stddev = std::sqrt(2.0 / static_cast<double>(in_));
    for (double& v : weight_.value.data) v = rng.normal(0.0, stddev);
    bias_.value.fill(0.0);
    weight_.momentum.fill(0.0);
    bias_.momentum.fill(0.0);
  }

  std::string kind() const override { return "affine"; }

 private:
  std::size_t in_, out_;
  ParamTensor weight_, bias_;
  Tensor cached_input_;
};

class ReluLayer : public Layer {
 public:
  Tensor forward(const Tensor& input) override {
    cached_input_ = input;
    Tensor out = input;
    for (double& v : out.data)
      if (v < 0.0) v = 0.0;
    return out;
  }

  Tensor backward(const Tensor& grad_output) override {
    if (!grad_output.same_shape(cached_input_))
      throw ValidationError("relu: gradient shape mismatch");
    Tensor grad_input = grad_output;
    for (std::size_t i = 0; i < grad_input.data.size(); ++i)
      if (cached_input_.data[i] <= 0.0) grad_input.data[i] = 0.0;
    return grad_input;
  }

  std::string kind() const override { return "relu"; }

 private:
  Tensor cached_input_;
};

// 3x3 convolution, stride 1, zero padding 1. Input (B, C, H, W).
class Conv3x3Layer : public Layer {
 public:
  Conv3x3Layer(std::size_t in_ch, std::size_t out_ch, const std::string& name)
      : in_ch_(in_ch), out_ch_(out_ch) {
    weight_.name = name + ".weight";
    weight_.value = Tensor({out_ch, in_ch, 3, 3});
    weight_.grad = Tensor({out_ch, in_ch, 3, 3});
    weight_.momentum = Tensor({out_ch, in_ch, 3, 3});
    weight_.decay = true;
    bias_.name = name + ".bias";
    bias_.value = Tensor({out_ch});
    bias_.grad = Tensor({out_ch});
    bias_.momentum = Tensor({out_ch});
  }

  Tensor forward(const Tensor& input) override {
    if (input.shape.size() != 4 || input.shape[1] != in_ch_)
      throw ValidationError("conv3x3: input shape mismatch");
    cached_input_ = input;
    const std::size_t batch = input.shape[0], h = input.shape[2], w = input.shape[3];
    Tensor out({batch, out_ch_, h, w});
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t oc = 0; oc < out_ch_; ++oc)
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t x = 0; x < w; ++x) {
            double acc = bias_.value.data[oc];
            for (std::size_t ic = 0; ic < in_ch_; ++ic)
              for (int ky = -1; ky <= 1; ++ky)
                for (int kx = -1; kx <= 1; ++kx) {
                  const long iy = static_cast<long>(y) + ky;
                  const long ix = static_cast<long>(x) + kx;
                  if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(w)) continue;
                  acc += in_at(input, b, ic, iy, ix) * w_at(weight_.value, oc, ic, ky + 1, kx + 1);
                }
            out.data[((b * out_ch_ + oc) * h + y) * w + x] = acc;
          }
    return out;
  }

  Tensor backward(const Tensor& grad_output) override {
    const auto& in = cached_input_;
    if (in.shape.empty()) throw StateError("conv3x3: backward before forward");
    const std::size_t batch = in.shape[0], h = in.shape[2], w = in.shape[3];
    Tensor grad_input(in.shape);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t oc = 0; oc < out_ch_; ++oc)
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t x = 0; x < w; ++x) {
            const double go = grad_output.data[((b * out_ch_ + oc) * h + y) * w + x];
            bias_.grad.data[oc] += go;
            for (std::size_t ic = 0; ic < in_ch_; ++ic)
              for (int ky = -1; ky <= 1; ++ky)
                for (int kx = -1; kx <= 1; ++kx) {
                  const long iy = static_cast<long>(y) + ky;
                  const long ix = static_cast<long>(x) + kx;
                  if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(w)) continue;
                  w_at(weight_.grad, oc, ic, ky + 1, kx + 1) += go * in_at(in, b, ic, iy, ix);
                  grad_input.data[((b * in_ch_ + ic) * h + iy) * w + ix] +=
                      go * w_at(weight_.value, oc, ic, ky + 1, kx + 1);
                }
          }
    return grad_input;
  }

  std::vector<ParamTensor*> params() override { return {&weight_, &bias_}; }

  void init(Rng& rng) override {
    const double stddev = std::sqrt(2.0 / static_cast<double>(in_ch_ * 9));
    for (double& v : weight_.value.data) v = rng.normal(0.0, stddev);
    bias_.value.fill(0.0);
    weight_.momentum.fill(0.0);
    bias_.momentum.fill(0.0);
  }

  std::string kind() const override { return "conv3x3"; }

 private:
  static double in_at(const Tensor& t, std::size_t b, std::size_t c, long y, long x) {
    return t.data[((b * t.shape[1] + c) * t.shape[2] + y) * t.shape[3] + x];
  }
  static double& w_at(Tensor& t, std::size_t oc, std::size_t ic, int ky, int kx) {
    return t.data[((oc * t.shape[1] + ic) * 3 + ky) * 3 + kx];
  }
  static double w_at(const Tensor& t, std::size_t oc, std::size_t ic, int ky, int kx) {
    return t.data[((oc * t.shape[1] + ic) * 3 + ky) * 3 + kx];
  }

  std::size_t in_ch_, out_ch_;
  ParamTensor weight_, bias_;
  Tensor cached_input_;
};

// (B, C, H, W) -> (B, C)
class GlobalAvgPoolLayer : public Layer {
 public:
  Tensor forward(const Tensor& input) override {
    if (input.shape.size() != 4) throw ValidationError("global-average: expected 4-D input");
    cached_shape_ = input.shape;
    const std::size_t batch = input.shape[0], c = input.shape[1];
    const std::size_t hw = input.shape[2] * input.shape[3];
    Tensor out({batch, c});
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        const double* p = input.data.data() + (b * c + ch) * hw;
        for (std::size_t i = 0; i < hw; ++i) acc += p[i];
        out.at2(b, ch) = acc / static_cast<double>(hw);
      }
    return out;
  }

  Tensor backward(const Tensor& grad_output) override {
    if (cached_shape_.empty()) throw StateError("global-average: backward before forward");
    const std::size_t batch = cached_shape_[0], c = cached_shape_[1];
    const std::size_t hw = cached_shape_[2] * cached_shape_[3];
    Tensor grad_input(cached_shape_);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double g = grad_output.at2(b, ch) / static_cast<double>(hw);
        double* p = grad_input.data.data() + (b * c + ch) * hw;
        for (std::size_t i = 0; i < hw; ++i) p[i] = g;
      }
    return grad_input;
  }

  std::string kind() const override { return "global-average"; }

 private:
  std::vector<std::size_t> cached_shape_;
};

}  // namespace

MemberModel::MemberModel(ModelConfig cfg, int member_index, std::uint64_t seed)
    : cfg_(std::move(cfg)), member_index_(member_index), seed_(seed) {
  build();
  init_params(*this, seed_);
}

void MemberModel::build() {
  layers_.clear();
  if (cfg_.num_classes < 2) throw ValidationError("model: num_classes must be >= 2");
  if (cfg_.hidden_widths.empty()) throw ValidationError("model: at least one hidden width required");
  for (int w : cfg_.hidden_widths)
    if (w < 1) throw ValidationError("model: hidden widths must be positive");
  if (cfg_.input_shape.size() == 1) {
    std::size_t in = cfg_.input_shape[0];
    for (std::size_t i = 0; i < cfg_.hidden_widths.size(); ++i) {
      const std::size_t w = static_cast<std::size_t>(cfg_.hidden_widths[i]);
      layers_.push_back(std::make_unique<AffineLayer>(in, w, "hidden" + std::to_string(i)));
      layers_.push_back(std::make_unique<ReluLayer>());
      in = w;
    }
    layers_.push_back(std::make_unique<AffineLayer>(in, cfg_.num_classes, "classifier"));
  } else if (cfg_.input_shape.size() == 3) {
    // Two conv stages, global average pooling, linear classifier.
    if (cfg_.hidden_widths.size() != 2)
      throw ValidationError("model: conv net requires exactly two hidden widths");
    const std::size_t c0 = cfg_.input_shape[0];
    const std::size_t w1 = static_cast<std::size_t>(cfg_.hidden_widths[0]);
    const std::size_t w2 = static_cast<std::size_t>(cfg_.hidden_widths[1]);
    layers_.push_back(std::make_unique<Conv3x3Layer>(c0, w1, "conv1"));
    layers_.push_back(std::make_unique<ReluLayer>());
    layers_.push_back(std::make_unique<Conv3x3Layer>(w1, w2, "conv2"));
    layers_.push_back(std::make_unique<ReluLayer>());
    layers_.push_back(std::make_unique<GlobalAvgPoolLayer>());
    layers_.push_back(std::make_unique<AffineLayer>(w2, cfg_.num_classes, "classifier"));
  } else {
    throw ValidationError("model: input shape must be {features} or {channels, h, w}");
  }
}

Tensor MemberModel::forward(const Tensor& batch) {
  if (batch.shape.size() != cfg_.input_shape.size() + 1)
    throw ValidationError("forward: batch rank mismatch");
  for (std::size_t i = 0; i < cfg_.input_shape.size(); ++i)
    if (batch.shape[i + 1] != cfg_.input_shape[i])
      throw ValidationError("forward: batch feature shape mismatch");
  Tensor h = batch;
  for (auto& layer : layers_) h = layer->forward(h);
  forward_done_ = true;
  return h;
}

void MemberModel::backward(const Tensor& grad_logits) {
  if (!forward_done_) throw StateError("backward called before forward");
  Tensor g = grad_logits;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
}

void MemberModel::zero_grad() {
  for (ParamTensor* p : params()) p->grad.fill(0.0);
}

void MemberModel::sgd_step(double lr, double momentum, double wd) {
  for (ParamTensor* p : params()) {
    const double decay = p->decay ? wd : 0.0;
    for (std::size_t i = 0; i < p->value.data.size(); ++i) {
      const double g = p->grad.data[i] + decay * p->value.data[i];
      double& v = p->momentum.data[i];
      v = momentum * v + g;
      p->value.data[i] -= lr * (g + momentum * v);
    }
  }
}

std::vector<ParamTensor*> MemberModel::params() {
  std::vector<ParamTensor*> out;
  for (auto& layer : layers_)
    for (ParamTensor* p : layer->params()) out.push_back(p);
  return out;
}

std::vector<const ParamTensor*> MemberModel::params() const {
  std::vector<const ParamTensor*> out;
  for (auto& layer : const_cast<MemberModel*>(this)->layers_)
    for (ParamTensor* p : layer->params()) out.push_back(p);
  return out;
}

std::vector<double> MemberModel::final_layer_weights() const {
  auto ps = params();
  // classifier weight is the second to last parameter tensor (weight, bias).
  const ParamTensor* w = ps[ps.size() - 2];
  return w->value.data;
}

void MemberModel::reinit(std::uint64_t seed) {
  seed_ = seed;
  Rng rng(mix_keys({seed, 0x6d6f64656cULL}));
  for (auto& layer : layers_) layer->init(rng);
  for (ParamTensor* p : params()) p->grad.fill(0.0);
  forward_done_ = false;
}

void init_params(MemberModel& model, std::uint64_t seed) { model.reinit(seed); }

namespace {

void write_u32(std::ofstream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::ifstream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void MemberModel::save_checkpoint(const std::string& path, int epoch,
                                  const std::string& spec_hash) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open checkpoint for writing: " + path);
  os.write("SPLT", 4);
  write_u32(os, 1);  // format version
  nlohmann::json meta;
  meta["spec_hash"] = spec_hash;
  meta["member_index"] = member_index_;
  meta["epoch"] = epoch;
  meta["seed"] = seed_;
  meta["input_shape"] = cfg_.input_shape;
  meta["hidden_widths"] = cfg_.hidden_widths;
  meta["num_classes"] = cfg_.num_classes;
  const std::string meta_str = meta.dump();
  write_u32(os, static_cast<std::uint32_t>(meta_str.size()));
  os.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
  for (const ParamTensor* p : params()) {
    for (double v : p->value.data) {
      const float f = static_cast<float>(v);
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      write_u32(os, bits);
    }
  }
}

LoadedCheckpoint MemberModel::load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open checkpoint: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "SPLT", 4) != 0)
    throw ValidationError("bad checkpoint magic in " + path);
  const std::uint32_t version = read_u32(is);
  if (version != 1) throw ValidationError("unsupported checkpoint version");
  const std::uint32_t meta_len = read_u32(is);
  std::string meta_str(meta_len, '\0');
  is.read(meta_str.data(), meta_len);
  nlohmann::json meta = nlohmann::json::parse(meta_str);
  ModelConfig cfg;
  cfg.input_shape = meta.at("input_shape").get<std::vector<std::size_t>>();
  cfg.hidden_widths = meta.at("hidden_widths").get<std::vector<int>>();
  cfg.num_classes = meta.at("num_classes").get<int>();
  MemberModel model(cfg, meta.at("member_index").get<int>(), meta.at("seed").get<std::uint64_t>());
  for (ParamTensor* p : model.params()) {
    for (double& v : p->value.data) {
      const std::uint32_t bits = read_u32(is);
      float f;
      std::memcpy(&f, &bits, 4);
      v = static_cast<double>(f);
    }
  }
  if (!is) throw ValidationError("truncated checkpoint: " + path);
  return {std::move(model), meta.at("epoch").get<int>(), meta.at("spec_hash").get<std::string>()};
}

}  // namespace splitnet
