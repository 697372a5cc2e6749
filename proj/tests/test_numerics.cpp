#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "splitnet/errors.hpp"
#include "splitnet/losses.hpp"
#include "splitnet/model.hpp"
#include "splitnet/rng.hpp"

using namespace splitnet;

namespace {

ModelConfig mlp_config(std::size_t in, std::vector<int> widths, int classes) {
  ModelConfig cfg;
  cfg.input_shape = {in};
  cfg.hidden_widths = std::move(widths);
  cfg.num_classes = classes;
  return cfg;
}

std::vector<double> flatten_params(const MemberModel& model) {
  std::vector<double> out;
  for (const ParamTensor* p : model.params())
    out.insert(out.end(), p->value.data.begin(), p->value.data.end());
  return out;
}

// Straight-line two-layer MLP forward, written independently of the layer
// classes; used as the forward oracle.
std::vector<double> oracle_forward_2layer(const MemberModel& model, const Tensor& x) {
  auto ps = model.params();
  REQUIRE(ps.size() == 4);  // W1 b1 W2 b2
  const auto& w1 = ps[0]->value;
  const auto& b1 = ps[1]->value;
  const auto& w2 = ps[2]->value;
  const auto& b2 = ps[3]->value;
  const std::size_t batch = x.shape[0], in = w1.shape[0], hid = w1.shape[1], out = w2.shape[1];
  std::vector<double> result(batch * out);
  for (std::size_t n = 0; n < batch; ++n) {
    std::vector<double> h(hid);
    for (std::size_t j = 0; j < hid; ++j) {
      double acc = b1.data[j];
      for (std::size_t k = 0; k < in; ++k) acc += x.data[n * in + k] * w1.data[k * hid + j];
      h[j] = acc > 0.0 ? acc : 0.0;
    }
    for (std::size_t j = 0; j < out; ++j) {
      double acc = b2.data[j];
      for (std::size_t k = 0; k < hid; ++k) acc += h[k] * w2.data[k * out + j];
      result[n * out + j] = acc;
    }
  }
  return result;
}

}  // namespace

TEST_CASE("init is deterministic per seed and distinct across seeds") {
  MemberModel a(mlp_config(4, {8}, 3), 0, 123);
  MemberModel b(mlp_config(4, {8}, 3), 0, 123);
  MemberModel c(mlp_config(4, {8}, 3), 1, 124);
  CHECK(flatten_params(a) == flatten_params(b));
  CHECK(flatten_params(a) != flatten_params(c));
}

TEST_CASE("kaiming init variance matches 2 / fan_in") {
  // one huge layer gives ~1e5 samples of the weight distribution
  MemberModel model(mlp_config(2, {50000}, 2), 0, 9);
  const auto& w = model.params()[0]->value;
  double mean = 0.0, sq = 0.0;
  for (double v : w.data) {
    mean += v;
    sq += v * v;
  }
  mean /= static_cast<double>(w.data.size());
  const double var = sq / static_cast<double>(w.data.size()) - mean * mean;
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));  // 2 / fan_in with fan_in = 2
  for (double v : model.params()[1]->value.data) CHECK(v == 0.0);
}

TEST_CASE("zero weights produce zero logits") {
  MemberModel model(mlp_config(4, {8}, 3), 0, 1);
  for (ParamTensor* p : model.params()) p->value.fill(0.0);
  Tensor x({2, 4});
  x.fill(1.5);
  const Tensor out = model.forward(x);
  for (double v : out.data) CHECK(v == 0.0);
}

TEST_CASE("forward matches an independent straight-line oracle") {
  MemberModel model(mlp_config(5, {7}, 4), 0, 77);
  Rng rng(5);
  Tensor x({6, 5});
  for (double& v : x.data) v = rng.normal();
  const Tensor out = model.forward(x);
  const auto oracle = oracle_forward_2layer(model, x);
  REQUIRE(out.data.size() == oracle.size());
  for (std::size_t i = 0; i < oracle.size(); ++i)
    CHECK(std::abs(out.data[i] - oracle[i]) < 1e-12);
}

TEST_CASE("forward rejects shape mismatches") {
  MemberModel model(mlp_config(4, {8}, 3), 0, 1);
  Tensor bad({2, 5});
  CHECK_THROWS_AS(model.forward(bad), ValidationError);
}

TEST_CASE("backward before forward is a state error") {
  MemberModel model(mlp_config(4, {8}, 3), 0, 1);
  Tensor g({2, 3});
  CHECK_THROWS_AS(model.backward(g), StateError);
}

TEST_CASE("zero upstream gradient gives zero parameter gradients") {
  MemberModel model(mlp_config(4, {8}, 3), 0, 3);
  Tensor x({2, 4});
  x.fill(0.5);
  model.zero_grad();
  model.forward(x);
  Tensor g({2, 3});
  model.backward(g);
  for (const ParamTensor* p : model.params())
    for (double v : p->grad.data) CHECK(v == 0.0);
}

TEST_CASE("finite differences confirm gradients for every layer kind") {
  auto check_model = [](MemberModel& model, const Tensor& x, const std::vector<int>& labels) {
    // jitter every parameter so no relu pre-activation sits exactly on a kink
    {
      Rng jitter_rng(99);
      for (ParamTensor* p : model.params())
        for (double& v : p->value.data) v += jitter_rng.uniform(-0.1, 0.1);
    }
    model.zero_grad();
    Tensor logits = model.forward(x);
    TotalLoss loss = total_loss({logits}, labels, 0.0);
    model.backward(loss.grad_logits[0]);

    // relu makes the loss only piecewise smooth; samples whose difference
    // quotient disagrees across two step sizes sit on a kink and are skipped,
    // as are near-zero gradients where quotient roundoff dominates
    Rng rng(11);
    const double h = 1e-5;
    auto params = model.params();
    int accepted = 0, attempts = 0;
    while (accepted < 60 && attempts < 1200) {
      ++attempts;
      ParamTensor* p = params[rng.below(params.size())];
      const std::size_t idx = rng.below(p->value.data.size());
      const double orig = p->value.data[idx];
      auto eval = [&](double v) {
        p->value.data[idx] = v;
        Tensor z = model.forward(x);
        return total_loss({z}, labels, 0.0).total;
      };
      const double numeric = (eval(orig + h) - eval(orig - h)) / (2.0 * h);
      const double refined = (eval(orig + h / 8.0) - eval(orig - h / 8.0)) / (h / 4.0);
      p->value.data[idx] = orig;
      if (std::abs(numeric - refined) >
          1e-4 * std::max({std::abs(numeric), std::abs(refined), 1e-3}))
        continue;
      const double analytic = p->grad.data[idx];
      if (std::max(std::abs(numeric), std::abs(analytic)) < 1e-4) continue;
      ++accepted;
      const double rel = std::abs(numeric - analytic) /
                         std::max({std::abs(numeric), std::abs(analytic), 1e-8});
      CHECK(rel < 1e-5);
    }
    CHECK(accepted == 60);
  };

  SUBCASE("mlp") {
    MemberModel model(mlp_config(4, {6, 5}, 3), 0, 21);
    Rng rng(1);
    Tensor x({5, 4});
    for (double& v : x.data) v = rng.normal();
    check_model(model, x, {0, 1, 2, 1, 0});
  }
  SUBCASE("conv net with global average pooling") {
    ModelConfig cfg;
    cfg.input_shape = {2, 5, 5};
    cfg.hidden_widths = {3, 4};
    cfg.num_classes = 3;
    MemberModel model(cfg, 0, 22);
    Rng rng(2);
    Tensor x({3, 2, 5, 5});
    for (double& v : x.data) v = rng.normal();
    check_model(model, x, {2, 0, 1});
  }
}

TEST_CASE("sgd_step closed-form examples") {
  SUBCASE("lr=0 leaves parameters untouched") {
    MemberModel model(mlp_config(2, {3}, 2), 0, 5);
    const auto before = flatten_params(model);
    model.zero_grad();
    for (ParamTensor* p : model.params()) p->grad.fill(1.0);
    model.sgd_step(0.0, 0.9, 1e-4);
    CHECK(flatten_params(model) == before);
  }
  SUBCASE("mu=0, wd=0 reduces to plain gradient descent") {
    MemberModel model(mlp_config(2, {3}, 2), 0, 5);
    const auto before = flatten_params(model);
    for (ParamTensor* p : model.params()) p->grad.fill(1.0);
    model.sgd_step(0.1, 0.0, 0.0);
    const auto after = flatten_params(model);
    for (std::size_t i = 0; i < before.size(); ++i)
      CHECK(after[i] == doctest::Approx(before[i] - 0.1));
  }
  SUBCASE("two nesterov steps on a scalar match the hand-unrolled recurrence") {
    // g=1 each step, lr=0.1, mu=0.9, theta0=0:
    // v1=1, theta1 = -0.1*(1+0.9) = -0.19
    // v2=1.9, theta2 = theta1 - 0.1*(1+1.71) = -0.461
    MemberModel model(mlp_config(2, {3}, 2), 0, 5);
    for (ParamTensor* p : model.params()) {
      p->value.fill(0.0);
      p->momentum.fill(0.0);
    }
    for (int step = 0; step < 2; ++step) {
      for (ParamTensor* p : model.params()) p->grad.fill(1.0);
      model.sgd_step(0.1, 0.9, 0.0);
    }
    for (double v : flatten_params(model)) CHECK(v == doctest::Approx(-0.461).epsilon(1e-12));
  }
}

TEST_CASE("weight decay alone shrinks decayed tensors, not biases") {
  MemberModel model(mlp_config(3, {4}, 2), 0, 6);
  for (ParamTensor* p : model.params()) {
    p->value.fill(p->decay ? 1.0 : 1.0);
    p->momentum.fill(0.0);
    p->grad.fill(0.0);
  }
  model.sgd_step(0.1, 0.0, 0.5);
  for (const ParamTensor* p : model.params())
    for (double v : p->value.data) CHECK(v == doctest::Approx(p->decay ? 0.95 : 1.0));
}

TEST_CASE("checkpoints round-trip through the SPLT binary format") {
  namespace fs = std::filesystem;
  const auto path = (fs::temp_directory_path() / "splitnet_test_ckpt.splt").string();
  MemberModel model(mlp_config(4, {6}, 3), 2, 99);
  model.save_checkpoint(path, 17, "cafebabe");
  auto loaded = MemberModel::load_checkpoint(path);
  CHECK(loaded.epoch == 17);
  CHECK(loaded.spec_hash == "cafebabe");
  CHECK(loaded.model.member_index() == 2);
  CHECK(loaded.model.seed() == 99);
  const auto a = flatten_params(model);
  const auto b = flatten_params(loaded.model);
  REQUIRE(a.size() == b.size());
  // stored as 32-bit reals
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(b[i] == doctest::Approx(a[i]).epsilon(1e-6));
  fs::remove(path);
  CHECK_THROWS_AS(MemberModel::load_checkpoint(path), ValidationError);
}
