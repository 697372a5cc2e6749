#include <cmath>
#include <cstdio>
#include <vector>

#include "commands.hpp"
#include "splitnet/losses.hpp"
#include "splitnet/model.hpp"
#include "splitnet/rng.hpp"

namespace splitnet::cli {

namespace {

double loss_value(std::vector<MemberModel>& models, const Tensor& batch,
                  const std::vector<int>& labels, double lambda) {
  std::vector<Tensor> logits;
  for (auto& m : models) logits.push_back(m.forward(batch));
  return total_loss(logits, labels, lambda).total;
}

}  // namespace

double run_gradcheck(std::uint64_t seed, int model_count, int samples_per_model, bool verbose) {
  double worst = 0.0;
  for (int trial = 0; trial < model_count; ++trial) {
    Rng rng(mix_keys({seed, static_cast<std::uint64_t>(trial) + 17}));
    const int s = 2 + trial % 2;
    const int classes = 3;
    ModelConfig cfg;
    cfg.input_shape = {4};
    cfg.hidden_widths = {6, 5};
    cfg.num_classes = classes;
    std::vector<MemberModel> models;
    for (int m = 0; m < s; ++m)
      models.emplace_back(cfg, m, seed + static_cast<std::uint64_t>(100 * trial + m));
    // Zero-initialized biases can leave relu pre-activations exactly at the
    // kink (a dead previous layer feeds pure bias). Jitter every parameter so
    // the check runs at a generic point.
    for (auto& model : models)
      for (ParamTensor* p : model.params())
        for (double& v : p->value.data) v += rng.uniform(-0.1, 0.1);

    const std::size_t batch = 5;
    Tensor x({batch, 4});
    for (double& v : x.data) v = rng.normal();
    std::vector<int> labels(batch);
    for (int& y : labels) y = static_cast<int>(rng.below(classes));
    const double lambda = 0.5;

    // analytic
    std::vector<Tensor> logits;
    for (auto& m : models) {
      m.zero_grad();
      logits.push_back(m.forward(x));
    }
    TotalLoss loss = total_loss(logits, labels, lambda);
    for (std::size_t m = 0; m < models.size(); ++m) models[m].backward(loss.grad_logits[m]);

    // Central finite differences on randomly sampled parameters. The loss is
    // only piecewise smooth (relu), so points whose difference quotient is
    // inconsistent across two step sizes sit on a kink and are resampled;
    // near-zero gradients are also resampled because quotient roundoff
    // (~eps |f| / h) swamps the relative error there.
    const double h = 1e-5;
    for (auto& model : models) {
      auto params = model.params();
      int accepted = 0, attempts = 0;
      while (accepted < samples_per_model && attempts < 20 * samples_per_model) {
        ++attempts;
        ParamTensor* p = params[rng.below(params.size())];
        const std::size_t idx = rng.below(p->value.data.size());
        const double orig = p->value.data[idx];
        auto quotient = [&](double step) {
          p->value.data[idx] = orig + step;
          const double plus = loss_value(models, x, labels, lambda);
          p->value.data[idx] = orig - step;
          const double minus = loss_value(models, x, labels, lambda);
          p->value.data[idx] = orig;
          return (plus - minus) / (2.0 * step);
        };
        const double numeric = quotient(h);
        const double refined = quotient(h / 8.0);
        if (std::abs(numeric - refined) >
            1e-4 * std::max({std::abs(numeric), std::abs(refined), 1e-3}))
          continue;  // kink
        const double analytic = p->grad.data[idx];
        if (std::max(std::abs(numeric), std::abs(analytic)) < 1e-4) continue;
        ++accepted;
        const double rel = std::abs(numeric - analytic) /
                           std::max({std::abs(numeric), std::abs(analytic), 1e-8});
        worst = std::max(worst, rel);
      }
    }
    if (verbose) std::fprintf(stderr, "gradcheck: model set %d done, worst so far %.3e\n", trial, worst);
  }
  return worst;
}

}  // namespace splitnet::cli
