#include "splitnet/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "splitnet/ensemble.hpp"
#include "splitnet/errors.hpp"
#include "splitnet/losses.hpp"
#include "splitnet/rng.hpp"
#include "splitnet/view.hpp"

namespace splitnet {

namespace {

Tensor slice_batch(const Tensor& features, const std::vector<std::size_t>& order,
                   std::size_t begin, std::size_t end) {
  const std::size_t stride = features.data.size() / features.shape[0];
  std::vector<std::size_t> shape = features.shape;
  shape[0] = end - begin;
  Tensor out(shape);
  for (std::size_t i = begin; i < end; ++i) {
    const double* src = features.data.data() + order[i] * stride;
    std::copy(src, src + stride, out.data.data() + (i - begin) * stride);
  }
  return out;
}

std::vector<int> slice_labels(const std::vector<int>& labels,
                              const std::vector<std::size_t>& order, std::size_t begin,
                              std::size_t end) {
  std::vector<int> out(end - begin);
  for (std::size_t i = begin; i < end; ++i) out[i - begin] = labels[order[i]];
  return out;
}

// Member forwards may fan out over threads; results land in member order.
std::vector<Tensor> forward_all(std::vector<MemberModel>& models,
                                const std::vector<Tensor>& views, bool parallel) {
  std::vector<Tensor> logits(models.size());
  if (!parallel || models.size() == 1) {
    for (std::size_t m = 0; m < models.size(); ++m) logits[m] = models[m].forward(views[m]);
    return logits;
  }
  std::vector<std::thread> pool;
  for (std::size_t m = 0; m < models.size(); ++m)
    pool.emplace_back([&, m]() { logits[m] = models[m].forward(views[m]); });
  for (auto& t : pool) t.join();
  return logits;
}

void backward_all(std::vector<MemberModel>& models, const std::vector<Tensor>& grads,
                  bool parallel) {
  if (!parallel || models.size() == 1) {
    for (std::size_t m = 0; m < models.size(); ++m) models[m].backward(grads[m]);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t m = 0; m < models.size(); ++m)
    pool.emplace_back([&, m]() { models[m].backward(grads[m]); });
  for (auto& t : pool) t.join();
}

std::vector<Tensor> score_test_set(std::vector<MemberModel>& models, const Dataset& test_set) {
  const std::size_t n = test_set.size();
  const std::size_t chunk = 500;
  std::vector<std::size_t> identity(n);
  for (std::size_t i = 0; i < n; ++i) identity[i] = i;
  std::vector<Tensor> logits(models.size());
  for (std::size_t m = 0; m < models.size(); ++m) {
    Tensor all({n, static_cast<std::size_t>(models[m].config().num_classes)});
    for (std::size_t begin = 0; begin < n; begin += chunk) {
      const std::size_t end = std::min(begin + chunk, n);
      Tensor batch = slice_batch(test_set.features, identity, begin, end);
      Tensor out = models[m].forward(batch);
      std::copy(out.data.begin(), out.data.end(), all.data.begin() + begin * all.shape[1]);
    }
    logits[m] = std::move(all);
  }
  return logits;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const Dataset& train_set, const Dataset& test_set) {
  validate(cfg);
  if (train_set.size() == 0) throw ValidationError("train: empty training set");
  if (train_set.num_classes < 2) throw ValidationError("train: dataset needs >= 2 classes");

  ModelConfig mcfg;
  mcfg.input_shape.assign(train_set.features.shape.begin() + 1, train_set.features.shape.end());
  mcfg.hidden_widths = cfg.hidden_widths;
  mcfg.num_classes = train_set.num_classes;

  TrainResult result;
  std::vector<ViewPipeline> pipelines;
  for (int m = 0; m < cfg.s; ++m) {
    result.models.emplace_back(mcfg, m, cfg.base_seed + static_cast<std::uint64_t>(m));
    ViewPipeline pl;
    pl.member_index = m;
    pl.seed = cfg.base_seed;
    pl.jitter_sigma = cfg.jitter_sigma;
    pl.erase_p = cfg.erase_p;
    pl.mixup_alpha = cfg.mixup_alpha;
    pipelines.push_back(pl);
  }

  const std::size_t n = train_set.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.max_epoch; ++epoch) {
    const double lr = lr_schedule(epoch, cfg);
    const double lambda = cfg.s >= 2 ? lambda_schedule(epoch, cfg) : 0.0;

    // Shared shuffle: every member sees the same batch composition.
    Rng shuffle_rng(mix_keys({cfg.base_seed, 0x7368756666ULL, static_cast<std::uint64_t>(epoch)}));
    shuffle_rng.shuffle(order);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.lambda = lambda;
    rec.ce_member.assign(cfg.s, 0.0);
    std::size_t batches = 0;

    int batch_index = 0;
    for (std::size_t begin = 0; begin < n; begin += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(begin + cfg.batch_size, n);
      Tensor batch = slice_batch(train_set.features, order, begin, end);
      std::vector<int> labels = slice_labels(train_set.labels, order, begin, end);

      std::vector<Tensor> views(cfg.s);
      std::vector<MixupInfo> mixups(cfg.s);
      for (int m = 0; m < cfg.s; ++m)
        views[m] = apply_view(pipelines[m], batch, epoch, batch_index, &mixups[m]);

      for (auto& model : result.models) model.zero_grad();
      std::vector<Tensor> logits = forward_all(result.models, views, cfg.parallel_members);
      TotalLoss loss = total_loss(logits, labels, lambda, mixups);
      if (!std::isfinite(loss.total))
        throw InternalError("training diverged (non-finite loss) at epoch " +
                            std::to_string(epoch) + ", batch " + std::to_string(batch_index));
      backward_all(result.models, loss.grad_logits, cfg.parallel_members);
      // Updates always run in member-index order.
      for (auto& model : result.models) model.sgd_step(lr, cfg.momentum, cfg.wd);

      for (int m = 0; m < cfg.s; ++m) rec.ce_member[m] += loss.ce_terms[m];
      rec.cot += loss.cot;
      ++batches;
    }
    for (double& v : rec.ce_member) v /= static_cast<double>(batches);
    rec.cot /= static_cast<double>(batches);

    // Evaluation.
    if (test_set.size() > 0) {
      auto logits = score_test_set(result.models, test_set);
      for (const auto& z : logits) rec.acc_member.push_back(accuracy(z, test_set.labels));
      rec.acc_ensemble = accuracy(combine(EnsembleRule{}, logits), test_set.labels);
      if (epoch + 1 == cfg.max_epoch && cfg.s >= 2) {
        std::vector<ProbBatch> probs;
        for (const auto& z : logits) probs.push_back(softmax(z));
        result.record.final_test_cot = cot_loss(probs);
      }
    }
    result.record.epochs.push_back(std::move(rec));
  }
  return result;
}

void write_metrics_csv(const TrainRecord& record, int s, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot open for writing: " + path);
  os << "epoch,lr,lambda";
  for (int m = 0; m < s; ++m) os << ",ce_member_" << m;
  os << ",cot";
  for (int m = 0; m < s; ++m) os << ",acc_member_" << m;
  os << ",acc_ensemble\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << ',' << buf;
  };
  for (const auto& e : record.epochs) {
    os << e.epoch;
    put(e.lr);
    put(e.lambda);
    for (double v : e.ce_member) put(v);
    put(e.cot);
    for (double v : e.acc_member) put(v);
    put(e.acc_ensemble);
    os << "\n";
  }
}

}  // namespace splitnet
