#include "splitnet/losses.hpp"

#include <algorithm>
#include <cmath>

#include "splitnet/errors.hpp"

namespace splitnet {

namespace {

// Guards log against exact-zero probabilities (softmax underflow); any larger
// clamp would flatten the loss and break the analytic gradients.
constexpr double kLogEps = 1e-300;

double safe_log(double x) { return std::log(std::max(x, kLogEps)); }

void check_labels(const std::vector<int>& labels, std::size_t batch, std::size_t classes) {
  if (labels.size() != batch) throw ValidationError("labels/batch size mismatch");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= classes)
      throw ValidationError("label out of range: " + std::to_string(y));
}

}  // namespace

ProbBatch softmax(const Tensor& logits) {
  if (logits.shape.size() != 2) throw ValidationError("softmax: expected (batch, C) logits");
  if (!logits.all_finite()) throw ValidationError("softmax: non-finite logits");
  const std::size_t batch = logits.shape[0], c = logits.shape[1];
  ProbBatch p;
  p.values = Tensor({batch, c});
  for (std::size_t i = 0; i < batch; ++i) {
    const double* z = logits.data.data() + i * c;
    double* out = p.values.data.data() + i * c;
    const double zmax = *std::max_element(z, z + c);
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      out[j] = std::exp(z[j] - zmax);
      sum += out[j];
    }
    for (std::size_t j = 0; j < c; ++j) out[j] /= sum;
  }
  p.normalized = true;
  return p;
}

double cross_entropy(const ProbBatch& p, const std::vector<int>& labels, const MixupInfo& mix) {
  if (!p.normalized) throw ValidationError("cross_entropy: probabilities must be normalized");
  const std::size_t batch = p.values.shape[0], c = p.values.shape[1];
  check_labels(labels, batch, c);
  double total = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    const double* row = p.values.data.data() + i * c;
    if (mix.active) {
      const int ya = labels[i];
      const int yb = labels[mix.perm[i]];
      total -= mix.lambda * safe_log(row[ya]) + (1.0 - mix.lambda) * safe_log(row[yb]);
    } else {
      total -= safe_log(row[labels[i]]);
    }
  }
  return total / static_cast<double>(batch);
}

double cot_loss(const std::vector<ProbBatch>& probs) {
  if (probs.size() < 2) throw ValidationError("cot_loss: needs at least two members");
  const std::size_t batch = probs[0].values.shape[0], c = probs[0].values.shape[1];
  for (const auto& p : probs) {
    if (!p.normalized) throw ValidationError("cot_loss: probabilities must be normalized");
    if (!p.values.same_shape(probs[0].values)) throw ValidationError("cot_loss: shape mismatch");
  }
  const double s = static_cast<double>(probs.size());
  double mean_entropy_sum = 0.0;
  double mixture_entropy_sum = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      double mean_p = 0.0;
      for (const auto& p : probs) {
        const double v = p.values.at2(i, j);
        mean_p += v;
        mean_entropy_sum -= v * safe_log(v);
      }
      mean_p /= s;
      mixture_entropy_sum -= mean_p * safe_log(mean_p);
    }
  }
  const double n = static_cast<double>(batch);
  return mixture_entropy_sum / n - mean_entropy_sum / (s * n);
}

TotalLoss total_loss(const std::vector<Tensor>& logits, const std::vector<int>& labels,
                     double lambda, const std::vector<MixupInfo>& mixups) {
  if (logits.empty()) throw ValidationError("total_loss: no logit batches");
  if (!mixups.empty() && mixups.size() != logits.size())
    throw ValidationError("total_loss: mixup record count mismatch");
  const std::size_t s = logits.size();
  const std::size_t batch = logits[0].shape[0], c = logits[0].shape[1];
  const double n = static_cast<double>(batch);

  TotalLoss out;
  out.lambda = lambda;
  std::vector<ProbBatch> probs;
  probs.reserve(s);
  for (const auto& z : logits) {
    if (!z.same_shape(logits[0])) throw ValidationError("total_loss: logit shape mismatch");
    probs.push_back(softmax(z));
  }

  for (std::size_t m = 0; m < s; ++m) {
    const MixupInfo& mix = mixups.empty() ? MixupInfo{} : mixups[m];
    out.ce_terms.push_back(cross_entropy(probs[m], labels, mix));
    out.total += out.ce_terms.back();
  }

  // The agreement value is reported whenever there is more than one member;
  // it only enters the total (and the gradients) with a nonzero weight.
  if (s >= 2) out.cot = cot_loss(probs);
  const bool use_cot = s >= 2 && lambda != 0.0;
  Tensor mean_p;
  if (use_cot) {
    out.total += lambda * out.cot;
    mean_p = Tensor({batch, c});
    for (std::size_t m = 0; m < s; ++m)
      for (std::size_t i = 0; i < mean_p.data.size(); ++i)
        mean_p.data[i] += probs[m].values.data[i] / static_cast<double>(s);
  }

  // Gradients w.r.t. logits. CE through softmax is (p - y)/N; the JS term
  // contributes p .* (u - <u, p>) with u = (lambda/S) (log p - log pbar) / N.
  for (std::size_t m = 0; m < s; ++m) {
    const MixupInfo& mix = mixups.empty() ? MixupInfo{} : mixups[m];
    Tensor g({batch, c});
    const Tensor& p = probs[m].values;
    for (std::size_t i = 0; i < batch; ++i) {
      for (std::size_t j = 0; j < c; ++j) g.at2(i, j) = p.at2(i, j) / n;
      if (mix.active) {
        g.at2(i, labels[i]) -= mix.lambda / n;
        g.at2(i, labels[mix.perm[i]]) -= (1.0 - mix.lambda) / n;
      } else {
        g.at2(i, labels[i]) -= 1.0 / n;
      }
      if (use_cot) {
        double dot = 0.0;
        double u[64];
        std::vector<double> u_heap;
        double* uptr = u;
        if (c > 64) {
          u_heap.resize(c);
          uptr = u_heap.data();
        }
        for (std::size_t j = 0; j < c; ++j) {
          uptr[j] = lambda / (static_cast<double>(s) * n) *
                    (safe_log(p.at2(i, j)) - safe_log(mean_p.at2(i, j)));
          dot += uptr[j] * p.at2(i, j);
        }
        for (std::size_t j = 0; j < c; ++j) g.at2(i, j) += p.at2(i, j) * (uptr[j] - dot);
      }
    }
    out.grad_logits.push_back(std::move(g));
  }
  return out;
}

}  // namespace splitnet
