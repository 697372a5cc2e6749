#include "splitnet/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "splitnet/errors.hpp"
#include "splitnet/losses.hpp"

namespace splitnet {

Tensor combine(const EnsembleRule& rule, const std::vector<Tensor>& scores) {
  if (scores.empty()) throw ValidationError("combine: no score batches");
  for (const auto& s : scores)
    if (!s.same_shape(scores[0]) || s.shape.size() != 2)
      throw ValidationError("combine: score batches must share a (batch, C) shape");

  std::vector<Tensor> inputs;
  inputs.reserve(scores.size());
  if (rule.apply_softmax_first) {
    for (const auto& s : scores) inputs.push_back(softmax(s).values);
  } else {
    inputs = scores;
  }

  const std::size_t batch = inputs[0].shape[0], c = inputs[0].shape[1];
  Tensor out({batch, c});
  if (rule.combine == CombineMode::average) {
    const double inv = 1.0 / static_cast<double>(inputs.size());
    for (const auto& s : inputs)
      for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += s.data[i] * inv;
    return out;
  }
  // max-confidence: the member with the largest top score supplies its row;
  // ties break toward the lowest member index.
  for (std::size_t i = 0; i < batch; ++i) {
    std::size_t best_member = 0;
    double best_top = -std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < inputs.size(); ++m) {
      const double* row = inputs[m].data.data() + i * c;
      const double top = *std::max_element(row, row + c);
      if (top > best_top) {
        best_top = top;
        best_member = m;
      }
    }
    const double* row = inputs[best_member].data.data() + i * c;
    std::copy(row, row + c, out.data.data() + i * c);
  }
  return out;
}

std::vector<int> argmax_rows(const Tensor& scores) {
  if (scores.shape.size() != 2) throw ValidationError("argmax_rows: expected (batch, C)");
  const std::size_t batch = scores.shape[0], c = scores.shape[1];
  std::vector<int> out(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    const double* row = scores.data.data() + i * c;
    out[i] = static_cast<int>(std::max_element(row, row + c) - row);
  }
  return out;
}

double accuracy(const Tensor& scores, const std::vector<int>& labels) {
  const auto pred = argmax_rows(scores);
  if (pred.size() != labels.size()) throw ValidationError("accuracy: label count mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

namespace {

// Cyclic Jacobi eigendecomposition of a small symmetric matrix.
void jacobi_eigen(std::vector<double>& a, std::size_t n, std::vector<double>& eigvals,
                  std::vector<double>& eigvecs) {
  eigvecs.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) eigvecs[i * n + i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (std::abs(apq) < 1e-300) continue;
        const double app = a[p * n + p], aqq = a[q * n + q];
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double cos = 1.0 / std::sqrt(1.0 + t * t);
        const double sin = t * cos;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p], akq = a[k * n + q];
          a[k * n + p] = cos * akp - sin * akq;
          a[k * n + q] = sin * akp + cos * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k], aqk = a[q * n + k];
          a[p * n + k] = cos * apk - sin * aqk;
          a[q * n + k] = sin * apk + cos * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = eigvecs[k * n + p], vkq = eigvecs[k * n + q];
          eigvecs[k * n + p] = cos * vkp - sin * vkq;
          eigvecs[k * n + q] = sin * vkp + cos * vkq;
        }
      }
  }
  eigvals.resize(n);
  for (std::size_t i = 0; i < n; ++i) eigvals[i] = a[i * n + i];
}

}  // namespace

WeightSpread weight_spread(const std::vector<std::vector<double>>& weights) {
  const std::size_t s = weights.size();
  if (s < 2) throw ValidationError("weight_spread: needs at least two weight vectors");
  const std::size_t dim = weights[0].size();
  for (const auto& w : weights)
    if (w.size() != dim) throw ValidationError("weight_spread: weight length mismatch");

  // Center.
  std::vector<double> mean(dim, 0.0);
  for (const auto& w : weights)
    for (std::size_t k = 0; k < dim; ++k) mean[k] += w[k] / static_cast<double>(s);
  std::vector<std::vector<double>> centered(s, std::vector<double>(dim));
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t k = 0; k < dim; ++k) centered[i][k] = weights[i][k] - mean[k];

  // S x S Gram matrix.
  std::vector<double> gram(s * s, 0.0);
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = i; j < s; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < dim; ++k) dot += centered[i][k] * centered[j][k];
      gram[i * s + j] = gram[j * s + i] = dot;
    }

  std::vector<double> eigvals, eigvecs;
  jacobi_eigen(gram, s, eigvals, eigvecs);

  // Two largest eigenvalues.
  std::vector<std::size_t> order(s);
  for (std::size_t i = 0; i < s; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return eigvals[a] > eigvals[b]; });

  WeightSpread result;
  result.coordinates.resize(s, {0.0, 0.0});
  double coord_sq_sum = 0.0;
  for (int axis = 0; axis < 2 && axis < static_cast<int>(s); ++axis) {
    const std::size_t e = order[axis];
    const double lam = std::max(eigvals[e], 0.0);
    const double scale = std::sqrt(lam);
    for (std::size_t i = 0; i < s; ++i) {
      const double coord = scale * eigvecs[i * s + e];
      if (axis == 0) result.coordinates[i].first = coord;
      else result.coordinates[i].second = coord;
      coord_sq_sum += coord * coord;
    }
  }
  // Coordinates are centered by construction, so this is their stddev.
  result.spread = std::sqrt(coord_sq_sum / static_cast<double>(2 * s));
  return result;
}

}  // namespace splitnet
