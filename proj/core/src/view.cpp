#include "splitnet/view.hpp"

#include <cmath>

#include "splitnet/errors.hpp"
#include "splitnet/rng.hpp"

namespace splitnet {

namespace {

void jitter(Tensor& batch, double sigma, Rng& rng) {
  for (double& v : batch.data) v += rng.normal(0.0, sigma);
}

// Vector form of random erasing: zero one randomly chosen coordinate.
void erase_features(Tensor& batch, double p, Rng& rng) {
  const std::size_t n = batch.shape[0], f = batch.shape[1];
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.uniform() >= p) continue;
    const std::size_t col = static_cast<std::size_t>(rng.below(f));
    batch.at2(i, col) = 0.0;
  }
}

void flip_images(Tensor& batch, double p, Rng& rng) {
  const std::size_t n = batch.shape[0], c = batch.shape[1], h = batch.shape[2], w = batch.shape[3];
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.uniform() >= p) continue;
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < h; ++y) {
        double* row = batch.data.data() + ((i * c + ch) * h + y) * w;
        for (std::size_t x = 0; x < w / 2; ++x) std::swap(row[x], row[w - 1 - x]);
      }
  }
}

void pad_crop_images(Tensor& batch, int pad, Rng& rng) {
  const std::size_t n = batch.shape[0], c = batch.shape[1], h = batch.shape[2], w = batch.shape[3];
  Tensor out = batch;
  for (std::size_t i = 0; i < n; ++i) {
    const long dy = static_cast<long>(rng.below(2 * pad + 1)) - pad;
    const long dx = static_cast<long>(rng.below(2 * pad + 1)) - pad;
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
          const long sy = static_cast<long>(y) + dy;
          const long sx = static_cast<long>(x) + dx;
          double v = 0.0;
          if (sy >= 0 && sx >= 0 && sy < static_cast<long>(h) && sx < static_cast<long>(w))
            v = batch.data[((i * c + ch) * h + sy) * w + sx];
          out.data[((i * c + ch) * h + y) * w + x] = v;
        }
  }
  batch = std::move(out);
}

void erase_images(Tensor& batch, const ViewPipeline& pl, Rng& rng) {
  const std::size_t n = batch.shape[0], c = batch.shape[1], h = batch.shape[2], w = batch.shape[3];
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.uniform() >= pl.erase_p) continue;
    // one rectangle per selected sample
    const double area = rng.uniform(pl.erase_area.first, pl.erase_area.second) *
                        static_cast<double>(h * w);
    const double aspect = rng.uniform(0.3, 1.0 / 0.3);
    std::size_t eh = static_cast<std::size_t>(std::lround(std::sqrt(area * aspect)));
    std::size_t ew = static_cast<std::size_t>(std::lround(std::sqrt(area / aspect)));
    eh = std::min(std::max<std::size_t>(eh, 1), h);
    ew = std::min(std::max<std::size_t>(ew, 1), w);
    const std::size_t y0 = static_cast<std::size_t>(rng.below(h - eh + 1));
    const std::size_t x0 = static_cast<std::size_t>(rng.below(w - ew + 1));
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = y0; y < y0 + eh; ++y)
        for (std::size_t x = x0; x < x0 + ew; ++x)
          batch.data[((i * c + ch) * h + y) * w + x] = pl.erase_fill;
  }
}

void mixup(Tensor& batch, double alpha, Rng& rng, MixupInfo* info) {
  const std::size_t n = batch.shape[0];
  const double lambda = rng.beta(alpha, alpha);
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  rng.shuffle(perm);
  const std::size_t stride = batch.data.size() / n;
  Tensor mixed = batch;
  for (std::size_t i = 0; i < n; ++i) {
    const double* a = batch.data.data() + i * stride;
    const double* b = batch.data.data() + perm[i] * stride;
    double* o = mixed.data.data() + i * stride;
    for (std::size_t k = 0; k < stride; ++k) o[k] = lambda * a[k] + (1.0 - lambda) * b[k];
  }
  batch = std::move(mixed);
  if (info) {
    info->active = true;
    info->lambda = lambda;
    info->perm = std::move(perm);
  }
}

}  // namespace

Tensor apply_view(const ViewPipeline& pl, const Tensor& batch, int epoch, int batch_index,
                  MixupInfo* mix) {
  if (batch.shape.size() != 2 && batch.shape.size() != 4)
    throw ValidationError("apply_view: batch must be (N,F) or (N,C,H,W)");
  if (pl.erase_p < 0.0 || pl.erase_p > 1.0 || pl.flip_p < 0.0 || pl.flip_p > 1.0)
    throw ValidationError("apply_view: probabilities must lie in [0,1]");
  Rng rng(mix_keys({pl.seed, static_cast<std::uint64_t>(pl.member_index) + 1,
                    static_cast<std::uint64_t>(epoch) + 1,
                    static_cast<std::uint64_t>(batch_index) + 1}));
  Tensor out = batch;
  if (mix) *mix = MixupInfo{};
  if (batch.shape.size() == 2) {
    if (pl.jitter_sigma > 0.0) jitter(out, pl.jitter_sigma, rng);
    if (pl.erase_p > 0.0) erase_features(out, pl.erase_p, rng);
  } else {
    if (pl.flip_p > 0.0) flip_images(out, pl.flip_p, rng);
    if (pl.pad > 0) pad_crop_images(out, pl.pad, rng);
    if (pl.erase_p > 0.0) erase_images(out, pl, rng);
  }
  if (pl.mixup_alpha > 0.0) mixup(out, pl.mixup_alpha, rng, mix);
  if (!out.same_shape(batch)) throw InternalError("apply_view changed the batch shape");
  return out;
}

}  // namespace splitnet
