#include <doctest.h>

#include <cmath>

#include "splitnet/ensemble.hpp"
#include "splitnet/errors.hpp"
#include "splitnet/losses.hpp"
#include "splitnet/rng.hpp"

using namespace splitnet;

namespace {

Tensor random_scores(Rng& rng, std::size_t batch, std::size_t c, double scale = 1.0) {
  Tensor t({batch, c});
  for (double& v : t.data) v = rng.normal(0.0, scale);
  return t;
}

}  // namespace

TEST_CASE("combining a single batch is the identity") {
  Rng rng(1);
  const Tensor s = random_scores(rng, 7, 4);
  CHECK(combine(EnsembleRule{}, {s}).data == s.data);
  CHECK(combine(EnsembleRule{CombineMode::max_confidence, false}, {s}).data == s.data);
}

TEST_CASE("identical members combine to themselves under every rule") {
  Rng rng(2);
  const Tensor s = random_scores(rng, 5, 3);
  for (CombineMode mode : {CombineMode::average, CombineMode::max_confidence})
    for (bool soft : {false, true}) {
      const Tensor out = combine(EnsembleRule{mode, soft}, {s, s, s});
      const Tensor expect = soft ? softmax(s).values : s;
      for (std::size_t i = 0; i < out.data.size(); ++i)
        CHECK(out.data[i] == doctest::Approx(expect.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("average combination matches a brute-force mean") {
  Rng rng(3);
  std::vector<Tensor> scores;
  for (int m = 0; m < 4; ++m) scores.push_back(random_scores(rng, 6, 5));
  const Tensor out = combine(EnsembleRule{}, scores);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    double mean = 0.0;
    for (const auto& s : scores) mean += s.data[i] / 4.0;
    CHECK(out.data[i] == doctest::Approx(mean).epsilon(1e-12));
  }
}

TEST_CASE("average is invariant to per-sample constant shifts after softmax") {
  Rng rng(4);
  std::vector<Tensor> scores;
  for (int m = 0; m < 3; ++m) scores.push_back(random_scores(rng, 5, 4));
  std::vector<Tensor> shifted = scores;
  for (auto& s : shifted)
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t k = 0; k < 4; ++k) s.at2(i, k) += 10.0 * static_cast<double>(i + 1);
  const EnsembleRule rule{CombineMode::average, true};
  const Tensor a = combine(rule, scores);
  const Tensor b = combine(rule, shifted);
  for (std::size_t i = 0; i < a.data.size(); ++i)
    CHECK(a.data[i] == doctest::Approx(b.data[i]).epsilon(1e-12));
}

TEST_CASE("max confidence picks the most confident member per row, ties low") {
  Tensor a({2, 3});
  a.data = {5.0, 0.0, 0.0, /* row 1 */ 1.0, 2.0, 0.0};
  Tensor b({2, 3});
  b.data = {3.0, 1.0, 0.0, /* row 1 */ 0.0, 2.0, 1.0};
  const Tensor out = combine(EnsembleRule{CombineMode::max_confidence, false}, {a, b});
  // row 0: member 0 has top score 5 > 3
  CHECK(out.data[0] == 5.0);
  CHECK(out.data[1] == 0.0);
  // row 1: both top scores are 2 -> member 0 wins the tie
  CHECK(out.data[3] == 1.0);
  CHECK(out.data[4] == 2.0);
  CHECK(out.data[5] == 0.0);
}

TEST_CASE("combine validates shapes") {
  Tensor a({2, 3}), b({2, 4});
  CHECK_THROWS_AS(combine(EnsembleRule{}, {a, b}), ValidationError);
  CHECK_THROWS_AS(combine(EnsembleRule{}, {}), ValidationError);
}

TEST_CASE("argmax predictions stay within the class range") {
  Rng rng(5);
  const Tensor s = random_scores(rng, 50, 7);
  for (int p : argmax_rows(s)) {
    CHECK(p >= 0);
    CHECK(p < 7);
  }
}

TEST_CASE("accuracy counts exact argmax hits") {
  Tensor s({3, 2});
  s.data = {1.0, 0.0, 0.0, 1.0, 1.0, 0.0};
  CHECK(accuracy(s, {0, 1, 0}) == 1.0);
  CHECK(accuracy(s, {1, 1, 0}) == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(accuracy(s, {0, 1}), ValidationError);
}

TEST_CASE("all combination rules agree when every member is identical") {
  Rng rng(6);
  const Tensor s = random_scores(rng, 8, 3);
  std::vector<std::vector<int>> preds;
  for (CombineMode mode : {CombineMode::average, CombineMode::max_confidence})
    for (bool soft : {false, true})
      preds.push_back(argmax_rows(combine(EnsembleRule{mode, soft}, {s, s})));
  for (std::size_t i = 1; i < preds.size(); ++i) CHECK(preds[i] == preds[0]);
}

TEST_CASE("identical weight vectors have zero spread") {
  const std::vector<double> w = {1.0, -2.0, 3.0, 0.5};
  const auto result = weight_spread({w, w, w});
  CHECK(result.spread == doctest::Approx(0.0).epsilon(1e-12));
  for (const auto& [x, y] : result.coordinates) {
    CHECK(std::abs(x) < 1e-9);
    CHECK(std::abs(y) < 1e-9);
  }
}

TEST_CASE("two members land symmetrically with spread |d| / (2 sqrt 2)") {
  // Centered vectors are +-d/2, the single principal axis carries the whole
  // difference, so spread^2 = lambda / (2 S) = |d|^2 / 8.
  const std::vector<double> a = {1.0, 0.0, 2.0};
  const std::vector<double> b = {3.0, 4.0, 2.0};
  const double d = std::sqrt(4.0 + 16.0);
  const auto result = weight_spread({a, b});
  CHECK(result.spread == doctest::Approx(d / (2.0 * std::sqrt(2.0))).epsilon(1e-9));
  CHECK(result.coordinates[0].first ==
        doctest::Approx(-result.coordinates[1].first).epsilon(1e-9));
  CHECK(std::abs(result.coordinates[0].second) < 1e-9);
}

TEST_CASE("spread matches the trace identity for rank-2 member sets") {
  // Members built from two fixed directions span a 2-D subspace after
  // centering, so the top two eigenvalues exhaust the Gram trace and
  // spread = sqrt(trace / (2 S)).
  Rng rng(7);
  const std::size_t dim = 40;
  std::vector<double> u(dim), v(dim);
  for (double& x : u) x = rng.normal();
  for (double& x : v) x = rng.normal();
  std::vector<std::vector<double>> weights;
  for (int i = 0; i < 4; ++i) {
    const double cu = rng.normal(), cv = rng.normal();
    std::vector<double> w(dim);
    for (std::size_t k = 0; k < dim; ++k) w[k] = cu * u[k] + cv * v[k];
    weights.push_back(std::move(w));
  }

  std::vector<double> mean(dim, 0.0);
  for (const auto& w : weights)
    for (std::size_t k = 0; k < dim; ++k) mean[k] += w[k] / 4.0;
  double trace = 0.0;
  for (const auto& w : weights)
    for (std::size_t k = 0; k < dim; ++k) {
      const double c = w[k] - mean[k];
      trace += c * c;
    }

  const auto result = weight_spread(weights);
  CHECK(result.spread == doctest::Approx(std::sqrt(trace / 8.0)).epsilon(1e-8));
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : result.coordinates) {
    mx += x;
    my += y;
  }
  CHECK(std::abs(mx) < 1e-8);  // projections are centered
  CHECK(std::abs(my) < 1e-8);
}

TEST_CASE("spread is invariant under an orthogonal rotation of weight space") {
  Rng rng(8);
  std::vector<std::vector<double>> weights(4, std::vector<double>(6));
  for (auto& w : weights)
    for (double& x : w) x = rng.normal();
  const double base = weight_spread(weights).spread;

  // Givens rotation in coordinates (1, 4).
  const double c = std::cos(0.73), s = std::sin(0.73);
  auto rotated = weights;
  for (std::size_t i = 0; i < 4; ++i) {
    rotated[i][1] = c * weights[i][1] - s * weights[i][4];
    rotated[i][4] = s * weights[i][1] + c * weights[i][4];
  }
  CHECK(weight_spread(rotated).spread == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("weight_spread validates its input") {
  CHECK_THROWS_AS(weight_spread({{1.0, 2.0}}), ValidationError);
  CHECK_THROWS_AS(weight_spread({{1.0, 2.0}, {1.0}}), ValidationError);
}
