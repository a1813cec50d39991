// Copyright 2026 The ZAM Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <map>

#include "doctest.h"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"
#include "zam/ranker.hpp"
#include "zam/trainer.hpp"

using namespace zam;

namespace {

// Straight-line evaluation of the objective, written independently of the
// trainer: explicit loops, naive log-sigmoid, attention from its definition.
double oracle_log_likelihood(const TrainExample& ex, const ParamStore& s) {
  const std::size_t A = s.alpha, B = s.beta;
  auto ls = [](double x) { return std::log(1.0 / (1.0 + std::exp(-x))); };
  auto row = [&](const Matrix& m, std::int32_t r) {
    return Vec(m.data.begin() + r * static_cast<std::ptrdiff_t>(A),
               m.data.begin() + (r + 1) * static_cast<std::ptrdiff_t>(A));
  };
  auto dotv = [&](const Vec& x, const Vec& y) {
    double t = 0.0;
    for (std::size_t k = 0; k < A; ++k) t += x[k] * y[k];
    return t;
  };
  Vec mean(A, 0.0);
  for (auto w : ex.query_tokens) {
    const Vec e = row(s.word_emb, w);
    for (std::size_t k = 0; k < A; ++k) mean[k] += e[k] / static_cast<double>(ex.query_tokens.size());
  }
  Vec q(A);
  for (std::size_t r = 0; r < A; ++r) {
    double z = s.proj_b[r];
    for (std::size_t c = 0; c < A; ++c) z += s.proj_w(r, c) * mean[c];
    q[r] = std::tanh(z);
  }
  Vec u(A, 0.0);
  if (s.kind == ModelKind::kHem) {
    u = row(s.user_emb, ex.user);
  } else if (uses_attention(s.kind) && !ex.history.empty()) {
    std::vector<double> ex_scores;
    for (auto h : ex.history) {
      const Vec i = row(s.item_emb, h);
      double f = 0.0;
      for (std::size_t a = 0; a < A; ++a) {
        for (std::size_t b = 0; b < B; ++b) {
          double pre = s.attn_b[a * B + b];
          for (std::size_t c = 0; c < A; ++c) pre += s.attn_w_at(a, b, c) * q[c];
          f += i[a] * std::tanh(pre) * s.attn_h[b];
        }
      }
      ex_scores.push_back(std::exp(f));
    }
    double denom = s.kind == ModelKind::kZam ? 1.0 : 0.0;
    for (double e : ex_scores) denom += e;
    for (std::size_t j = 0; j < ex.history.size(); ++j) {
      const Vec i = row(s.item_emb, ex.history[j]);
      for (std::size_t k = 0; k < A; ++k) u[k] += ex_scores[j] / denom * i[k];
    }
  }
  Vec m(A);
  for (std::size_t k = 0; k < A; ++k) m[k] = q[k] + u[k];
  const Vec item = row(s.item_emb, ex.item);
  double ll = ls(dotv(item, m));
  for (auto n : ex.negative_items) ll += ls(-dotv(row(s.item_emb, n), m));
  auto text = [&](const std::vector<WordId>& words, const std::vector<std::vector<WordId>>& negs,
                  const Vec& v) {
    double t = 0.0;
    for (std::size_t n = 0; n < words.size(); ++n) {
      t += ls(dotv(row(s.word_emb, words[n]), v));
      for (auto w : negs[n]) t += ls(-dotv(row(s.word_emb, w), v));
    }
    return t;
  };
  ll += text(ex.title_words, ex.title_negatives, item);
  if (s.kind == ModelKind::kHem) ll += text(ex.user_words, ex.user_negatives, u);
  return ll;
}

constexpr ModelKind kAllKinds[] = {ModelKind::kQem, ModelKind::kHem, ModelKind::kAem,
                                   ModelKind::kZam};

}  // namespace

TEST_CASE("word noise follows the 3/4 power") {
  const std::vector<std::uint64_t> counts{81, 16};
  const auto table = word_noise_table(counts);
  CHECK(table.probabilities()[0] == doctest::Approx(27.0 / 35.0).epsilon(1e-12));
  CHECK(table.probabilities()[1] == doctest::Approx(8.0 / 35.0).epsilon(1e-12));
  Rng rng(1);
  int first = 0;
  const int n = 70000;
  for (int k = 0; k < n; ++k) first += table.sample(rng) == 0;
  CHECK(static_cast<double>(first) / n == doctest::Approx(27.0 / 35.0).epsilon(0.01));
}

TEST_CASE("candidate negatives are uniform over the rest") {
  const std::vector<std::int32_t> cands{4, 5, 6, 7};
  const std::vector<std::int32_t> purchased{6};
  Rng rng(2);
  std::map<std::int32_t, int> freq;
  const auto draws = sample_negatives(cands, 30000, purchased, rng);
  for (auto d : draws) ++freq[d];
  CHECK(freq.count(6) == 0);
  for (auto c : {4, 5, 7}) CHECK(std::abs(freq[c] / 30000.0 - 1.0 / 3.0) <= 0.02);
  CHECK(sample_negatives(cands, 0, purchased, rng).empty());
  CHECK_THROWS_AS(sample_negatives(std::vector<std::int32_t>{6}, 2, purchased, rng), SamplingError);
  const auto table = word_noise_table(std::vector<std::uint64_t>{5});
  CHECK_THROWS_AS(sample_negatives(table, 1, std::vector<std::int32_t>{0}, rng), SamplingError);
}

TEST_CASE("alias table validation") {
  CHECK_THROWS_AS(AliasTable(std::vector<double>{}), SamplingError);
  CHECK_THROWS_AS(AliasTable(std::vector<double>{0.0, 0.0}), SamplingError);
  CHECK_THROWS_AS(AliasTable(std::vector<double>{1.0, -1.0}), SamplingError);
}

TEST_CASE("all-zero parameters give log 1/2 per term") {
  for (auto kind : kAllKinds) {
    auto s = testing::random_store(kind, 4, 2, 10, 8, 3, 1);
    for (auto& arr : named_arrays(s)) std::fill(arr.values.begin(), arr.values.end(), 0.0);
    Rng rng(4);
    const auto ex = testing::random_example(kind, 3, 10, 8, 3, rng);
    std::size_t terms = 1 + ex.negative_items.size();
    for (const auto& n : ex.title_negatives) terms += 1 + n.size();
    for (const auto& n : ex.user_negatives) terms += 1 + n.size();
    CHECK(log_likelihood(ex, s) == doctest::Approx(static_cast<double>(terms) * std::log(0.5)).epsilon(1e-14));
  }
}

TEST_CASE("loss saturates toward zero") {
  auto s = testing::random_store(ModelKind::kQem, 4, 1, 5, 5, 1, 1);
  TrainExample ex;
  ex.query_tokens = {1};
  ex.item = 2;
  std::fill(s.proj_w.data.begin(), s.proj_w.data.end(), 0.0);
  s.proj_b.assign(4, 20.0);  // q = tanh(20) ~ 1
  double prev = -1.0;
  for (double scale : {1.0, 10.0, 100.0}) {
    for (std::size_t k = 0; k < 4; ++k) s.item_emb(2, k) = scale;
    const double ll = log_likelihood(ex, s);
    CHECK(ll < 0.0);
    CHECK(ll > prev);
    prev = ll;
  }
  CHECK(prev > -1e-100);
}

TEST_CASE("loss matches the independent oracle") {
  for (auto kind : kAllKinds) {
    Rng rng(10);
    for (int t = 0; t < 10; ++t) {
      const auto s = testing::random_store(kind, 8, 2, 15, 12, 4, 50 + static_cast<std::uint64_t>(t));
      const auto ex = testing::random_example(kind, 3, 15, 12, 4, rng);
      const double a = log_likelihood(ex, s);
      const double b = oracle_log_likelihood(ex, s);
      CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)));
    }
  }
}

TEST_CASE("analytic gradients match central differences") {
  for (auto kind : kAllKinds) {
    CAPTURE(to_string(kind));
    Rng rng(21);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      const auto s = testing::random_store(kind, 8, 2, 15, 12, 4, 200 + static_cast<std::uint64_t>(t));
      const auto ex = testing::random_example(kind, 3, 15, 12, 4, rng);
      worst = std::max(worst, testing::check_gradients(ex, s, 1e-5).max_rel_error);
    }
    CHECK(worst <= 1e-4);
  }
}

TEST_CASE("gradients are sparse") {
  const auto s = testing::random_store(ModelKind::kZam, 4, 2, 30, 30, 3, 7);
  TrainExample ex;
  ex.query_tokens = {1, 2};
  ex.item = 3;
  ex.history = {4};
  ex.negative_items = {5};
  ex.title_words = {6};
  ex.title_negatives = {{7}};
  const auto g = gradients(ex, s);
  std::vector<WordId> words;
  for (const auto& [w, v] : g.words) words.push_back(w);
  CHECK(words == std::vector<WordId>{1, 2, 6, 7});
  std::vector<ItemIndex> items;
  for (const auto& [i, v] : g.items) items.push_back(i);
  CHECK(items == std::vector<ItemIndex>{3, 4, 5});
  CHECK(g.users.empty());
}

TEST_CASE("ZAM with empty history leaves attention untouched") {
  const auto s = testing::random_store(ModelKind::kZam, 4, 2, 10, 10, 3, 7);
  Rng rng(3);
  auto ex = testing::random_example(ModelKind::kZam, 3, 10, 10, 3, rng);
  ex.history.clear();
  const auto g = gradients(ex, s);
  for (double x : g.attn_w) CHECK(x == 0.0);
  for (double x : g.attn_b) CHECK(x == 0.0);
  for (double x : g.attn_h) CHECK(x == 0.0);
}

TEST_CASE("a small step along the gradient increases the likelihood") {
  for (auto kind : kAllKinds) {
    auto s = testing::random_store(kind, 8, 2, 15, 12, 4, 77);
    Rng rng(5);
    const auto ex = testing::random_example(kind, 3, 15, 12, 4, rng);
    const double before = log_likelihood(ex, s);
    const auto g = testing::dense(s, gradients(ex, s));
    auto arrays = named_arrays(s);
    for (std::size_t n = 0; n < arrays.size(); ++n) {
      for (std::size_t k = 0; k < arrays[n].values.size(); ++k) arrays[n].values[k] += 1e-4 * g[n][k];
    }
    CHECK(log_likelihood(ex, s) > before);
  }
}

TEST_CASE("train config defaults and validation") {
  TrainConfig c;
  CHECK(c.alpha == 100);
  CHECK(c.beta == 3);
  CHECK(c.learning_rate == 0.5);
  CHECK(c.batch_size == 256);
  CHECK(c.negatives == 5);
  CHECK(c.epochs == 20);
  c.alpha = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("training lowers the loss and is deterministic") {
  const auto d = testing::small_dataset(200);
  TrainConfig c;
  c.kind = ModelKind::kZam;
  c.alpha = 16;
  c.epochs = 5;
  c.batch_size = 16;
  const auto a = train(d, c);
  REQUIRE(a.trace.size() == 5);
  CHECK(a.trace[1].mean_loss < a.trace[0].mean_loss);
  CHECK(a.trace[2].mean_loss < a.trace[1].mean_loss);
  const auto b = train(d, c);
  CHECK(serialize_checkpoint(a.params) == serialize_checkpoint(b.params));
  c.seed = 2;
  CHECK_FALSE(train(d, c).params == a.params);
}

TEST_CASE("every kind trains on a small log") {
  const auto d = testing::small_dataset(200);
  for (auto kind : kAllKinds) {
    TrainConfig c;
    c.kind = kind;
    c.alpha = 8;
    c.epochs = 2;
    c.batch_size = 32;
    for (auto src : {UserTextSource::kHistory, UserTextSource::kTrainPeriod}) {
      c.user_text = src;
      const auto r = train(d, c);
      CHECK(r.params.kind == kind);
      CHECK_FALSE(first_non_finite(r.params));
    }
  }
}

TEST_CASE("divergence is reported with its location") {
  const auto d = testing::small_dataset(200);
  TrainConfig c;
  c.kind = ModelKind::kQem;
  c.alpha = 8;
  c.epochs = 3;
  c.learning_rate = 1e300;
  try {
    train(d, c);
    FAIL("expected a training error");
  } catch (const TrainingError& e) {
    const std::string what = e.what();
    CHECK(what.find("epoch") != std::string::npos);
    CHECK(what.find("batch") != std::string::npos);
  }
}
