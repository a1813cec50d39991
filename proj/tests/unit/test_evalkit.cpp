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

#include "doctest.h"
#include "support/fixtures.hpp"
#include "support/metric_oracle.hpp"
#include "zam/evalkit.hpp"

using namespace zam;

namespace {

RankedList ranking(std::size_t n) {
  RankedList r;
  for (std::size_t k = 0; k < n; ++k) r.push_back({static_cast<ItemIndex>(k), -static_cast<double>(k)});
  return r;
}

NamedModel fresh(const Dataset& d, ModelKind kind, std::string name, std::uint64_t seed = 1) {
  ParamShapes s;
  s.kind = kind;
  s.alpha = 8;
  s.beta = 2;
  s.vocab_size = d.vocab.size();
  s.item_count = d.items.size();
  s.user_count = d.users.size();
  return {std::move(name), init_params(s, seed)};
}

}  // namespace

TEST_CASE("session metrics") {
  const std::vector<ItemIndex> first{0}, second{1}, eleventh{10};
  CHECK(session_metrics(ranking(5), first) == SessionMetrics{1.0, 1.0, 1.0});
  const auto m2 = session_metrics(ranking(5), second);
  CHECK(m2.rr == 0.5);
  CHECK(std::abs(m2.ndcg10 - 0.63093) <= 1e-5);
  CHECK(m2.hit10 == 1.0);
  const auto m11 = session_metrics(ranking(100), eleventh);
  CHECK(m11.rr == doctest::Approx(1.0 / 11.0).epsilon(1e-15));
  CHECK(m11.ndcg10 == 0.0);
  CHECK(m11.hit10 == 0.0);
  const std::vector<ItemIndex> none;
  CHECK_THROWS_AS(session_metrics(ranking(3), none), ValidationError);
}

TEST_CASE("top-placed purchases give perfect NDCG") {
  const std::vector<ItemIndex> top3{0, 1, 2};
  CHECK(session_metrics(ranking(20), top3).ndcg10 == doctest::Approx(1.0).epsilon(1e-15));
  // Fewer than ten ranks: the cutoff shrinks to what is available.
  const std::vector<ItemIndex> both{0, 1};
  CHECK(session_metrics(ranking(2), both).ndcg10 == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("metrics match the brute-force reference") {
  Rng rng(12);
  for (int t = 0; t < 1000; ++t) {
    const auto s = testing::random_session(rng);
    const auto got = session_metrics(s.ranked, s.purchased);
    const auto want = testing::reference_metrics(s.ranked, s.purchased);
    CHECK(got.rr == want.rr);
    CHECK(got.ndcg10 == doctest::Approx(want.ndcg10).epsilon(1e-15));
    CHECK(got.hit10 == want.hit10);
    CHECK(got.hit10 >= got.ndcg10);
    CHECK((got.ndcg10 > 0.0) == (got.hit10 == 1.0));
  }
}

TEST_CASE("paired t-test") {
  const Vec a{0.2, 0.4, 0.6}, b{0.2, 0.4, 0.6};
  CHECK(paired_ttest(a, b) == 1.0);
  const Vec alt{1, -1, 1, -1}, zero{0, 0, 0, 0};
  CHECK(paired_ttest(alt, zero) == 1.0);
  Vec eps(100, 1e-3), base(100, 0.0);
  CHECK(paired_ttest(eps, base) == 0.0);
  for (std::size_t k = 0; k < 100; ++k) eps[k] += 1e-6 * static_cast<double>(k % 3);
  CHECK(paired_ttest(eps, base) < 1e-50);
  const Vec x{1, 2, 3, 4};
  CHECK(paired_ttest(x, zero) == doctest::Approx(0.030466291662170977).epsilon(1e-9));
  const Vec p{0.5, 0.2, 0.9, 0.4, 0.7}, q{0.1, 0.3, 0.5, 0.5, 0.2};
  CHECK(paired_ttest(p, q) == doctest::Approx(0.1706783098556868).epsilon(1e-9));
  CHECK_THROWS_AS(paired_ttest(Vec{1.0}, Vec{1.0}), ValidationError);
}

TEST_CASE("spearman with ties") {
  const Vec x{1, 2, 2, 5}, y{3, 1, 4, 4};
  CHECK(spearman(x, y) == doctest::Approx(0.5).epsilon(1e-12));
  const Vec up{1, 2, 3}, down{3, 2, 1};
  CHECK(spearman(up, down) == doctest::Approx(-1.0));
}

TEST_CASE("zero-weight bins") {
  CHECK(zero_weight_bin(1.0) == 9);
  CHECK(zero_weight_bin(0.05) == 0);
  CHECK(zero_weight_bin(0.0) == 0);
  CHECK(zero_weight_bin(0.1) == 1);
  CHECK(zero_weight_bin(0.95) == 9);

  EvalReport r;
  r.models = {"QEM", "ZAM"};
  r.reference = "QEM";
  SessionEval s;
  s.zero_weight = 1.0;
  s.metrics = {{0.5, 0, 0}, {1.0, 0, 0}};
  r.sessions.push_back(s);
  s.zero_weight = 0.05;
  s.metrics = {{0.25, 0, 0}, {0.25, 0, 0}};
  r.sessions.push_back(s);
  const auto b = zero_weight_buckets(r);
  REQUIRE(b.size() == 10);
  CHECK(b[9].label == "[0.9,1.0]");
  CHECK(b[0].label == "[0.0,0.1)");
  CHECK(b[9].count == 1);
  CHECK(*b[9].improvement[1] == doctest::Approx(100.0));
  CHECK(*b[0].improvement[1] == 0.0);
  CHECK(b[4].count == 0);
  CHECK_FALSE(b[4].mean_rr[0].has_value());
  CHECK(buckets_to_jsonl(b, r.models).find("\"mean_rr\":{\"QEM\":null,\"ZAM\":null}") != std::string::npos);
}

TEST_CASE("evaluation report") {
  const auto d = testing::small_dataset(600);
  SUBCASE("identical checkpoints and self reference") {
    EvalOptions o;
    const auto r = evaluate(d, {fresh(d, ModelKind::kQem, "QEM"), fresh(d, ModelKind::kQem, "copy")}, o);
    CHECK(r.models == std::vector<std::string>{"QL", "Pop_q", "Pop_i", "QEM", "copy"});
    CHECK(r.rows[3].improvement == SessionMetrics{0, 0, 0});
    CHECK(r.rows[4].mean == r.rows[3].mean);
    CHECK(r.rows[4].p_value == SessionMetrics{1, 1, 1});
    CHECK(r.zweight_buckets.empty());
    for (const auto& s : r.sessions) CHECK_FALSE(s.zero_weight.has_value());
    CHECK(report_to_json(r).dump().find("zero_weight") == std::string::npos);
    CHECK(r.freq_buckets.size() == 3);
  }
  SUBCASE("table shape with every kind") {
    const auto r = evaluate(d, {fresh(d, ModelKind::kQem, "QEM"), fresh(d, ModelKind::kHem, "HEM"),
                                fresh(d, ModelKind::kAem, "AEM"), fresh(d, ModelKind::kZam, "ZAM")});
    CHECK(r.models == std::vector<std::string>{"QL", "Pop_q", "Pop_i", "QEM", "HEM", "AEM", "ZAM"});
    CHECK(r.zweight_buckets.size() == 10);
    for (const auto& s : r.sessions) {
      REQUIRE(s.zero_weight.has_value());
      CHECK(*s.zero_weight >= 0.0);
      CHECK(*s.zero_weight <= 1.0);
    }
    const auto tsv = report_to_tsv(r);
    CHECK(tsv.rfind("model\tMRR\tNDCG@10\tHit@10", 0) == 0);
    CHECK(std::count(tsv.begin(), tsv.end(), '\n') == 8);
  }
  SUBCASE("deterministic across thread counts") {
    const std::vector<NamedModel> ms{fresh(d, ModelKind::kQem, "QEM"), fresh(d, ModelKind::kZam, "ZAM")};
    EvalOptions one, four;
    four.threads = 4;
    CHECK(report_to_json(evaluate(d, ms, one)).dump() == report_to_json(evaluate(d, ms, four)).dump());
  }
  SUBCASE("bad references and shapes") {
    EvalOptions o;
    o.reference = "HEM";
    CHECK_THROWS_AS(evaluate(d, {fresh(d, ModelKind::kQem, "QEM")}, o), ConfigError);
    auto m = fresh(d, ModelKind::kQem, "QEM");
    m.params.item_emb = Matrix(3, 8);
    CHECK_THROWS_AS(evaluate(d, {m}), CheckpointError);
  }
}
