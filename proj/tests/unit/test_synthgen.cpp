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
#include <set>

#include "doctest.h"
#include "zam/analysis.hpp"
#include "zam/corpus.hpp"
#include "zam/synthgen.hpp"

using namespace zam;

namespace {

GenConfig small_config(std::vector<MixEntry> mix, std::size_t sessions = 3000) {
  GenConfig g;
  g.n_users = 100;
  g.n_items = 200;
  g.n_queries = 20;
  g.n_sessions = sessions;
  g.vocab_size = 300;
  g.candidate_size = 30;
  g.n_topics = 4;
  g.n_styles = 4;
  g.personalization_mix = std::move(mix);
  g.seed = 7;
  return g;
}

RawEvent event(std::string user, std::string query, Timestamp t, std::vector<std::string> bought) {
  return {std::move(user), std::move(query), t, std::move(bought), {"a", "b"}};
}

// Sessions grouped by normalized query.
std::map<std::string, std::vector<Session>> by_query(const Dataset& d) {
  std::map<std::string, std::vector<Session>> out;
  for (const auto& s : d.sessions) out[s.query_text].push_back(s);
  return out;
}

double mean_query_entropy(const Dataset& d) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& [q, ss] : by_query(d)) {
    if (ss.size() < 20) continue;
    sum += purchase_entropy(ss);
    ++n;
  }
  return sum / static_cast<double>(n);
}

// Smoothed KL(p || q) between two purchase histograms.
double smoothed_kl(const std::map<ItemIndex, double>& p, const std::map<ItemIndex, double>& q,
                   const std::set<ItemIndex>& support) {
  double np = 0.0, nq = 0.0;
  for (auto i : support) {
    np += (p.count(i) ? p.at(i) : 0.0) + 0.5;
    nq += (q.count(i) ? q.at(i) : 0.0) + 0.5;
  }
  double kl = 0.0;
  for (auto i : support) {
    const double a = ((p.count(i) ? p.at(i) : 0.0) + 0.5) / np;
    const double b = ((q.count(i) ? q.at(i) : 0.0) + 0.5) / nq;
    kl += a * std::log(a / b);
  }
  return kl;
}

}  // namespace

TEST_CASE("sessionize splits on inactivity and query change") {
  SUBCASE("1799 s gap stays one session") {
    const auto s = sessionize({event("u", "q", 0, {}), event("u", "q", 1799, {"a"})});
    REQUIRE(s.size() == 1);
    CHECK(s[0].timestamp == 0);
    CHECK(s[0].purchased == std::vector<std::string>{"a"});
  }
  SUBCASE("1801 s gap makes two") {
    CHECK(sessionize({event("u", "q", 0, {}), event("u", "q", 1801, {"a"})}).size() == 2);
  }
  SUBCASE("query change makes two") {
    CHECK(sessionize({event("u", "q", 0, {}), event("u", "r", 10, {"a"})}).size() == 2);
  }
  SUBCASE("users are independent and purchases merge") {
    const auto s = sessionize({event("u", "q", 0, {"a"}), event("v", "q", 5, {}),
                               event("u", "q", 100, {"a", "b"})});
    REQUIRE(s.size() == 2);
    CHECK(s[0].user_id == "u");
    CHECK(s[0].purchased == std::vector<std::string>{"a", "b"});
    CHECK(s[1].user_id == "v");
  }
}

TEST_CASE("config validation") {
  auto g = small_config({{1.0, 0.0}});
  CHECK_NOTHROW(g.validate());
  g.candidate_size = g.n_items + 1;
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g = small_config({{0.5, 0.0}, {0.4, 0.5}});
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g = small_config({{1.0, 1.5}});
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g = small_config({{1.0, 0.0}});
  g.n_sessions = 0;
  CHECK_THROWS_AS(g.validate(), ConfigError);
  CHECK_THROWS_AS(generate(g), ConfigError);
}

TEST_CASE("generation is deterministic and passes ingest") {
  const auto cfg = small_config({{0.4, 0.0}, {0.3, 0.5}, {0.3, 0.9}}, 1000);
  const auto a = generate(cfg);
  const auto b = generate(cfg);
  CHECK(a.items_jsonl == b.items_jsonl);
  CHECK(a.sessions_jsonl == b.sessions_jsonl);
  CHECK(a.ground_truth_jsonl == b.ground_truth_jsonl);
  auto other = cfg;
  other.seed = 8;
  CHECK(generate(other).sessions_jsonl != a.sessions_jsonl);

  const auto d = ingest_text(a.items_jsonl, a.sessions_jsonl, 1);
  CHECK(d.items.size() == cfg.n_items);
  CHECK(d.sessions.size() >= cfg.n_sessions * 9 / 10);
  for (const auto& s : d.sessions) {
    CHECK(s.purchased.size() == 1);
    CHECK(s.candidates.size() == cfg.candidate_size);
    CHECK_FALSE(s.query_tokens.empty());
  }
  std::size_t users = 0, items = 0, queries = 0;
  std::set<double> lambdas;
  for (const auto& g : a.ground_truth) {
    CHECK(g.vector.size() == cfg.latent_dim);
    users += g.kind == "user";
    items += g.kind == "item";
    if (g.kind == "query") {
      ++queries;
      REQUIRE(g.lambda.has_value());
      lambdas.insert(*g.lambda);
    } else {
      CHECK_FALSE(g.lambda.has_value());
    }
  }
  CHECK(users == cfg.n_users);
  CHECK(items == cfg.n_items);
  CHECK(queries == cfg.n_queries);
  CHECK(lambdas == std::set<double>{0.0, 0.5, 0.9});
}

TEST_CASE("without personalization users share a purchase distribution") {
  auto kl_for = [](double lambda) {
    auto cfg = small_config({{1.0, lambda}}, 6000);
    cfg.n_styles = 2;
    const auto log = generate(cfg);
    const auto d = ingest_text(log.items_jsonl, log.sessions_jsonl, 1);
    const auto groups = by_query(d);
    const auto& top = std::max_element(groups.begin(), groups.end(), [](const auto& x, const auto& y) {
                        return x.second.size() < y.second.size();
                      })->second;
    REQUIRE(top.size() >= 500);
    std::map<ItemIndex, double> even, odd;
    std::set<ItemIndex> support;
    for (const auto& s : top) {
      (s.user % 2 == 0 ? even : odd)[s.purchased[0]] += 1.0;
      support.insert(s.purchased[0]);
    }
    return smoothed_kl(even, odd, support);
  };
  const double shared = kl_for(0.0);
  CHECK(shared < 0.1);
  CHECK(kl_for(1.0) > shared);
}

TEST_CASE("entropy grows with the number of plausible candidates") {
  double prev = -1.0;
  for (double scale : {12.0, 4.0, 1.0}) {
    auto cfg = small_config({{1.0, 0.0}}, 3000);
    cfg.purchase_scale = scale;
    const auto log = generate(cfg);
    const double h = mean_query_entropy(ingest_text(log.items_jsonl, log.sessions_jsonl, 1));
    CHECK(h > prev);
    prev = h;
  }
}

TEST_CASE("full personalization separates users with different preferences") {
  auto cfg = small_config({{1.0, 1.0}}, 4000);
  cfg.n_styles = 2;
  cfg.style_consistency = 1.0;
  const auto log = generate(cfg);
  const auto d = ingest_text(log.items_jsonl, log.sessions_jsonl, 1);
  std::map<std::string, Vec> pref;
  for (const auto& g : log.ground_truth) {
    if (g.kind == "user") pref[g.id] = g.vector;
  }
  // Per query and preference, the most purchased item.
  std::map<std::pair<std::string, Vec>, std::map<ItemIndex, int>> counts;
  for (const auto& s : d.sessions) counts[{s.query_text, pref.at(d.users[s.user])}][s.purchased[0]]++;
  std::map<std::string, std::set<ItemIndex>> modes;
  std::map<std::string, int> groups;
  for (const auto& [key, hist] : counts) {
    const auto best = std::max_element(hist.begin(), hist.end(),
                                       [](const auto& x, const auto& y) { return x.second < y.second; });
    modes[key.first].insert(best->first);
    ++groups[key.first];
  }
  int split = 0, both = 0;
  for (const auto& [q, n] : groups) {
    if (n < 2) continue;
    ++both;
    split += modes[q].size() == 2;
  }
  REQUIRE(both > 0);
  CHECK(split * 10 >= both * 8);
}
