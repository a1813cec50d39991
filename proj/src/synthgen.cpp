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

#include "zam/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numeric>
#include <set>

#include "json.hpp"
#include "zam/trainer.hpp"

namespace zam {

void GenConfig::validate() const {
  if (n_users == 0) throw ConfigError("n_users must be positive");
  if (n_items == 0) throw ConfigError("n_items must be positive");
  if (n_queries == 0) throw ConfigError("n_queries must be positive");
  if (n_sessions == 0) throw ConfigError("n_sessions must be positive");
  if (candidate_size == 0) throw ConfigError("candidate_size must be positive");
  if (candidate_size > n_items) {
    throw ConfigError("candidate_size (" + std::to_string(candidate_size) + ") exceeds n_items (" +
                      std::to_string(n_items) + ")");
  }
  if (latent_dim < 3) throw ConfigError("latent_dim must be at least 3");
  if (n_topics == 0 || n_styles == 0) throw ConfigError("n_topics and n_styles must be positive");
  if (vocab_size < 4 * (n_topics + n_styles)) {
    throw ConfigError("vocab_size must be at least 4 * (n_topics + n_styles)");
  }
  if (personalization_mix.empty()) throw ConfigError("personalization_mix is empty");
  double total = 0.0;
  for (const auto& m : personalization_mix) {
    if (!(m.query_fraction >= 0.0)) throw ConfigError("query fractions must be non-negative");
    if (!(m.lambda >= 0.0 && m.lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
    total += m.query_fraction;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("query fractions must sum to 1");
  if (!(purchase_scale > 0.0)) throw ConfigError("purchase_scale must be positive");
  for (double pr : {repeat_search_prob, topic_affinity, style_consistency}) {
    if (!(pr >= 0.0 && pr <= 1.0)) {
      throw ConfigError("repeat_search_prob, topic_affinity and style_consistency must lie in [0, 1]");
    }
  }
}

std::vector<LogSession> sessionize(const std::vector<RawEvent>& events) {
  constexpr Timestamp kInactivity = 1800;
  std::map<std::string, std::vector<const RawEvent*>> by_user;
  for (const auto& e : events) by_user[e.user_id].push_back(&e);

  std::vector<LogSession> out;
  for (auto& [user, evs] : by_user) {
    std::stable_sort(evs.begin(), evs.end(), [](const RawEvent* a, const RawEvent* b) {
      return a->timestamp < b->timestamp;
    });
    LogSession* open = nullptr;
    Timestamp last = 0;
    for (const RawEvent* e : evs) {
      if (!open || e->timestamp - last > kInactivity || e->query != open->query) {
        out.push_back({user, e->query, e->timestamp, {}, e->candidates});
        open = &out.back();
      }
      for (const auto& p : e->purchased) {
        if (std::find(open->purchased.begin(), open->purchased.end(), p) == open->purchased.end()) {
          open->purchased.push_back(p);
        }
      }
      last = e->timestamp;
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const LogSession& a, const LogSession& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.user_id < b.user_id;
  });
  return out;
}

std::vector<std::pair<std::string, double>> GeneratedLog::query_lambdas() const {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& g : ground_truth) {
    if (g.kind == "query") out.emplace_back(g.id, g.lambda.value_or(0.0));
  }
  return out;
}

namespace {

std::string make_id(char prefix, std::size_t n, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%0*zu", prefix, width, n);
  return buf;
}

Vec random_unit(std::size_t dim, Rng& rng) {
  Vec v(dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      norm += x * x;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

// Latent layout: [topic subspace | style subspace | appeal].
struct Layout {
  std::size_t topic_dims;
  std::size_t style_dims;
  std::size_t appeal;  // index of the last dimension

  explicit Layout(std::size_t d)
      : topic_dims((d - 1) / 2), style_dims(d - 1 - (d - 1) / 2), appeal(d - 1) {}
};

struct WordPools {
  std::vector<std::vector<std::string>> topic;
  std::vector<std::vector<std::string>> style;
  std::vector<std::string> general;
  AliasTable general_freq;  // Zipf: a few boilerplate words, a long tail
};

WordPools make_words(const GenConfig& c) {
  WordPools pools;
  const std::size_t topic_total = c.vocab_size * 6 / 10;
  const std::size_t style_total = c.vocab_size * 15 / 100;
  const std::size_t per_topic = std::max<std::size_t>(2, topic_total / c.n_topics);
  const std::size_t per_style = std::max<std::size_t>(2, style_total / c.n_styles);
  std::size_t next = 0;
  auto word = [&] { return make_id('w', next++, 5); };
  pools.topic.resize(c.n_topics);
  for (auto& t : pools.topic) {
    for (std::size_t k = 0; k < per_topic; ++k) t.push_back(word());
  }
  pools.style.resize(c.n_styles);
  for (auto& s : pools.style) {
    for (std::size_t k = 0; k < per_style; ++k) s.push_back(word());
  }
  while (next < c.vocab_size) pools.general.push_back(word());
  if (pools.general.empty()) pools.general.push_back(word());
  Vec w(pools.general.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = 1.0 / static_cast<double>(k + 1);
  pools.general_freq = AliasTable(w);
  return pools;
}

const std::string& pick(const std::vector<std::string>& pool, Rng& rng) {
  return pool[rng.below(pool.size())];
}

const std::string& pick_general(const WordPools& pools, Rng& rng) {
  return pools.general[static_cast<std::size_t>(pools.general_freq.sample(rng))];
}

}  // namespace

GeneratedLog generate(const GenConfig& c) {
  c.validate();
  Rng rng(c.seed);
  const Layout layout(c.latent_dim);
  const std::size_t D = c.latent_dim;
  const WordPools words = make_words(c);

  std::vector<Vec> topic_centers(c.n_topics);
  for (auto& v : topic_centers) v = random_unit(layout.topic_dims, rng);
  std::vector<Vec> style_centers(c.n_styles);
  for (auto& v : style_centers) v = random_unit(layout.style_dims, rng);

  GeneratedLog log;

  // Items.
  struct ItemTruth {
    std::size_t topic;
    std::size_t style;
    Vec vec;
    std::vector<std::string> title;
  };
  std::vector<ItemTruth> items(c.n_items);
  const double topic_noise = 0.35 / std::sqrt(static_cast<double>(layout.topic_dims));
  const double style_noise = 0.2 / std::sqrt(static_cast<double>(layout.style_dims));
  for (std::size_t i = 0; i < c.n_items; ++i) {
    auto& it = items[i];
    it.topic = rng.below(c.n_topics);
    it.style = rng.below(c.n_styles);
    it.vec.assign(D, 0.0);
    for (std::size_t k = 0; k < layout.topic_dims; ++k) {
      it.vec[k] = topic_centers[it.topic][k] + topic_noise * rng.normal();
    }
    for (std::size_t k = 0; k < layout.style_dims; ++k) {
      it.vec[layout.topic_dims + k] = style_centers[it.style][k] + style_noise * rng.normal();
    }
    it.vec[layout.appeal] = c.popularity_std * rng.normal();

    const std::size_t len = 3 + rng.below(10);  // [3, 12]
    std::string title;
    for (std::size_t k = 0; k < len; ++k) {
      const double u = rng.uniform();
      const std::string& w = u < 0.5    ? pick(words.topic[it.topic], rng)
                             : u < 0.75 ? pick(words.style[it.style], rng)
                                        : pick_general(words, rng);
      if (!title.empty()) title.push_back(' ');
      title += w;
      it.title.push_back(w);
    }
    const std::string id = make_id('i', i, 5);
    nlohmann::ordered_json j{{"item_id", id}, {"title", title}};
    log.items_jsonl += j.dump() + "\n";
    log.ground_truth.push_back({"item", id, it.vec, std::nullopt});
  }

  // Queries. Each one has a specificity s in [0, 1): broad queries (s near 0)
  // sit at their topic center and use topic words; specific ones move toward
  // one target item, borrow its title words and inherit its style. The least
  // personalized mix entries go to the most specific queries, so how much a
  // query depends on the user is readable from its text.
  struct QueryTruth {
    std::string text;
    Vec intent;
    double lambda = 0.0;
    double specificity = 0.0;
    std::vector<std::size_t> candidates;
  };
  std::vector<std::vector<std::size_t>> items_by_topic(c.n_topics);
  for (std::size_t i = 0; i < c.n_items; ++i) items_by_topic[items[i].topic].push_back(i);

  std::vector<QueryTruth> queries(c.n_queries);
  std::set<std::string> used_text;
  const double intent_noise = 0.1 / std::sqrt(static_cast<double>(layout.topic_dims));
  for (std::size_t q = 0; q < c.n_queries; ++q) {
    auto& qt = queries[q];
    const std::size_t topic = q % c.n_topics;
    const auto& pool = items_by_topic[topic];
    const double s = pool.empty() ? 0.0 : rng.uniform();
    qt.specificity = s;
    qt.intent.assign(D, 0.0);
    for (std::size_t k = 0; k < layout.topic_dims; ++k) {
      qt.intent[k] = topic_centers[topic][k] + intent_noise * rng.normal();
    }
    const ItemTruth* target = pool.empty() ? nullptr : &items[pool[rng.below(pool.size())]];
    if (target) {
      for (std::size_t k = 0; k + 1 < D; ++k) qt.intent[k] += s * (target->vec[k] - qt.intent[k]);
    }
    qt.intent[layout.appeal] = 1.0;
    for (int attempt = 0;; ++attempt) {
      const std::size_t len = 1 + rng.below(3) + static_cast<std::size_t>(std::lround(2.0 * s)) +
                              static_cast<std::size_t>(attempt / 8);
      std::string text;
      for (std::size_t k = 0; k < len; ++k) {
        const double u = rng.uniform();
        const std::string& w = target && u < s          ? pick(target->title, rng)
                               : u < s + 0.85 * (1 - s) ? pick(words.topic[topic], rng)
                                                        : pick_general(words, rng);
        if (!text.empty()) text.push_back(' ');
        text += w;
      }
      if (used_text.insert(text).second) {
        qt.text = text;
        break;
      }
    }
    std::vector<std::pair<double, std::size_t>> affinity(c.n_items);
    for (std::size_t i = 0; i < c.n_items; ++i) affinity[i] = {dot(items[i].vec, qt.intent), i};
    std::partial_sort(affinity.begin(), affinity.begin() + static_cast<std::ptrdiff_t>(c.candidate_size),
                      affinity.end(), [](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first > b.first;
                        return a.second < b.second;
                      });
    for (std::size_t k = 0; k < c.candidate_size; ++k) qt.candidates.push_back(affinity[k].second);
  }
  {
    std::vector<std::size_t> order(c.n_queries);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return queries[a].specificity > queries[b].specificity;
    });
    auto mix = c.personalization_mix;
    std::stable_sort(mix.begin(), mix.end(),
                     [](const MixEntry& a, const MixEntry& b) { return a.lambda < b.lambda; });
    std::size_t pos = 0;
    double acc = 0.0;
    for (std::size_t m = 0; m < mix.size(); ++m) {
      acc += mix[m].query_fraction;
      const std::size_t end = m + 1 == mix.size()
                                  ? c.n_queries
                                  : static_cast<std::size_t>(std::llround(acc * static_cast<double>(c.n_queries)));
      for (; pos < std::min(end, c.n_queries); ++pos) queries[order[pos]].lambda = mix[m].lambda;
    }
  }
  for (const auto& qt : queries) log.ground_truth.push_back({"query", qt.text, qt.intent, qt.lambda});

  // Users: a favourite style plus, per topic, either that style or another
  // one, and a few favourite topics they mostly search in. The ground truth
  // keeps the favourite style.
  auto embed_style = [&](std::size_t style) {
    Vec v(D, 0.0);
    for (std::size_t k = 0; k < layout.style_dims; ++k) v[layout.topic_dims + k] = style_centers[style][k];
    return v;
  };
  std::vector<Vec> user_pref;  // n_users * n_topics, row-major
  user_pref.reserve(c.n_users * c.n_topics);
  std::vector<std::vector<std::size_t>> favourites(c.n_users);
  const std::size_t n_fav = std::min(c.user_topics, c.n_topics);
  for (std::size_t u = 0; u < c.n_users; ++u) {
    const Vec base = embed_style(rng.below(c.n_styles));
    for (std::size_t t = 0; t < c.n_topics; ++t) {
      user_pref.push_back(rng.uniform() < c.style_consistency ? base : embed_style(rng.below(c.n_styles)));
    }
    std::vector<std::size_t> all(c.n_topics);
    std::iota(all.begin(), all.end(), 0);
    rng.shuffle(all);
    favourites[u].assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_fav));
    log.ground_truth.push_back({"user", make_id('u', u, 5), base, std::nullopt});
  }

  // Activity is geometric so some users are seen only once or twice.
  Vec activity(c.n_users);
  const double p = std::min(1.0, static_cast<double>(c.n_users) / static_cast<double>(c.n_sessions));
  for (auto& a : activity) a = 1.0 + static_cast<double>(rng.geometric(p));
  const AliasTable user_table(activity);
  Vec query_weight(c.n_queries);
  for (std::size_t q = 0; q < c.n_queries; ++q) {
    query_weight[q] = 1.0 / std::pow(static_cast<double>(q + 1), c.query_zipf);
  }
  const AliasTable query_table(query_weight);
  // Per-topic query tables; query q belongs to topic q % n_topics.
  std::vector<AliasTable> topic_tables;
  std::vector<std::vector<std::size_t>> topic_queries(c.n_topics);
  for (std::size_t q = 0; q < c.n_queries; ++q) topic_queries[q % c.n_topics].push_back(q);
  for (const auto& qs : topic_queries) {
    Vec w;
    for (auto q : qs) w.push_back(query_weight[q]);
    topic_tables.emplace_back(w.empty() ? Vec{1.0} : w);
  }
  auto draw_query = [&](std::size_t user) {
    if (n_fav > 0 && rng.uniform() < c.topic_affinity) {
      const std::size_t t = favourites[user][rng.below(n_fav)];
      if (!topic_queries[t].empty()) {
        return topic_queries[t][static_cast<std::size_t>(topic_tables[t].sample(rng))];
      }
    }
    return static_cast<std::size_t>(query_table.sample(rng));
  };

  constexpr Timestamp kYear = 365LL * 24 * 3600;
  struct Planned {
    std::size_t user;
    std::size_t query;
    Timestamp t;
  };
  // Users join at staggered times and are active from then on, so the test
  // period mixes newcomers with long-standing customers.
  std::vector<Timestamp> joined(c.n_users);
  for (auto& j : joined) j = static_cast<Timestamp>(rng.uniform() * 0.9 * static_cast<double>(kYear));
  std::vector<Planned> plan(c.n_sessions);
  std::vector<std::vector<std::size_t>> per_user(c.n_users);
  for (std::size_t s = 0; s < c.n_sessions; ++s) {
    plan[s].user = static_cast<std::size_t>(user_table.sample(rng));
    plan[s].query = draw_query(plan[s].user);
    const Timestamp from = joined[plan[s].user];
    plan[s].t = 86400 + from + static_cast<Timestamp>(rng.below(static_cast<std::uint64_t>(kYear - from)));
    per_user[plan[s].user].push_back(s);
  }
  // Keep a user's sessions at least an hour apart so each planned session
  // survives sessionization intact.
  for (auto& list : per_user) {
    std::sort(list.begin(), list.end(), [&](std::size_t a, std::size_t b) {
      return plan[a].t != plan[b].t ? plan[a].t < plan[b].t : a < b;
    });
    for (std::size_t k = 1; k < list.size(); ++k) {
      plan[list[k]].t = std::max(plan[list[k]].t, plan[list[k - 1]].t + 3600);
    }
  }

  // Candidates depend only on the query, so events carry none and each
  // session gets its query's list when written out.
  std::vector<std::vector<std::string>> cand_ids(c.n_queries);
  std::map<std::string, std::size_t> query_of_text;
  for (std::size_t q = 0; q < c.n_queries; ++q) {
    for (auto i : queries[q].candidates) cand_ids[q].push_back(make_id('i', i, 5));
    query_of_text[queries[q].text] = q;
  }
  std::vector<RawEvent> events;
  std::vector<std::string> user_ids(c.n_users);
  for (std::size_t u = 0; u < c.n_users; ++u) user_ids[u] = make_id('u', u, 5);
  Vec logits;
  for (const auto& ps : plan) {
    const auto& qt = queries[ps.query];
    const Vec& pref = user_pref[ps.user * c.n_topics + ps.query % c.n_topics];
    logits.assign(qt.candidates.size(), 0.0);
    for (std::size_t k = 0; k < qt.candidates.size(); ++k) {
      const auto& iv = items[qt.candidates[k]].vec;
      logits[k] = c.purchase_scale * ((1.0 - qt.lambda) * dot(iv, qt.intent) + qt.lambda * dot(iv, pref));
    }
    const double hi = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (auto& l : logits) {
      l = std::exp(l - hi);
      z += l;
    }
    double u = rng.uniform() * z;
    std::size_t chosen = qt.candidates.size() - 1;
    for (std::size_t k = 0; k < logits.size(); ++k) {
      u -= logits[k];
      if (u < 0.0) {
        chosen = k;
        break;
      }
    }

    if (rng.uniform() < 0.1) {
      // An abandoned search for another query shortly before; it ends up as
      // its own purchase-free session and is dropped.
      const auto other = static_cast<std::size_t>(query_table.sample(rng));
      if (other != ps.query) {
        events.push_back({user_ids[ps.user], queries[other].text, ps.t - 900, {}, {}});
      }
    }
    Timestamp t = ps.t;
    if (rng.uniform() < c.repeat_search_prob) {
      events.push_back({user_ids[ps.user], qt.text, t, {}, {}});
      t += 60 + static_cast<Timestamp>(rng.below(1500));
    }
    events.push_back({user_ids[ps.user], qt.text, t, {cand_ids[ps.query][chosen]}, {}});
  }

  std::size_t next_id = 0;
  for (const auto& s : sessionize(events)) {
    if (s.purchased.empty()) continue;
    nlohmann::ordered_json j{{"session_id", make_id('s', next_id++, 7)},
                             {"user_id", s.user_id},
                             {"query", s.query},
                             {"timestamp", s.timestamp},
                             {"purchased", s.purchased},
                             {"candidates", cand_ids[query_of_text.at(s.query)]}};
    log.sessions_jsonl += j.dump() + "\n";
  }

  for (const auto& g : log.ground_truth) {
    nlohmann::ordered_json j{{"kind", g.kind}, {"id", g.id}, {"vector", g.vector}};
    j["lambda"] = g.lambda ? nlohmann::ordered_json(*g.lambda) : nlohmann::ordered_json(nullptr);
    log.ground_truth_jsonl += j.dump() + "\n";
  }
  return log;
}

void write_generated(const GeneratedLog& log, const std::string& dir) {
  std::filesystem::create_directories(dir);
  atomic_write(dir + "/items.jsonl", log.items_jsonl);
  atomic_write(dir + "/sessions.jsonl", log.sessions_jsonl);
  atomic_write(dir + "/ground_truth.jsonl", log.ground_truth_jsonl);
}

}  // namespace zam
