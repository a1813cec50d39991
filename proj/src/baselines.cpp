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

#include "zam/baselines.hpp"

#include <cmath>
#include <sstream>

namespace zam {

UnigramStats UnigramStats::build(const Dataset& dataset) {
  UnigramStats s;
  s.item_tf.resize(dataset.items.size());
  s.item_length.resize(dataset.items.size());
  s.collection_tf.assign(dataset.vocab.size(), 0);
  for (std::size_t i = 0; i < dataset.items.size(); ++i) {
    const auto& title = dataset.items[i].title_tokens;
    for (auto w : title) {
      ++s.item_tf[i][w];
      ++s.collection_tf[static_cast<std::size_t>(w)];
    }
    s.item_length[i] = static_cast<std::uint32_t>(title.size());
    s.collection_length += title.size();
  }
  return s;
}

double UnigramStats::collection_prob(WordId w) const {
  if (collection_length == 0) return 0.0;
  return static_cast<double>(collection_tf[static_cast<std::size_t>(w)]) /
         static_cast<double>(collection_length);
}

double ql_score(std::span<const WordId> query_tokens, ItemIndex item, const UnigramStats& stats,
                double mu) {
  const auto idx = static_cast<std::size_t>(item);
  const auto& tf = stats.item_tf[idx];
  const double len = static_cast<double>(stats.item_length[idx]);
  double score = 0.0;
  for (auto w : query_tokens) {
    const double pc = stats.collection_prob(w);
    if (pc <= 0.0) continue;
    auto it = tf.find(w);
    const double count = it == tf.end() ? 0.0 : static_cast<double>(it->second);
    score += std::log((count + mu * pc) / (len + mu));
  }
  return score;
}

RankedList ql_rank(const Session& session, const UnigramStats& stats, double mu) {
  Vec scores(session.candidates.size());
  for (std::size_t k = 0; k < scores.size(); ++k) {
    scores[k] = ql_score(session.query_tokens, session.candidates[k], stats, mu);
  }
  return rank_by_scores(session.candidates, scores);
}

PopTables PopTables::build(const Dataset& dataset) {
  return build(dataset, dataset.train_sessions());
}

PopTables PopTables::build(const Dataset& dataset, std::span<const Session> sessions) {
  PopTables t;
  t.by_item.assign(dataset.items.size(), 0);
  for (const auto& s : sessions) {
    auto& row = t.by_query[s.query_text];
    for (auto item : s.purchased) {
      ++row[item];
      ++t.by_item[static_cast<std::size_t>(item)];
    }
  }
  return t;
}

std::uint64_t PopTables::query_count(const std::string& query, ItemIndex item) const {
  auto q = by_query.find(query);
  if (q == by_query.end()) return 0;
  auto it = q->second.find(item);
  return it == q->second.end() ? 0 : it->second;
}

std::string PopTables::to_tsv(const Dataset& dataset) const {
  std::ostringstream out;
  for (const auto& [query, row] : by_query) {
    for (const auto& [item, count] : row) {
      out << query << '\t' << dataset.items[static_cast<std::size_t>(item)].item_id << '\t'
          << count << '\n';
    }
  }
  return out.str();
}

RankedList pop_rank(PopKind kind, const Session& session, const PopTables& tables) {
  Vec scores(session.candidates.size());
  const std::map<ItemIndex, std::uint64_t>* row = nullptr;
  if (kind == PopKind::kQueryDependent) {
    auto it = tables.by_query.find(session.query_text);
    if (it != tables.by_query.end()) row = &it->second;
  }
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const auto item = session.candidates[k];
    if (kind == PopKind::kQueryIndependent) {
      scores[k] = static_cast<double>(tables.by_item[static_cast<std::size_t>(item)]);
    } else if (row) {
      auto it = row->find(item);
      scores[k] = it == row->end() ? 0.0 : static_cast<double>(it->second);
    }
  }
  return rank_by_scores(session.candidates, scores);
}

}  // namespace zam
