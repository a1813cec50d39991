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

#pragma once

#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "zam/corpus.hpp"
#include "zam/ranker.hpp"

namespace zam {

// Unigram title statistics for the query-likelihood baseline.
struct UnigramStats {
  std::vector<std::unordered_map<WordId, std::uint32_t>> item_tf;
  std::vector<std::uint32_t> item_length;
  std::vector<std::uint64_t> collection_tf;  // indexed by word id
  std::uint64_t collection_length = 0;

  static UnigramStats build(const Dataset& dataset);
  double collection_prob(WordId w) const;
};

// Dirichlet-smoothed query log likelihood of the item's title:
// sum_w log((tf(w) + mu * P(w|C)) / (|title| + mu)). Query words that never
// occur in any title are skipped, like out-of-vocabulary words.
double ql_score(std::span<const WordId> query_tokens, ItemIndex item, const UnigramStats& stats,
                double mu);

RankedList ql_rank(const Session& session, const UnigramStats& stats, double mu);

// Purchase counts over train sessions.
struct PopTables {
  std::map<std::string, std::map<ItemIndex, std::uint64_t>> by_query;
  std::vector<std::uint64_t> by_item;

  static PopTables build(const Dataset& dataset);
  static PopTables build(const Dataset& dataset, std::span<const Session> sessions);

  std::uint64_t query_count(const std::string& query, ItemIndex item) const;

  // query \t item_id \t count, sorted by query then item.
  std::string to_tsv(const Dataset& dataset) const;
};

enum class PopKind { kQueryDependent, kQueryIndependent };

RankedList pop_rank(PopKind kind, const Session& session, const PopTables& tables);

}  // namespace zam
