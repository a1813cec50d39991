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

#include <optional>
#include <span>
#include <vector>

#include "zam/params.hpp"

namespace zam {

// Mean of the token embeddings; the zero vector for an empty query.
Vec mean_word_embedding(const ParamStore& store, std::span<const WordId> tokens);

// q = tanh(W_phi * mean(word_emb[tokens]) + b_phi)
Vec encode_query(const ParamStore& store, std::span<const WordId> tokens);

// Hidden layer of the attention network for one query:
// hidden[a*beta+b] = tanh(sum_c attn_w[a][b][c] * q[c] + attn_b[a][b]).
Vec attention_hidden(const ParamStore& store, std::span<const double> query_vec);

// key[a] = sum_b hidden[a][b] * attn_h[b]. The attention score is linear in
// the item vector: f(q, i) = i . key(q), so f(q, 0) = 0 exactly.
Vec attention_key(const ParamStore& store, std::span<const double> query_vec);

double attention_score(const ParamStore& store, std::span<const double> query_vec,
                       std::span<const double> item_vec);

struct AttentionWeights {
  Vec weights;                        // one per history entry
  std::optional<double> zero_weight;  // set when a zero slot takes part
};

// Max-subtracted softmax over `scores`. With `with_zero_slot` an extra
// competitor with score `zero_score` joins the denominator; its share is
// reported as zero_weight. Empty scores give zero_weight = 1 exactly.
AttentionWeights attention_weights(std::span<const double> scores, bool with_zero_slot,
                                   double zero_score = 0.0);

struct ScoringContext {
  Vec query_vec;
  Vec user_vec;
  Vec attn_weights;
  std::optional<double> zero_weight;  // ZAM only
  std::vector<ItemIndex> history;
  // HEM asked about a user without a learned embedding; scored as QEM.
  bool cold_start = false;
};

// Builds q and u for the store's model kind. `user` is consulted by HEM only;
// `history` by AEM and ZAM only.
ScoringContext build_context(const ParamStore& store, std::span<const WordId> query_tokens,
                             std::span<const ItemIndex> history,
                             std::optional<UserIndex> user = std::nullopt);

// Fills user_vec/attn_weights/zero_weight of `ctx` given ctx.query_vec.
void compute_user_embedding(const ParamStore& store, std::span<const ItemIndex> history,
                            std::optional<UserIndex> user, ScoringContext& ctx);

struct ScoredItem {
  ItemIndex item;
  double score;
  bool operator==(const ScoredItem&) const = default;
};

// Non-increasing score; ties by ascending item index, which is item_id order.
using RankedList = std::vector<ScoredItem>;

RankedList rank_by_scores(std::span<const ItemIndex> candidates, std::span<const double> scores);

// score(i) = i . (q + u)
RankedList score_candidates(const ParamStore& store, const ScoringContext& ctx,
                            std::span<const ItemIndex> candidates);

// Purchase probabilities over a candidate list (max-subtracted softmax).
Vec softmax(std::span<const double> scores);

// User embedding written as a gate on the history matrix:
// u = sigmoid(logsumexp(x) - zero_score) * sum_j softmax(x)_j * i_j.
Vec gated_user_embedding(std::span<const double> scores,
                         std::span<const std::span<const double>> history_vecs,
                         double zero_score = 0.0);

// Max |u_attention - u_gated| for a ZAM context.
double zam_gate_equivalence_check(const ParamStore& store, const ScoringContext& ctx);

}  // namespace zam
