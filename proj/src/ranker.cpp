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

#include "zam/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace zam {

Vec mean_word_embedding(const ParamStore& store, std::span<const WordId> tokens) {
  Vec m(store.alpha, 0.0);
  if (tokens.empty()) return m;
  for (auto t : tokens) axpy(1.0, store.word_emb.row(static_cast<std::size_t>(t)), m);
  const double inv = 1.0 / static_cast<double>(tokens.size());
  for (auto& x : m) x *= inv;
  return m;
}

Vec encode_query(const ParamStore& store, std::span<const WordId> tokens) {
  const Vec m = mean_word_embedding(store, tokens);
  Vec q(store.alpha);
  for (std::size_t r = 0; r < store.alpha; ++r) {
    q[r] = std::tanh(dot(store.proj_w.row(r), m) + store.proj_b[r]);
  }
  return q;
}

Vec attention_hidden(const ParamStore& store, std::span<const double> query_vec) {
  const std::size_t a = store.alpha, b = store.beta;
  Vec hidden(a * b);
  for (std::size_t k = 0; k < a * b; ++k) {
    std::span<const double> w(store.attn_w.data() + k * a, a);
    hidden[k] = std::tanh(dot(w, query_vec) + store.attn_b[k]);
  }
  return hidden;
}

Vec attention_key(const ParamStore& store, std::span<const double> query_vec) {
  const std::size_t a = store.alpha, b = store.beta;
  const Vec hidden = attention_hidden(store, query_vec);
  Vec key(a, 0.0);
  for (std::size_t i = 0; i < a; ++i) {
    for (std::size_t j = 0; j < b; ++j) key[i] += hidden[i * b + j] * store.attn_h[j];
  }
  return key;
}

double attention_score(const ParamStore& store, std::span<const double> query_vec,
                       std::span<const double> item_vec) {
  return dot(item_vec, attention_key(store, query_vec));
}

AttentionWeights attention_weights(std::span<const double> scores, bool with_zero_slot,
                                   double zero_score) {
  AttentionWeights out;
  out.weights.assign(scores.size(), 0.0);
  if (scores.empty()) {
    if (with_zero_slot) out.zero_weight = 1.0;
    return out;
  }
  double hi = *std::max_element(scores.begin(), scores.end());
  if (with_zero_slot) hi = std::max(hi, zero_score);
  double denom = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    out.weights[j] = std::exp(scores[j] - hi);
    denom += out.weights[j];
  }
  double zero_mass = 0.0;
  if (with_zero_slot) {
    zero_mass = std::exp(zero_score - hi);
    denom += zero_mass;
  }
  for (auto& w : out.weights) w /= denom;
  if (with_zero_slot) out.zero_weight = zero_mass / denom;
  return out;
}

void compute_user_embedding(const ParamStore& store, std::span<const ItemIndex> history,
                            std::optional<UserIndex> user, ScoringContext& ctx) {
  ctx.user_vec.assign(store.alpha, 0.0);
  ctx.attn_weights.clear();
  ctx.zero_weight.reset();
  ctx.history.clear();
  ctx.cold_start = false;
  switch (store.kind) {
    case ModelKind::kQem:
      return;
    case ModelKind::kHem:
      if (user && *user >= 0 && static_cast<std::size_t>(*user) < store.user_emb.rows) {
        auto row = store.user_emb.row(static_cast<std::size_t>(*user));
        ctx.user_vec.assign(row.begin(), row.end());
      } else {
        ctx.cold_start = true;
      }
      return;
    case ModelKind::kAem:
    case ModelKind::kZam: {
      const bool zam = store.kind == ModelKind::kZam;
      ctx.history.assign(history.begin(), history.end());
      const Vec key = attention_key(store, ctx.query_vec);
      Vec scores(history.size());
      for (std::size_t j = 0; j < history.size(); ++j) {
        scores[j] = dot(store.item_emb.row(static_cast<std::size_t>(history[j])), key);
      }
      auto att = attention_weights(scores, zam);
      for (std::size_t j = 0; j < history.size(); ++j) {
        axpy(att.weights[j], store.item_emb.row(static_cast<std::size_t>(history[j])),
             ctx.user_vec);
      }
      ctx.attn_weights = std::move(att.weights);
      ctx.zero_weight = att.zero_weight;
      return;
    }
  }
}

ScoringContext build_context(const ParamStore& store, std::span<const WordId> query_tokens,
                             std::span<const ItemIndex> history, std::optional<UserIndex> user) {
  ScoringContext ctx;
  ctx.query_vec = encode_query(store, query_tokens);
  compute_user_embedding(store, history, user, ctx);
  return ctx;
}

RankedList rank_by_scores(std::span<const ItemIndex> candidates, std::span<const double> scores) {
  RankedList out(candidates.size());
  for (std::size_t k = 0; k < candidates.size(); ++k) out[k] = {candidates[k], scores[k]};
  std::sort(out.begin(), out.end(), [](const ScoredItem& x, const ScoredItem& y) {
    if (x.score != y.score) return x.score > y.score;
    return x.item < y.item;
  });
  return out;
}

RankedList score_candidates(const ParamStore& store, const ScoringContext& ctx,
                            std::span<const ItemIndex> candidates) {
  if (candidates.empty()) throw ValidationError("cannot rank an empty candidate list");
  Vec target = ctx.query_vec;
  axpy(1.0, ctx.user_vec, target);
  Vec scores(candidates.size());
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    scores[k] = dot(store.item_emb.row(static_cast<std::size_t>(candidates[k])), target);
  }
  return rank_by_scores(candidates, scores);
}

Vec softmax(std::span<const double> scores) {
  Vec p(scores.size());
  if (scores.empty()) return p;
  const double hi = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    p[k] = std::exp(scores[k] - hi);
    z += p[k];
  }
  for (auto& x : p) x /= z;
  return p;
}

Vec gated_user_embedding(std::span<const double> scores,
                         std::span<const std::span<const double>> history_vecs,
                         double zero_score) {
  const std::size_t alpha = history_vecs.empty() ? 0 : history_vecs.front().size();
  Vec u(alpha, 0.0);
  if (scores.empty()) return u;
  const double hi = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double x : scores) sum += std::exp(x - hi);
  const double log_total = hi + std::log(sum);  // log exp^+(x)
  const double gate = sigmoid(log_total - zero_score);
  for (std::size_t j = 0; j < scores.size(); ++j) {
    const double share = std::exp(scores[j] - log_total);
    axpy(gate * share, history_vecs[j], u);
  }
  return u;
}

double zam_gate_equivalence_check(const ParamStore& store, const ScoringContext& ctx) {
  const Vec key = attention_key(store, ctx.query_vec);
  Vec scores;
  std::vector<std::span<const double>> vecs;
  for (auto item : ctx.history) {
    vecs.push_back(store.item_emb.row(static_cast<std::size_t>(item)));
    scores.push_back(dot(vecs.back(), key));
  }
  const Vec gated = gated_user_embedding(scores, vecs);
  double worst = 0.0;
  for (std::size_t k = 0; k < ctx.user_vec.size(); ++k) {
    const double g = gated.empty() ? 0.0 : gated[k];
    worst = std::max(worst, std::abs(ctx.user_vec[k] - g));
  }
  return worst;
}

}  // namespace zam
