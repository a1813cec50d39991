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

#include "zam/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "zam/ranker.hpp"

namespace zam {

// ---------------------------------------------------------------------------
// Sampling

AliasTable::AliasTable(std::span<const double> weights) {
  const std::size_t n = weights.size();
  if (n == 0) throw SamplingError("alias table over an empty support");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw SamplingError("alias table: invalid weight");
    total += w;
  }
  if (total <= 0.0) throw SamplingError("alias table: weights sum to zero");

  probs_.resize(n);
  cutoff_.resize(n);
  alias_.assign(n, 0);
  std::vector<std::int32_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    probs_[i] = weights[i] / total;
    cutoff_[i] = probs_[i] * static_cast<double>(n);
    (cutoff_[i] < 1.0 ? small : large).push_back(static_cast<std::int32_t>(i));
  }
  while (!small.empty() && !large.empty()) {
    const auto s = small.back();
    small.pop_back();
    const auto l = large.back();
    alias_[static_cast<std::size_t>(s)] = l;
    cutoff_[static_cast<std::size_t>(l)] -= 1.0 - cutoff_[static_cast<std::size_t>(s)];
    if (cutoff_[static_cast<std::size_t>(l)] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (auto i : large) cutoff_[static_cast<std::size_t>(i)] = 1.0;
  for (auto i : small) cutoff_[static_cast<std::size_t>(i)] = 1.0;
}

std::int32_t AliasTable::sample(Rng& rng) const {
  const auto slot = rng.below(probs_.size());
  return rng.uniform() < cutoff_[slot] ? static_cast<std::int32_t>(slot) : alias_[slot];
}

AliasTable word_noise_table(std::span<const std::uint64_t> counts) {
  Vec w(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) w[i] = std::pow(static_cast<double>(counts[i]), 0.75);
  return AliasTable(w);
}

namespace {
bool contains(std::span<const std::int32_t> v, std::int32_t x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}
}  // namespace

std::vector<std::int32_t> sample_negatives(const AliasTable& table, std::size_t k,
                                           std::span<const std::int32_t> exclude, Rng& rng) {
  if (k == 0) return {};
  const auto& p = table.probabilities();
  bool open = false;
  for (std::size_t i = 0; i < p.size() && !open; ++i) {
    open = p[i] > 0.0 && !contains(exclude, static_cast<std::int32_t>(i));
  }
  if (!open) throw SamplingError("noise support is contained in the exclude set");
  std::vector<std::int32_t> out;
  out.reserve(k);
  while (out.size() < k) {
    const auto x = table.sample(rng);
    if (!contains(exclude, x)) out.push_back(x);
  }
  return out;
}

std::vector<std::int32_t> sample_negatives(std::span<const std::int32_t> support, std::size_t k,
                                           std::span<const std::int32_t> exclude, Rng& rng) {
  if (k == 0) return {};
  const bool open = std::any_of(support.begin(), support.end(),
                                [&](std::int32_t x) { return !contains(exclude, x); });
  if (!open) throw SamplingError("noise support is contained in the exclude set");
  std::vector<std::int32_t> out;
  out.reserve(k);
  while (out.size() < k) {
    const auto x = support[rng.below(support.size())];
    if (!contains(exclude, x)) out.push_back(x);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Examples

void TrainConfig::validate() const {
  if (alpha == 0) throw ConfigError("alpha must be positive");
  if (beta == 0) throw ConfigError("beta must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (epochs == 0) throw ConfigError("epochs must be positive");
}

TrainExample make_example(const Dataset& dataset, const Session& session, ItemIndex item,
                          const TrainConfig& config, const NoiseTables& noise, Rng& rng) {
  TrainExample ex;
  ex.user = session.user;
  ex.query_tokens = session.query_tokens;
  ex.item = item;
  ex.candidates = session.candidates;
  if (uses_attention(config.kind)) ex.history = dataset.history_items(session.user, session.timestamp);

  const bool has_open_candidate =
      std::any_of(session.candidates.begin(), session.candidates.end(), [&](ItemIndex c) {
        return !std::binary_search(session.purchased.begin(), session.purchased.end(), c);
      });
  if (has_open_candidate) {
    ex.negative_items = sample_negatives(std::span<const std::int32_t>(session.candidates),
                                         config.negatives, session.purchased, rng);
  }

  auto draw_words = [&](std::span<const WordId> words, std::vector<std::vector<WordId>>& negs) {
    negs.clear();
    for (auto w : words) {
      const std::int32_t self[] = {w};
      negs.push_back(noise.words.size() > 1
                         ? sample_negatives(noise.words, config.negatives, self, rng)
                         : std::vector<WordId>{});
    }
  };
  ex.title_words = dataset.items[static_cast<std::size_t>(item)].title_tokens;
  draw_words(ex.title_words, ex.title_negatives);

  if (config.kind == ModelKind::kHem) {
    const Timestamp cutoff = config.user_text == UserTextSource::kHistory
                                 ? session.timestamp
                                 : dataset.split_timestamp.value_or(std::numeric_limits<Timestamp>::max());
    for (const auto& p : dataset.history_before(session.user, cutoff)) {
      const auto& t = dataset.items[static_cast<std::size_t>(p.item)].title_tokens;
      ex.user_words.insert(ex.user_words.end(), t.begin(), t.end());
    }
    draw_words(ex.user_words, ex.user_negatives);
  }
  return ex;
}

// ---------------------------------------------------------------------------
// Objective and gradients

namespace {

struct Forward {
  Vec mean;    // mean query word embedding
  Vec query;   // q
  Vec hidden;  // attention hidden layer, alpha*beta
  Vec key;     // f(q, i) = i . key
  AttentionWeights attention;
  Vec user;    // u
  Vec target;  // q + u
  bool hem_user = false;
};

Forward forward(const TrainExample& ex, const ParamStore& store) {
  Forward f;
  f.mean = mean_word_embedding(store, ex.query_tokens);
  f.query.resize(store.alpha);
  for (std::size_t r = 0; r < store.alpha; ++r) {
    f.query[r] = std::tanh(dot(store.proj_w.row(r), f.mean) + store.proj_b[r]);
  }
  f.user.assign(store.alpha, 0.0);
  if (store.kind == ModelKind::kHem) {
    f.hem_user = ex.user >= 0 && static_cast<std::size_t>(ex.user) < store.user_emb.rows;
    if (f.hem_user) {
      auto row = store.user_emb.row(static_cast<std::size_t>(ex.user));
      f.user.assign(row.begin(), row.end());
    }
  } else if (uses_attention(store.kind) && !ex.history.empty()) {
    f.hidden = attention_hidden(store, f.query);
    f.key.assign(store.alpha, 0.0);
    for (std::size_t a = 0; a < store.alpha; ++a) {
      for (std::size_t b = 0; b < store.beta; ++b) {
        f.key[a] += f.hidden[a * store.beta + b] * store.attn_h[b];
      }
    }
    Vec scores(ex.history.size());
    for (std::size_t j = 0; j < ex.history.size(); ++j) {
      scores[j] = dot(store.item_emb.row(static_cast<std::size_t>(ex.history[j])), f.key);
    }
    f.attention = attention_weights(scores, store.kind == ModelKind::kZam);
    for (std::size_t j = 0; j < ex.history.size(); ++j) {
      axpy(f.attention.weights[j], store.item_emb.row(static_cast<std::size_t>(ex.history[j])),
           f.user);
    }
  }
  f.target = f.query;
  axpy(1.0, f.user, f.target);
  return f;
}

// Skip-gram style text term: sum_w [log s(w.v) + sum_neg log s(-w'.v)].
// Gradients go to the word rows and, via `dv`, to whatever produced v.
double text_term(const ParamStore& store, std::span<const WordId> words,
                 const std::vector<std::vector<WordId>>& negatives, std::span<const double> v,
                 Gradients* grads, Vec* dv) {
  double ll = 0.0;
  const std::size_t a = store.alpha;
  for (std::size_t n = 0; n < words.size(); ++n) {
    auto w = store.word_emb.row(static_cast<std::size_t>(words[n]));
    const double s = dot(w, v);
    ll += log_sigmoid(s);
    if (grads) {
      const double c = 1.0 - sigmoid(s);
      axpy(c, v, grads->word(words[n], a));
      axpy(c, w, *dv);
    }
    for (auto neg : negatives[n]) {
      auto wn = store.word_emb.row(static_cast<std::size_t>(neg));
      const double sn = dot(wn, v);
      ll += log_sigmoid(-sn);
      if (grads) {
        const double c = -sigmoid(sn);
        axpy(c, v, grads->word(neg, a));
        axpy(c, wn, *dv);
      }
    }
  }
  return ll;
}

double evaluate(const TrainExample& ex, const ParamStore& store, Gradients* grads) {
  const std::size_t a = store.alpha;
  const std::size_t b = store.beta;
  const Forward f = forward(ex, store);
  auto item_vec = store.item_emb.row(static_cast<std::size_t>(ex.item));

  double ll = 0.0;
  Vec d_target(a, 0.0);
  Vec d_item(a, 0.0);

  // Purchase term against sampled candidate negatives.
  {
    const double s = dot(item_vec, f.target);
    ll += log_sigmoid(s);
    if (grads) {
      const double c = 1.0 - sigmoid(s);
      axpy(c, f.target, d_item);
      axpy(c, item_vec, d_target);
    }
    for (auto neg : ex.negative_items) {
      auto nv = store.item_emb.row(static_cast<std::size_t>(neg));
      const double sn = dot(nv, f.target);
      ll += log_sigmoid(-sn);
      if (grads) {
        const double c = -sigmoid(sn);
        axpy(c, f.target, grads->item(neg, a));
        axpy(c, nv, d_target);
      }
    }
  }

  // Item title likelihood.
  ll += text_term(store, ex.title_words, ex.title_negatives, item_vec, grads, &d_item);

  // HEM user text likelihood.
  Vec d_user = d_target;
  if (store.kind == ModelKind::kHem && f.hem_user) {
    ll += text_term(store, ex.user_words, ex.user_negatives, f.user, grads, &d_user);
  }

  if (!grads) return ll;

  axpy(1.0, d_item, grads->item(ex.item, a));
  Vec d_query = d_target;

  if (store.kind == ModelKind::kHem && f.hem_user) {
    axpy(1.0, d_user, grads->user(ex.user, a));
  } else if (uses_attention(store.kind) && !ex.history.empty()) {
    // u = sum_j w_j i_j with w = softmax over x_j = i_j . key (plus the zero
    // slot for ZAM). Both cases give du/dx_j = w_j (i_j - u).
    Vec d_key(a, 0.0);
    for (std::size_t j = 0; j < ex.history.size(); ++j) {
      const auto h = ex.history[j];
      auto hv = store.item_emb.row(static_cast<std::size_t>(h));
      const double w = f.attention.weights[j];
      double dx = 0.0;
      for (std::size_t k = 0; k < a; ++k) dx += (hv[k] - f.user[k]) * d_user[k];
      dx *= w;
      Vec& gh = grads->item(h, a);
      axpy(w, d_user, gh);
      axpy(dx, f.key, gh);
      axpy(dx, hv, d_key);
    }
    if (grads->attn_h.empty()) grads->attn_h.assign(b, 0.0);
    if (grads->attn_b.empty()) grads->attn_b.assign(a * b, 0.0);
    if (grads->attn_w.empty()) grads->attn_w.assign(a * b * a, 0.0);
    for (std::size_t i = 0; i < a; ++i) {
      for (std::size_t j = 0; j < b; ++j) {
        const std::size_t ij = i * b + j;
        const double hdn = f.hidden[ij];
        grads->attn_h[j] += d_key[i] * hdn;
        const double d_pre = d_key[i] * store.attn_h[j] * (1.0 - hdn * hdn);
        grads->attn_b[ij] += d_pre;
        const double* w_row = store.attn_w.data() + ij * a;
        double* gw_row = grads->attn_w.data() + ij * a;
        for (std::size_t c = 0; c < a; ++c) {
          gw_row[c] += d_pre * f.query[c];
          d_query[c] += d_pre * w_row[c];
        }
      }
    }
  }

  // Query encoder.
  if (grads->proj_w.empty()) grads->proj_w.assign(a * a, 0.0);
  if (grads->proj_b.empty()) grads->proj_b.assign(a, 0.0);
  Vec d_mean(a, 0.0);
  for (std::size_t r = 0; r < a; ++r) {
    const double dz = d_query[r] * (1.0 - f.query[r] * f.query[r]);
    grads->proj_b[r] += dz;
    auto w_row = store.proj_w.row(r);
    for (std::size_t c = 0; c < a; ++c) {
      grads->proj_w[r * a + c] += dz * f.mean[c];
      d_mean[c] += dz * w_row[c];
    }
  }
  if (!ex.query_tokens.empty()) {
    const double inv = 1.0 / static_cast<double>(ex.query_tokens.size());
    for (auto t : ex.query_tokens) axpy(inv, d_mean, grads->word(t, a));
  }
  return ll;
}

}  // namespace

double log_likelihood(const TrainExample& example, const ParamStore& store) {
  return evaluate(example, store, nullptr);
}

double accumulate_gradients(const TrainExample& example, const ParamStore& store,
                            Gradients& grads) {
  return evaluate(example, store, &grads);
}

Gradients gradients(const TrainExample& example, const ParamStore& store) {
  Gradients g;
  accumulate_gradients(example, store, g);
  return g;
}

// ---------------------------------------------------------------------------
// Training loop

TrainResult train(const Dataset& dataset, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  ParamShapes shapes;
  shapes.kind = config.kind;
  shapes.alpha = config.alpha;
  shapes.beta = config.beta;
  shapes.vocab_size = dataset.vocab.size();
  shapes.item_count = dataset.items.size();
  shapes.user_count = dataset.users.size();

  TrainResult result;
  result.params = init_params(shapes, config.seed);
  ParamStore& store = result.params;
  AdagradState adagrad(store);
  NoiseTables noise{word_noise_table(dataset.vocab.counts())};

  struct Slot {
    std::size_t session;
    ItemIndex item;
  };
  std::vector<Slot> slots;
  const auto train_sessions = dataset.train_sessions();
  for (std::size_t s = 0; s < train_sessions.size(); ++s) {
    for (auto item : train_sessions[s].purchased) slots.push_back({s, item});
  }
  if (slots.empty()) throw ValidationError("no training sessions");

  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    rng.shuffle(slots);
    double total = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < slots.size(); start += config.batch_size, ++batch_no) {
      const std::size_t end = std::min(slots.size(), start + config.batch_size);
      Gradients batch;
      double batch_ll = 0.0;
      for (std::size_t n = start; n < end; ++n) {
        const auto ex = make_example(dataset, train_sessions[slots[n].session], slots[n].item,
                                     config, noise, rng);
        batch_ll += accumulate_gradients(ex, store, batch);
      }
      if (!std::isfinite(batch_ll)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << ", batch " << batch_no;
        if (auto bad = first_non_finite(store)) msg << "; offending parameter " << *bad;
        throw TrainingError(msg.str());
      }
      adagrad.apply(store, batch, config.learning_rate);
      if (auto bad = first_non_finite(store)) {
        std::ostringstream msg;
        msg << "non-finite parameter " << *bad << " after epoch " << epoch << ", batch " << batch_no;
        throw TrainingError(msg.str());
      }
      total += batch_ll;
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = -total / static_cast<double>(slots.size());
    stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.trace.push_back(stats);
    if (on_epoch) on_epoch(stats, store);
  }
  return result;
}

}  // namespace zam
