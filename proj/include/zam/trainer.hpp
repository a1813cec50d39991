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

#include <functional>
#include <span>
#include <vector>

#include "zam/corpus.hpp"
#include "zam/params.hpp"

namespace zam {

// Walker alias table over a discrete distribution.
class AliasTable {
 public:
  AliasTable() = default;
  // Weights must be non-negative with a positive sum.
  explicit AliasTable(std::span<const double> weights);

  std::int32_t sample(Rng& rng) const;
  const Vec& probabilities() const { return probs_; }
  std::size_t size() const { return probs_.size(); }

 private:
  Vec probs_;
  Vec cutoff_;
  std::vector<std::int32_t> alias_;
};

// Unigram counts raised to the 3/4 power.
AliasTable word_noise_table(std::span<const std::uint64_t> counts);

// k i.i.d. draws, redrawing any that land in `exclude`.
std::vector<std::int32_t> sample_negatives(const AliasTable& table, std::size_t k,
                                           std::span<const std::int32_t> exclude, Rng& rng);
// Uniform over `support`.
std::vector<std::int32_t> sample_negatives(std::span<const std::int32_t> support, std::size_t k,
                                           std::span<const std::int32_t> exclude, Rng& rng);

enum class UserTextSource {
  kHistory,      // titles of purchases strictly before the session
  kTrainPeriod,  // titles of every train-period purchase of the user
};

struct TrainConfig {
  ModelKind kind = ModelKind::kZam;
  std::size_t alpha = 100;
  std::size_t beta = 3;
  double learning_rate = 0.5;
  std::size_t batch_size = 256;
  std::size_t negatives = 5;
  std::size_t epochs = 20;
  std::uint64_t seed = 1;
  UserTextSource user_text = UserTextSource::kHistory;

  void validate() const;
};

struct TrainExample {
  UserIndex user = 0;
  std::vector<WordId> query_tokens;
  ItemIndex item = 0;
  std::vector<ItemIndex> history;
  std::vector<ItemIndex> candidates;
  std::vector<ItemIndex> negative_items;
  std::vector<WordId> title_words;
  std::vector<std::vector<WordId>> title_negatives;  // one list per title word
  // HEM only.
  std::vector<WordId> user_words;
  std::vector<std::vector<WordId>> user_negatives;
};

struct NoiseTables {
  AliasTable words;
};

// Assembles the example for one (session, purchased item) pair and draws its
// negatives.
TrainExample make_example(const Dataset& dataset, const Session& session, ItemIndex item,
                          const TrainConfig& config, const NoiseTables& noise, Rng& rng);

// Negative-sampled log likelihood of one example (<= 0).
double log_likelihood(const TrainExample& example, const ParamStore& store);

// d log_likelihood / d theta for every parameter the example touches, added
// into `grads`. Returns the log likelihood.
double accumulate_gradients(const TrainExample& example, const ParamStore& store,
                            Gradients& grads);
Gradients gradients(const TrainExample& example, const ParamStore& store);

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;  // mean negative log likelihood per example
  double wall_seconds = 0.0;
};

struct TrainResult {
  ParamStore params;
  std::vector<EpochStats> trace;
};

using EpochCallback = std::function<void(const EpochStats&, const ParamStore&)>;

// Single-threaded and fully determined by config.seed. Uses the dataset's
// train sessions only.
TrainResult train(const Dataset& dataset, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

}  // namespace zam
