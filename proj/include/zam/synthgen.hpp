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
#include <string>
#include <utility>
#include <vector>

#include "zam/common.hpp"

namespace zam {

struct MixEntry {
  double query_fraction = 1.0;
  double lambda = 0.0;  // weight of the user term in purchase logits
};

struct GenConfig {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::size_t n_queries = 0;
  std::size_t n_sessions = 0;
  std::size_t vocab_size = 2000;
  std::size_t latent_dim = 16;
  std::vector<MixEntry> personalization_mix = {{1.0, 0.0}};
  std::size_t candidate_size = 100;
  std::uint64_t seed = 1;

  // Shape of the simulated market.
  std::size_t n_topics = 20;
  std::size_t n_styles = 8;
  double purchase_scale = 6.0;  // multiplies the purchase logits
  double query_zipf = 0.7;      // query popularity exponent
  double popularity_std = 0.5;  // spread of the query-independent item appeal
  double repeat_search_prob = 0.3;  // chance a session holds two search events
  std::size_t user_topics = 3;      // favourite topics per user
  double topic_affinity = 0.8;      // chance a search stays in a favourite topic
  double style_consistency = 0.5;   // chance a topic preference equals the user's base style

  void validate() const;
};

struct RawEvent {
  std::string user_id;
  std::string query;
  Timestamp timestamp = 0;
  std::vector<std::string> purchased;
  std::vector<std::string> candidates;
};

struct LogSession {
  std::string user_id;
  std::string query;
  Timestamp timestamp = 0;  // first event
  std::vector<std::string> purchased;
  std::vector<std::string> candidates;
};

// Splits each user's event stream into sessions: a new one starts after more
// than 1800 s of inactivity or when the query string changes. Events must be
// time ordered per user.
std::vector<LogSession> sessionize(const std::vector<RawEvent>& events);

struct GroundTruthEntry {
  std::string kind;  // user | item | query
  std::string id;
  Vec vector;
  std::optional<double> lambda;  // queries only
};

struct GeneratedLog {
  std::string items_jsonl;
  std::string sessions_jsonl;
  std::string ground_truth_jsonl;
  std::vector<GroundTruthEntry> ground_truth;

  // Query string -> assigned lambda.
  std::vector<std::pair<std::string, double>> query_lambdas() const;
};

// Deterministic given config.seed.
GeneratedLog generate(const GenConfig& config);

// Writes items.jsonl, sessions.jsonl and ground_truth.jsonl into `dir`.
void write_generated(const GeneratedLog& log, const std::string& dir);

}  // namespace zam
