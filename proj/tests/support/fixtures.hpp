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

#include <string>
#include <vector>

#include "json.hpp"
#include "zam/corpus.hpp"
#include "zam/synthgen.hpp"

namespace zam::testing {

inline std::string item_line(const std::string& id, const std::string& title) {
  return nlohmann::json{{"item_id", id}, {"title", title}}.dump() + "\n";
}

inline std::string session_line(const std::string& id, const std::string& user,
                                const std::string& query, Timestamp t,
                                std::vector<std::string> purchased,
                                std::vector<std::string> candidates) {
  return nlohmann::json{{"session_id", id},   {"user_id", user},       {"query", query},
                        {"timestamp", t},     {"purchased", purchased}, {"candidates", candidates}}
             .dump() +
         "\n";
}

// Small generated log, ingested and split 7/8.
inline Dataset small_dataset(std::size_t sessions, std::uint64_t seed = 3,
                             std::vector<MixEntry> mix = {{0.5, 0.0}, {0.5, 0.8}}) {
  GenConfig g;
  g.n_users = std::max<std::size_t>(10, sessions / 10);
  g.n_items = 120;
  g.n_queries = 30;
  g.n_sessions = sessions;
  g.vocab_size = 300;
  g.candidate_size = 20;
  g.n_topics = 5;
  g.n_styles = 4;
  g.personalization_mix = std::move(mix);
  g.seed = seed;
  const auto log = generate(g);
  auto d = ingest_text(log.items_jsonl, log.sessions_jsonl, 1);
  d.apply_split(split(d, {7, 8}).split_timestamp);
  return d;
}

}  // namespace zam::testing
