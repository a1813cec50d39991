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
#include <string>
#include <unordered_map>
#include <vector>

#include "zam/common.hpp"

namespace zam {

struct Item {
  std::string item_id;
  std::vector<WordId> title_tokens;
};

struct Session {
  std::string session_id;
  UserIndex user = 0;
  // Normalized query string; Pop_q keys on this.
  std::string query_text;
  std::vector<WordId> query_tokens;
  Timestamp timestamp = 0;
  // Sorted, unique. Subset of candidates.
  std::vector<ItemIndex> purchased;
  // Log order.
  std::vector<ItemIndex> candidates;
};

struct Purchase {
  Timestamp timestamp;
  ItemIndex item;
};

class Vocabulary {
 public:
  Vocabulary() = default;
  // Keeps words with count >= min_count; ids are assigned in lexicographic
  // word order.
  static Vocabulary build(const std::unordered_map<std::string, std::uint64_t>& counts,
                          std::uint64_t min_count);

  std::optional<WordId> find(const std::string& word) const;
  const std::string& word(WordId id) const { return words_.at(static_cast<std::size_t>(id)); }
  std::uint64_t count(WordId id) const { return counts_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  const std::vector<std::string>& words() const { return words_; }

  // Token ids of the in-vocabulary words of `text`, lowercased.
  std::vector<WordId> tokenize(std::string_view text) const;

  void add(std::string word, std::uint64_t count);

 private:
  std::vector<std::string> words_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, WordId> index_;
};

struct Ratio {
  std::int64_t num = 7;
  std::int64_t den = 8;
};

struct SplitResult {
  Timestamp split_timestamp = 0;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  // Test sessions of users never seen before the split.
  std::size_t dropped_test_count = 0;
};

// Immutable once built: ingest/apply_split are the only mutators.
class Dataset {
 public:
  Vocabulary vocab;
  std::vector<Item> items;  // sorted by item_id
  std::vector<std::string> users;  // sorted
  std::vector<Session> sessions;  // sorted by (timestamp, session_id)
  std::optional<Timestamp> split_timestamp;

  std::optional<ItemIndex> find_item(const std::string& item_id) const;
  std::optional<UserIndex> find_user(const std::string& user_id) const;

  // Purchases of `user` strictly before `before`, time ordered. Unknown users
  // (nullopt) get an empty slice.
  std::span<const Purchase> history_before(std::optional<UserIndex> user,
                                           Timestamp before) const;
  std::vector<ItemIndex> history_items(std::optional<UserIndex> user, Timestamp before) const;

  // Sessions with timestamp < split_timestamp, and the rest. Without a split
  // every session is train.
  std::span<const Session> train_sessions() const;
  std::span<const Session> test_sessions() const;

  // Sets the split point and drops test sessions whose user has no train
  // session.
  void apply_split(Timestamp split_timestamp);

  // Rebuilds indexes and per-user timelines; call after mutating fields.
  void finalize();

  std::string serialize() const;
  static Dataset deserialize(std::string_view bytes);

 private:
  std::unordered_map<std::string, ItemIndex> item_index_;
  std::unordered_map<std::string, UserIndex> user_index_;
  std::vector<std::vector<Purchase>> timelines_;
  std::size_t train_end_ = 0;
};

Dataset ingest(const std::string& items_path, const std::string& sessions_path,
               std::uint64_t min_count);
// Same as ingest(), over in-memory JSONL text.
Dataset ingest_text(std::string_view items_jsonl, std::string_view sessions_jsonl,
                    std::uint64_t min_count);

// Smallest timestamp T such that the fraction of sessions strictly before T is
// at least `train_ratio`; whole timestamp groups stay on one side. Falls back
// to the last distinct timestamp so the test side is never empty.
SplitResult split(const Dataset& dataset, Ratio train_ratio);

Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& dataset, const std::string& path);

}  // namespace zam
