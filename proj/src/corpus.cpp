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

#include "zam/corpus.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "json.hpp"

namespace zam {

namespace {

constexpr std::string_view kDatasetMagic{"ZAMDS\x01", 6};

template <typename F>
void for_each_line(std::string_view text, F&& f) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") != std::string_view::npos) f(line, line_no);
    pos = end + 1;
  }
}

nlohmann::json parse_object(std::string_view line, std::size_t line_no, const char* what) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string(what) + ": " + e.what(), line_no);
  }
  if (!j.is_object()) throw ParseError(std::string(what) + ": expected a JSON object", line_no);
  return j;
}

template <typename T>
T field(const nlohmann::json& j, const char* key, std::size_t line_no, const char* what) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw ParseError(std::string(what) + ": missing field \"" + key + "\"", line_no);
  }
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(std::string(what) + ": field \"" + key + "\" has the wrong type", line_no);
  }
}

struct RawItem {
  std::string item_id;
  std::vector<std::string> words;
};

struct RawSession {
  std::string session_id;
  std::string user_id;
  std::string query;
  Timestamp timestamp;
  std::vector<std::string> purchased;
  std::vector<std::string> candidates;
};

}  // namespace

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary Vocabulary::build(const std::unordered_map<std::string, std::uint64_t>& counts,
                             std::uint64_t min_count) {
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (const auto& [w, c] : counts) {
    if (c >= min_count) kept.emplace_back(w, c);
  }
  std::sort(kept.begin(), kept.end());
  Vocabulary v;
  for (auto& [w, c] : kept) v.add(std::move(w), c);
  return v;
}

void Vocabulary::add(std::string word, std::uint64_t count) {
  const auto id = static_cast<WordId>(words_.size());
  index_.emplace(word, id);
  words_.push_back(std::move(word));
  counts_.push_back(count);
}

std::optional<WordId> Vocabulary::find(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<WordId> Vocabulary::tokenize(std::string_view text) const {
  std::vector<WordId> out;
  for (const auto& w : split_whitespace(lowercase(text))) {
    if (auto id = find(w)) out.push_back(*id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset

std::optional<ItemIndex> Dataset::find_item(const std::string& item_id) const {
  auto it = item_index_.find(item_id);
  if (it == item_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<UserIndex> Dataset::find_user(const std::string& user_id) const {
  auto it = user_index_.find(user_id);
  if (it == user_index_.end()) return std::nullopt;
  return it->second;
}

std::span<const Purchase> Dataset::history_before(std::optional<UserIndex> user,
                                                  Timestamp before) const {
  if (!user || *user < 0 || static_cast<std::size_t>(*user) >= timelines_.size()) return {};
  const auto& tl = timelines_[static_cast<std::size_t>(*user)];
  auto end = std::lower_bound(tl.begin(), tl.end(), before,
                              [](const Purchase& p, Timestamp t) { return p.timestamp < t; });
  return {tl.data(), static_cast<std::size_t>(end - tl.begin())};
}

std::vector<ItemIndex> Dataset::history_items(std::optional<UserIndex> user,
                                              Timestamp before) const {
  std::vector<ItemIndex> out;
  for (const auto& p : history_before(user, before)) out.push_back(p.item);
  return out;
}

std::span<const Session> Dataset::train_sessions() const {
  return {sessions.data(), train_end_};
}

std::span<const Session> Dataset::test_sessions() const {
  return {sessions.data() + train_end_, sessions.size() - train_end_};
}

void Dataset::finalize() {
  item_index_.clear();
  for (std::size_t i = 0; i < items.size(); ++i) {
    item_index_.emplace(items[i].item_id, static_cast<ItemIndex>(i));
  }
  user_index_.clear();
  for (std::size_t u = 0; u < users.size(); ++u) {
    user_index_.emplace(users[u], static_cast<UserIndex>(u));
  }
  timelines_.assign(users.size(), {});
  for (const auto& s : sessions) {
    for (auto item : s.purchased) {
      timelines_[static_cast<std::size_t>(s.user)].push_back({s.timestamp, item});
    }
  }
  if (split_timestamp) {
    auto it = std::lower_bound(sessions.begin(), sessions.end(), *split_timestamp,
                               [](const Session& s, Timestamp t) { return s.timestamp < t; });
    train_end_ = static_cast<std::size_t>(it - sessions.begin());
  } else {
    train_end_ = sessions.size();
  }
}

void Dataset::apply_split(Timestamp ts) {
  std::vector<bool> seen(users.size(), false);
  for (const auto& s : sessions) {
    if (s.timestamp < ts) seen[static_cast<std::size_t>(s.user)] = true;
  }
  std::erase_if(sessions, [&](const Session& s) {
    return s.timestamp >= ts && !seen[static_cast<std::size_t>(s.user)];
  });
  split_timestamp = ts;
  finalize();
}

std::string Dataset::serialize() const {
  BinaryWriter w;
  w.bytes(kDatasetMagic);
  w.u32(static_cast<std::uint32_t>(vocab.size()));
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    w.str(vocab.words()[i]);
    w.u64(vocab.counts()[i]);
  }
  w.u32(static_cast<std::uint32_t>(items.size()));
  for (const auto& item : items) {
    w.str(item.item_id);
    w.u32(static_cast<std::uint32_t>(item.title_tokens.size()));
    for (auto t : item.title_tokens) w.i32(t);
  }
  w.u32(static_cast<std::uint32_t>(users.size()));
  for (const auto& u : users) w.str(u);
  w.u32(static_cast<std::uint32_t>(sessions.size()));
  for (const auto& s : sessions) {
    w.str(s.session_id);
    w.i32(s.user);
    w.str(s.query_text);
    w.u32(static_cast<std::uint32_t>(s.query_tokens.size()));
    for (auto t : s.query_tokens) w.i32(t);
    w.i64(s.timestamp);
    w.u32(static_cast<std::uint32_t>(s.purchased.size()));
    for (auto i : s.purchased) w.i32(i);
    w.u32(static_cast<std::uint32_t>(s.candidates.size()));
    for (auto i : s.candidates) w.i32(i);
  }
  w.u8(split_timestamp ? 1 : 0);
  w.i64(split_timestamp.value_or(0));
  return w.data();
}

Dataset Dataset::deserialize(std::string_view bytes) {
  BinaryReader r(bytes, "dataset");
  if (r.remaining() < kDatasetMagic.size() || r.bytes(kDatasetMagic.size()) != kDatasetMagic) {
    throw ValidationError("dataset: bad magic or unsupported version");
  }
  Dataset d;
  const auto n_words = r.u32();
  for (std::uint32_t i = 0; i < n_words; ++i) {
    auto word = r.str();
    auto count = r.u64();
    d.vocab.add(std::move(word), count);
  }
  auto read_ids = [&](auto& out, std::size_t bound, const char* what) {
    const auto n = r.u32();
    if (n > r.remaining() / 4) r.fail(std::string("bad ") + what + " count");
    out.resize(n);
    for (auto& x : out) {
      x = r.i32();
      if (x < 0 || static_cast<std::size_t>(x) >= bound) r.fail(std::string("out of range ") + what);
    }
  };
  const auto n_items = r.u32();
  d.items.resize(n_items);
  for (auto& item : d.items) {
    item.item_id = r.str();
    read_ids(item.title_tokens, d.vocab.size(), "token");
  }
  const auto n_users = r.u32();
  d.users.resize(n_users);
  for (auto& u : d.users) u = r.str();
  const auto n_sessions = r.u32();
  d.sessions.resize(n_sessions);
  for (auto& s : d.sessions) {
    s.session_id = r.str();
    s.user = r.i32();
    if (s.user < 0 || static_cast<std::size_t>(s.user) >= d.users.size()) r.fail("bad user index");
    s.query_text = r.str();
    read_ids(s.query_tokens, d.vocab.size(), "token");
    s.timestamp = r.i64();
    read_ids(s.purchased, d.items.size(), "item");
    read_ids(s.candidates, d.items.size(), "item");
  }
  const bool has_split = r.u8() != 0;
  const auto ts = r.i64();
  if (has_split) d.split_timestamp = ts;
  if (!r.at_end()) r.fail("trailing bytes");
  d.finalize();
  return d;
}

// ---------------------------------------------------------------------------
// Ingestion

Dataset ingest_text(std::string_view items_jsonl, std::string_view sessions_jsonl,
                    std::uint64_t min_count) {
  if (min_count == 0) throw ConfigError("min_count must be positive");

  std::vector<RawItem> raw_items;
  for_each_line(items_jsonl, [&](std::string_view line, std::size_t n) {
    auto j = parse_object(line, n, "items");
    RawItem item;
    item.item_id = field<std::string>(j, "item_id", n, "items");
    item.words = split_whitespace(lowercase(field<std::string>(j, "title", n, "items")));
    raw_items.push_back(std::move(item));
  });

  std::vector<RawSession> raw_sessions;
  for_each_line(sessions_jsonl, [&](std::string_view line, std::size_t n) {
    auto j = parse_object(line, n, "sessions");
    RawSession s;
    s.session_id = field<std::string>(j, "session_id", n, "sessions");
    s.user_id = field<std::string>(j, "user_id", n, "sessions");
    s.query = normalize_text(field<std::string>(j, "query", n, "sessions"));
    s.timestamp = field<std::int64_t>(j, "timestamp", n, "sessions");
    s.purchased = field<std::vector<std::string>>(j, "purchased", n, "sessions");
    s.candidates = field<std::vector<std::string>>(j, "candidates", n, "sessions");
    raw_sessions.push_back(std::move(s));
  });

  // Title words and query words both count towards min_count.
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& item : raw_items) {
    for (const auto& w : item.words) ++counts[w];
  }
  for (const auto& s : raw_sessions) {
    for (const auto& w : split_whitespace(s.query)) ++counts[w];
  }

  Dataset d;
  d.vocab = Vocabulary::build(counts, min_count);

  std::sort(raw_items.begin(), raw_items.end(),
            [](const RawItem& a, const RawItem& b) { return a.item_id < b.item_id; });
  for (std::size_t i = 0; i + 1 < raw_items.size(); ++i) {
    if (raw_items[i].item_id == raw_items[i + 1].item_id) {
      throw ValidationError("duplicate item_id \"" + raw_items[i].item_id + "\"");
    }
  }
  d.items.reserve(raw_items.size());
  for (const auto& ri : raw_items) {
    Item item{ri.item_id, {}};
    for (const auto& w : ri.words) {
      if (auto id = d.vocab.find(w)) item.title_tokens.push_back(*id);
    }
    d.items.push_back(std::move(item));
  }

  std::set<std::string> user_set;
  for (const auto& s : raw_sessions) user_set.insert(s.user_id);
  d.users.assign(user_set.begin(), user_set.end());
  d.finalize();

  std::sort(raw_sessions.begin(), raw_sessions.end(), [](const RawSession& a, const RawSession& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.session_id < b.session_id;
  });

  std::set<std::string> session_ids;
  d.sessions.reserve(raw_sessions.size());
  for (const auto& rs : raw_sessions) {
    if (!session_ids.insert(rs.session_id).second) {
      throw ValidationError("duplicate session_id \"" + rs.session_id + "\"");
    }
    Session s;
    s.session_id = rs.session_id;
    s.user = *d.find_user(rs.user_id);
    s.query_text = rs.query;
    s.query_tokens = d.vocab.tokenize(rs.query);
    s.timestamp = rs.timestamp;
    auto resolve = [&](const std::string& id) {
      auto idx = d.find_item(id);
      if (!idx) {
        throw ValidationError("session \"" + rs.session_id + "\" references unknown item \"" + id + "\"");
      }
      return *idx;
    };
    for (const auto& id : rs.candidates) s.candidates.push_back(resolve(id));
    if (s.candidates.empty()) {
      throw ValidationError("session \"" + rs.session_id + "\" has no candidates");
    }
    if (rs.purchased.empty()) {
      throw ValidationError("session \"" + rs.session_id + "\" has no purchase");
    }
    std::set<ItemIndex> candidate_set(s.candidates.begin(), s.candidates.end());
    std::set<ItemIndex> purchased;
    for (const auto& id : rs.purchased) {
      auto idx = resolve(id);
      if (!candidate_set.contains(idx)) {
        throw ValidationError("session \"" + rs.session_id + "\": purchased item \"" + id +
                              "\" is not among the candidates");
      }
      purchased.insert(idx);
    }
    s.purchased.assign(purchased.begin(), purchased.end());
    d.sessions.push_back(std::move(s));
  }
  d.finalize();
  return d;
}

Dataset ingest(const std::string& items_path, const std::string& sessions_path,
               std::uint64_t min_count) {
  return ingest_text(read_file(items_path), read_file(sessions_path), min_count);
}

SplitResult split(const Dataset& dataset, Ratio train_ratio) {
  if (train_ratio.den <= 0 || train_ratio.num <= 0 || train_ratio.num >= train_ratio.den) {
    throw ConfigError("train_ratio must lie strictly between 0 and 1");
  }
  const auto& sessions = dataset.sessions;
  std::vector<Timestamp> distinct;
  for (const auto& s : sessions) {
    if (distinct.empty() || distinct.back() != s.timestamp) distinct.push_back(s.timestamp);
  }
  if (distinct.size() < 2) throw ValidationError("split: need at least 2 distinct timestamps");

  const auto total = static_cast<std::int64_t>(sessions.size());
  Timestamp chosen = distinct.back();
  std::int64_t before = 0;
  std::size_t pos = 0;
  for (std::size_t k = 1; k < distinct.size(); ++k) {
    while (pos < sessions.size() && sessions[pos].timestamp < distinct[k]) {
      ++before;
      ++pos;
    }
    if (before * train_ratio.den >= train_ratio.num * total) {
      chosen = distinct[k];
      break;
    }
  }

  SplitResult result;
  result.split_timestamp = chosen;
  std::vector<bool> seen(dataset.users.size(), false);
  for (const auto& s : sessions) {
    if (s.timestamp < chosen) {
      seen[static_cast<std::size_t>(s.user)] = true;
      ++result.train_count;
    } else if (seen[static_cast<std::size_t>(s.user)]) {
      ++result.test_count;
    } else {
      ++result.dropped_test_count;
    }
  }
  return result;
}

Dataset load_dataset(const std::string& path) { return Dataset::deserialize(read_file(path)); }

void save_dataset(const Dataset& dataset, const std::string& path) {
  atomic_write(path, dataset.serialize());
}

}  // namespace zam
