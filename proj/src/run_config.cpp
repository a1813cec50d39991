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

#include "zam/run_config.hpp"

#include <charconv>
#include <cstdio>
#include <set>

namespace zam {

namespace {

struct KeySpec {
  const char* name;
  const char* fallback;  // nullptr: required when used
};

// Defaults follow the published training setup where one exists.
constexpr KeySpec kKeys[] = {
    // shared
    {"seed", "1"},
    {"threads", "1"},
    // gen
    {"n_users", nullptr},
    {"n_items", nullptr},
    {"n_queries", nullptr},
    {"n_sessions", nullptr},
    {"vocab_size", "2000"},
    {"latent_dim", "16"},
    {"personalization_mix", "1:0"},
    {"candidate_size", "100"},
    {"n_topics", "20"},
    {"n_styles", "8"},
    {"purchase_scale", "6"},
    {"query_zipf", "0.7"},
    {"popularity_std", "0.5"},
    {"repeat_search_prob", "0.3"},
    {"user_topics", "3"},
    {"topic_affinity", "0.8"},
    {"style_consistency", "0.5"},
    // prep
    {"min_count", "5"},
    {"train_ratio", "7/8"},
    // train
    {"model", "zam"},
    {"alpha", "100"},
    {"beta", "3"},
    {"learning_rate", "0.5"},
    {"batch_size", "256"},
    {"negatives", "5"},
    {"epochs", "20"},
    {"user_text", "history"},
    {"checkpoint_every", "0"},
    // eval
    {"reference", "QEM"},
    {"mu", "50"},
    {"significance", "0.01"},
    {"baselines", "true"},
    {"buckets", "freq"},
};

const KeySpec* find_key(const std::string& key) {
  for (const auto& k : kKeys) {
    if (key == k.name) return &k;
  }
  return nullptr;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw ConfigError("key " + key + ": not a number: '" + v + "'");
  return out;
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& k : kKeys) {
    if (k.fallback) values_[k.name] = k.fallback;
  }
}

bool RunConfig::is_known(const std::string& key) { return find_key(key) != nullptr; }

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!is_known(key)) throw ConfigError("unknown config key: " + key);
  values_[key] = value;
}

void RunConfig::merge_text(std::string_view text) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", line_no);
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (!is_known(key)) throw ConfigError("unknown config key: " + key + " (line " + std::to_string(line_no) + ")");
    values_[key] = trim(std::string_view(line).substr(eq + 1));
  }
}

void RunConfig::merge_file(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  merge_text(text);
}

bool RunConfig::has(const std::string& key) const { return values_.count(key) > 0; }

const std::string& RunConfig::get(const std::string& key) const {
  if (!is_known(key)) throw ConfigError("unknown config key: " + key);
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing required key: " + key);
  return it->second;
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  const auto& v = get(key);
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) {
    throw ConfigError("key " + key + ": not a non-negative integer: '" + v + "'");
  }
  return out;
}

double RunConfig::get_double(const std::string& key) const { return to_double(key, get(key)); }

std::vector<MixEntry> parse_mix(std::string_view text) {
  std::vector<MixEntry> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    const std::string part = trim(text.substr(pos, comma - pos));
    pos = comma + 1;
    const auto colon = part.find(':');
    if (colon == std::string::npos) {
      throw ConfigError("personalization_mix entries are fraction:lambda, got '" + part + "'");
    }
    out.push_back({to_double("personalization_mix", trim(std::string_view(part).substr(0, colon))),
                   to_double("personalization_mix", trim(std::string_view(part).substr(colon + 1)))});
  }
  return out;
}

std::string format_mix(const std::vector<MixEntry>& mix) {
  std::string out;
  char buf[64];
  for (const auto& m : mix) {
    std::snprintf(buf, sizeof buf, "%.17g:%.17g", m.query_fraction, m.lambda);
    if (!out.empty()) out.push_back(',');
    out += buf;
  }
  return out;
}

GenConfig RunConfig::gen_config() const {
  GenConfig c;
  c.n_users = get_u64("n_users");
  c.n_items = get_u64("n_items");
  c.n_queries = get_u64("n_queries");
  c.n_sessions = get_u64("n_sessions");
  c.vocab_size = get_u64("vocab_size");
  c.latent_dim = get_u64("latent_dim");
  c.personalization_mix = parse_mix(get("personalization_mix"));
  c.candidate_size = get_u64("candidate_size");
  c.seed = get_u64("seed");
  c.n_topics = get_u64("n_topics");
  c.n_styles = get_u64("n_styles");
  c.purchase_scale = get_double("purchase_scale");
  c.query_zipf = get_double("query_zipf");
  c.popularity_std = get_double("popularity_std");
  c.repeat_search_prob = get_double("repeat_search_prob");
  c.user_topics = get_u64("user_topics");
  c.topic_affinity = get_double("topic_affinity");
  c.style_consistency = get_double("style_consistency");
  c.validate();
  return c;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig c;
  c.kind = parse_model_kind(get("model"));
  c.alpha = get_u64("alpha");
  c.beta = get_u64("beta");
  c.learning_rate = get_double("learning_rate");
  c.batch_size = get_u64("batch_size");
  c.negatives = get_u64("negatives");
  c.epochs = get_u64("epochs");
  c.seed = get_u64("seed");
  const auto& ut = get("user_text");
  if (ut == "history") {
    c.user_text = UserTextSource::kHistory;
  } else if (ut == "train_period") {
    c.user_text = UserTextSource::kTrainPeriod;
  } else {
    throw ConfigError("user_text must be history or train_period, got '" + ut + "'");
  }
  c.validate();
  return c;
}

EvalOptions RunConfig::eval_options() const {
  EvalOptions o;
  o.reference = get("reference");
  o.mu = get_double("mu");
  o.significance = get_double("significance");
  const auto& b = get("baselines");
  if (b != "true" && b != "false") throw ConfigError("baselines must be true or false");
  o.baselines = b == "true";
  o.threads = get_u64("threads");
  if (o.threads == 0) throw ConfigError("threads must be positive");
  if (!(o.mu > 0.0)) throw ConfigError("mu must be positive");
  return o;
}

Ratio RunConfig::train_ratio() const {
  const auto& v = get("train_ratio");
  const auto slash = v.find('/');
  Ratio r;
  auto parse = [&](std::string_view s) {
    std::int64_t out = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || p != s.data() + s.size() || out <= 0) {
      throw ConfigError("train_ratio must look like 7/8, got '" + v + "'");
    }
    return out;
  };
  if (slash == std::string::npos) throw ConfigError("train_ratio must look like 7/8, got '" + v + "'");
  r.num = parse(std::string_view(v).substr(0, slash));
  r.den = parse(std::string_view(v).substr(slash + 1));
  if (r.num >= r.den) throw ConfigError("train_ratio must be below 1");
  return r;
}

std::string RunConfig::resolved() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

}  // namespace zam
