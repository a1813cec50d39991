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

#include "zam/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "zam/evalkit.hpp"

namespace zam {

double entropy_bits(std::span<const std::uint64_t> counts) {
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log2(p);
  }
  return h;
}

double purchase_entropy(std::span<const Session> sessions) {
  std::map<ItemIndex, std::uint64_t> counts;
  for (const auto& s : sessions) {
    for (auto item : s.purchased) ++counts[item];
  }
  std::vector<std::uint64_t> c;
  for (const auto& [item, n] : counts) c.push_back(n);
  return entropy_bits(c);
}

std::vector<QueryGroup> bucket_query_counts(std::vector<std::pair<std::string, std::size_t>> freq) {
  if (freq.size() < 3) throw ValidationError("query bucketing needs at least 3 distinct queries");
  std::sort(freq.begin(), freq.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
  });
  const std::size_t n = freq.size();
  std::vector<std::size_t> prefix(n + 1, 0);
  for (std::size_t k = 0; k < n; ++k) prefix[k + 1] = prefix[k] + freq[k].second;
  const double total = static_cast<double>(prefix[n]);

  // Groups are [0,i), [i,j), [j,n). For fixed i the best j splits the
  // remainder as evenly as possible, so a binary search suffices.
  auto cost = [&](std::size_t i, std::size_t j) {
    const double a = static_cast<double>(prefix[i]);
    const double b = static_cast<double>(prefix[j] - prefix[i]);
    const double c = total - a - b;
    return a * a + b * b + c * c;
  };
  std::size_t best_i = 1, best_j = 2;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const std::size_t half = prefix[i] + (prefix[n] - prefix[i]) / 2;
    auto it = std::lower_bound(prefix.begin() + static_cast<std::ptrdiff_t>(i + 1),
                               prefix.begin() + static_cast<std::ptrdiff_t>(n), half);
    const auto mid = static_cast<std::size_t>(it - prefix.begin());
    for (std::size_t j : {mid - 1, mid, mid + 1}) {
      if (j <= i || j >= n) continue;
      const double c = cost(i, j);
      if (c < best) {
        best = c;
        best_i = i;
        best_j = j;
      }
    }
  }

  std::vector<QueryGroup> groups(3);
  groups[0].label = "LowFreq";
  groups[1].label = "MedFreq";
  groups[2].label = "HighFreq";
  for (std::size_t k = 0; k < n; ++k) {
    auto& g = groups[k < best_i ? 0 : (k < best_j ? 1 : 2)];
    g.queries.push_back(freq[k].first);
    g.session_count += freq[k].second;
  }
  return groups;
}

std::vector<QueryGroup> bucket_queries(std::span<const Session> sessions) {
  std::map<std::string, std::size_t> counts;
  for (const auto& s : sessions) ++counts[s.query_text];
  return bucket_query_counts({counts.begin(), counts.end()});
}

std::vector<GroupMrr> popularity_mrr(const std::vector<QueryGroup>& groups,
                                     const PopTables& tables,
                                     std::span<const Session> test_sessions) {
  std::map<std::string, std::size_t> group_of;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (const auto& q : groups[g].queries) group_of[q] = g;
  }
  std::vector<GroupMrr> out(groups.size());
  std::vector<double> sums(groups.size(), 0.0);
  for (std::size_t g = 0; g < groups.size(); ++g) out[g].label = groups[g].label;
  for (const auto& s : test_sessions) {
    auto it = group_of.find(s.query_text);
    if (it == group_of.end()) continue;
    const auto ranked = pop_rank(PopKind::kQueryDependent, s, tables);
    sums[it->second] += session_metrics(ranked, s.purchased).rr;
    ++out[it->second].sessions;
  }
  double hi = 0.0;
  for (std::size_t g = 0; g < out.size(); ++g) {
    if (out[g].sessions > 0) out[g].mrr = sums[g] / static_cast<double>(out[g].sessions);
    hi = std::max(hi, out[g].mrr);
  }
  for (auto& g : out) g.normalized = hi > 0.0 ? g.mrr / hi : 0.0;
  return out;
}

nlohmann::ordered_json analysis_report(const Dataset& dataset) {
  if (dataset.sessions.empty()) throw ValidationError("dataset has no sessions");
  std::map<std::string, std::vector<Session>> by_query;
  for (const auto& s : dataset.sessions) by_query[s.query_text].push_back(s);

  nlohmann::ordered_json report;
  auto& table = report["entropy"] = nlohmann::ordered_json::array();
  for (const auto& [query, sessions] : by_query) {
    table.push_back({{"query", query},
                     {"sessions", sessions.size()},
                     {"entropy_bits", purchase_entropy(sessions)}});
  }

  const auto groups = bucket_queries(dataset.sessions);
  const auto tables = PopTables::build(dataset);
  const auto mrr = popularity_mrr(groups, tables, dataset.test_sessions());
  auto& jg = report["groups"] = nlohmann::ordered_json::array();
  for (std::size_t g = 0; g < groups.size(); ++g) {
    double mean_entropy = 0.0;
    for (const auto& q : groups[g].queries) {
      mean_entropy += purchase_entropy(by_query[q]) * static_cast<double>(by_query[q].size());
    }
    mean_entropy /= static_cast<double>(std::max<std::size_t>(groups[g].session_count, 1));
    jg.push_back({{"label", groups[g].label},
                  {"queries", groups[g].queries.size()},
                  {"sessions", groups[g].session_count},
                  {"mean_entropy_bits", mean_entropy},
                  {"test_sessions", mrr[g].sessions},
                  {"popularity_mrr", mrr[g].mrr},
                  {"normalized_popularity_mrr", mrr[g].normalized}});
  }
  return report;
}

}  // namespace zam
