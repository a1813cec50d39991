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

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "zam/baselines.hpp"
#include "zam/corpus.hpp"

namespace zam {

// Purchase entropy in bits of the sessions of one query. Each session
// increments the count of every item it purchased; counts are renormalized
// so multi-purchase sessions still yield a proper distribution.
double purchase_entropy(std::span<const Session> sessions);
double entropy_bits(std::span<const std::uint64_t> counts);

struct QueryGroup {
  std::string label;  // LowFreq, MedFreq, HighFreq
  std::vector<std::string> queries;
  std::size_t session_count = 0;
};

// Sorts queries by frequency (ties by query string) and cuts the list into
// three non-empty contiguous groups whose session totals have the smallest
// variance.
std::vector<QueryGroup> bucket_query_counts(std::vector<std::pair<std::string, std::size_t>> freq);
std::vector<QueryGroup> bucket_queries(std::span<const Session> sessions);

struct GroupMrr {
  std::string label;
  std::size_t sessions = 0;
  double mrr = 0.0;
  double normalized = 0.0;  // mrr / max over groups
};

// Pop_q reciprocal rank of the best-ranked purchase, averaged per group and
// normalized by the largest group value. Sessions whose query is in no group
// are ignored; groups without sessions report 0.
std::vector<GroupMrr> popularity_mrr(const std::vector<QueryGroup>& groups,
                                     const PopTables& tables,
                                     std::span<const Session> test_sessions);

// Entropy table, frequency groups and per-group normalized popularity MRR.
nlohmann::ordered_json analysis_report(const Dataset& dataset);

}  // namespace zam
