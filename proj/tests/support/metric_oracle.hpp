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

// Brute-force ranking metrics and a random session generator, shared by the
// unit tests and the acceptance binary.

#include <cmath>
#include <set>
#include <vector>

#include "zam/evalkit.hpp"

namespace zam::testing {

// Evaluates each metric from its definition: positions are scanned
// separately for RR, DCG and Hit, and the ideal DCG places every purchase at
// the top.
inline SessionMetrics reference_metrics(const RankedList& ranked, const std::vector<ItemIndex>& purchased) {
  const std::set<ItemIndex> bought(purchased.begin(), purchased.end());
  SessionMetrics m;
  for (std::size_t pos = 1; pos <= ranked.size(); ++pos) {
    if (bought.count(ranked[pos - 1].item)) {
      m.rr = 1.0 / static_cast<double>(pos);
      break;
    }
  }
  const std::size_t cut = std::min<std::size_t>(10, ranked.size());
  double dcg = 0.0;
  for (std::size_t pos = 1; pos <= cut; ++pos) {
    if (bought.count(ranked[pos - 1].item)) {
      dcg += 1.0 / std::log2(static_cast<double>(pos) + 1.0);
      m.hit10 = 1.0;
    }
  }
  double idcg = 0.0;
  for (std::size_t pos = 1; pos <= std::min(cut, bought.size()); ++pos) {
    idcg += 1.0 / std::log2(static_cast<double>(pos) + 1.0);
  }
  m.ndcg10 = dcg / idcg;
  return m;
}

struct RandomSession {
  RankedList ranked;
  std::vector<ItemIndex> purchased;
};

inline RandomSession random_session(Rng& rng) {
  RandomSession s;
  const std::size_t n = 1 + rng.below(100);
  std::vector<ItemIndex> items(n);
  for (std::size_t k = 0; k < n; ++k) items[k] = static_cast<ItemIndex>(k);
  rng.shuffle(items);
  for (std::size_t k = 0; k < n; ++k) s.ranked.push_back({items[k], static_cast<double>(n - k)});
  const std::size_t bought = 1 + rng.below(std::min<std::size_t>(n, 12));
  std::vector<ItemIndex> pool = items;
  rng.shuffle(pool);
  s.purchased.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(bought));
  std::sort(s.purchased.begin(), s.purchased.end());
  return s;
}

}  // namespace zam::testing
