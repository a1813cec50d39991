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
#include <utility>
#include <vector>

#include "json.hpp"
#include "zam/corpus.hpp"
#include "zam/params.hpp"
#include "zam/ranker.hpp"

namespace zam {

struct SessionMetrics {
  double rr = 0.0;
  double ndcg10 = 0.0;
  double hit10 = 0.0;
  bool operator==(const SessionMetrics&) const = default;
};

// Binary-gain metrics. NDCG@10 discounts rank r by 1/log2(r+1) and normalizes
// by the ideal DCG over min(|purchased|, 10) positions. Lists shorter than
// ten use the available ranks.
SessionMetrics session_metrics(const RankedList& ranked, std::span<const ItemIndex> purchased);

// Two-sided paired t-test p-value. With zero variance of the differences,
// p = 1 if their mean is zero and 0 otherwise.
double paired_ttest(std::span<const double> a, std::span<const double> b);

// Spearman rank correlation with average ranks for ties. NaN when either side
// is constant.
double spearman(std::span<const double> x, std::span<const double> y);

struct SessionEval {
  std::string session_id;
  std::string query;
  std::string freq_bucket;
  std::optional<double> zero_weight;
  std::vector<SessionMetrics> metrics;  // aligned with EvalReport::models
};

struct AggregateRow {
  std::string model;
  SessionMetrics mean;
  // (model - reference) / reference * 100 on the aggregate means.
  SessionMetrics improvement;
  SessionMetrics p_value;  // paired t-test against the reference
};

struct BucketRow {
  std::string label;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  std::vector<std::optional<double>> mean_rr;      // per model
  std::vector<std::optional<double>> improvement;  // MRR % vs reference
};

struct EvalReport {
  std::vector<std::string> models;
  std::string reference;
  double significance = 0.01;
  std::vector<SessionEval> sessions;
  std::vector<AggregateRow> rows;
  std::vector<BucketRow> freq_buckets;
  std::vector<BucketRow> zweight_buckets;

  std::size_t model_index(const std::string& name) const;
  // Per-session metric column of one model.
  Vec column(const std::string& model, double SessionMetrics::*field) const;
};

struct NamedModel {
  std::string name;
  ParamStore params;
};

struct EvalOptions {
  std::string reference = "QEM";
  double mu = 50.0;  // QL Dirichlet prior
  double significance = 0.01;
  bool baselines = true;
  std::size_t threads = 1;
};

// Runs QL, Pop_q, Pop_i (when enabled) and every model over the test
// sessions, with histories cut at each session's timestamp.
EvalReport evaluate(const Dataset& dataset, const std::vector<NamedModel>& models,
                    const EvalOptions& options = {});

// Ten equal-width bins over Z_uq in [0, 1], the last one right-closed.
std::size_t zero_weight_bin(double z);
std::vector<BucketRow> zero_weight_buckets(const EvalReport& report);
// Three query-frequency groups.
std::vector<BucketRow> frequency_buckets(const EvalReport& report);

nlohmann::ordered_json report_to_json(const EvalReport& report);
// One row per model, MRR / NDCG@10 / Hit@10 with improvements.
std::string report_to_tsv(const EvalReport& report);
// One bucket per line.
std::string buckets_to_jsonl(const std::vector<BucketRow>& buckets,
                             const std::vector<std::string>& models);

}  // namespace zam
