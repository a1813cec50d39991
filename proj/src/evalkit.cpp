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

#include "zam/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "zam/analysis.hpp"
#include "zam/baselines.hpp"

namespace zam {

SessionMetrics session_metrics(const RankedList& ranked, std::span<const ItemIndex> purchased) {
  if (purchased.empty()) throw ValidationError("session_metrics: empty purchased set");
  auto is_purchased = [&](ItemIndex item) {
    return std::find(purchased.begin(), purchased.end(), item) != purchased.end();
  };
  SessionMetrics m;
  double dcg = 0.0;
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    if (!is_purchased(ranked[r].item)) continue;
    if (m.rr == 0.0) m.rr = 1.0 / static_cast<double>(r + 1);
    if (r < 10) {
      dcg += 1.0 / std::log2(static_cast<double>(r + 2));
      m.hit10 = 1.0;
    }
  }
  double idcg = 0.0;
  const std::size_t ideal = std::min<std::size_t>({purchased.size(), 10, ranked.size()});
  for (std::size_t r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r + 2));
  m.ndcg10 = idcg > 0.0 ? dcg / idcg : 0.0;
  return m;
}

double paired_ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw ValidationError("paired_ttest: need two equal-length samples of size >= 2");
  }
  const std::size_t n = a.size();
  double mean = 0.0;
  for (std::size_t k = 0; k < n; ++k) mean += a[k] - b[k];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = a[k] - b[k] - mean;
    ss += d * d;
  }
  const double var = ss / static_cast<double>(n - 1);
  if (var <= 0.0) return mean == 0.0 ? 1.0 : 0.0;
  const double t = mean / std::sqrt(var / static_cast<double>(n));
  boost::math::students_t dist(static_cast<double>(n - 1));
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

namespace {
Vec average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  Vec ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}
}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("spearman: size mismatch");
  const Vec rx = average_ranks(x), ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (rx[k] - mx) * (ry[k] - my);
    sxx += (rx[k] - mx) * (rx[k] - mx);
    syy += (ry[k] - my) * (ry[k] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nan("");
  return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------
// Report

std::size_t EvalReport::model_index(const std::string& name) const {
  for (std::size_t k = 0; k < models.size(); ++k) {
    if (models[k] == name) return k;
  }
  throw ConfigError("model \"" + name + "\" is not part of the evaluation");
}

Vec EvalReport::column(const std::string& model, double SessionMetrics::*field) const {
  const auto k = model_index(model);
  Vec out;
  out.reserve(sessions.size());
  for (const auto& s : sessions) out.push_back(s.metrics[k].*field);
  return out;
}

std::size_t zero_weight_bin(double z) {
  if (!(z > 0.0)) return 0;
  return std::min<std::size_t>(9, static_cast<std::size_t>(std::floor(z * 10.0)));
}

namespace {

double improvement(double model, double reference) {
  return reference == 0.0 ? 0.0 : (model - reference) / reference * 100.0;
}

template <typename BinOf>
std::vector<BucketRow> bucketize(const EvalReport& report, std::vector<BucketRow> rows,
                                 BinOf bin_of) {
  const std::size_t n_models = report.models.size();
  const std::size_t ref = report.model_index(report.reference);
  std::vector<Vec> sums(rows.size(), Vec(n_models, 0.0));
  for (const auto& s : report.sessions) {
    const auto bin = bin_of(s);
    if (!bin) continue;
    ++rows[*bin].count;
    for (std::size_t m = 0; m < n_models; ++m) sums[*bin][m] += s.metrics[m].rr;
  }
  for (std::size_t b = 0; b < rows.size(); ++b) {
    rows[b].mean_rr.assign(n_models, std::nullopt);
    rows[b].improvement.assign(n_models, std::nullopt);
    if (rows[b].count == 0) continue;
    const double n = static_cast<double>(rows[b].count);
    for (std::size_t m = 0; m < n_models; ++m) rows[b].mean_rr[m] = sums[b][m] / n;
    const double ref_mean = *rows[b].mean_rr[ref];
    if (ref_mean > 0.0) {
      for (std::size_t m = 0; m < n_models; ++m) {
        rows[b].improvement[m] = improvement(*rows[b].mean_rr[m], ref_mean);
      }
    }
  }
  return rows;
}

}  // namespace

std::vector<BucketRow> zero_weight_buckets(const EvalReport& report) {
  std::vector<BucketRow> rows(10);
  for (std::size_t b = 0; b < 10; ++b) {
    rows[b].lo = static_cast<double>(b) / 10.0;
    rows[b].hi = static_cast<double>(b + 1) / 10.0;
    char label[16];
    std::snprintf(label, sizeof label, "[%.1f,%.1f%c", rows[b].lo, rows[b].hi, b == 9 ? ']' : ')');
    rows[b].label = label;
  }
  return bucketize(report, std::move(rows), [](const SessionEval& s) -> std::optional<std::size_t> {
    if (!s.zero_weight) return std::nullopt;
    return zero_weight_bin(*s.zero_weight);
  });
}

std::vector<BucketRow> frequency_buckets(const EvalReport& report) {
  static const std::vector<std::string> kLabels = {"LowFreq", "MedFreq", "HighFreq"};
  std::vector<BucketRow> rows(kLabels.size());
  for (std::size_t b = 0; b < rows.size(); ++b) rows[b].label = kLabels[b];
  return bucketize(report, std::move(rows), [](const SessionEval& s) -> std::optional<std::size_t> {
    for (std::size_t b = 0; b < kLabels.size(); ++b) {
      if (s.freq_bucket == kLabels[b]) return b;
    }
    return std::nullopt;
  });
}

EvalReport evaluate(const Dataset& dataset, const std::vector<NamedModel>& models,
                    const EvalOptions& options) {
  EvalReport report;
  report.reference = options.reference;
  report.significance = options.significance;
  if (options.baselines) report.models = {"QL", "Pop_q", "Pop_i"};
  for (const auto& m : models) {
    if (m.params.item_emb.rows != dataset.items.size() ||
        m.params.word_emb.rows != dataset.vocab.size()) {
      throw CheckpointError("model \"" + m.name + "\" does not match the dataset shapes");
    }
    report.models.push_back(m.name);
  }
  report.model_index(report.reference);  // validates the reference name

  const auto test = dataset.test_sessions();
  if (test.empty()) throw ValidationError("dataset has no test sessions");

  std::map<std::string, std::string> bucket_of;
  try {
    for (const auto& g : bucket_queries(dataset.sessions)) {
      for (const auto& q : g.queries) bucket_of[q] = g.label;
    }
  } catch (const ValidationError&) {
    // Fewer than three queries: no frequency breakdown.
  }

  UnigramStats stats;
  PopTables pop;
  if (options.baselines) {
    stats = UnigramStats::build(dataset);
    pop = PopTables::build(dataset);
  }
  std::optional<std::size_t> zam_model;
  for (std::size_t m = 0; m < models.size(); ++m) {
    if (models[m].params.kind == ModelKind::kZam) {
      zam_model = m;
      break;
    }
  }

  report.sessions.resize(test.size());
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const Session& s = test[k];
      SessionEval& out = report.sessions[k];
      out.session_id = s.session_id;
      out.query = s.query_text;
      if (auto it = bucket_of.find(s.query_text); it != bucket_of.end()) out.freq_bucket = it->second;
      if (options.baselines) {
        out.metrics.push_back(session_metrics(ql_rank(s, stats, options.mu), s.purchased));
        out.metrics.push_back(
            session_metrics(pop_rank(PopKind::kQueryDependent, s, pop), s.purchased));
        out.metrics.push_back(
            session_metrics(pop_rank(PopKind::kQueryIndependent, s, pop), s.purchased));
      }
      const auto history = dataset.history_items(s.user, s.timestamp);
      for (std::size_t m = 0; m < models.size(); ++m) {
        const auto ctx = build_context(models[m].params, s.query_tokens, history, s.user);
        out.metrics.push_back(
            session_metrics(score_candidates(models[m].params, ctx, s.candidates), s.purchased));
        if (zam_model && *zam_model == m) out.zero_weight = ctx.zero_weight;
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, test.size()));
  if (threads == 1) {
    run(0, test.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (test.size() + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      const std::size_t begin = t * chunk, end = std::min(test.size(), begin + chunk);
      if (begin < end) pool.emplace_back(run, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  const std::size_t ref = report.model_index(report.reference);
  const double n = static_cast<double>(test.size());
  std::vector<SessionMetrics> means(report.models.size());
  for (const auto& s : report.sessions) {
    for (std::size_t m = 0; m < report.models.size(); ++m) {
      means[m].rr += s.metrics[m].rr;
      means[m].ndcg10 += s.metrics[m].ndcg10;
      means[m].hit10 += s.metrics[m].hit10;
    }
  }
  for (auto& m : means) {
    m.rr /= n;
    m.ndcg10 /= n;
    m.hit10 /= n;
  }
  auto pvalue = [&](std::size_t m, double SessionMetrics::*field) {
    if (test.size() < 2) return 1.0;
    return paired_ttest(report.column(report.models[m], field),
                        report.column(report.models[ref], field));
  };
  for (std::size_t m = 0; m < report.models.size(); ++m) {
    AggregateRow row;
    row.model = report.models[m];
    row.mean = means[m];
    row.improvement = {improvement(means[m].rr, means[ref].rr),
                       improvement(means[m].ndcg10, means[ref].ndcg10),
                       improvement(means[m].hit10, means[ref].hit10)};
    row.p_value = {pvalue(m, &SessionMetrics::rr), pvalue(m, &SessionMetrics::ndcg10),
                   pvalue(m, &SessionMetrics::hit10)};
    report.rows.push_back(row);
  }
  report.freq_buckets = frequency_buckets(report);
  if (zam_model) report.zweight_buckets = zero_weight_buckets(report);
  return report;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

nlohmann::ordered_json metrics_json(const SessionMetrics& m) {
  return {{"MRR", m.rr}, {"NDCG@10", m.ndcg10}, {"Hit@10", m.hit10}};
}

nlohmann::ordered_json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

nlohmann::ordered_json bucket_json(const BucketRow& b, const std::vector<std::string>& models) {
  nlohmann::ordered_json j;
  j["bucket"] = b.label;
  if (b.hi > b.lo) {
    j["lo"] = b.lo;
    j["hi"] = b.hi;
  }
  j["count"] = b.count;
  auto& mean = j["mean_rr"] = nlohmann::ordered_json::object();
  auto& impr = j["mrr_improvement_pct"] = nlohmann::ordered_json::object();
  for (std::size_t m = 0; m < models.size(); ++m) {
    mean[models[m]] = optional_json(b.mean_rr[m]);
    impr[models[m]] = optional_json(b.improvement[m]);
  }
  return j;
}

}  // namespace

nlohmann::ordered_json report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["reference"] = report.reference;
  j["significance"] = report.significance;
  j["models"] = report.models;
  j["test_sessions"] = report.sessions.size();
  auto& rows = j["table"] = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"model", r.model},
                    {"metrics", metrics_json(r.mean)},
                    {"improvement_pct", metrics_json(r.improvement)},
                    {"p_value", metrics_json(r.p_value)},
                    {"significant",
                     {{"MRR", r.model != report.reference && r.p_value.rr <= report.significance},
                      {"NDCG@10",
                       r.model != report.reference && r.p_value.ndcg10 <= report.significance},
                      {"Hit@10",
                       r.model != report.reference && r.p_value.hit10 <= report.significance}}}});
  }
  auto& fb = j["freq_buckets"] = nlohmann::ordered_json::array();
  for (const auto& b : report.freq_buckets) fb.push_back(bucket_json(b, report.models));
  if (!report.zweight_buckets.empty()) {
    auto& zb = j["zweight_buckets"] = nlohmann::ordered_json::array();
    for (const auto& b : report.zweight_buckets) zb.push_back(bucket_json(b, report.models));
  }
  auto& ss = j["sessions"] = nlohmann::ordered_json::array();
  for (const auto& s : report.sessions) {
    nlohmann::ordered_json e;
    e["session_id"] = s.session_id;
    e["query"] = s.query;
    e["freq_bucket"] = s.freq_bucket;
    if (s.zero_weight) e["zero_weight"] = *s.zero_weight;
    auto& rr = e["rr"] = nlohmann::ordered_json::object();
    for (std::size_t m = 0; m < report.models.size(); ++m) rr[report.models[m]] = s.metrics[m].rr;
    ss.push_back(std::move(e));
  }
  return j;
}

std::string report_to_tsv(const EvalReport& report) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(6);
  out << "model\tMRR\tNDCG@10\tHit@10\tMRR_impr_pct\tNDCG@10_impr_pct\tHit@10_impr_pct"
         "\tMRR_p\tNDCG@10_p\tHit@10_p\n";
  for (const auto& r : report.rows) {
    out << r.model << '\t' << r.mean.rr << '\t' << r.mean.ndcg10 << '\t' << r.mean.hit10;
    out.precision(2);
    out << '\t' << r.improvement.rr << '\t' << r.improvement.ndcg10 << '\t'
        << r.improvement.hit10;
    out.precision(6);
    out << '\t' << r.p_value.rr << '\t' << r.p_value.ndcg10 << '\t' << r.p_value.hit10 << '\n';
  }
  return out.str();
}

std::string buckets_to_jsonl(const std::vector<BucketRow>& buckets,
                             const std::vector<std::string>& models) {
  std::string out;
  for (const auto& b : buckets) out += bucket_json(b, models).dump() + "\n";
  return out;
}

}  // namespace zam
