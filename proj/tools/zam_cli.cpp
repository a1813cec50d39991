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

// Command-line entry point: gen -> prep -> train -> eval -> analyze, plus a
// rank command for inspecting one query.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "zam/analysis.hpp"
#include "zam/corpus.hpp"
#include "zam/evalkit.hpp"
#include "zam/params.hpp"
#include "zam/ranker.hpp"
#include "zam/run_config.hpp"
#include "zam/synthgen.hpp"
#include "zam/trainer.hpp"

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> threads;
  std::string out;
  std::vector<std::string> overrides;  // key=value
};

zam::RunConfig resolve(const Globals& g, const std::map<std::string, std::string>& flags) {
  zam::RunConfig cfg;
  if (!g.config_path.empty()) cfg.merge_file(g.config_path);
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw zam::ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  for (const auto& [k, v] : flags) cfg.set(k, v);
  if (g.seed) cfg.set("seed", std::to_string(*g.seed));
  if (g.threads) cfg.set("threads", std::to_string(*g.threads));
  return cfg;
}

std::string out_dir(const Globals& g, const std::string& fallback) {
  const std::string dir = g.out.empty() ? fallback : g.out;
  fs::create_directories(dir);
  return dir;
}

void echo_config(const zam::RunConfig& cfg, const std::string& dir) {
  zam::atomic_write(dir + "/config.resolved", cfg.resolved());
}

// DIR/dataset.bin when present, otherwise the JSONL files in DIR ingested and
// split with the configured settings.
zam::Dataset load_data(const std::string& dir, const zam::RunConfig& cfg) {
  if (fs::exists(dir + "/dataset.bin")) return zam::load_dataset(dir + "/dataset.bin");
  if (!fs::exists(dir + "/items.jsonl") || !fs::exists(dir + "/sessions.jsonl")) {
    throw zam::ConfigError("no dataset.bin or items.jsonl/sessions.jsonl in " + dir);
  }
  auto ds = zam::ingest(dir + "/items.jsonl", dir + "/sessions.jsonl", cfg.min_count());
  if (ds.sessions.empty()) throw zam::ValidationError("dataset in " + dir + " has no sessions");
  ds.apply_split(zam::split(ds, cfg.train_ratio()).split_timestamp);
  return ds;
}

int cmd_gen(const Globals& g, const std::map<std::string, std::string>& flags) {
  const auto cfg = resolve(g, flags);
  const auto gen = cfg.gen_config();
  const auto dir = out_dir(g, "data");
  zam::write_generated(zam::generate(gen), dir);
  echo_config(cfg, dir);
  return 0;
}

int cmd_prep(const Globals& g, const std::map<std::string, std::string>& flags,
             const std::string& data) {
  const auto cfg = resolve(g, flags);
  auto ds = zam::ingest(data + "/items.jsonl", data + "/sessions.jsonl", cfg.min_count());
  if (ds.sessions.empty()) throw zam::ValidationError("dataset has no sessions");
  const auto sr = zam::split(ds, cfg.train_ratio());
  ds.apply_split(sr.split_timestamp);
  const auto dir = out_dir(g, data);
  zam::save_dataset(ds, dir + "/dataset.bin");
  nlohmann::ordered_json summary{{"vocab_size", ds.vocab.size()},
                                 {"items", ds.items.size()},
                                 {"users", ds.users.size()},
                                 {"split_timestamp", sr.split_timestamp},
                                 {"train_sessions", ds.train_sessions().size()},
                                 {"test_sessions", ds.test_sessions().size()},
                                 {"dropped_test_sessions", sr.dropped_test_count}};
  zam::atomic_write(dir + "/prep.json", summary.dump(2) + "\n");
  echo_config(cfg, dir);
  return 0;
}

int cmd_train(const Globals& g, const std::map<std::string, std::string>& flags,
              const std::string& data) {
  const auto cfg = resolve(g, flags);
  const auto tc = cfg.train_config();
  const auto every = cfg.get_u64("checkpoint_every");
  const auto ds = load_data(data, cfg);
  if (ds.train_sessions().empty()) throw zam::ValidationError("dataset has no train sessions");
  const auto dir = out_dir(g, "run");
  const auto name = zam::lowercase(zam::to_string(tc.kind));
  const auto ckpt = dir + "/" + name + ".ckpt";
  std::string metrics;
  auto on_epoch = [&](const zam::EpochStats& st, const zam::ParamStore& store) {
    nlohmann::ordered_json line{
        {"epoch", st.epoch}, {"mean_loss", st.mean_loss}, {"wall_seconds", st.wall_seconds}};
    metrics += line.dump() + "\n";
    zam::atomic_write(dir + "/metrics.jsonl", metrics);
    std::fprintf(stderr, "%s epoch %zu loss %.6f (%.1fs)\n", name.c_str(), st.epoch, st.mean_loss,
                 st.wall_seconds);
    if (every > 0 && st.epoch % every == 0) zam::save_checkpoint(store, ckpt);
  };
  const auto result = zam::train(ds, tc, on_epoch);
  zam::save_checkpoint(result.params, ckpt);
  echo_config(cfg, dir);
  return 0;
}

int cmd_eval(const Globals& g, const std::map<std::string, std::string>& flags,
             const std::string& data, const std::vector<std::string>& ckpts) {
  const auto cfg = resolve(g, flags);
  const auto opts = cfg.eval_options();
  const auto buckets = cfg.get("buckets");
  if (buckets != "freq" && buckets != "zweight") {
    throw zam::ConfigError("buckets must be freq or zweight, got '" + buckets + "'");
  }
  const auto ds = load_data(data, cfg);
  if (ds.test_sessions().empty()) throw zam::ValidationError("dataset has no test sessions");
  std::vector<zam::NamedModel> models;
  std::map<std::string, int> seen;
  for (const auto& path : ckpts) {
    if (!fs::exists(path)) throw zam::ConfigError("missing checkpoint: " + path);
    auto store = zam::load_checkpoint(path);
    auto name = zam::to_string(store.kind);
    if (++seen[name] > 1) name += "#" + std::to_string(seen[name]);
    models.push_back({name, std::move(store)});
  }
  const auto report = zam::evaluate(ds, models, opts);
  if (buckets == "zweight" && report.zweight_buckets.empty()) {
    throw zam::ConfigError("--buckets zweight needs a ZAM checkpoint");
  }
  const auto dir = out_dir(g, "eval");
  zam::atomic_write(dir + "/report.json", zam::report_to_json(report).dump(2) + "\n");
  zam::atomic_write(dir + "/report.tsv", zam::report_to_tsv(report));
  zam::atomic_write(dir + "/buckets.jsonl",
                    zam::buckets_to_jsonl(buckets == "freq" ? report.freq_buckets : report.zweight_buckets,
                                          report.models));
  echo_config(cfg, dir);
  std::cout << zam::report_to_tsv(report);
  return 0;
}

int cmd_analyze(const Globals& g, const std::map<std::string, std::string>& flags,
                const std::string& data) {
  const auto cfg = resolve(g, flags);
  const auto ds = load_data(data, cfg);
  const auto report = zam::analysis_report(ds);
  const auto dir = out_dir(g, "analysis");
  zam::atomic_write(dir + "/analysis.json", report.dump(2) + "\n");
  echo_config(cfg, dir);
  return 0;
}

int cmd_rank(const Globals& g, const std::map<std::string, std::string>& flags,
             const std::string& data, const std::string& ckpt, const std::string& user,
             const std::string& query, const std::string& candidates) {
  const auto cfg = resolve(g, flags);
  const auto ds = load_data(data, cfg);
  if (!fs::exists(ckpt)) throw zam::ConfigError("missing checkpoint: " + ckpt);
  const auto store = zam::load_checkpoint(ckpt);

  std::vector<zam::ItemIndex> cands;
  if (!candidates.empty()) {
    for (const auto& id : zam::split_whitespace(std::string(candidates))) {
      for (std::size_t p = 0; p < id.size();) {
        auto c = id.find(',', p);
        if (c == std::string::npos) c = id.size();
        const auto one = id.substr(p, c - p);
        p = c + 1;
        if (one.empty()) continue;
        const auto idx = ds.find_item(one);
        if (!idx) throw zam::ValidationError("unknown item \"" + one + "\"");
        cands.push_back(*idx);
      }
    }
  } else {
    for (std::size_t i = 0; i < ds.items.size(); ++i) cands.push_back(static_cast<zam::ItemIndex>(i));
  }
  const auto uidx = ds.find_user(user);
  const auto tokens = ds.vocab.tokenize(query);
  const auto history = ds.history_items(uidx, std::numeric_limits<zam::Timestamp>::max());
  const auto ctx = zam::build_context(store, tokens, history, uidx);
  const auto ranked = zam::score_candidates(store, ctx, cands);

  nlohmann::ordered_json out;
  auto& scores = out["scores"] = nlohmann::ordered_json::array();
  for (const auto& s : ranked) scores.push_back({{"item_id", ds.items[s.item].item_id}, {"score", s.score}});
  auto& attn = out["attn_weights"] = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < ctx.attn_weights.size() && k < ctx.history.size(); ++k) {
    attn.push_back({{"item_id", ds.items[ctx.history[k]].item_id}, {"weight", ctx.attn_weights[k]}});
  }
  out["zero_weight"] = ctx.zero_weight ? nlohmann::ordered_json(*ctx.zero_weight) : nlohmann::ordered_json(nullptr);
  const auto text = out.dump(2) + "\n";
  if (!g.out.empty()) {
    fs::create_directories(g.out);
    zam::atomic_write(g.out + "/rank.json", text);
    echo_config(cfg, g.out);
  }
  std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Embedding-based product search: QEM, HEM, AEM and ZAM"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  Globals g;
  app.add_option("--config", g.config_path, "Flat key=value config file");
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--threads", g.threads, "Worker threads for evaluation");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--set", g.overrides, "Config override key=value (repeatable)");

  std::map<std::string, std::string> flags;
  auto flag = [&](CLI::App* sub, const std::string& name, const std::string& key, const std::string& help) {
    sub->add_option_function<std::string>(name, [&flags, key](const std::string& v) { flags[key] = v; }, help)
        ->take_last();
  };

  std::string data = "data";
  std::vector<std::string> ckpts;
  std::string ckpt, user, query, candidates;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic search log");
  for (const char* k : {"n_users", "n_items", "n_queries", "n_sessions", "vocab_size", "latent_dim",
                        "personalization_mix", "candidate_size"}) {
    std::string opt = std::string("--") + k;
    flag(gen, opt, k, std::string("Set ") + k);
  }

  auto* prep = app.add_subcommand("prep", "Ingest JSONL logs and split train/test");
  prep->add_option("--data", data, "Directory holding items.jsonl and sessions.jsonl");
  flag(prep, "--min_count", "min_count", "Minimum word count");
  flag(prep, "--train_ratio", "train_ratio", "Train fraction as a ratio, e.g. 7/8");

  auto* trn = app.add_subcommand("train", "Train one model");
  trn->add_option("--data", data, "Dataset directory");
  flag(trn, "--model", "model", "qem | hem | aem | zam");
  for (const char* k : {"alpha", "beta", "learning_rate", "batch_size", "negatives", "epochs",
                        "user_text", "checkpoint_every"}) {
    flag(trn, std::string("--") + k, k, std::string("Set ") + k);
  }

  auto* ev = app.add_subcommand("eval", "Evaluate checkpoints and baselines on the test split");
  ev->add_option("--data", data, "Dataset directory");
  ev->add_option("--ckpt", ckpts, "Checkpoint (repeatable)");
  flag(ev, "--reference", "reference", "Reference model for improvements");
  flag(ev, "--buckets", "buckets", "freq | zweight");

  auto* an = app.add_subcommand("analyze", "Purchase entropy and query-frequency analysis");
  an->add_option("--data", data, "Dataset directory");

  auto* rk = app.add_subcommand("rank", "Score candidates for one user and query");
  rk->add_option("--data", data, "Dataset directory");
  rk->add_option("--ckpt", ckpt, "Checkpoint")->required();
  rk->add_option("--user", user, "User id")->required();
  rk->add_option("--query", query, "Query text")->required();
  rk->add_option("--candidates", candidates, "Comma separated item ids (default: all items)");


  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gen) return cmd_gen(g, flags);
    if (*prep) return cmd_prep(g, flags, data);
    if (*trn) return cmd_train(g, flags, data);
    if (*ev) return cmd_eval(g, flags, data, ckpts);
    if (*an) return cmd_analyze(g, flags, data);
    if (*rk) return cmd_rank(g, flags, data, ckpt, user, query, candidates);
  } catch (const zam::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const zam::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const zam::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
