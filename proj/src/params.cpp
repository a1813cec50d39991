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

#include "zam/params.hpp"

#include <algorithm>
#include <cmath>

namespace zam {

namespace {

constexpr std::string_view kCheckpointMagic{"ZAMCK\x01", 6};
constexpr std::string_view kAttnConvention = "attn_w[a][b][c]:c*query,a*item";

double round_f32(double x) { return static_cast<double>(static_cast<float>(x)); }

void fill_uniform(std::span<double> v, double bound, Rng& rng) {
  for (auto& x : v) x = round_f32(rng.uniform(-bound, bound));
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kQem: return "QEM";
    case ModelKind::kHem: return "HEM";
    case ModelKind::kAem: return "AEM";
    case ModelKind::kZam: return "ZAM";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  const auto n = lowercase(name);
  if (n == "qem") return ModelKind::kQem;
  if (n == "hem") return ModelKind::kHem;
  if (n == "aem") return ModelKind::kAem;
  if (n == "zam") return ModelKind::kZam;
  throw ConfigError("unknown model kind \"" + std::string(name) + "\" (expected qem|hem|aem|zam)");
}

bool uses_attention(ModelKind kind) { return kind == ModelKind::kAem || kind == ModelKind::kZam; }

std::vector<NamedArray> named_arrays(ParamStore& s) {
  std::vector<NamedArray> out;
  out.push_back({"word_emb", {s.word_emb.rows, s.word_emb.cols}, s.word_emb.data});
  out.push_back({"item_emb", {s.item_emb.rows, s.item_emb.cols}, s.item_emb.data});
  if (s.kind == ModelKind::kHem) {
    out.push_back({"user_emb", {s.user_emb.rows, s.user_emb.cols}, s.user_emb.data});
  }
  out.push_back({"proj_w", {s.proj_w.rows, s.proj_w.cols}, s.proj_w.data});
  out.push_back({"proj_b", {s.proj_b.size()}, s.proj_b});
  if (uses_attention(s.kind)) {
    out.push_back({"attn_w", {s.alpha, s.beta, s.alpha}, s.attn_w});
    out.push_back({"attn_b", {s.alpha, s.beta}, s.attn_b});
    out.push_back({"attn_h", {s.beta}, s.attn_h});
  }
  return out;
}

std::vector<ConstNamedArray> named_arrays(const ParamStore& s) {
  std::vector<ConstNamedArray> out;
  for (auto& a : named_arrays(const_cast<ParamStore&>(s))) {
    out.push_back({std::move(a.name), std::move(a.shape), a.values});
  }
  return out;
}

ParamStore init_params(const ParamShapes& shapes, std::uint64_t seed) {
  if (shapes.alpha == 0 || shapes.beta == 0) throw ConfigError("alpha and beta must be >= 1");
  if (shapes.vocab_size == 0) throw ConfigError("cannot initialize parameters: empty vocabulary");
  if (shapes.item_count == 0) throw ConfigError("cannot initialize parameters: empty item set");
  if (shapes.kind == ModelKind::kHem && shapes.user_count == 0) {
    throw ConfigError("cannot initialize HEM parameters: no users");
  }
  const std::size_t a = shapes.alpha;
  const std::size_t b = shapes.beta;
  Rng rng(seed);
  ParamStore s;
  s.kind = shapes.kind;
  s.alpha = a;
  s.beta = b;
  const double emb_bound = 0.5 / static_cast<double>(a);

  s.word_emb = Matrix(shapes.vocab_size, a);
  fill_uniform(s.word_emb.data, emb_bound, rng);
  s.item_emb = Matrix(shapes.item_count, a);
  fill_uniform(s.item_emb.data, emb_bound, rng);
  if (s.kind == ModelKind::kHem) {
    s.user_emb = Matrix(shapes.user_count, a);
    fill_uniform(s.user_emb.data, emb_bound, rng);
  }
  s.proj_w = Matrix(a, a);
  fill_uniform(s.proj_w.data, std::sqrt(6.0 / static_cast<double>(a + a)), rng);
  s.proj_b.assign(a, 0.0);
  if (uses_attention(s.kind)) {
    s.attn_w.assign(a * b * a, 0.0);
    // Contracts alpha inputs into alpha*beta outputs.
    fill_uniform(s.attn_w, std::sqrt(6.0 / static_cast<double>(a + a * b)), rng);
    s.attn_b.assign(a * b, 0.0);
    s.attn_h.assign(b, 0.0);
    fill_uniform(s.attn_h, std::sqrt(6.0 / static_cast<double>(b + 1)), rng);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Gradients

namespace {
Vec& row_in(std::map<std::int32_t, Vec>& m, std::int32_t id, std::size_t alpha) {
  auto [it, inserted] = m.try_emplace(id);
  if (inserted) it->second.assign(alpha, 0.0);
  return it->second;
}

void add_into(Vec& dst, const Vec& src) {
  if (src.empty()) return;
  if (dst.empty()) {
    dst = src;
    return;
  }
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
}

void merge_rows(std::map<std::int32_t, Vec>& dst, const std::map<std::int32_t, Vec>& src) {
  for (const auto& [id, g] : src) add_into(dst[id], g);
}
}  // namespace

Vec& Gradients::word(WordId id, std::size_t alpha) { return row_in(words, id, alpha); }
Vec& Gradients::item(ItemIndex id, std::size_t alpha) { return row_in(items, id, alpha); }
Vec& Gradients::user(UserIndex id, std::size_t alpha) { return row_in(users, id, alpha); }

void Gradients::merge(const Gradients& o) {
  merge_rows(words, o.words);
  merge_rows(items, o.items);
  merge_rows(users, o.users);
  add_into(proj_w, o.proj_w);
  add_into(proj_b, o.proj_b);
  add_into(attn_w, o.attn_w);
  add_into(attn_b, o.attn_b);
  add_into(attn_h, o.attn_h);
}

// ---------------------------------------------------------------------------
// Adagrad

AdagradState::AdagradState(const ParamStore& store, double eps) : epsilon(eps) {
  for (const auto& a : named_arrays(store)) accumulators.emplace_back(a.values.size(), 0.0);
}

void AdagradState::apply(ParamStore& store, const Gradients& g, double lr) {
  auto arrays = named_arrays(store);
  auto step = [&](std::string_view name, std::size_t offset, const Vec& grad) {
    for (std::size_t k = 0; k < arrays.size(); ++k) {
      if (arrays[k].name != name) continue;
      auto& acc = accumulators[k];
      auto values = arrays[k].values;
      for (std::size_t i = 0; i < grad.size(); ++i) {
        acc[offset + i] += grad[i] * grad[i];
        values[offset + i] += lr * grad[i] / std::sqrt(acc[offset + i] + epsilon);
      }
      return;
    }
    throw TrainingError("gradient for array \"" + std::string(name) +
                        "\" which this model does not allocate");
  };
  const std::size_t a = store.alpha;
  for (const auto& [id, grad] : g.words) step("word_emb", static_cast<std::size_t>(id) * a, grad);
  for (const auto& [id, grad] : g.items) step("item_emb", static_cast<std::size_t>(id) * a, grad);
  for (const auto& [id, grad] : g.users) step("user_emb", static_cast<std::size_t>(id) * a, grad);
  if (!g.proj_w.empty()) step("proj_w", 0, g.proj_w);
  if (!g.proj_b.empty()) step("proj_b", 0, g.proj_b);
  if (!g.attn_w.empty()) step("attn_w", 0, g.attn_w);
  if (!g.attn_b.empty()) step("attn_b", 0, g.attn_b);
  if (!g.attn_h.empty()) step("attn_h", 0, g.attn_h);
}

std::optional<std::string> first_non_finite(const ParamStore& store) {
  for (const auto& a : named_arrays(store)) {
    for (double v : a.values) {
      if (!std::isfinite(v)) return a.name;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Checkpoints

std::string serialize_checkpoint(const ParamStore& store) {
  BinaryWriter w;
  w.bytes(kCheckpointMagic);
  w.str(to_string(store.kind));
  w.u64(store.alpha);
  w.u64(store.beta);
  w.u64(store.word_emb.rows);
  w.u64(store.item_emb.rows);
  w.u64(store.user_emb.rows);
  w.str(kAttnConvention);
  const auto arrays = named_arrays(store);
  w.u32(static_cast<std::uint32_t>(arrays.size()));
  for (const auto& a : arrays) {
    w.str(a.name);
    w.u32(static_cast<std::uint32_t>(a.shape.size()));
    for (auto d : a.shape) w.u64(d);
  }
  for (const auto& a : arrays) {
    for (double v : a.values) w.f32(static_cast<float>(v));
  }
  return w.data();
}

ParamStore deserialize_checkpoint(std::string_view bytes) {
  try {
    BinaryReader r(bytes, "checkpoint");
    if (r.remaining() < kCheckpointMagic.size() ||
        r.bytes(kCheckpointMagic.size()) != kCheckpointMagic) {
      throw CheckpointError("checkpoint: bad magic or unsupported version");
    }
    ParamStore s;
    s.kind = parse_model_kind(r.str());
    s.alpha = r.u64();
    s.beta = r.u64();
    const auto n_words = r.u64();
    const auto n_items = r.u64();
    const auto n_users = r.u64();
    if (r.str() != kAttnConvention) throw CheckpointError("checkpoint: unknown attention layout");
    if (s.alpha == 0 || s.beta == 0) throw CheckpointError("checkpoint: zero alpha or beta");

    struct Entry {
      std::string name;
      std::vector<std::size_t> shape;
    };
    std::vector<Entry> entries(r.u32());
    for (auto& e : entries) {
      e.name = r.str();
      e.shape.resize(r.u32());
      for (auto& d : e.shape) d = r.u64();
    }

    // Expected shapes follow from the header.
    ParamStore expected;
    expected.kind = s.kind;
    expected.alpha = s.alpha;
    expected.beta = s.beta;
    const std::size_t a = s.alpha, b = s.beta;
    expected.word_emb = Matrix(n_words, a);
    expected.item_emb = Matrix(n_items, a);
    if (s.kind == ModelKind::kHem) expected.user_emb = Matrix(n_users, a);
    expected.proj_w = Matrix(a, a);
    expected.proj_b.assign(a, 0.0);
    if (uses_attention(s.kind)) {
      expected.attn_w.assign(a * b * a, 0.0);
      expected.attn_b.assign(a * b, 0.0);
      expected.attn_h.assign(b, 0.0);
    }
    auto want = named_arrays(expected);
    if (want.size() != entries.size()) {
      throw CheckpointError("checkpoint: array table has " + std::to_string(entries.size()) +
                            " entries, expected " + std::to_string(want.size()) + " for " +
                            to_string(s.kind));
    }
    std::size_t total = 0;
    for (std::size_t k = 0; k < want.size(); ++k) {
      if (entries[k].name != want[k].name || entries[k].shape != want[k].shape) {
        throw CheckpointError("checkpoint: array table entry " + std::to_string(k) + " (\"" +
                              entries[k].name + "\") inconsistent with header");
      }
      total += want[k].values.size();
    }
    if (r.remaining() != total * 4) {
      throw CheckpointError("checkpoint: payload is " + std::to_string(r.remaining()) +
                            " bytes, expected " + std::to_string(total * 4));
    }
    for (auto& arr : want) {
      for (auto& v : arr.values) v = static_cast<double>(r.f32());
    }
    return expected;
  } catch (const CheckpointError&) {
    throw;
  } catch (const Error& e) {
    throw CheckpointError(e.what());
  }
}

void save_checkpoint(const ParamStore& store, const std::string& path) {
  atomic_write(path, serialize_checkpoint(store));
}

ParamStore load_checkpoint(const std::string& path) {
  std::string bytes;
  try {
    bytes = read_file(path);
  } catch (const Error& e) {
    throw CheckpointError(e.what());
  }
  return deserialize_checkpoint(bytes);
}

void require_kind(const ParamStore& store, ModelKind expected) {
  if (store.kind == expected) return;
  std::vector<std::string> missing;
  if (expected == ModelKind::kHem && store.user_emb.data.empty()) missing.push_back("user_emb");
  if (uses_attention(expected) && store.attn_w.empty()) {
    missing.insert(missing.end(), {"attn_w", "attn_b", "attn_h"});
  }
  std::string msg = "checkpoint holds a " + to_string(store.kind) + " model, expected " +
                    to_string(expected);
  if (!missing.empty()) {
    msg += "; missing arrays:";
    for (const auto& m : missing) msg += " " + m;
  }
  throw CheckpointError(msg);
}

ParamStore load_checkpoint(const std::string& path, ModelKind expected) {
  auto s = load_checkpoint(path);
  require_kind(s, expected);
  return s;
}

}  // namespace zam
