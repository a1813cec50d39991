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

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zam/common.hpp"

namespace zam {

enum class ModelKind { kQem, kHem, kAem, kZam };

std::string to_string(ModelKind kind);
// Accepts "qem"/"QEM" etc.
ModelKind parse_model_kind(std::string_view name);
bool uses_attention(ModelKind kind);

// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  bool operator==(const Matrix&) const = default;
};

struct ParamShapes {
  ModelKind kind = ModelKind::kZam;
  std::size_t alpha = 100;  // embedding size
  std::size_t beta = 3;     // attention hidden units
  std::size_t vocab_size = 0;
  std::size_t item_count = 0;
  std::size_t user_count = 0;
};

// Every learnable array of one model, in a single shared embedding space.
//
// attn_w is an alpha x beta x alpha array stored row-major as [a][b][c]; its
// last axis contracts with the query vector and its first axis pairs with the
// item vector. attn_b is alpha x beta, stored [a][b].
struct ParamStore {
  ModelKind kind = ModelKind::kZam;
  std::size_t alpha = 0;
  std::size_t beta = 0;

  Matrix word_emb;   // |V| x alpha
  Matrix item_emb;   // |I| x alpha
  Matrix user_emb;   // |U| x alpha, HEM only
  Matrix proj_w;     // alpha x alpha
  Vec proj_b;        // alpha
  Vec attn_w;        // alpha*beta*alpha, AEM/ZAM only
  Vec attn_b;        // alpha*beta, AEM/ZAM only
  Vec attn_h;        // beta, AEM/ZAM only

  double& attn_w_at(std::size_t a, std::size_t b, std::size_t c) {
    return attn_w[(a * beta + b) * alpha + c];
  }
  double attn_w_at(std::size_t a, std::size_t b, std::size_t c) const {
    return attn_w[(a * beta + b) * alpha + c];
  }

  bool operator==(const ParamStore&) const = default;
};

// A named view over one array of a ParamStore. Arrays that the model kind
// does not allocate are not listed.
struct NamedArray {
  std::string name;
  std::vector<std::size_t> shape;
  std::span<double> values;
};

struct ConstNamedArray {
  std::string name;
  std::vector<std::size_t> shape;
  std::span<const double> values;
};

std::vector<NamedArray> named_arrays(ParamStore& store);
std::vector<ConstNamedArray> named_arrays(const ParamStore& store);

// Embeddings uniform in +-0.5/alpha; dense weights uniform in
// +-sqrt(6/(fan_in+fan_out)); biases zero. Values are rounded to float so a
// fresh store survives a checkpoint round trip exactly.
ParamStore init_params(const ParamShapes& shapes, std::uint64_t seed);

// Sparse gradient of a single example or an accumulated batch. Dense arrays
// that were not touched are left empty.
struct Gradients {
  std::map<WordId, Vec> words;
  std::map<ItemIndex, Vec> items;
  std::map<UserIndex, Vec> users;
  Vec proj_w;
  Vec proj_b;
  Vec attn_w;
  Vec attn_b;
  Vec attn_h;

  Vec& word(WordId id, std::size_t alpha);
  Vec& item(ItemIndex id, std::size_t alpha);
  Vec& user(UserIndex id, std::size_t alpha);

  // this += other
  void merge(const Gradients& other);
};

struct AdagradState {
  double epsilon = 1e-8;
  // One accumulator per scalar, laid out like named_arrays().
  std::vector<Vec> accumulators;

  explicit AdagradState(const ParamStore& store, double eps = 1e-8);

  // theta += lr * g / sqrt(G + eps), with G += g^2 first. Gradient ascent.
  void apply(ParamStore& store, const Gradients& grads, double learning_rate);
};

// Name of the first array holding a NaN or Inf, if any.
std::optional<std::string> first_non_finite(const ParamStore& store);

// Checkpoint: magic "ZAMCK\x01", manifest, then little-endian float32
// payloads in manifest order.
std::string serialize_checkpoint(const ParamStore& store);
ParamStore deserialize_checkpoint(std::string_view bytes);
void save_checkpoint(const ParamStore& store, const std::string& path);
ParamStore load_checkpoint(const std::string& path);
// Also checks that the checkpoint carries every array `expected` needs.
ParamStore load_checkpoint(const std::string& path, ModelKind expected);
void require_kind(const ParamStore& store, ModelKind expected);

}  // namespace zam
