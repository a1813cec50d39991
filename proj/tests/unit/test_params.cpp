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

#include <filesystem>
#include <string>

#include "doctest.h"
#include "zam/params.hpp"

using namespace zam;

namespace {

ParamShapes shapes(ModelKind kind) { return {kind, 6, 2, 11, 7, 4}; }

std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "zam_params_test";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

}  // namespace

TEST_CASE("model kind names") {
  CHECK(parse_model_kind("ZAM") == ModelKind::kZam);
  CHECK(parse_model_kind("qem") == ModelKind::kQem);
  CHECK(to_string(ModelKind::kHem) == "HEM");
  CHECK_THROWS_AS(parse_model_kind("bert"), ConfigError);
}

TEST_CASE("init allocates arrays per kind") {
  const auto qem = init_params(shapes(ModelKind::kQem), 1);
  const auto hem = init_params(shapes(ModelKind::kHem), 1);
  const auto zam = init_params(shapes(ModelKind::kZam), 1);
  CHECK(named_arrays(qem).size() == 4);
  CHECK(named_arrays(hem).size() == 5);
  CHECK(named_arrays(zam).size() == 7);
  CHECK(zam.attn_w.size() == 6 * 2 * 6);
  CHECK(zam.attn_b.size() == 6 * 2);
  CHECK(zam.attn_h.size() == 2);
  CHECK(hem.user_emb.rows == 4);
  CHECK(qem.user_emb.data.empty());
  for (double x : zam.item_emb.data) CHECK(std::abs(x) <= 0.5 / 6);
  for (double x : zam.proj_b) CHECK(x == 0.0);
  for (double x : zam.attn_b) CHECK(x == 0.0);
}

TEST_CASE("init is determined by the seed") {
  CHECK(init_params(shapes(ModelKind::kZam), 3) == init_params(shapes(ModelKind::kZam), 3));
  CHECK_FALSE(init_params(shapes(ModelKind::kZam), 3) == init_params(shapes(ModelKind::kZam), 4));
}

TEST_CASE("checkpoint round trip is bit exact") {
  for (auto kind : {ModelKind::kQem, ModelKind::kHem, ModelKind::kAem, ModelKind::kZam}) {
    const auto s = init_params(shapes(kind), 9);
    const auto path = temp_path("rt.ckpt");
    save_checkpoint(s, path);
    CHECK(load_checkpoint(path) == s);
    CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
  }
}

TEST_CASE("checkpoint corruption is reported") {
  const auto s = init_params(shapes(ModelKind::kZam), 9);
  const auto bytes = serialize_checkpoint(s);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, bytes.size() - 1)), CheckpointError);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, 10)), CheckpointError);
  CHECK_THROWS_AS(deserialize_checkpoint("not a checkpoint"), CheckpointError);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes + "x"), CheckpointError);
  CHECK_THROWS_AS(load_checkpoint(temp_path("missing.ckpt")), CheckpointError);
}

TEST_CASE("kind mismatch names the missing arrays") {
  const auto hem = init_params(shapes(ModelKind::kHem), 1);
  const auto path = temp_path("hem.ckpt");
  save_checkpoint(hem, path);
  try {
    load_checkpoint(path, ModelKind::kZam);
    FAIL("expected a checkpoint error");
  } catch (const CheckpointError& e) {
    const std::string what = e.what();
    CHECK(what.find("attn_w") != std::string::npos);
    CHECK(what.find("attn_b") != std::string::npos);
    CHECK(what.find("attn_h") != std::string::npos);
  }
  CHECK_NOTHROW(load_checkpoint(path, ModelKind::kHem));
}

TEST_CASE("adagrad ascends along the gradient") {
  auto s = init_params(shapes(ModelKind::kQem), 1);
  AdagradState state(s);
  Gradients g;
  g.item(2, 6)[0] = 2.0;
  const double before = s.item_emb(2, 0);
  const double other = s.item_emb(3, 0);
  state.apply(s, g, 0.5);
  // First step: lr * g / sqrt(g^2 + eps) ~ lr.
  CHECK(s.item_emb(2, 0) - before == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(s.item_emb(3, 0) == other);
  state.apply(s, g, 0.5);
  CHECK(s.item_emb(2, 0) - before == doctest::Approx(0.5 + 0.5 * 2.0 / std::sqrt(8.0)).epsilon(1e-6));
}

TEST_CASE("non-finite values are located") {
  auto s = init_params(shapes(ModelKind::kZam), 1);
  CHECK_FALSE(first_non_finite(s));
  s.attn_h[1] = std::nan("");
  CHECK(first_non_finite(s) == std::string("attn_h"));
}
