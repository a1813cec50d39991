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
#include <string>
#include <string_view>
#include <vector>

#include "zam/corpus.hpp"
#include "zam/evalkit.hpp"
#include "zam/synthgen.hpp"
#include "zam/trainer.hpp"

namespace zam {

// Flat key=value configuration shared by every CLI command. Every key is
// known in advance; unknown keys are rejected. Later assignments win, so
// command-line overrides are applied after the file.
class RunConfig {
 public:
  RunConfig();

  // Lines are `key = value`; blank lines and lines starting with '#' are
  // skipped.
  void merge_text(std::string_view text);
  void merge_file(const std::string& path);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;

  static bool is_known(const std::string& key);

  GenConfig gen_config() const;
  TrainConfig train_config() const;
  EvalOptions eval_options() const;
  std::uint64_t min_count() const { return get_u64("min_count"); }
  Ratio train_ratio() const;

  // Every key with a value, sorted, one `key=value` per line.
  std::string resolved() const;

 private:
  std::map<std::string, std::string> values_;
};

std::vector<MixEntry> parse_mix(std::string_view text);
std::string format_mix(const std::vector<MixEntry>& mix);

}  // namespace zam
