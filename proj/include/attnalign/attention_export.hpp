// Copyright 2026 The attnalign Authors
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

// Attention export: JSON Lines, one object per sentence:
//
//   {"id": 3, "source": ["..."], "target": ["..."],
//    "attention": [[...], ...], "word_loss": [...], "unknown": [false, ...]}
//
// attention has one row per target token and one column per source token.
// word_loss[t] is -log p(target[t] | target[<t], source) under teacher
// forcing; unknown[t] marks reference tokens mapped to <unk>.

#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "attnalign/corpus.hpp"
#include "attnalign/errors.hpp"

namespace attnalign {

struct AttentionRecord {
  std::size_t id = 0;
  Tokens source;
  Tokens target;
  std::vector<std::vector<double>> attention;
  std::vector<double> word_loss;
  std::vector<bool> unknown;

  friend bool operator==(const AttentionRecord&, const AttentionRecord&) = default;
};

inline void validate_record(const AttentionRecord& r, std::size_t line = 0) {
  if (r.source.empty() || r.target.empty()) throw ParseError("record " + std::to_string(r.id) + " has an empty side", line);
  if (r.attention.size() != r.target.size()) {
    throw ParseError("record " + std::to_string(r.id) + ": " + std::to_string(r.attention.size()) +
                         " attention rows for " + std::to_string(r.target.size()) + " target tokens",
                     line);
  }
  for (const auto& row : r.attention) {
    if (row.size() != r.source.size()) {
      throw ParseError("record " + std::to_string(r.id) + ": attention row of " + std::to_string(row.size()) +
                           " for " + std::to_string(r.source.size()) + " source tokens",
                       line);
    }
  }
  if (r.word_loss.size() != r.target.size()) {
    throw ParseError("record " + std::to_string(r.id) + ": word_loss length mismatch", line);
  }
  if (!r.unknown.empty() && r.unknown.size() != r.target.size()) {
    throw ParseError("record " + std::to_string(r.id) + ": unknown-flag length mismatch", line);
  }
}

inline nlohmann::json to_json(const AttentionRecord& r) {
  nlohmann::json j;
  j["id"] = r.id;
  j["source"] = r.source;
  j["target"] = r.target;
  j["attention"] = r.attention;
  j["word_loss"] = r.word_loss;
  j["unknown"] = r.unknown;
  return j;
}

inline AttentionRecord record_from_json(const nlohmann::json& j, std::size_t line = 0) {
  AttentionRecord r;
  try {
    r.id = j.at("id").get<std::size_t>();
    r.source = j.at("source").get<Tokens>();
    r.target = j.at("target").get<Tokens>();
    r.attention = j.at("attention").get<std::vector<std::vector<double>>>();
    r.word_loss = j.at("word_loss").get<std::vector<double>>();
    if (j.contains("unknown")) r.unknown = j.at("unknown").get<std::vector<bool>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("attention record: ") + e.what(), line);
  }
  if (r.unknown.empty()) r.unknown.assign(r.target.size(), false);
  validate_record(r, line);
  return r;
}

inline void write_attention_export(std::ostream& out, const std::vector<AttentionRecord>& records) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

inline std::vector<AttentionRecord> read_attention_export(std::istream& in) {
  std::vector<AttentionRecord> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (split_tokens(text).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("attention export: ") + e.what(), line);
    }
    out.push_back(record_from_json(j, line));
  }
  return out;
}

inline std::vector<AttentionRecord> load_attention_export(const std::string& path) {
  auto in = open_input(path);
  return read_attention_export(in);
}

}  // namespace attnalign
