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

// Checkpoint container, version 1. Plain text:
//
//   attnalign-checkpoint 1
//   <one-line JSON header: {"config": {...}, "source_vocab": [...], "target_vocab": [...]}>
//   param <name> <rows> <cols>
//   <rows*cols hexadecimal floating-point values, space separated>
//   ... one param block per parameter, in model order ...
//   end
//
// Values are written with std::to_chars hex format, so a save/load cycle
// reproduces every parameter bit for bit.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <set>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>

#include "json.hpp"

#include "attnalign/errors.hpp"
#include "attnalign/model.hpp"

namespace attnalign {

inline constexpr std::string_view kCheckpointMagic = "attnalign-checkpoint";
inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"dim", c.dim},
          {"layers", c.layers},
          {"variant", to_string(c.variant)},
          {"dropout", c.dropout},
          {"source_vocab", c.source_vocab},
          {"target_vocab", c.target_vocab},
          {"seed", c.seed},
          {"init_range", c.init_range}};
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.dim = j.at("dim").get<std::size_t>();
    c.layers = j.at("layers").get<std::size_t>();
    c.variant = parse_variant(j.at("variant").get<std::string>());
    c.dropout = j.at("dropout").get<double>();
    c.source_vocab = j.at("source_vocab").get<std::size_t>();
    c.target_vocab = j.at("target_vocab").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.init_range = j.at("init_range").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

inline std::string format_hex(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::hex);
  return std::string(buf, ptr);
}

inline double parse_hex(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::hex);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError("bad checkpoint value '" + std::string(s) + "'");
  return v;
}

inline std::string serialize_checkpoint(const Model& model) {
  std::string out;
  out += std::string(kCheckpointMagic) + " " + std::to_string(kCheckpointVersion) + "\n";
  nlohmann::json header = {{"config", config_to_json(model.config())},
                           {"source_vocab", model.source_vocab().tokens()},
                           {"target_vocab", model.target_vocab().tokens()}};
  out += header.dump() + "\n";
  for (const auto& p : model.params()) {
    out += "param " + p.name + " " + std::to_string(p.value.rows()) + " " + std::to_string(p.value.cols()) + "\n";
    bool first = true;
    for (double v : p.value.data()) {
      if (!first) out += ' ';
      first = false;
      out += format_hex(v);
    }
    out += "\n";
  }
  out += "end\n";
  return out;
}

/// Throws ParseError on a malformed container and ConfigError when the
/// stored vocabularies, config and parameter shapes disagree.
inline Model parse_checkpoint(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() -> std::string& {
    if (!std::getline(in, line)) throw ParseError("truncated checkpoint", lineno);
    ++lineno;
    return line;
  };
  {
    std::istringstream head(next_line());
    std::string magic;
    int version = 0;
    head >> magic >> version;
    if (magic != kCheckpointMagic) throw ParseError("not an attnalign checkpoint", lineno);
    if (version != kCheckpointVersion) {
      throw ParseError("unsupported checkpoint version " + std::to_string(version), lineno);
    }
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(next_line());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint header: ") + e.what(), lineno);
  }
  ModelConfig config = config_from_json(header.at("config"));
  Vocabulary src = Vocabulary::from_tokens(header.at("source_vocab").get<std::vector<std::string>>());
  Vocabulary tgt = Vocabulary::from_tokens(header.at("target_vocab").get<std::vector<std::string>>());
  if (src.size() != config.source_vocab || tgt.size() != config.target_vocab) {
    throw ConfigError("checkpoint vocabulary sizes " + std::to_string(src.size()) + "/" + std::to_string(tgt.size()) +
                      " disagree with its config " + std::to_string(config.source_vocab) + "/" +
                      std::to_string(config.target_vocab));
  }
  Model model(config, std::move(src), std::move(tgt));
  std::set<std::string> loaded;
  while (true) {
    std::istringstream head(next_line());
    std::string kw, name;
    std::size_t rows = 0, cols = 0;
    head >> kw;
    if (kw == "end") break;
    if (kw != "param" || !(head >> name >> rows >> cols)) throw ParseError("expected a param block", lineno);
    if (!model.params().contains(name)) throw ConfigError("checkpoint has unexpected parameter '" + name + "'");
    Parameter& p = model.params().at(name);
    if (p.value.rows() != rows || p.value.cols() != cols) {
      throw ConfigError("parameter '" + name + "' has shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                        ", config implies " + shape_string(p.value.shape()));
    }
    const std::string& values = next_line();
    std::size_t pos = 0, k = 0;
    auto data = p.value.data();
    while (pos < values.size()) {
      const auto sp = values.find(' ', pos);
      const auto end = sp == std::string::npos ? values.size() : sp;
      if (k >= data.size()) throw ParseError("too many values for '" + name + "'", lineno);
      data[k++] = parse_hex(std::string_view(values).substr(pos, end - pos));
      pos = end + 1;
    }
    if (k != data.size()) throw ParseError("too few values for '" + name + "'", lineno);
    if (!loaded.insert(name).second) throw ParseError("parameter '" + name + "' appears twice", lineno);
  }
  if (loaded.size() != model.params().size()) throw ConfigError("checkpoint is missing parameters");
  return model;
}

inline void save_checkpoint(const std::string& path, const Model& model) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
    out << serialize_checkpoint(model);
    if (!out) throw std::runtime_error("failed writing checkpoint '" + path + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

/// 64-bit FNV-1a, used to fingerprint checkpoints in run manifests.
inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace attnalign
