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

// Parallel corpora, vocabularies, gold alignments, token annotations and
// padded batches.

#include <algorithm>
#include <array>
#include <charconv>
#include <compare>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "attnalign/errors.hpp"
#include "attnalign/random.hpp"

namespace attnalign {

using Tokens = std::vector<std::string>;

/// Splits on ASCII whitespace.
inline Tokens split_tokens(std::string_view line) {
  Tokens out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return in;
}

// ---------------------------------------------------------------------------
// Vocabulary

class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::size_t kBos = 2;
  static constexpr std::size_t kEos = 3;
  static constexpr std::size_t kReserved = 4;
  static constexpr std::array<std::string_view, kReserved> kReservedTokens = {"<pad>", "<unk>", "<s>", "</s>"};

  Vocabulary() {
    for (auto t : kReservedTokens) push(std::string(t));
  }

  /// Keeps the max_size most frequent tokens. Ties go to the token seen first.
  static Vocabulary build(const std::vector<Tokens>& corpus, std::size_t max_size) {
    if (max_size < 1) throw ConfigError("vocabulary max_size must be at least 1");
    if (corpus.empty()) throw ContractError("cannot build a vocabulary from an empty corpus");
    struct Entry {
      std::size_t count = 0;
      std::size_t first = 0;
    };
    std::unordered_map<std::string, Entry> stats;
    std::vector<std::string> order;
    for (const auto& sentence : corpus) {
      for (const auto& tok : sentence) {
        if (is_reserved(tok)) continue;
        auto [it, inserted] = stats.try_emplace(tok, Entry{0, order.size()});
        if (inserted) order.push_back(tok);
        ++it->second.count;
      }
    }
    std::stable_sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
      return stats.at(a).count > stats.at(b).count;
    });
    if (order.size() > max_size) order.resize(max_size);
    Vocabulary v;
    for (auto& tok : order) v.push(std::move(tok));
    return v;
  }

  /// Rebuilds a vocabulary from its full token list (reserved tokens first).
  static Vocabulary from_tokens(const std::vector<std::string>& tokens) {
    if (tokens.size() < kReserved) throw ConfigError("vocabulary is missing its reserved tokens");
    for (std::size_t i = 0; i < kReserved; ++i) {
      if (tokens[i] != kReservedTokens[i]) throw ConfigError("vocabulary reserved token " + std::to_string(i) + " is '" + tokens[i] + "'");
    }
    Vocabulary v;
    for (std::size_t i = kReserved; i < tokens.size(); ++i) {
      if (v.index_.count(tokens[i])) throw ConfigError("vocabulary lists '" + tokens[i] + "' twice");
      v.push(tokens[i]);
    }
    return v;
  }

  static bool is_reserved(std::string_view tok) {
    return std::find(kReservedTokens.begin(), kReservedTokens.end(), tok) != kReservedTokens.end();
  }

  std::size_t size() const noexcept { return tokens_.size(); }
  bool contains(const std::string& tok) const { return index_.count(tok) != 0; }

  std::size_t id(const std::string& tok) const {
    auto it = index_.find(tok);
    return it == index_.end() ? kUnk : it->second;
  }

  const std::string& token(std::size_t id) const {
    if (id >= tokens_.size()) throw ContractError("token id " + std::to_string(id) + " outside vocabulary");
    return tokens_[id];
  }

  std::vector<std::size_t> encode(const Tokens& toks) const {
    std::vector<std::size_t> ids;
    ids.reserve(toks.size());
    for (const auto& t : toks) ids.push_back(id(t));
    return ids;
  }

  Tokens decode(const std::vector<std::size_t>& ids) const {
    Tokens out;
    out.reserve(ids.size());
    for (auto i : ids) out.push_back(token(i));
    return out;
  }

  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  void push(std::string tok) {
    index_.emplace(tok, tokens_.size());
    tokens_.push_back(std::move(tok));
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

// ---------------------------------------------------------------------------
// Parallel text

struct SentencePair {
  std::size_t id = 0;  // 1-based line number
  Tokens source;
  Tokens target;
};

inline std::vector<SentencePair> read_parallel(std::istream& source, std::istream& target) {
  std::vector<SentencePair> pairs;
  std::string src_line, tgt_line;
  std::size_t line = 0;
  while (true) {
    const bool has_src = static_cast<bool>(std::getline(source, src_line));
    const bool has_tgt = static_cast<bool>(std::getline(target, tgt_line));
    if (!has_src && !has_tgt) break;
    ++line;
    if (has_src != has_tgt) {
      throw ConsistencyError("parallel corpus sides have different line counts (diverge at line " +
                             std::to_string(line) + ")");
    }
    SentencePair p{line, split_tokens(src_line), split_tokens(tgt_line)};
    if (p.source.empty()) throw ParseError("empty source sentence", line);
    if (p.target.empty()) throw ParseError("empty target sentence", line);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

inline std::vector<SentencePair> load_parallel(const std::string& source_path, const std::string& target_path) {
  auto src = open_input(source_path);
  auto tgt = open_input(target_path);
  return read_parallel(src, tgt);
}

/// Drops pairs with either side longer than max_len tokens.
inline std::vector<SentencePair> filter_by_length(std::vector<SentencePair> pairs, std::size_t max_len) {
  std::erase_if(pairs, [&](const SentencePair& p) { return p.source.size() > max_len || p.target.size() > max_len; });
  return pairs;
}

// ---------------------------------------------------------------------------
// Hard alignments

struct Link {
  std::size_t source = 0;
  std::size_t target = 0;
  auto operator<=>(const Link&) const = default;
};

using LinkSet = std::set<Link>;

/// Gold alignment of one sentence pair. possible always contains sure.
struct HardAlignmentSet {
  LinkSet sure;
  LinkSet possible;

  void add_sure(Link l) {
    sure.insert(l);
    possible.insert(l);
  }
  void add_possible(Link l) { possible.insert(l); }

  friend bool operator==(const HardAlignmentSet&, const HardAlignmentSet&) = default;
};

namespace detail {

inline std::size_t parse_index(std::string_view text, std::size_t line, std::string_view token) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ParseError("malformed alignment link '" + std::string(token) + "'", line);
  }
  return value;
}

inline Link parse_link(std::string_view token, std::size_t line) {
  const auto dash = token.find('-');
  if (dash == std::string_view::npos) throw ParseError("malformed alignment link '" + std::string(token) + "'", line);
  return {parse_index(token.substr(0, dash), line, token), parse_index(token.substr(dash + 1), line, token)};
}

}  // namespace detail

/// Parses "s-t[ S|P] s-t[ S|P] ..." (0-based indices; no marker means sure).
inline HardAlignmentSet parse_alignment_line(std::string_view text, std::size_t line = 0) {
  HardAlignmentSet out;
  const Tokens toks = split_tokens(text);
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const Link link = detail::parse_link(toks[i], line);
    bool sure = true;
    if (i + 1 < toks.size() && (toks[i + 1] == "S" || toks[i + 1] == "P")) {
      sure = toks[i + 1] == "S";
      ++i;
    }
    if (sure) {
      out.add_sure(link);
    } else {
      out.add_possible(link);
    }
  }
  return out;
}

inline std::vector<HardAlignmentSet> read_alignments(std::istream& in) {
  std::vector<HardAlignmentSet> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) out.push_back(parse_alignment_line(text, ++line));
  return out;
}

inline std::vector<HardAlignmentSet> load_alignments(const std::string& path) {
  auto in = open_input(path);
  return read_alignments(in);
}

/// Checks every link against its sentence lengths. Line numbers in errors
/// are the 1-based sentence positions.
inline void validate_alignments(const std::vector<HardAlignmentSet>& sets, const std::vector<SentencePair>& pairs) {
  if (sets.size() != pairs.size()) {
    throw ConsistencyError("alignment file has " + std::to_string(sets.size()) + " lines for " +
                           std::to_string(pairs.size()) + " sentence pairs");
  }
  for (std::size_t s = 0; s < sets.size(); ++s) {
    for (const auto& l : sets[s].possible) {
      if (l.source >= pairs[s].source.size() || l.target >= pairs[s].target.size()) {
        throw ParseError("link " + std::to_string(l.source) + "-" + std::to_string(l.target) +
                             " out of range for sentence lengths " + std::to_string(pairs[s].source.size()) + "/" +
                             std::to_string(pairs[s].target.size()),
                         s + 1);
      }
    }
  }
}

/// Plain Pharaoh "s-t s-t ..." in sorted order.
inline std::string format_links(const LinkSet& links) {
  std::string out;
  for (const auto& l : links) {
    if (!out.empty()) out += ' ';
    out += std::to_string(l.source) + "-" + std::to_string(l.target);
  }
  return out;
}

/// Canonical form: links sorted, every link carries an explicit S or P.
inline std::string format_alignment_line(const HardAlignmentSet& a) {
  std::string out;
  for (const auto& l : a.possible) {
    if (!out.empty()) out += ' ';
    out += std::to_string(l.source) + "-" + std::to_string(l.target) + (a.sure.count(l) ? " S" : " P");
  }
  return out;
}

inline void write_alignments(std::ostream& out, const std::vector<HardAlignmentSet>& sets) {
  for (const auto& a : sets) out << format_alignment_line(a) << '\n';
}

// ---------------------------------------------------------------------------
// Token annotations

/// Coarse universal tag inventory used for per-POS reports.
inline constexpr std::array<std::string_view, 11> kUniversalTags = {
    "ADJ", "ADP", "ADV", "CONJ", "DET", "NOUN", "NUM", "PRT", "PRON", "PUNC", "VERB"};

inline bool is_universal_tag(std::string_view tag) {
  return std::find(kUniversalTags.begin(), kUniversalTags.end(), tag) != kUniversalTags.end();
}

struct SentenceAnnotation {
  Tokens tokens;
  std::vector<std::string> pos;
  std::vector<std::string> roles;
  std::vector<long> heads;

  std::size_t size() const noexcept { return tokens.size(); }
  friend bool operator==(const SentenceAnnotation&, const SentenceAnnotation&) = default;
};

/// Rows are "token<TAB>pos<TAB>role<TAB>head"; a blank line ends a sentence.
inline std::vector<SentenceAnnotation> read_annotations(std::istream& in) {
  std::vector<SentenceAnnotation> out;
  SentenceAnnotation cur;
  std::string text;
  std::size_t line = 0;
  auto flush = [&] {
    if (cur.size()) out.push_back(std::move(cur));
    cur = SentenceAnnotation{};
  };
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (split_tokens(text).empty()) {
      flush();
      continue;
    }
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto tab = text.find('\t', start);
      fields.push_back(text.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 4) {
      throw ParseError("expected 4 tab-separated fields, got " + std::to_string(fields.size()), line);
    }
    long head = 0;
    auto [ptr, ec] = std::from_chars(fields[3].data(), fields[3].data() + fields[3].size(), head);
    if (ec != std::errc() || ptr != fields[3].data() + fields[3].size()) {
      throw ParseError("head index '" + fields[3] + "' is not an integer", line);
    }
    cur.tokens.push_back(fields[0]);
    cur.pos.push_back(fields[1]);
    cur.roles.push_back(fields[2]);
    cur.heads.push_back(head);
  }
  flush();
  return out;
}

inline std::vector<SentenceAnnotation> load_annotations(const std::string& path) {
  auto in = open_input(path);
  return read_annotations(in);
}

inline void write_annotations(std::ostream& out, const std::vector<SentenceAnnotation>& anns) {
  for (std::size_t s = 0; s < anns.size(); ++s) {
    if (s) out << '\n';
    const auto& a = anns[s];
    for (std::size_t i = 0; i < a.size(); ++i) {
      out << a.tokens[i] << '\t' << a.pos[i] << '\t' << a.roles[i] << '\t' << a.heads[i] << '\n';
    }
  }
}

struct FlaggedLabel {
  std::size_t sentence_id = 0;
  std::size_t position = 0;
  std::string label;
};

struct AnnotationReport {
  std::vector<FlaggedLabel> unknown_pos;
};

/// Checks annotations against tokenized sentences (ids are 1-based line
/// numbers). Unknown POS tags are kept and reported, not rejected.
inline AnnotationReport validate_annotations(const std::vector<SentenceAnnotation>& anns,
                                             const std::vector<Tokens>& sentences) {
  if (anns.size() != sentences.size()) {
    throw ConsistencyError("annotation file has " + std::to_string(anns.size()) + " sentences, corpus has " +
                           std::to_string(sentences.size()));
  }
  AnnotationReport report;
  for (std::size_t s = 0; s < anns.size(); ++s) {
    if (anns[s].size() != sentences[s].size()) {
      throw ConsistencyError("sentence " + std::to_string(s + 1) + ": " + std::to_string(anns[s].size()) +
                             " annotation rows for " + std::to_string(sentences[s].size()) + " tokens");
    }
    for (std::size_t i = 0; i < anns[s].size(); ++i) {
      if (!is_universal_tag(anns[s].pos[i])) report.unknown_pos.push_back({s + 1, i, anns[s].pos[i]});
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Batches

struct EncodedPair {
  std::size_t id = 0;
  std::vector<std::size_t> source;
  std::vector<std::size_t> target;
};

inline std::vector<EncodedPair> encode_pairs(const std::vector<SentencePair>& pairs, const Vocabulary& src_vocab,
                                             const Vocabulary& tgt_vocab) {
  std::vector<EncodedPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back({p.id, src_vocab.encode(p.source), tgt_vocab.encode(p.target)});
  return out;
}

/// Right-padded id matrices with row-major masks.
struct Batch {
  std::vector<std::size_t> sentence_ids;
  std::size_t source_width = 0;
  std::size_t target_width = 0;
  std::vector<std::size_t> source;  // rows x source_width
  std::vector<std::size_t> target;  // rows x target_width
  std::vector<bool> source_mask;
  std::vector<bool> target_mask;

  std::size_t rows() const noexcept { return sentence_ids.size(); }

  std::size_t source_length(std::size_t r) const {
    std::size_t n = 0;
    for (std::size_t c = 0; c < source_width; ++c) n += source_mask[r * source_width + c];
    return n;
  }
  std::size_t target_length(std::size_t r) const {
    std::size_t n = 0;
    for (std::size_t c = 0; c < target_width; ++c) n += target_mask[r * target_width + c];
    return n;
  }
};

inline Batch make_batch(const std::vector<const EncodedPair*>& members) {
  Batch b;
  for (const auto* p : members) {
    if (p->source.empty() || p->target.empty()) {
      throw ContractError("sentence " + std::to_string(p->id) + " has an empty side");
    }
    b.sentence_ids.push_back(p->id);
    b.source_width = std::max(b.source_width, p->source.size());
    b.target_width = std::max(b.target_width, p->target.size());
  }
  const std::size_t n = members.size();
  b.source.assign(n * b.source_width, Vocabulary::kPad);
  b.target.assign(n * b.target_width, Vocabulary::kPad);
  b.source_mask.assign(n * b.source_width, false);
  b.target_mask.assign(n * b.target_width, false);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& p = *members[r];
    for (std::size_t c = 0; c < p.source.size(); ++c) {
      b.source[r * b.source_width + c] = p.source[c];
      b.source_mask[r * b.source_width + c] = true;
    }
    for (std::size_t c = 0; c < p.target.size(); ++c) {
      b.target[r * b.target_width + c] = p.target[c];
      b.target_mask[r * b.target_width + c] = true;
    }
  }
  return b;
}

/// Shuffles with the seed, then cuts consecutive groups of batch_size.
inline std::vector<Batch> make_batches(const std::vector<EncodedPair>& pairs, std::size_t batch_size,
                                       std::uint64_t seed) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<Batch> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    std::vector<const EncodedPair*> members;
    for (std::size_t i = start; i < std::min(order.size(), start + batch_size); ++i) members.push_back(&pairs[order[i]]);
    out.push_back(make_batch(members));
  }
  return out;
}

}  // namespace attnalign
