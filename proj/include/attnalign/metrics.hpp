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

// Per-token attention measurements and their per-POS aggregations.
//
// All logarithms are natural. Aggregates are micro-averages over tokens and
// are reduced sequentially in record order, so results are reproducible
// bit for bit.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "attnalign/errors.hpp"

namespace attnalign {

/// Floor applied to attention probabilities inside logarithms.
inline constexpr double kProbabilityFloor = 1e-12;

/// Cross-entropy from a soft alignment row to an attention row:
/// -sum_i Al_i log At_i, skipping Al_i = 0.
inline double attention_loss(const std::vector<double>& soft_row, const std::vector<double>& attention_row) {
  if (soft_row.size() != attention_row.size()) {
    throw ContractError("attention_loss: soft row has " + std::to_string(soft_row.size()) +
                        " entries, attention row " + std::to_string(attention_row.size()));
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < soft_row.size(); ++i) {
    if (soft_row[i] == 0.0) continue;
    loss -= soft_row[i] * std::log(std::max(attention_row[i], kProbabilityFloor));
  }
  return loss;
}

/// Shannon entropy of an attention row, with 0 log 0 = 0.
inline double attention_entropy(const std::vector<double>& attention_row) {
  double h = 0.0;
  for (double p : attention_row) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

/// 1-based ranks; tied values share the mean of the ranks they span.
inline std::vector<double> average_ranks(const std::vector<double>& xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

/// Spearman's rho as the Pearson correlation of average ranks. Returns
/// nullopt when either side has zero rank variance.
inline std::optional<double> spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) {
    throw ContractError("spearman: " + std::to_string(xs.size()) + " vs " + std::to_string(ys.size()) + " values");
  }
  if (xs.size() < 2) throw ContractError("spearman: needs at least two pairs");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double n = static_cast<double>(xs.size());
  // Both rank vectors have mean (n + 1) / 2.
  const double mean = 0.5 * (n + 1.0);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean, dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

struct AlignmentMass {
  double to_alignment = 0.0;
  double to_other = 1.0;
  bool unaligned = false;
};

/// Attention mass on the aligned source positions and its complement. An
/// empty aligned set yields zero mass and marks the token unaligned.
inline AlignmentMass mass_on_alignment(const std::vector<double>& attention_row,
                                       const std::vector<std::size_t>& aligned) {
  AlignmentMass m;
  if (aligned.empty()) {
    m.unaligned = true;
    m.to_alignment = 0.0;
    m.to_other = 1.0;
    return m;
  }
  std::set<std::size_t> unique(aligned.begin(), aligned.end());
  double on = 0.0, off = 0.0;
  for (std::size_t i = 0; i < attention_row.size(); ++i) {
    (unique.count(i) ? on : off) += attention_row[i];
  }
  for (auto i : unique) {
    if (i >= attention_row.size()) throw ContractError("mass_on_alignment: position " + std::to_string(i) + " out of range");
  }
  const double total = on + off;
  m.to_alignment = total > 0.0 ? on / total : 0.0;
  m.to_other = 1.0 - m.to_alignment;
  return m;
}

// ---------------------------------------------------------------------------
// Token records and aggregation

struct TokenRecord {
  std::size_t sentence_id = 0;
  std::size_t position = 0;
  std::string token;
  std::string pos;
  std::vector<double> attention;
  std::vector<std::size_t> aligned;  // gold source positions
  double attention_loss = 0.0;
  double attention_entropy = 0.0;
  double word_prediction_loss = 0.0;
  AlignmentMass mass;
};

enum class Measure { attention_loss, word_prediction_loss, attention_entropy };

inline const char* measure_name(Measure m) {
  switch (m) {
    case Measure::attention_loss:
      return "attention_loss";
    case Measure::word_prediction_loss:
      return "word_prediction_loss";
    case Measure::attention_entropy:
      return "attention_entropy";
  }
  return "?";
}

inline double measure_value(const TokenRecord& r, Measure m) {
  switch (m) {
    case Measure::attention_loss:
      return r.attention_loss;
    case Measure::word_prediction_loss:
      return r.word_prediction_loss;
    case Measure::attention_entropy:
      return r.attention_entropy;
  }
  return 0.0;
}

struct PosSummary {
  std::size_t count = 0;
  double attention_loss = 0.0;
  double word_prediction_loss = 0.0;
  double attention_entropy = 0.0;
};

/// Per-POS token counts and micro-averaged measures.
inline std::map<std::string, PosSummary> aggregate_by_pos(const std::vector<TokenRecord>& records) {
  std::map<std::string, PosSummary> out;
  for (const auto& r : records) {
    if (r.pos.empty()) throw ContractError("aggregate_by_pos: record without a POS tag");
    auto& s = out[r.pos];
    ++s.count;
    s.attention_loss += r.attention_loss;
    s.word_prediction_loss += r.word_prediction_loss;
    s.attention_entropy += r.attention_entropy;
  }
  for (auto& [pos, s] : out) {
    const double n = static_cast<double>(s.count);
    s.attention_loss /= n;
    s.word_prediction_loss /= n;
    s.attention_entropy /= n;
  }
  return out;
}

struct ClassCorrelation {
  std::size_t count = 0;
  double rho = 0.0;
};

struct FlaggedClass {
  std::string pos;
  std::size_t count = 0;
  std::string reason;
};

struct CorrelationTable {
  std::map<std::string, ClassCorrelation> reported;
  std::vector<FlaggedClass> flagged;
};

/// Spearman's rho between two measures, pooled over all tokens of each POS
/// class. Classes with fewer than min_count tokens, or with constant ranks,
/// are flagged instead of reported.
inline CorrelationTable correlate_by_pos(const std::vector<TokenRecord>& records, Measure x, Measure y,
                                         std::size_t min_count = 2) {
  min_count = std::max<std::size_t>(min_count, 2);
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const auto& r : records) {
    auto& g = groups[r.pos];
    g.first.push_back(measure_value(r, x));
    g.second.push_back(measure_value(r, y));
  }
  CorrelationTable out;
  for (const auto& [pos, g] : groups) {
    const std::size_t n = g.first.size();
    if (n < min_count) {
      out.flagged.push_back({pos, n, "fewer than " + std::to_string(min_count) + " tokens"});
      continue;
    }
    auto rho = spearman(g.first, g.second);
    if (!rho) {
      out.flagged.push_back({pos, n, "zero rank variance"});
      continue;
    }
    out.reported[pos] = {n, *rho};
  }
  return out;
}

struct MassRow {
  std::size_t tokens = 0;        // aligned tokens contributing
  std::size_t unaligned = 0;     // excluded tokens of this class
  double to_alignment_pct = 0.0;
  double to_other_pct = 0.0;
};

struct MassTable {
  std::map<std::string, MassRow> by_pos;
  MassRow overall;  // token-weighted over every aligned token
};

/// Mean attention mass on alignment points per POS class, in percent.
/// Unaligned tokens are counted but excluded from the means.
inline MassTable mass_table(const std::vector<TokenRecord>& records) {
  MassTable out;
  std::map<std::string, double> sums;
  double overall_sum = 0.0;
  for (const auto& r : records) {
    auto& row = out.by_pos[r.pos];
    if (r.mass.unaligned) {
      ++row.unaligned;
      ++out.overall.unaligned;
      continue;
    }
    ++row.tokens;
    ++out.overall.tokens;
    sums[r.pos] += r.mass.to_alignment;
    overall_sum += r.mass.to_alignment;
  }
  auto finish = [](MassRow& row, double sum) {
    if (row.tokens == 0) return;
    row.to_alignment_pct = 100.0 * sum / static_cast<double>(row.tokens);
    row.to_other_pct = 100.0 - row.to_alignment_pct;
  };
  for (auto& [pos, row] : out.by_pos) finish(row, sums[pos]);
  finish(out.overall, overall_sum);
  std::erase_if(out.by_pos, [](const auto& kv) { return kv.second.tokens == 0 && kv.second.unaligned == 0; });
  return out;
}

// ---------------------------------------------------------------------------
// Dependency roles

/// Maps raw source-side dependency labels to reporting groups.
struct RoleMergeRules {
  /// Source tokens with one of these POS tags report as `punctuation_role`
  /// whatever their parser label.
  std::set<std::string> punctuation_pos;
  std::string punctuation_role = "punc";
  /// Raw label -> merged label. Unlisted labels pass through unchanged.
  std::map<std::string, std::string> groups;

  std::string apply(const std::string& role, const std::string& pos) const {
    if (punctuation_pos.count(pos)) return punctuation_role;
    auto it = groups.find(role);
    return it == groups.end() ? role : it->second;
  }
};

/// Defaults for ParZu-style labels: punctuation by POS, every object label
/// merged into "obj", and every coordination label merged into "conj".
inline RoleMergeRules default_role_rules() {
  RoleMergeRules r;
  r.punctuation_pos = {"PUNC", "PUNCT", ".", "$.", "$,", "$("};
  for (const char* obj : {"obj", "obja", "objd", "objg", "objp", "obji", "objc", "dobj", "iobj", "pobj"}) {
    r.groups[obj] = "obj";
  }
  for (const char* conj : {"conj", "kon", "cj", "konj", "kom"}) r.groups[conj] = "conj";
  return r;
}

struct SourceRoles {
  std::vector<std::string> roles;
  std::vector<std::string> pos;
};

struct RoleTable {
  /// POS -> merged role -> share of the class's non-alignment mass.
  std::map<std::string, std::map<std::string, double>> shares;
  /// POS -> total non-alignment mass distributed.
  std::map<std::string, double> mass;
  std::vector<std::size_t> excluded_sentences;  // no source annotation
};

/// Distributes each aligned token's attention outside its alignment points
/// over the dependency roles of the receiving source tokens, then
/// normalizes per target POS class. Unaligned tokens are skipped.
inline RoleTable role_distribution(const std::vector<TokenRecord>& records,
                                   const std::map<std::size_t, SourceRoles>& source_roles,
                                   const RoleMergeRules& rules = default_role_rules()) {
  RoleTable out;
  std::set<std::size_t> excluded;
  for (const auto& r : records) {
    if (r.aligned.empty()) continue;
    auto it = source_roles.find(r.sentence_id);
    if (it == source_roles.end()) {
      excluded.insert(r.sentence_id);
      continue;
    }
    const auto& src = it->second;
    if (src.roles.size() != r.attention.size()) {
      throw ConsistencyError("sentence " + std::to_string(r.sentence_id) + ": " + std::to_string(src.roles.size()) +
                             " source roles for an attention row of " + std::to_string(r.attention.size()));
    }
    const std::set<std::size_t> aligned(r.aligned.begin(), r.aligned.end());
    for (std::size_t i = 0; i < r.attention.size(); ++i) {
      if (aligned.count(i)) continue;
      const std::string role = rules.apply(src.roles[i], src.pos[i]);
      out.shares[r.pos][role] += r.attention[i];
      out.mass[r.pos] += r.attention[i];
    }
  }
  for (auto it = out.shares.begin(); it != out.shares.end();) {
    const double total = out.mass[it->first];
    if (!(total > 0.0)) {
      out.mass.erase(it->first);
      it = out.shares.erase(it);
      continue;
    }
    for (auto& [role, v] : it->second) v /= total;
    ++it;
  }
  out.excluded_sentences.assign(excluded.begin(), excluded.end());
  return out;
}

}  // namespace attnalign
