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

// Alignment algebra: gold links to soft rows, attention to hard links,
// alignment error rate, and grow-diag-final-and symmetrization.

#include <algorithm>
#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "attnalign/corpus.hpp"
#include "attnalign/errors.hpp"

namespace attnalign {

using AttentionRows = std::vector<std::vector<double>>;

/// Candidate alignment: a plain set of (source, target) links.
using CandidateAlignment = LinkSet;

/// Row-stochastic matrix, one row per target token, one column per source
/// position.
struct SoftAlignment {
  std::vector<std::vector<double>> rows;
};

/// Source positions linked to target position t, ascending.
inline std::vector<std::size_t> aligned_sources(const HardAlignmentSet& hard, std::size_t target,
                                                bool include_possible) {
  std::vector<std::size_t> out;
  for (const auto& l : include_possible ? hard.possible : hard.sure) {
    if (l.target == target) out.push_back(l.source);
  }
  return out;
}

/// Hard links to soft rows: each target row puts 1/k on its k linked
/// sources; an unlinked target row is spread uniformly over all sources.
inline SoftAlignment to_soft(const HardAlignmentSet& hard, std::size_t src_len, std::size_t tgt_len,
                             bool include_possible = true) {
  if (src_len == 0 || tgt_len == 0) throw ContractError("to_soft: sentence lengths must be positive");
  const LinkSet& links = include_possible ? hard.possible : hard.sure;
  std::vector<std::vector<std::size_t>> per_target(tgt_len);
  for (const auto& l : links) {
    if (l.source >= src_len || l.target >= tgt_len) {
      throw ContractError("to_soft: link " + std::to_string(l.source) + "-" + std::to_string(l.target) +
                          " outside a " + std::to_string(src_len) + "x" + std::to_string(tgt_len) + " sentence pair");
    }
    per_target[l.target].push_back(l.source);
  }
  SoftAlignment soft;
  soft.rows.assign(tgt_len, std::vector<double>(src_len, 0.0));
  for (std::size_t t = 0; t < tgt_len; ++t) {
    auto& row = soft.rows[t];
    if (per_target[t].empty()) {
      std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(src_len));
    } else {
      const double w = 1.0 / static_cast<double>(per_target[t].size());
      for (auto s : per_target[t]) row[s] = w;
    }
  }
  return soft;
}

/// One link per target row at its most attended source; ties go to the
/// lowest source index.
inline CandidateAlignment attention_to_hard(const AttentionRows& attention) {
  CandidateAlignment out;
  for (std::size_t t = 0; t < attention.size(); ++t) {
    const auto& row = attention[t];
    if (row.empty()) continue;
    std::size_t best = 0;
    for (std::size_t i = 1; i < row.size(); ++i) {
      if (row[i] > row[best]) best = i;
    }
    out.insert({best, t});
  }
  return out;
}

/// Link counts behind AER; add several sentences to get corpus-level AER.
struct AerCounts {
  std::size_t candidate = 0;        // |A|
  std::size_t sure = 0;             // |S|
  std::size_t candidate_sure = 0;   // |A ∩ S|
  std::size_t candidate_possible = 0;  // |A ∩ P|

  void add(const CandidateAlignment& a, const HardAlignmentSet& gold) {
    candidate += a.size();
    sure += gold.sure.size();
    for (const auto& l : a) {
      candidate_sure += gold.sure.count(l);
      // P includes S by construction of HardAlignmentSet.
      candidate_possible += gold.possible.count(l);
    }
  }

  /// 1 - (|A∩S| + |A∩P|) / (|A| + |S|)
  double value() const {
    if (candidate + sure == 0) throw ContractError("AER is undefined when both the candidate and sure sets are empty");
    return 1.0 - static_cast<double>(candidate_sure + candidate_possible) / static_cast<double>(candidate + sure);
  }
};

inline double aer(const CandidateAlignment& candidate, const HardAlignmentSet& gold) {
  AerCounts c;
  c.add(candidate, gold);
  return c.value();
}

/// grow-diag-final-and over two directed alignments given as (source,
/// target) links.
///
/// Starts from the intersection. The grow step scans source-major (source
/// outer, target inner) and, around each current link, adds any
/// 8-neighbour that is in the union and has an uncovered source or target;
/// links added during a scan are visible to the rest of that scan, and scans
/// repeat until nothing changes. Final-and then adds forward links, then
/// backward links, whose source and target are both uncovered.
inline CandidateAlignment symmetrize_gdfa(const CandidateAlignment& forward, const CandidateAlignment& backward,
                                          std::size_t src_len, std::size_t tgt_len) {
  for (const auto* side : {&forward, &backward}) {
    for (const auto& l : *side) {
      src_len = std::max(src_len, l.source + 1);
      tgt_len = std::max(tgt_len, l.target + 1);
    }
  }
  if (src_len == 0 || tgt_len == 0) return {};
  auto at = [tgt_len](std::size_t s, std::size_t t) { return s * tgt_len + t; };
  std::vector<char> fwd(src_len * tgt_len, 0), bwd(src_len * tgt_len, 0), cur(src_len * tgt_len, 0);
  for (const auto& l : forward) fwd[at(l.source, l.target)] = 1;
  for (const auto& l : backward) bwd[at(l.source, l.target)] = 1;
  std::vector<std::size_t> src_cover(src_len, 0), tgt_cover(tgt_len, 0);
  auto add = [&](std::size_t s, std::size_t t) {
    cur[at(s, t)] = 1;
    ++src_cover[s];
    ++tgt_cover[t];
  };
  for (std::size_t i = 0; i < cur.size(); ++i) {
    if (fwd[i] && bwd[i]) add(i / tgt_len, i % tgt_len);
  }

  static constexpr std::array<std::array<int, 2>, 8> kNeighbours = {
      {{-1, 0}, {0, -1}, {1, 0}, {0, 1}, {-1, -1}, {-1, 1}, {1, -1}, {1, 1}}};
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t s = 0; s < src_len; ++s) {
      for (std::size_t t = 0; t < tgt_len; ++t) {
        if (!cur[at(s, t)]) continue;
        for (const auto& [ds, dt] : kNeighbours) {
          const long ns = static_cast<long>(s) + ds;
          const long nt = static_cast<long>(t) + dt;
          if (ns < 0 || nt < 0 || ns >= static_cast<long>(src_len) || nt >= static_cast<long>(tgt_len)) continue;
          const std::size_t k = at(static_cast<std::size_t>(ns), static_cast<std::size_t>(nt));
          if (cur[k] || !(fwd[k] || bwd[k])) continue;
          if (src_cover[static_cast<std::size_t>(ns)] == 0 || tgt_cover[static_cast<std::size_t>(nt)] == 0) {
            add(static_cast<std::size_t>(ns), static_cast<std::size_t>(nt));
            changed = true;
          }
        }
      }
    }
  }

  for (const auto* side : {&fwd, &bwd}) {
    for (std::size_t s = 0; s < src_len; ++s) {
      for (std::size_t t = 0; t < tgt_len; ++t) {
        if ((*side)[at(s, t)] && !cur[at(s, t)] && src_cover[s] == 0 && tgt_cover[t] == 0) add(s, t);
      }
    }
  }

  CandidateAlignment out;
  for (std::size_t i = 0; i < cur.size(); ++i) {
    if (cur[i]) out.insert({i / tgt_len, i % tgt_len});
  }
  return out;
}

}  // namespace attnalign
