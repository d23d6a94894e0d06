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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "attnalign/corpus.hpp"
#include "attnalign/errors.hpp"

namespace attnalign {

struct BleuStats {
  std::array<std::size_t, 4> matches{};  // clipped n-gram matches, n = 1..4
  std::array<std::size_t, 4> totals{};   // candidate n-grams
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;
  double brevity_penalty = 1.0;
  double score = 0.0;

  double precision(std::size_t n) const {
    return totals[n - 1] ? static_cast<double>(matches[n - 1]) / static_cast<double>(totals[n - 1]) : 0.0;
  }
};

namespace detail {

inline std::map<Tokens, std::size_t> ngram_counts(const Tokens& toks, std::size_t n) {
  std::map<Tokens, std::size_t> out;
  if (toks.size() < n) return out;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) ++out[Tokens(toks.begin() + i, toks.begin() + i + n)];
  return out;
}

}  // namespace detail

/// Corpus-level BLEU-4 with one reference per sentence. Without smoothing,
/// any zero n-gram precision gives a score of 0. With smoothing, 1 is added
/// to the match and total counts of n = 2..4.
inline BleuStats bleu(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references,
                      bool smoothing = false) {
  if (candidates.size() != references.size()) {
    throw ContractError("bleu: " + std::to_string(candidates.size()) + " candidates for " +
                        std::to_string(references.size()) + " references");
  }
  if (candidates.empty()) throw ContractError("bleu: empty corpus");
  BleuStats st;
  for (std::size_t s = 0; s < candidates.size(); ++s) {
    st.candidate_length += candidates[s].size();
    st.reference_length += references[s].size();
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto cand = detail::ngram_counts(candidates[s], n);
      const auto ref = detail::ngram_counts(references[s], n);
      for (const auto& [gram, count] : cand) {
        st.totals[n - 1] += count;
        auto it = ref.find(gram);
        if (it != ref.end()) st.matches[n - 1] += std::min(count, it->second);
      }
    }
  }
  if (st.candidate_length == 0) {
    st.brevity_penalty = 0.0;
  } else if (st.candidate_length < st.reference_length) {
    st.brevity_penalty = std::exp(1.0 - static_cast<double>(st.reference_length) /
                                            static_cast<double>(st.candidate_length));
  }
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    double m = static_cast<double>(st.matches[n - 1]);
    double t = static_cast<double>(st.totals[n - 1]);
    if (smoothing && n > 1) {
      m += 1.0;
      t += 1.0;
    }
    if (m == 0.0) return st;  // score stays 0
    log_sum += std::log(m / t);
  }
  st.score = st.brevity_penalty * std::exp(log_sum / 4.0);
  return st;
}

}  // namespace attnalign
