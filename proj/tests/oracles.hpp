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

// Independent reference implementations, written straight from the
// textbook definitions with no attention to speed.

#include <cmath>
#include <cstddef>
#include <vector>

#include "attnalign/corpus.hpp"

namespace testing_support {

using attnalign::Link;
using attnalign::LinkSet;

// Straight transcription of the textbook AER formula over explicit sets.
inline double aer_oracle(const LinkSet& a, const LinkSet& s, const LinkSet& p_given) {
  LinkSet p = p_given;
  p.insert(s.begin(), s.end());
  std::size_t as = 0, ap = 0;
  for (const auto& l : a) {
    as += s.count(l);
    ap += p.count(l);
  }
  return 1.0 - static_cast<double>(as + ap) / static_cast<double>(a.size() + s.size());
}

// grow-diag-final-and exactly as the usual pseudocode reads, with "e" the
// source index and "f" the target index. Alignment state is a std::set and
// coverage is recomputed by scanning it every time it is needed.
inline LinkSet gdfa_oracle(const LinkSet& e2f, const LinkSet& f2e, std::size_t en, std::size_t fn) {
  LinkSet uni = e2f;
  uni.insert(f2e.begin(), f2e.end());
  LinkSet alignment;
  for (const auto& l : e2f) {
    if (f2e.count(l)) alignment.insert(l);
  }
  auto e_aligned = [&](std::size_t e) {
    for (const auto& l : alignment) {
      if (l.source == e) return true;
    }
    return false;
  };
  auto f_aligned = [&](std::size_t f) {
    for (const auto& l : alignment) {
      if (l.target == f) return true;
    }
    return false;
  };
  const int neighboring[8][2] = {{-1, 0}, {0, -1}, {1, 0}, {0, 1}, {-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
  // GROW-DIAG
  while (true) {
    bool added = false;
    for (std::size_t e = 0; e < en; ++e) {
      for (std::size_t f = 0; f < fn; ++f) {
        if (!alignment.count({e, f})) continue;
        for (const auto& n : neighboring) {
          const long e_new = static_cast<long>(e) + n[0];
          const long f_new = static_cast<long>(f) + n[1];
          if (e_new < 0 || f_new < 0) continue;
          const Link p{static_cast<std::size_t>(e_new), static_cast<std::size_t>(f_new)};
          if ((!e_aligned(p.source) || !f_aligned(p.target)) && uni.count(p) && !alignment.count(p)) {
            alignment.insert(p);
            added = true;
          }
        }
      }
    }
    if (!added) break;
  }
  // FINAL-AND(e2f); FINAL-AND(f2e)
  for (const LinkSet* a : {&e2f, &f2e}) {
    for (std::size_t e = 0; e < en; ++e) {
      for (std::size_t f = 0; f < fn; ++f) {
        if (!e_aligned(e) && !f_aligned(f) && a->count({e, f})) alignment.insert({e, f});
      }
    }
  }
  return alignment;
}

inline LinkSet links_from_mask(unsigned mask, std::size_t n) {
  LinkSet out;
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t t = 0; t < n; ++t) {
      if (mask & (1u << (s * n + t))) out.insert({s, t});
    }
  }
  return out;
}

// Spearman as covariance of average ranks, with ranks found by counting:
// rank(x_i) = #{j: x_j < x_i} + (#{j: x_j == x_i} + 1) / 2.
inline double spearman_oracle(const std::vector<double>& xs, const std::vector<double>& ys) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double less = 0, equal = 0;
      for (std::size_t j = 0; j < v.size(); ++j) {
        less += v[j] < v[i];
        equal += v[j] == v[i];
      }
      r[i] = less + (equal + 1.0) / 2.0;
    }
    return r;
  };
  const auto rx = ranks(xs), ry = ranks(ys);
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i] / n;
    my += ry[i] / n;
  }
  double cov = 0, vx = 0, vy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    cov += (rx[i] - mx) * (ry[i] - my);
    vx += (rx[i] - mx) * (rx[i] - mx);
    vy += (ry[i] - my) * (ry[i] - my);
  }
  return cov / std::sqrt(vx * vy);
}

// One soft row per target position: 1/k on each of the k linked sources,
// uniform when the target has no link.
inline std::vector<std::vector<double>> soft_oracle(const LinkSet& links, std::size_t src_len, std::size_t tgt_len) {
  std::vector<std::vector<double>> rows(tgt_len, std::vector<double>(src_len, 0.0));
  for (std::size_t t = 0; t < tgt_len; ++t) {
    double k = 0;
    for (const auto& l : links) k += l.target == t;
    for (std::size_t s = 0; s < src_len; ++s) {
      rows[t][s] = k == 0 ? 1.0 / static_cast<double>(src_len) : (links.count({s, t}) ? 1.0 / k : 0.0);
    }
  }
  return rows;
}

}  // namespace testing_support
