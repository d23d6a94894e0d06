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

// A two-sentence analysis fixture small enough to work out by hand, shared
// by the report tests and the acceptance run.

#include <cmath>
#include <filesystem>
#include <string>

#include "support.hpp"

namespace testing_support {

// Sentence 1: a b -> x y, gold 0-0 S, 1-1 S.
// Sentence 2: c d e -> u v w, gold 0-0 S, 1-0 P, 2-2 S; v has no link.
inline constexpr const char* kFixtureExport =
    R"({"id":1,"source":["a","b"],"target":["x","y"],"attention":[[0.8,0.2],[0.25,0.75]],"word_loss":[0.5,1.5]})"
    "\n"
    R"({"id":2,"source":["c","d","e"],"target":["u","v","w"],)"
    R"("attention":[[0.5,0.25,0.25],[0.1,0.6,0.3],[0.2,0.2,0.6]],"word_loss":[2.0,0.25,1.0]})"
    "\n";

inline constexpr const char* kFixtureGold = "0-0 S 1-1 S\n0-0 S 1-0 P 2-2 S\n";

inline constexpr const char* kFixtureTargetAnnotations =
    "x\tNOUN\t_\t0\ny\tVERB\t_\t0\n\nu\tNOUN\t_\t0\nv\tDET\t_\t0\nw\tVERB\t_\t0\n";

// "objd" merges into "obj" under the default role rules.
inline constexpr const char* kFixtureSourceAnnotations =
    "a\tNOUN\tsubj\t2\nb\tVERB\troot\t0\n\nc\tNOUN\tsubj\t2\nd\tVERB\troot\t0\ne\tNOUN\tobjd\t2\n";

struct FixturePaths {
  std::filesystem::path attention, gold, target_annotations, source_annotations;
};

inline FixturePaths write_analysis_fixture(const std::filesystem::path& dir) {
  FixturePaths p{dir / "fixture.jsonl", dir / "fixture.align", dir / "fixture_target.ann",
                 dir / "fixture_source.ann"};
  write_text(p.attention, kFixtureExport);
  write_text(p.gold, kFixtureGold);
  write_text(p.target_annotations, kFixtureTargetAnnotations);
  write_text(p.source_annotations, kFixtureSourceAnnotations);
  return p;
}

// Values worked out from the definitions, one token at a time.
struct FixtureExpectations {
  double loss_x = -std::log(0.8);
  double loss_y = -std::log(0.75);
  double loss_u = -(0.5 * std::log(0.5) + 0.5 * std::log(0.25));
  double loss_v = -(std::log(0.1) + std::log(0.6) + std::log(0.3)) / 3.0;  // uniform over three sources
  double loss_w = -std::log(0.6);
  double mean_attention_loss = (loss_x + loss_y + loss_u + loss_v + loss_w) / 5.0;
  double mean_word_prediction_loss = (0.5 + 1.5 + 2.0 + 0.25 + 1.0) / 5.0;
  double entropy_x = -(0.8 * std::log(0.8) + 0.2 * std::log(0.2));
  // Argmax links {0-0, 1-1} and {0-0, 1-1, 2-2}: four sure hits, four
  // possible hits, five candidates, four sure links.
  double aer = 1.0 - 8.0 / 9.0;
  double noun_mass_pct = 100.0 * (0.8 + 0.75) / 2.0;
  double verb_mass_pct = 100.0 * (0.75 + 0.6) / 2.0;
  double overall_mass_pct = 100.0 * (0.8 + 0.75 + 0.75 + 0.6) / 4.0;
  double noun_attention_loss = (loss_x + loss_u) / 2.0;
  // Mass outside the alignment: NOUN gets root 0.2 (x) and obj 0.25 (u);
  // VERB gets subj 0.25 (y), subj 0.2 and root 0.2 (w).
  double noun_root_share = 0.2 / 0.45;
  double noun_obj_share = 0.25 / 0.45;
  double verb_subj_share = 0.45 / 0.65;
  double verb_root_share = 0.2 / 0.65;
};

}  // namespace testing_support
