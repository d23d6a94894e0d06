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

// Analysis pipeline: joins an attention export with gold alignments and
// annotations, computes per-token measurements, and aggregates them into an
// AnalysisReport that serializes to JSON plus flat CSV tables.

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "attnalign/alignment.hpp"
#include "attnalign/attention_export.hpp"
#include "attnalign/corpus.hpp"
#include "attnalign/errors.hpp"
#include "attnalign/format.hpp"
#include "attnalign/metrics.hpp"

namespace attnalign {

inline constexpr std::string_view kReportSchema = "attnalign.analysis/v1";

struct AnalysisOptions {
  bool include_possible = true;
  std::size_t min_class_count = 2;
  RoleMergeRules role_rules = default_role_rules();
};

struct CorrelationSpec {
  std::string name;  // e.g. "word_prediction_loss~attention_loss"
  Measure x;
  Measure y;
};

/// The three pairings that get per-POS correlations.
inline std::vector<CorrelationSpec> report_correlations() {
  return {{"word_prediction_loss~attention_loss", Measure::word_prediction_loss, Measure::attention_loss},
          {"attention_entropy~attention_loss", Measure::attention_entropy, Measure::attention_loss},
          {"attention_entropy~word_prediction_loss", Measure::attention_entropy, Measure::word_prediction_loss}};
}

struct AnalysisReport {
  AnalysisOptions options;
  std::vector<TokenRecord> tokens;
  std::size_t sentences = 0;
  std::size_t unaligned_tokens = 0;
  double aer = 0.0;
  double mean_attention_loss = 0.0;
  double mean_word_prediction_loss = 0.0;
  double mean_attention_entropy = 0.0;
  std::map<std::string, PosSummary> pos_means;
  std::map<std::string, CorrelationTable> correlations;
  MassTable mass;
  std::optional<RoleTable> roles;
  std::vector<FlaggedLabel> unknown_pos;
};

struct AnalysisInputs {
  std::vector<AttentionRecord> records;
  std::vector<HardAlignmentSet> gold;                     // sentence id k at index k-1
  std::vector<SentenceAnnotation> target_annotations;     // sentence id k at index k-1
  std::optional<std::vector<SentenceAnnotation>> source_annotations;
};

namespace detail {

inline std::string id_list(const std::vector<std::size_t>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size() && i < 20; ++i) out += (i ? "," : "") + std::to_string(ids[i]);
  if (ids.size() > 20) out += ",...";
  return out;
}

}  // namespace detail

/// Every input must cover exactly the same sentence ids; throws
/// ConsistencyError listing the offending ids otherwise.
inline AnalysisReport analyze(const AnalysisInputs& in, const AnalysisOptions& opts = {}) {
  std::set<std::size_t> export_ids;
  for (const auto& r : in.records) {
    if (!export_ids.insert(r.id).second) throw ConsistencyError("sentence id " + std::to_string(r.id) + " exported twice");
  }
  auto check_cover = [&](std::size_t n, const char* what) {
    std::vector<std::size_t> missing_here, missing_export;
    for (auto id : export_ids) {
      if (id == 0 || id > n) missing_here.push_back(id);
    }
    for (std::size_t id = 1; id <= n; ++id) {
      if (!export_ids.count(id)) missing_export.push_back(id);
    }
    if (!missing_here.empty() || !missing_export.empty()) {
      std::string msg = std::string("sentence ids disagree between the attention export and the ") + what + ":";
      if (!missing_here.empty()) msg += " missing from " + std::string(what) + " [" + detail::id_list(missing_here) + "]";
      if (!missing_export.empty()) msg += " missing from export [" + detail::id_list(missing_export) + "]";
      throw ConsistencyError(msg);
    }
  };
  check_cover(in.gold.size(), "alignments");
  check_cover(in.target_annotations.size(), "target annotations");
  if (in.source_annotations) check_cover(in.source_annotations->size(), "source annotations");

  AnalysisReport rep;
  rep.options = opts;
  rep.sentences = in.records.size();
  AerCounts aer_counts;
  std::map<std::size_t, SourceRoles> roles;

  for (const auto& rec : in.records) {
    const auto& gold = in.gold[rec.id - 1];
    const auto& tann = in.target_annotations[rec.id - 1];
    if (tann.size() != rec.target.size()) {
      throw ConsistencyError("sentence " + std::to_string(rec.id) + ": " + std::to_string(tann.size()) +
                             " target annotation rows for " + std::to_string(rec.target.size()) + " tokens");
    }
    for (std::size_t i = 0; i < tann.size(); ++i) {
      if (!is_universal_tag(tann.pos[i])) rep.unknown_pos.push_back({rec.id, i, tann.pos[i]});
    }
    if (in.source_annotations) {
      const auto& sann = (*in.source_annotations)[rec.id - 1];
      if (sann.size() != rec.source.size()) {
        throw ConsistencyError("sentence " + std::to_string(rec.id) + ": " + std::to_string(sann.size()) +
                               " source annotation rows for " + std::to_string(rec.source.size()) + " tokens");
      }
      roles[rec.id] = {sann.roles, sann.pos};
    }
    for (const auto& l : gold.possible) {
      if (l.source >= rec.source.size() || l.target >= rec.target.size()) {
        throw ConsistencyError("sentence " + std::to_string(rec.id) + ": gold link " + std::to_string(l.source) + "-" +
                               std::to_string(l.target) + " outside the exported sentence");
      }
    }
    const SoftAlignment soft = to_soft(gold, rec.source.size(), rec.target.size(), opts.include_possible);
    aer_counts.add(attention_to_hard(rec.attention), gold);
    for (std::size_t t = 0; t < rec.target.size(); ++t) {
      TokenRecord tr;
      tr.sentence_id = rec.id;
      tr.position = t;
      tr.token = rec.target[t];
      tr.pos = tann.pos[t];
      tr.attention = rec.attention[t];
      tr.aligned = aligned_sources(gold, t, opts.include_possible);
      tr.attention_loss = attention_loss(soft.rows[t], tr.attention);
      tr.attention_entropy = attention_entropy(tr.attention);
      tr.word_prediction_loss = rec.word_loss[t];
      tr.mass = mass_on_alignment(tr.attention, tr.aligned);
      rep.unaligned_tokens += tr.mass.unaligned;
      rep.tokens.push_back(std::move(tr));
    }
  }
  if (!rep.tokens.empty()) {
    for (const auto& t : rep.tokens) {
      rep.mean_attention_loss += t.attention_loss;
      rep.mean_word_prediction_loss += t.word_prediction_loss;
      rep.mean_attention_entropy += t.attention_entropy;
    }
    const double n = static_cast<double>(rep.tokens.size());
    rep.mean_attention_loss /= n;
    rep.mean_word_prediction_loss /= n;
    rep.mean_attention_entropy /= n;
  }
  rep.aer = aer_counts.candidate + aer_counts.sure ? aer_counts.value() : 0.0;
  rep.pos_means = aggregate_by_pos(rep.tokens);
  for (const auto& spec : report_correlations()) {
    rep.correlations[spec.name] = correlate_by_pos(rep.tokens, spec.x, spec.y, opts.min_class_count);
  }
  rep.mass = mass_table(rep.tokens);
  if (in.source_annotations) rep.roles = role_distribution(rep.tokens, roles, opts.role_rules);
  return rep;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::ordered_json report_to_json(const AnalysisReport& rep) {
  using J = nlohmann::ordered_json;
  J j;
  j["schema"] = kReportSchema;
  j["settings"] = {{"include_possible", rep.options.include_possible},
                   {"min_class_count", rep.options.min_class_count},
                   {"log_base", "e"},
                   {"probability_floor", kProbabilityFloor},
                   {"aggregation", "micro-average over tokens"},
                   {"correlation_pooling", "pooled over all tokens of a POS class"},
                   {"overall_mass_weighting", "token-weighted"},
                   {"aer_pooling", "corpus-level link counts"}};
  j["totals"] = {{"sentences", rep.sentences},
                 {"tokens", rep.tokens.size()},
                 {"unaligned_tokens", rep.unaligned_tokens},
                 {"aer", rep.aer},
                 {"mean_attention_loss", rep.mean_attention_loss},
                 {"mean_word_prediction_loss", rep.mean_word_prediction_loss},
                 {"mean_attention_entropy", rep.mean_attention_entropy}};
  J means = J::object();
  for (const auto& [pos, s] : rep.pos_means) {
    means[pos] = {{"count", s.count},
                  {"attention_loss", s.attention_loss},
                  {"word_prediction_loss", s.word_prediction_loss},
                  {"attention_entropy", s.attention_entropy}};
  }
  j["pos_means"] = means;
  J corr = J::object();
  for (const auto& [name, table] : rep.correlations) {
    J reported = J::object();
    for (const auto& [pos, c] : table.reported) reported[pos] = {{"count", c.count}, {"rho", c.rho}};
    J flagged = J::array();
    for (const auto& f : table.flagged) flagged.push_back({{"pos", f.pos}, {"count", f.count}, {"reason", f.reason}});
    corr[name] = {{"reported", reported}, {"flagged", flagged}};
  }
  j["correlations"] = corr;
  J mass = J::object();
  auto mass_row = [](const MassRow& r) {
    return J{{"tokens", r.tokens},
             {"unaligned", r.unaligned},
             {"to_alignment_pct", r.to_alignment_pct},
             {"to_other_pct", r.to_other_pct}};
  };
  for (const auto& [pos, r] : rep.mass.by_pos) mass[pos] = mass_row(r);
  mass["Overall"] = mass_row(rep.mass.overall);
  j["mass"] = mass;
  if (rep.roles) {
    J roles = J::object();
    for (const auto& [pos, shares] : rep.roles->shares) {
      J s = J::object();
      for (const auto& [role, v] : shares) s[role] = v;
      roles[pos] = {{"non_alignment_mass", rep.roles->mass.at(pos)}, {"shares", s}};
    }
    j["roles"] = {{"by_pos", roles}, {"excluded_sentences", rep.roles->excluded_sentences}};
  } else {
    j["roles"] = nullptr;
  }
  J unknown = J::array();
  for (const auto& u : rep.unknown_pos) {
    unknown.push_back({{"sentence", u.sentence_id}, {"position", u.position}, {"pos", u.label}});
  }
  j["unknown_pos"] = unknown;
  return j;
}

/// Tables written next to report.json, keyed by file name.
inline std::map<std::string, std::string> report_tables(const AnalysisReport& rep) {
  std::map<std::string, std::string> files;
  {
    CsvWriter w({"sentence", "position", "token", "pos", "attention_loss", "attention_entropy",
                 "word_prediction_loss", "mass_to_alignment", "unaligned"});
    for (const auto& t : rep.tokens) {
      w.row({std::to_string(t.sentence_id), std::to_string(t.position), t.token, t.pos, format_real(t.attention_loss),
             format_real(t.attention_entropy), format_real(t.word_prediction_loss),
             format_real(t.mass.to_alignment), t.mass.unaligned ? "1" : "0"});
    }
    files["tokens.csv"] = w.str();
  }
  {
    CsvWriter w({"pos", "count", "attention_loss", "word_prediction_loss", "attention_entropy"});
    for (const auto& [pos, s] : rep.pos_means) {
      w.row({pos, std::to_string(s.count), format_real(s.attention_loss), format_real(s.word_prediction_loss),
             format_real(s.attention_entropy)});
    }
    files["pos_means.csv"] = w.str();
  }
  {
    CsvWriter w({"pair", "pos", "count", "rho", "status"});
    for (const auto& [name, table] : rep.correlations) {
      for (const auto& [pos, c] : table.reported) w.row({name, pos, std::to_string(c.count), format_real(c.rho), "ok"});
      for (const auto& f : table.flagged) w.row({name, f.pos, std::to_string(f.count), "", f.reason});
    }
    files["pos_correlations.csv"] = w.str();
  }
  {
    CsvWriter w({"pos", "tokens", "unaligned", "to_alignment_pct", "to_other_pct"});
    auto put = [&](const std::string& pos, const MassRow& r) {
      w.row({pos, std::to_string(r.tokens), std::to_string(r.unaligned), format_real(r.to_alignment_pct),
             format_real(r.to_other_pct)});
    };
    for (const auto& [pos, r] : rep.mass.by_pos) put(pos, r);
    put("Overall", rep.mass.overall);
    files["pos_mass.csv"] = w.str();
  }
  if (rep.roles) {
    CsvWriter w({"pos", "role", "share_pct"});
    for (const auto& [pos, shares] : rep.roles->shares) {
      std::vector<std::pair<std::string, double>> sorted(shares.begin(), shares.end());
      std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
      for (const auto& [role, v] : sorted) w.row({pos, role, format_real(100.0 * v)});
    }
    files["role_distribution.csv"] = w.str();
  }
  return files;
}

}  // namespace attnalign
