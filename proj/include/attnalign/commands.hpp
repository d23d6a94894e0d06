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

// Subcommands of the attnalign tool. run_cli() is the whole program minus
// process setup, so tests can drive it in-process.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "attnalign/alignment.hpp"
#include "attnalign/attention_export.hpp"
#include "attnalign/bleu.hpp"
#include "attnalign/checkpoint.hpp"
#include "attnalign/corpus.hpp"
#include "attnalign/errors.hpp"
#include "attnalign/format.hpp"
#include "attnalign/heatmap.hpp"
#include "attnalign/model.hpp"
#include "attnalign/report.hpp"
#include "attnalign/toy.hpp"
#include "attnalign/train.hpp"
#include "attnalign/version.hpp"

namespace attnalign {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Output helpers

inline void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << contents;
    if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
  }
  fs::rename(tmp, path);
}

/// Files are written into a sibling staging directory that is renamed into
/// place by commit(); an abandoned stage is removed.
class StagedDirectory {
 public:
  StagedDirectory(fs::path target, bool overwrite) : target_(std::move(target)), overwrite_(overwrite) {
    if (fs::exists(target_) && !overwrite_ && !(fs::is_directory(target_) && fs::is_empty(target_))) {
      throw ConfigError("output directory '" + target_.string() + "' exists and is not empty (use --overwrite)");
    }
    stage_ = target_;
    stage_ += ".partial";
    fs::remove_all(stage_);
    fs::create_directories(stage_);
  }
  StagedDirectory(const StagedDirectory&) = delete;
  StagedDirectory& operator=(const StagedDirectory&) = delete;
  ~StagedDirectory() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(stage_, ec);
    }
  }

  const fs::path& path() const noexcept { return stage_; }

  void write(const std::string& name, const std::string& contents) const {
    std::ofstream out(stage_ / name, std::ios::binary);
    out << contents;
    if (!out) throw std::runtime_error("failed writing '" + (target_ / name).string() + "'");
  }

  void commit() {
    if (fs::exists(target_)) fs::remove_all(target_);
    fs::rename(stage_, target_);
    committed_ = true;
  }

 private:
  fs::path target_;
  fs::path stage_;
  bool overwrite_ = false;
  bool committed_ = false;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline bool verbose() {
  const char* v = std::getenv("ATTNALIGN_VERBOSE");
  return v && *v && std::string_view(v) != "0";
}

// ---------------------------------------------------------------------------
// --config expansion
//
// A JSON object whose keys are long option names of the chosen subcommand.
// Keys already given on the command line are skipped, so flags override the
// file.

inline bool flag_given(const std::vector<std::string>& args, const std::string& flag) {
  for (const auto& a : args) {
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

inline std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw ConfigError("--config needs a path");
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (!path) return args;
  if (!fs::exists(*path)) throw ConfigError("--config: file '" + *path + "' does not exist");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(*path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("--config: " + std::string(e.what()));
  }
  if (!j.is_object()) throw ConfigError("--config: expected a JSON object");
  auto scalar = [&](const std::string& key, const nlohmann::json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer() || v.is_number_unsigned() || v.is_number_float()) return v.dump();
    throw ConfigError("--config: field '" + key + "' must be a string or number");
  };
  for (const auto& [key, value] : j.items()) {
    const std::string flag = "--" + key;
    if (flag_given(args, flag)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_array()) {
      for (const auto& v : value) {
        args.push_back(flag);
        args.push_back(scalar(key, v));
      }
    } else {
      args.push_back(flag);
      args.push_back(scalar(key, value));
    }
  }
  return args;
}

// ---------------------------------------------------------------------------
// Run configurations

struct TrainRun {
  std::string source, target, out;
  std::string preset = "desk";
  bool overwrite = false;
  std::size_t vocab_size = 50000;
  std::size_t max_len = 50;
  // Overrides; unset fields keep the preset's value.
  std::optional<std::size_t> dim, layers, epochs, batch_size, decay_start;
  std::optional<std::string> variant;
  std::optional<double> dropout, init_range, lr, clip, decay;
  std::optional<std::uint64_t> seed;
};

struct ForceDecodeRun {
  std::string checkpoint, source, target, out;
  double max_unknown_rate = 0.5;
};

struct AnalyzeRun {
  std::string attention, alignments, target_annotations, source_annotations, role_rules, out;
  bool sure_only = false;
  bool overwrite = false;
  std::size_t min_count = 2;
};

struct HeatmapRun {
  std::string attention, alignments, out;
  std::vector<std::size_t> sentences;
  bool overwrite = false;
};

struct AerRun {
  std::string gold, attention, candidate, forward, backward;
};

struct TranslateRun {
  std::string checkpoint, source, out;
  std::size_t max_len = 100;
};

struct BleuRun {
  std::string candidate, reference;
  bool smoothing = false;
};

struct ToyRun {
  std::size_t sentences = 2000;
  std::uint64_t seed = 1;
  std::string out;
  bool overwrite = false;
};

// ---------------------------------------------------------------------------
// Commands

inline Preset resolve_preset(const TrainRun& r) {
  Preset p = preset(r.preset);
  if (r.dim) p.model.dim = *r.dim;
  if (r.layers) p.model.layers = *r.layers;
  if (r.variant) p.model.variant = parse_variant(*r.variant);
  if (r.dropout) p.model.dropout = *r.dropout;
  if (r.init_range) p.model.init_range = *r.init_range;
  if (r.epochs) p.train.epochs = *r.epochs;
  if (r.batch_size) p.train.batch_size = *r.batch_size;
  if (r.lr) p.train.learning_rate = *r.lr;
  if (r.clip) p.train.clip_norm = *r.clip;
  if (r.decay) p.train.decay = *r.decay;
  if (r.decay_start) p.train.decay_start = *r.decay_start;
  if (r.seed) {
    p.model.seed = *r.seed;
    p.train.seed = *r.seed;
  }
  p.model.validate();
  p.train.validate();
  return p;
}

inline int cmd_train(const TrainRun& r, std::ostream& out) {
  Preset p = resolve_preset(r);
  if (r.vocab_size < Vocabulary::kReserved + 1) throw ConfigError("vocab-size must exceed the reserved tokens");
  const std::string source_text = read_file(r.source);
  const std::string target_text = read_file(r.target);
  auto pairs = filter_by_length(load_parallel(r.source, r.target), r.max_len);
  if (pairs.empty()) throw ConfigError("no sentence pairs within max-len " + std::to_string(r.max_len));
  std::vector<Tokens> src, tgt;
  for (const auto& sp : pairs) {
    src.push_back(sp.source);
    tgt.push_back(sp.target);
  }
  auto src_vocab = Vocabulary::build(src, r.vocab_size);
  auto tgt_vocab = Vocabulary::build(tgt, r.vocab_size);
  Model model(p.model, src_vocab, tgt_vocab);
  auto data = encode_pairs(pairs, src_vocab, tgt_vocab);

  StagedDirectory dir(r.out, r.overwrite);
  p.train.checkpoint_dir = dir.path().string();
  CsvWriter log({"epoch", "mean_token_loss", "learning_rate", "tokens"});
  nlohmann::ordered_json epochs = nlohmann::ordered_json::array();
  train(model, data, p.train, [&](const EpochStats& e) {
    log.row({std::to_string(e.epoch), format_real(e.mean_token_loss), format_real(e.learning_rate),
             std::to_string(e.tokens)});
    epochs.push_back({{"epoch", e.epoch}, {"mean_token_loss", e.mean_token_loss}, {"learning_rate", e.learning_rate}});
    out << "epoch " << e.epoch << " loss " << format_real(e.mean_token_loss) << '\n';
    if (verbose()) std::cerr << "  lr " << e.learning_rate << ", " << e.tokens << " tokens\n";
  });
  const std::string final_name = epoch_checkpoint_name(p.train.epochs);
  const std::string final_digest = fnv1a_hex(serialize_checkpoint(model));
  nlohmann::ordered_json manifest;
  manifest["tool"] = "attnalign";
  manifest["version"] = kVersion;
  manifest["preset"] = r.preset;
  manifest["seed"] = p.train.seed;
  manifest["model"] = config_to_json(model.config());
  manifest["training"] = {{"epochs", p.train.epochs},          {"batch_size", p.train.batch_size},
                          {"learning_rate", p.train.learning_rate}, {"clip_norm", p.train.clip_norm},
                          {"decay", p.train.decay},             {"decay_start", p.train.decay_start}};
  manifest["data"] = {{"source", r.source},
                      {"target", r.target},
                      {"source_digest", fnv1a_hex(source_text)},
                      {"target_digest", fnv1a_hex(target_text)},
                      {"pairs", pairs.size()},
                      {"max_len", r.max_len},
                      {"vocab_size", r.vocab_size}};
  manifest["epochs"] = epochs;
  manifest["final_checkpoint"] = final_name;
  manifest["final_digest"] = final_digest;
  dir.write("train_log.csv", log.str());
  dir.write("manifest.json", manifest.dump(2) + "\n");
  dir.commit();
  out << "final checkpoint " << (fs::path(r.out) / final_name).string() << " digest " << final_digest << '\n';
  return kExitOk;
}

inline int cmd_force_decode(const ForceDecodeRun& r, std::ostream& out) {
  Model model = load_checkpoint(r.checkpoint);
  auto pairs = load_parallel(r.source, r.target);
  std::size_t src_tokens = 0, src_unknown = 0, tgt_tokens = 0, tgt_unknown = 0;
  for (const auto& p : pairs) {
    src_tokens += p.source.size();
    tgt_tokens += p.target.size();
    for (const auto& t : p.source) src_unknown += !model.source_vocab().contains(t);
    for (const auto& t : p.target) tgt_unknown += !model.target_vocab().contains(t);
  }
  auto check = [&](std::size_t unknown, std::size_t total, const char* side) {
    if (total && static_cast<double>(unknown) > r.max_unknown_rate * static_cast<double>(total)) {
      throw ConfigError(std::string("vocabulary mismatch: ") + std::to_string(unknown) + " of " +
                        std::to_string(total) + " " + side + " tokens are not in the checkpoint vocabulary");
    }
  };
  check(src_unknown, src_tokens, "source");
  check(tgt_unknown, tgt_tokens, "target");
  std::vector<AttentionRecord> records;
  for (const auto& p : pairs) {
    if (p.source.empty() || p.target.empty()) {
      throw ParseError("sentence " + std::to_string(p.id) + " has an empty side", p.id);
    }
    ForcedDecoding fd = force_decode(model, p.source, p.target);
    records.push_back({p.id, p.source, p.target, fd.attention, fd.word_loss, fd.unknown});
    if (verbose()) std::cerr << "sentence " << p.id << " done\n";
  }
  std::ostringstream ss;
  write_attention_export(ss, records);
  write_file_atomic(r.out, ss.str());
  out << records.size() << " records written to " << r.out << '\n';
  return kExitOk;
}

inline RoleMergeRules load_role_rules(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("role-rules: " + std::string(e.what()));
  }
  RoleMergeRules rules;
  try {
    if (j.contains("punctuation_pos")) rules.punctuation_pos = j.at("punctuation_pos").get<std::set<std::string>>();
    if (j.contains("punctuation_role")) rules.punctuation_role = j.at("punctuation_role").get<std::string>();
    if (j.contains("groups")) rules.groups = j.at("groups").get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("role-rules: " + std::string(e.what()));
  }
  return rules;
}

inline AnalysisReport run_analysis(const AnalyzeRun& r) {
  AnalysisInputs in;
  in.records = load_attention_export(r.attention);
  in.gold = load_alignments(r.alignments);
  in.target_annotations = load_annotations(r.target_annotations);
  if (!r.source_annotations.empty()) in.source_annotations = load_annotations(r.source_annotations);
  AnalysisOptions opts;
  opts.include_possible = !r.sure_only;
  opts.min_class_count = r.min_count;
  if (!r.role_rules.empty()) opts.role_rules = load_role_rules(r.role_rules);
  return analyze(in, opts);
}

inline int cmd_analyze(const AnalyzeRun& r, std::ostream& out) {
  AnalysisReport rep = run_analysis(r);
  StagedDirectory dir(r.out, r.overwrite);
  dir.write("report.json", report_to_json(rep).dump(2) + "\n");
  for (const auto& [name, text] : report_tables(rep)) dir.write(name, text);
  dir.commit();
  out << "sentences " << rep.sentences << " tokens " << rep.tokens.size() << " aer " << format_real(rep.aer)
      << " attention_loss " << format_real(rep.mean_attention_loss) << '\n';
  return kExitOk;
}

inline int cmd_heatmap(const HeatmapRun& r, std::ostream& out) {
  auto records = load_attention_export(r.attention);
  std::vector<HardAlignmentSet> gold;
  if (!r.alignments.empty()) gold = load_alignments(r.alignments);
  std::map<std::size_t, const AttentionRecord*> by_id;
  for (const auto& rec : records) by_id[rec.id] = &rec;
  std::vector<std::size_t> wanted = r.sentences;
  if (wanted.empty()) {
    for (const auto& [id, rec] : by_id) wanted.push_back(id);
  }
  for (auto id : wanted) {
    if (!by_id.count(id)) {
      std::vector<std::size_t> ids;
      for (const auto& [k, v] : by_id) ids.push_back(k);
      throw ConfigError("unknown sentence id " + std::to_string(id) + "; available: " + detail::id_list(ids));
    }
  }
  StagedDirectory dir(r.out, r.overwrite);
  for (auto id : wanted) {
    const auto& rec = *by_id.at(id);
    HeatmapSpec spec{id, rec.source, rec.target, rec.attention, {}};
    if (!gold.empty()) {
      if (id > gold.size()) throw ConsistencyError("no gold alignment for sentence " + std::to_string(id));
      spec.gold = gold[id - 1].possible;
    }
    dir.write("sentence_" + std::to_string(id) + ".svg", render_heatmap_svg(spec));
  }
  dir.commit();
  out << wanted.size() << " heatmaps written to " << r.out << '\n';
  return kExitOk;
}

inline double corpus_aer(const std::vector<LinkSet>& candidates, const std::vector<HardAlignmentSet>& gold,
                         const std::string& what) {
  if (candidates.size() != gold.size()) {
    throw ConsistencyError(what + " has " + std::to_string(candidates.size()) + " sentences, gold has " +
                           std::to_string(gold.size()));
  }
  AerCounts counts;
  for (std::size_t i = 0; i < gold.size(); ++i) counts.add(candidates[i], gold[i]);
  return counts.value();
}

inline int cmd_aer(const AerRun& r, std::ostream& out) {
  if (r.attention.empty() && r.candidate.empty() && r.forward.empty()) {
    throw ConfigError("aer: give --attention, --candidate, or --forward with --backward");
  }
  if (r.forward.empty() != r.backward.empty()) throw ConfigError("aer: --forward and --backward go together");
  auto gold = load_alignments(r.gold);
  if (!r.attention.empty()) {
    auto records = load_attention_export(r.attention);
    std::vector<LinkSet> cands(gold.size());
    std::vector<bool> seen(gold.size(), false);
    for (const auto& rec : records) {
      if (rec.id == 0 || rec.id > gold.size() || seen[rec.id - 1]) {
        throw ConsistencyError("attention export sentence id " + std::to_string(rec.id) + " does not match the gold");
      }
      seen[rec.id - 1] = true;
      cands[rec.id - 1] = attention_to_hard(rec.attention);
    }
    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (!seen[i]) missing.push_back(i + 1);
    }
    if (!missing.empty()) throw ConsistencyError("attention export lacks sentences [" + detail::id_list(missing) + "]");
    out << "attention\t" << format_real(corpus_aer(cands, gold, "attention export")) << '\n';
  }
  if (!r.candidate.empty()) {
    std::vector<LinkSet> cands;
    for (auto& a : load_alignments(r.candidate)) cands.push_back(a.possible);
    out << "candidate\t" << format_real(corpus_aer(cands, gold, "candidate file")) << '\n';
  }
  if (!r.forward.empty()) {
    auto fwd = load_alignments(r.forward);
    auto bwd = load_alignments(r.backward);
    if (fwd.size() != bwd.size()) {
      throw ConsistencyError("forward has " + std::to_string(fwd.size()) + " sentences, backward has " +
                             std::to_string(bwd.size()));
    }
    std::vector<LinkSet> cands;
    for (std::size_t i = 0; i < fwd.size(); ++i) {
      std::size_t src_len = 0, tgt_len = 0;
      for (const auto* set : {&fwd[i].possible, &bwd[i].possible}) {
        for (const auto& l : *set) {
          src_len = std::max(src_len, l.source + 1);
          tgt_len = std::max(tgt_len, l.target + 1);
        }
      }
      cands.push_back(symmetrize_gdfa(fwd[i].possible, bwd[i].possible, src_len, tgt_len));
    }
    out << "gdfa\t" << format_real(corpus_aer(cands, gold, "directed alignments")) << '\n';
  }
  return kExitOk;
}

inline int cmd_translate(const TranslateRun& r, std::ostream& out) {
  Model model = load_checkpoint(r.checkpoint);
  std::ifstream in = open_input(r.source);
  std::string text, line;
  while (std::getline(in, line)) {
    Tokens src = split_tokens(line);
    if (src.empty()) {
      text += '\n';
      continue;
    }
    Translation t = translate_greedy(model, src, r.max_len);
    for (std::size_t i = 0; i < t.tokens.size(); ++i) text += (i ? " " : "") + t.tokens[i];
    text += '\n';
  }
  if (r.out.empty()) {
    out << text;
  } else {
    write_file_atomic(r.out, text);
  }
  return kExitOk;
}

inline std::vector<Tokens> load_tokenized(const std::string& path) {
  std::ifstream in = open_input(path);
  std::vector<Tokens> out;
  std::string line;
  while (std::getline(in, line)) out.push_back(split_tokens(line));
  return out;
}

inline int cmd_bleu(const BleuRun& r, std::ostream& out) {
  auto cand = load_tokenized(r.candidate);
  auto ref = load_tokenized(r.reference);
  if (cand.size() != ref.size()) {
    throw ConsistencyError("candidate has " + std::to_string(cand.size()) + " lines, reference has " +
                           std::to_string(ref.size()));
  }
  BleuStats s = bleu(cand, ref, r.smoothing);
  char buf[160];
  std::snprintf(buf, sizeof buf, "BLEU = %.2f (%.1f/%.1f/%.1f/%.1f, BP %.3f)", 100.0 * s.score,
                100.0 * s.precision(1), 100.0 * s.precision(2), 100.0 * s.precision(3), 100.0 * s.precision(4),
                s.brevity_penalty);
  out << buf << '\n';
  return kExitOk;
}

inline int cmd_make_toy(const ToyRun& r, std::ostream& out) {
  if (r.sentences < 1) throw ConfigError("sentences must be at least 1");
  ToyCorpus toy = make_toy_corpus(r.sentences, r.seed);
  std::string src, tgt;
  for (const auto& p : toy.pairs) {
    for (std::size_t i = 0; i < p.source.size(); ++i) src += (i ? " " : "") + p.source[i];
    for (std::size_t i = 0; i < p.target.size(); ++i) tgt += (i ? " " : "") + p.target[i];
    src += '\n';
    tgt += '\n';
  }
  std::ostringstream gold, sann, tann;
  write_alignments(gold, toy.gold);
  write_annotations(sann, toy.source_annotations);
  write_annotations(tann, toy.target_annotations);
  StagedDirectory dir(r.out, r.overwrite);
  dir.write("source.txt", src);
  dir.write("target.txt", tgt);
  dir.write("gold.align", gold.str());
  dir.write("source.ann", sann.str());
  dir.write("target.ann", tann.str());
  dir.commit();
  out << toy.pairs.size() << " sentence pairs written to " << r.out << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Entry point

inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Attention-based NMT training and attention/alignment analysis", "attnalign"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  TrainRun tr;
  auto* train_cmd = app.add_subcommand("train", "Train an attention model and write per-epoch checkpoints");
  train_cmd->add_option("--source", tr.source, "Tokenized source side, one sentence per line")
      ->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--target", tr.target, "Tokenized target side")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", tr.out, "Run directory (checkpoints, log, manifest)")->required();
  train_cmd->add_option("--preset", tr.preset, "desk or large")->check(CLI::IsMember({"desk", "large"}));
  train_cmd->add_option("--dim", tr.dim, "Embedding and hidden size");
  train_cmd->add_option("--layers", tr.layers, "Stacked LSTM layers");
  train_cmd->add_option("--variant", tr.variant, "input_feeding or non_recurrent")
      ->check(CLI::IsMember({"input_feeding", "non_recurrent"}));
  train_cmd->add_option("--dropout", tr.dropout);
  train_cmd->add_option("--init-range", tr.init_range, "Uniform initialization range");
  train_cmd->add_option("--epochs", tr.epochs);
  train_cmd->add_option("--batch-size", tr.batch_size);
  train_cmd->add_option("--lr", tr.lr, "Learning rate");
  train_cmd->add_option("--clip", tr.clip, "Global gradient norm limit");
  train_cmd->add_option("--decay", tr.decay, "Learning-rate factor per epoch after --decay-start");
  train_cmd->add_option("--decay-start", tr.decay_start);
  train_cmd->add_option("--seed", tr.seed);
  train_cmd->add_option("--vocab-size", tr.vocab_size, "Vocabulary cap per side, reserved tokens included");
  train_cmd->add_option("--max-len", tr.max_len, "Drop pairs with a longer side");
  train_cmd->add_flag("--overwrite", tr.overwrite, "Replace an existing run directory");

  ForceDecodeRun fr;
  auto* fd_cmd = app.add_subcommand("force-decode", "Export attention and word losses along reference translations");
  fd_cmd->add_option("--checkpoint", fr.checkpoint)->required()->check(CLI::ExistingFile);
  fd_cmd->add_option("--source", fr.source)->required()->check(CLI::ExistingFile);
  fd_cmd->add_option("--target", fr.target)->required()->check(CLI::ExistingFile);
  fd_cmd->add_option("--out", fr.out, "Attention export (JSON lines)")->required();
  fd_cmd->add_option("--max-unknown-rate", fr.max_unknown_rate,
                     "Fail when a larger share of either side is out of vocabulary");

  AnalyzeRun ar;
  auto* an_cmd = app.add_subcommand("analyze", "Compare exported attention with gold alignments");
  an_cmd->add_option("--attention", ar.attention, "Attention export")->required()->check(CLI::ExistingFile);
  an_cmd->add_option("--alignments", ar.alignments, "Gold alignments")->required()->check(CLI::ExistingFile);
  an_cmd->add_option("--target-annotations", ar.target_annotations)->required()->check(CLI::ExistingFile);
  an_cmd->add_option("--source-annotations", ar.source_annotations, "Enables the dependency-role table")
      ->check(CLI::ExistingFile);
  an_cmd->add_option("--role-rules", ar.role_rules, "JSON role merge rules")->check(CLI::ExistingFile);
  an_cmd->add_option("--min-count", ar.min_count, "Smallest POS class that gets a correlation");
  an_cmd->add_flag("--sure-only", ar.sure_only, "Ignore possible links when building soft alignments");
  an_cmd->add_option("--out", ar.out, "Report directory")->required();
  an_cmd->add_flag("--overwrite", ar.overwrite);

  HeatmapRun hr;
  auto* hm_cmd = app.add_subcommand("heatmap", "Render attention matrices as SVG");
  hm_cmd->add_option("--attention", hr.attention)->required()->check(CLI::ExistingFile);
  hm_cmd->add_option("--alignments", hr.alignments, "Gold links to outline")->check(CLI::ExistingFile);
  hm_cmd->add_option("--sentence", hr.sentences, "Sentence id (repeatable); default all");
  hm_cmd->add_option("--out", hr.out)->required();
  hm_cmd->add_flag("--overwrite", hr.overwrite);

  AerRun er;
  auto* aer_cmd = app.add_subcommand("aer", "Alignment error rate against gold alignments");
  aer_cmd->add_option("--gold", er.gold)->required()->check(CLI::ExistingFile);
  aer_cmd->add_option("--attention", er.attention, "Attention export; argmax per target word")
      ->check(CLI::ExistingFile);
  aer_cmd->add_option("--candidate", er.candidate, "Hard alignment file")->check(CLI::ExistingFile);
  aer_cmd->add_option("--forward", er.forward, "Source-to-target directed alignments")->check(CLI::ExistingFile);
  aer_cmd->add_option("--backward", er.backward, "Target-to-source directed alignments")->check(CLI::ExistingFile);

  TranslateRun xr;
  auto* tr_cmd = app.add_subcommand("translate", "Greedy decoding");
  tr_cmd->add_option("--checkpoint", xr.checkpoint)->required()->check(CLI::ExistingFile);
  tr_cmd->add_option("--source", xr.source)->required()->check(CLI::ExistingFile);
  tr_cmd->add_option("--out", xr.out, "Output file; default stdout");
  tr_cmd->add_option("--max-len", xr.max_len);

  BleuRun br;
  auto* bl_cmd = app.add_subcommand("bleu", "Corpus BLEU of tokenized output");
  bl_cmd->add_option("--candidate", br.candidate)->required()->check(CLI::ExistingFile);
  bl_cmd->add_option("--reference", br.reference)->required()->check(CLI::ExistingFile);
  bl_cmd->add_flag("--smoothing", br.smoothing, "Add-one smoothing for n > 1");

  ToyRun yr;
  auto* toy_cmd = app.add_subcommand("make-toy", "Write the synthetic lexicon-translation corpus");
  toy_cmd->add_option("--sentences", yr.sentences);
  toy_cmd->add_option("--seed", yr.seed);
  toy_cmd->add_option("--out", yr.out)->required();
  toy_cmd->add_flag("--overwrite", yr.overwrite);

  try {
    args = expand_config(std::move(args));
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const ConfigError& e) {
    err << "attnalign: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(tr, out);
    if (*fd_cmd) return cmd_force_decode(fr, out);
    if (*an_cmd) return cmd_analyze(ar, out);
    if (*hm_cmd) return cmd_heatmap(hr, out);
    if (*aer_cmd) return cmd_aer(er, out);
    if (*tr_cmd) return cmd_translate(xr, out);
    if (*bl_cmd) return cmd_bleu(br, out);
    if (*toy_cmd) return cmd_make_toy(yr, out);
  } catch (const ConfigError& e) {
    err << "attnalign: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "attnalign: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace attnalign
