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


// Acceptance run: checks each release criterion end to end and prints one
// PASS/FAIL line per criterion. Exits nonzero if any criterion fails.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "attnalign/commands.hpp"
#include "attnalign/report.hpp"
#include "attnalign/toy.hpp"
#include "attnalign/train.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace attnalign;
using namespace testing_support;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Collects failed checks with a short description of the first few.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    ++total_;
    if (ok) return;
    ++failed_;
    if (failed_ <= 3) notes_ += (notes_.empty() ? "" : "; ") + what;
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream ss;
    ss << what << ": got " << got << " want " << want;
    expect(std::abs(got - want) <= tol, ss.str());
  }
  bool ok() const { return failed_ == 0; }
  std::string summary() const {
    return ok() ? std::to_string(total_) + " checks"
                : std::to_string(failed_) + "/" + std::to_string(total_) + " checks failed: " + notes_;
  }

 private:
  std::size_t total_ = 0, failed_ = 0;
  std::string notes_;
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---- gradient fidelity ---------------------------------------------------

Outcome gradient_fidelity() {
  const auto start = Clock::now();
  Rng rng(2024);
  Checks c;
  auto fd = [&](const std::string& name, ParameterSet& ps, const LossBuilder& build) {
    auto r = check_gradients(ps, build);
    c.expect(r.checked > 0 && r.worst < 1e-4, name + " rel. error " + std::to_string(r.worst) + " at " + r.where);
  };
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t rows = 1 + rng.below(3), cols = 1 + rng.below(4), inner = 1 + rng.below(3);
    const auto seed = rng.next();
    {
      ParameterSet ps;
      ps.add("a", random_tensor(rng, rows, inner));
      ps.add("b", random_tensor(rng, inner, cols));
      ps.add("bias", random_tensor(rng, 1, cols));
      fd("matmul/add_bias", ps, [&](Tape& t) {
        Rng w(seed);
        return weighted_total(ad::add_bias(ad::matmul(t.parameter(ps[0]), t.parameter(ps[1])), t.parameter(ps[2])),
                              w);
      });
    }
    {
      ParameterSet ps;
      ps.add("a", random_tensor(rng, rows, cols, -2, 2));
      ps.add("b", random_tensor(rng, rows, cols, -2, 2));
      fd("elementwise", ps, [&](Tape& t) {
        Rng w(seed);
        Var a = t.parameter(ps[0]), b = t.parameter(ps[1]);
        return weighted_total(ad::add(ad::mul(ad::sigmoid(a), ad::tanh(b)), ad::scale(a, -0.6)), w);
      });
    }
    {
      ParameterSet ps;
      ps.add("a", random_tensor(rng, rows, cols));
      ps.add("b", random_tensor(rng, rows, inner));
      fd("concat/slice", ps, [&](Tape& t) {
        Rng w(seed);
        Var cat = ad::concat_cols({t.parameter(ps[0]), t.parameter(ps[1])});
        return weighted_total(ad::tanh(ad::slice_cols(cat, cols / 2, cols - cols / 2 + inner)), w);
      });
    }
    {
      ParameterSet ps;
      ps.add("table", random_tensor(rng, 5, cols));
      std::vector<std::size_t> ids = {rng.below(5), rng.below(5), rng.below(5)};
      fd("embedding", ps, [&](Tape& t) {
        Rng w(seed);
        return weighted_total(ad::tanh(ad::embedding(t.parameter(ps[0]), ids)), w);
      });
    }
    {
      ParameterSet ps;
      ps.add("scores", random_tensor(rng, rows, cols + 1, -3, 3));
      std::vector<bool> mask(rows * (cols + 1));
      for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = rng.bernoulli(0.7);
      for (std::size_t r = 0; r < rows; ++r) mask[r * (cols + 1)] = true;
      fd("masked_softmax", ps, [&](Tape& t) {
        Rng w(seed);
        return weighted_total(ad::masked_softmax(t.parameter(ps[0]), mask), w);
      });
    }
    {
      ParameterSet ps;
      for (std::size_t i = 0; i < 3; ++i) ps.add("m" + std::to_string(i), random_tensor(rng, rows, cols));
      ps.add("query", random_tensor(rng, rows, cols));
      fd("attention", ps, [&](Tape& t) {
        Rng w(seed);
        std::vector<Var> mem = {t.parameter(ps[0]), t.parameter(ps[1]), t.parameter(ps[2])};
        Var weights = ad::masked_softmax(ad::attention_scores(mem, t.parameter(ps[3])), std::vector<bool>(rows * 3, true));
        return weighted_total(ad::weighted_sum(mem, weights), w);
      });
    }
    {
      ParameterSet ps;
      ps.add("a", random_tensor(rng, rows, cols));
      ps.add("b", random_tensor(rng, rows, cols));
      std::vector<bool> keep(rows);
      for (std::size_t r = 0; r < rows; ++r) keep[r] = rng.bernoulli(0.5);
      const auto mask_seed = rng.next();
      fd("select_rows/dropout", ps, [&](Tape& t) {
        Rng w(seed);
        Var s = ad::select_rows(keep, t.parameter(ps[0]), t.parameter(ps[1]));
        return weighted_total(ad::dropout(s, 0.3, mask_seed, true), w);
      });
    }
    {
      ParameterSet ps;
      ps.add("logits", random_tensor(rng, rows, cols + 1, -3, 3));
      std::vector<std::size_t> targets(rows);
      std::vector<double> weights(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        targets[r] = rng.below(cols + 1);
        weights[r] = rng.bernoulli(0.8) ? 1.0 : 0.0;
      }
      fd("nll_loss", ps, [&](Tape& t) { return ad::nll_loss(t.parameter(ps[0]), targets, weights); });
    }
    {
      ParameterSet ps;
      ps.add("x", random_tensor(rng, rows, inner));
      ps.add("h", random_tensor(rng, rows, cols));
      ps.add("c", random_tensor(rng, rows, cols));
      ps.add("w", random_tensor(rng, inner + cols, 4 * cols));
      ps.add("b", random_tensor(rng, 1, 4 * cols));
      fd("lstm_cell", ps, [&](Tape& t) {
        Rng w(seed);
        LstmState s = lstm_cell(t.parameter(ps[0]), t.parameter(ps[1]), t.parameter(ps[2]), t.parameter(ps[3]),
                                t.parameter(ps[4]));
        return ad::add(weighted_total(s.hidden, w), weighted_total(s.cell, w));
      });
    }
  }
  // Whole model, two decoder steps (one target token and the end marker).
  for (auto variant : {AttentionVariant::input_feeding, AttentionVariant::non_recurrent}) {
    ModelConfig cfg;
    cfg.dim = 3;
    cfg.layers = 2;
    cfg.variant = variant;
    cfg.dropout = 0.0;
    cfg.init_range = 0.4;
    Model model(cfg, Vocabulary::build({{"a", "b", "c"}}, 10), Vocabulary::build({{"x", "y"}}, 10));
    EncodedPair pair{1, {4, 6, 5}, {5}};
    Batch batch = make_batch({&pair});
    fd("model/" + to_string(variant), model.params(), [&](Tape& tape) {
      ModelVars m = bind(tape, model);
      return batch_loss(m, batch, RunMode{}).total;
    });
  }
  const double secs = seconds_since(start);
  c.expect(secs < 60.0, "runtime " + std::to_string(secs) + " s exceeds 60 s");
  return {c.ok(), c.summary() + ", " + std::to_string(secs) + " s"};
}

// ---- distribution invariants ---------------------------------------------

Outcome distribution_invariants() {
  Rng rng(99);
  Checks c;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 1 + rng.below(12);
    std::vector<double> scores(n);
    for (auto& s : scores) s = rng.uniform(-8, 8);
    std::vector<bool> mask(n);
    for (std::size_t i = 0; i < n; ++i) mask[i] = rng.bernoulli(0.8);
    mask[rng.below(n)] = true;
    const auto attention = masked_softmax(scores, mask);

    HardAlignmentSet gold;
    const std::size_t links = rng.below(4);
    for (std::size_t k = 0; k < links; ++k) {
      if (rng.bernoulli(0.5)) {
        gold.add_sure({rng.below(n), 0});
      } else {
        gold.add_possible({rng.below(n), 0});
      }
    }
    const auto soft = to_soft(gold, n, 1).rows[0];

    double sa = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sa += attention[i];
      ss += soft[i];
    }
    c.near(sa, 1.0, 1e-9, "attention row sum");
    c.near(ss, 1.0, 1e-9, "soft row sum");
    for (const auto* row : {&attention, &soft}) {
      const double h = attention_entropy(*row);
      c.expect(h >= 0.0 && h <= std::log(static_cast<double>(n)) + 1e-12, "entropy outside [0, ln n]");
    }
    const double self = attention_loss(soft, soft);
    const double cross = attention_loss(soft, attention);
    c.expect(cross >= self - 1e-12, "Gibbs inequality violated");
    double diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) diff = std::max(diff, std::abs(soft[i] - attention[i]));
    if (cross - self < 1e-10) c.expect(diff < 1e-4, "near-zero gap for distinct distributions");
    c.expect(std::abs(attention_loss(attention, attention) - attention_entropy(attention)) < 1e-12,
             "self loss differs from entropy");
  }
  return {c.ok(), c.summary() + " over 10000 rows"};
}

// ---- oracle equivalence --------------------------------------------------

Outcome oracle_equivalence() {
  Checks c;
  // AER: every candidate and every (S, P) with S a subset of P on a 2x2 grid.
  std::size_t aer_cases = 0;
  for (unsigned a = 0; a < 16; ++a) {
    for (unsigned sure = 0; sure < 16; ++sure) {
      for (unsigned extra = 0; extra < 16; ++extra) {
        if (extra & sure) continue;
        const LinkSet A = links_from_mask(a, 2), S = links_from_mask(sure, 2), P = links_from_mask(extra, 2);
        if (A.empty() && S.empty()) continue;
        HardAlignmentSet gold;
        for (const auto& l : S) gold.add_sure(l);
        for (const auto& l : P) gold.add_possible(l);
        c.near(aer(A, gold), aer_oracle(A, S, P), 1e-12, "AER");
        ++aer_cases;
      }
    }
  }
  // Spearman: every pair of length-4 vectors over {0, 1, 2}.
  std::size_t rho_cases = 0;
  auto vec = [](unsigned code) {
    std::vector<double> v(4);
    for (auto& x : v) {
      x = code % 3;
      code /= 3;
    }
    return v;
  };
  for (unsigned i = 0; i < 81; ++i) {
    for (unsigned j = 0; j < 81; ++j) {
      const auto xs = vec(i), ys = vec(j);
      const auto got = spearman(xs, ys);
      const bool constant = i == 0 || i == 40 || i == 80 || j == 0 || j == 40 || j == 80;
      if (constant) {
        c.expect(!got.has_value(), "Spearman defined for a constant vector");
      } else {
        c.expect(got.has_value(), "Spearman undefined");
        if (got) c.near(*got, spearman_oracle(xs, ys), 1e-12, "Spearman");
      }
      ++rho_cases;
    }
  }
  // Symmetrization: every pair of directed alignments on a 3x3 grid.
  std::size_t gdfa_mismatch = 0;
  for (unsigned f = 0; f < 512; ++f) {
    const LinkSet fwd = links_from_mask(f, 3);
    for (unsigned b = 0; b < 512; ++b) {
      const LinkSet bwd = links_from_mask(b, 3);
      if (symmetrize_gdfa(fwd, bwd, 3, 3) != gdfa_oracle(fwd, bwd, 3, 3)) ++gdfa_mismatch;
    }
  }
  c.expect(gdfa_mismatch == 0, std::to_string(gdfa_mismatch) + " symmetrization mismatches");
  // Hard to soft: every one- and two-link set on a 3x3 grid, sure or possible.
  std::size_t soft_cases = 0;
  for (unsigned m = 1; m < 512; ++m) {
    if (std::popcount(m) > 2) continue;
    for (bool possible : {false, true}) {
      const LinkSet links = links_from_mask(m, 3);
      HardAlignmentSet gold;
      for (const auto& l : links) {
        if (possible) {
          gold.add_possible(l);
        } else {
          gold.add_sure(l);
        }
      }
      const auto got = to_soft(gold, 3, 3).rows;
      const auto want = soft_oracle(links, 3, 3);
      for (std::size_t t = 0; t < 3; ++t) {
        for (std::size_t s = 0; s < 3; ++s) c.near(got[t][s], want[t][s], 1e-12, "soft alignment");
      }
      ++soft_cases;
    }
  }
  // Attention loss and entropy against the direct sums on small rows.
  Rng rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + rng.below(4);
    const auto p = random_distribution(rng, n), q = random_distribution(rng, n);
    double loss = 0.0, h = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      loss -= p[i] * std::log(q[i]);
      h -= q[i] * std::log(q[i]);
    }
    c.near(attention_loss(p, q), loss, 1e-12, "attention loss");
    c.near(attention_entropy(q), h, 1e-12, "entropy");
  }
  c.near(attention_loss({0.5, 0.5}, {0.25, 0.75}), -0.5 * std::log(0.25) - 0.5 * std::log(0.75), 1e-12,
         "attention loss hand case");
  c.near(attention_entropy({0.25, 0.25, 0.25, 0.25}), std::log(4.0), 1e-12, "entropy hand case");
  return {c.ok(), c.summary() + " (" + std::to_string(aer_cases) + " AER, " + std::to_string(rho_cases) +
                      " Spearman, 262144 symmetrization, " + std::to_string(soft_cases) + " soft-alignment cases)"};
}

// ---- soft alignment fixtures ---------------------------------------------

Outcome soft_alignment_fixtures() {
  Checks c;
  HardAlignmentSet two;
  two.add_sure({2, 0});
  two.add_sure({5, 0});
  const auto row = to_soft(two, 6, 1).rows[0];
  c.expect(row == std::vector<double>{0, 0, 0.5, 0, 0, 0.5}, "two-link row is not 0.5/0.5");
  const auto uniform = to_soft(HardAlignmentSet{}, 4, 1).rows[0];
  c.expect(uniform == std::vector<double>{0.25, 0.25, 0.25, 0.25}, "unaligned row is not uniform");
  return {c.ok(), c.summary()};
}

// ---- overfit sanity ------------------------------------------------------

Outcome overfit_sanity() {
  const auto start = Clock::now();
  Checks c;
  const ToyCorpus toy = make_toy_corpus(1, 11);
  const auto& pair = toy.pairs[0];
  Preset p = preset("desk");
  p.train.epochs = 200;
  p.train.batch_size = 1;
  Model model(p.model, Vocabulary::build({pair.source}, 1000), Vocabulary::build({pair.target}, 1000));
  TrainLog log = train(model, encode_pairs(toy.pairs, model.source_vocab(), model.target_vocab()), p.train);
  const double loss = log.epochs.back().mean_token_loss;
  c.expect(loss < 0.1, "final loss " + std::to_string(loss));
  Translation out = translate_greedy(model, pair.source, 2 * pair.target.size() + 5);
  c.expect(out.tokens == pair.target, "greedy output differs from the training target");
  const double secs = seconds_since(start);
  c.expect(secs < 120.0, "runtime " + std::to_string(secs) + " s exceeds 120 s");
  return {c.ok(), c.summary() + ", loss " + format_real(loss) + ", " + std::to_string(secs) + " s"};
}

// ---- toy task ------------------------------------------------------------

constexpr std::size_t kToyTrain = 2000;
constexpr std::size_t kToyHeldOut = 200;

struct ToyResult {
  double aer = 0.0;
  double attention_loss = 0.0;
  double seconds = 0.0;
};

// Trains on 2,000 synthetic pairs and scores attention on 200 held-out
// pairs drawn from the same generator.
ToyResult run_toy(const ToyCorpus& toy, AttentionVariant variant, std::uint64_t seed) {
  const auto start = Clock::now();
  std::vector<SentencePair> train_pairs(toy.pairs.begin(), toy.pairs.begin() + kToyTrain);
  std::vector<Tokens> src, tgt;
  for (const auto& sp : train_pairs) {
    src.push_back(sp.source);
    tgt.push_back(sp.target);
  }
  Preset p = preset("desk");
  p.model.variant = variant;
  p.model.seed = seed;
  p.train.seed = seed;
  Model model(p.model, Vocabulary::build(src, 50000), Vocabulary::build(tgt, 50000));
  train(model, encode_pairs(train_pairs, model.source_vocab(), model.target_vocab()), p.train);

  AnalysisInputs in;
  for (std::size_t k = 0; k < kToyHeldOut; ++k) {
    const std::size_t i = kToyTrain + k;
    const auto& sp = toy.pairs[i];
    ForcedDecoding fd = force_decode(model, sp.source, sp.target);
    in.records.push_back({k + 1, sp.source, sp.target, fd.attention, fd.word_loss, fd.unknown});
    in.gold.push_back(toy.gold[i]);
    in.target_annotations.push_back(toy.target_annotations[i]);
  }
  AnalysisReport rep = analyze(in);
  return {rep.aer, rep.mean_attention_loss, seconds_since(start)};
}

struct ToyRuns {
  std::map<std::pair<AttentionVariant, std::uint64_t>, ToyResult> results;
  std::string error;
};

ToyRuns& toy_runs() {
  static ToyRuns runs = [] {
    ToyRuns r;
    try {
      const ToyCorpus toy = make_toy_corpus(kToyTrain + kToyHeldOut, 2026);
      for (std::uint64_t seed : {1, 2, 3}) {
        for (auto variant : {AttentionVariant::input_feeding, AttentionVariant::non_recurrent}) {
          ToyResult res = run_toy(toy, variant, seed);
          std::printf("  toy %s seed %llu: AER %.4f, attention loss %.4f, %.0f s\n", to_string(variant).c_str(),
                      static_cast<unsigned long long>(seed), res.aer, res.attention_loss, res.seconds);
          std::fflush(stdout);
          r.results[{variant, seed}] = res;
        }
      }
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    return r;
  }();
  return runs;
}

Outcome toy_attention_quality() {
  const auto& runs = toy_runs();
  if (!runs.error.empty()) return {false, runs.error};
  const ToyResult& r = runs.results.at({AttentionVariant::input_feeding, 1});
  Checks c;
  c.expect(r.aer < 0.15, "AER " + std::to_string(r.aer));
  c.expect(r.seconds < 900.0, "runtime " + std::to_string(r.seconds) + " s exceeds 15 min");
  return {c.ok(), c.summary() + ", input-feeding AER " + format_real(r.aer) + " in " +
                      std::to_string(static_cast<int>(r.seconds)) + " s"};
}

Outcome variant_ordering() {
  const auto& runs = toy_runs();
  if (!runs.error.empty()) return {false, runs.error};
  double aer[2] = {0, 0}, loss[2] = {0, 0};
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto& feed = runs.results.at({AttentionVariant::input_feeding, seed});
    const auto& plain = runs.results.at({AttentionVariant::non_recurrent, seed});
    aer[0] += feed.aer / 3;
    aer[1] += plain.aer / 3;
    loss[0] += feed.attention_loss / 3;
    loss[1] += plain.attention_loss / 3;
  }
  Checks c;
  c.expect(aer[0] <= aer[1], "input-feeding AER above non-recurrent");
  c.expect(loss[0] <= loss[1], "input-feeding attention loss above non-recurrent");
  char buf[256];
  std::snprintf(buf, sizeof buf, "mean AER %.4f vs %.4f, mean attention loss %.4f vs %.4f (input-feeding vs non-recurrent)",
                aer[0], aer[1], loss[0], loss[1]);
  return {c.ok(), c.summary() + ", " + buf};
}

// ---- pipeline fidelity ---------------------------------------------------

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(read_text(path));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    rows.push_back(fields);
  }
  return rows;
}

Outcome pipeline_fidelity() {
  TempDir dir;
  const auto f = write_analysis_fixture(dir.path());
  const FixtureExpectations want;
  Checks c;
  std::string reports[2];
  for (int run = 0; run < 2; ++run) {
    const auto out = dir / ("report" + std::to_string(run));
    std::ostringstream so, se;
    const int code = run_cli({"analyze", "--attention", f.attention.string(), "--alignments", f.gold.string(),
                              "--target-annotations", f.target_annotations.string(), "--source-annotations",
                              f.source_annotations.string(), "--out", out.string()},
                             so, se);
    c.expect(code == 0, "analyze exited " + std::to_string(code) + ": " + se.str());
    if (code != 0) return {false, c.summary()};
    for (const char* name : {"report.json", "tokens.csv", "pos_means.csv", "pos_correlations.csv", "pos_mass.csv",
                             "role_distribution.csv"}) {
      reports[run] += read_text(out / name);
    }
  }
  c.expect(reports[0] == reports[1], "reruns differ");

  const auto tokens = read_csv(dir / "report0" / "tokens.csv");
  c.expect(tokens.size() == 6, "tokens.csv should have 5 rows");
  if (tokens.size() == 6) {
    const double losses[] = {want.loss_x, want.loss_y, want.loss_u, want.loss_v, want.loss_w};
    const double mass[] = {0.8, 0.75, 0.75, 0.0, 0.6};
    for (std::size_t i = 0; i < 5; ++i) {
      c.near(std::stod(tokens[i + 1][4]), losses[i], 1e-9, "token attention loss");
      c.near(std::stod(tokens[i + 1][7]), mass[i], 1e-9, "token mass");
    }
    c.near(std::stod(tokens[1][5]), want.entropy_x, 1e-9, "token entropy");
    c.expect(tokens[4][8] == "1", "unaligned token not marked");
  }
  const auto j = nlohmann::json::parse(read_text(dir / "report0" / "report.json"));
  c.near(j["totals"]["aer"].get<double>(), want.aer, 1e-9, "AER");
  c.near(j["totals"]["mean_attention_loss"].get<double>(), want.mean_attention_loss, 1e-9, "mean attention loss");
  c.near(j["totals"]["mean_word_prediction_loss"].get<double>(), want.mean_word_prediction_loss, 1e-9,
         "mean word loss");
  c.near(j["pos_means"]["NOUN"]["attention_loss"].get<double>(), want.noun_attention_loss, 1e-9, "NOUN mean");
  c.near(j["mass"]["NOUN"]["to_alignment_pct"].get<double>(), want.noun_mass_pct, 1e-9, "NOUN mass");
  c.near(j["mass"]["VERB"]["to_alignment_pct"].get<double>(), want.verb_mass_pct, 1e-9, "VERB mass");
  c.near(j["mass"]["Overall"]["to_alignment_pct"].get<double>(), want.overall_mass_pct, 1e-9, "overall mass");
  const auto& roles = j["roles"]["by_pos"];
  c.near(roles["NOUN"]["shares"]["root"].get<double>(), want.noun_root_share, 1e-9, "NOUN root share");
  c.near(roles["NOUN"]["shares"]["obj"].get<double>(), want.noun_obj_share, 1e-9, "NOUN obj share");
  c.near(roles["VERB"]["shares"]["subj"].get<double>(), want.verb_subj_share, 1e-9, "VERB subj share");
  c.near(roles["VERB"]["shares"]["root"].get<double>(), want.verb_root_share, 1e-9, "VERB root share");
  return {c.ok(), c.summary()};
}

// ---- Spearman endpoints --------------------------------------------------

Outcome spearman_endpoints() {
  Checks c;
  std::vector<double> xs, up, down;
  for (int i = 0; i < 20; ++i) {
    xs.push_back(i);
    up.push_back(std::exp(0.3 * i));
    down.push_back(-i * i);
  }
  c.near(spearman(xs, up).value_or(0.0), 1.0, 1e-12, "increasing");
  c.near(spearman(xs, down).value_or(0.0), -1.0, 1e-12, "decreasing");
  const std::vector<double> tx = {1, 2, 2, 3, 3, 3, 5}, ty = {0.5, 0.1, 0.1, 0.9, 0.4, 0.4, 0.2};
  c.near(spearman(tx, ty).value_or(99.0), spearman_oracle(tx, ty), 1e-12, "ties");
  return {c.ok(), c.summary()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient fidelity", gradient_fidelity},
      {"distribution invariants", distribution_invariants},
      {"oracle equivalence", oracle_equivalence},
      {"soft alignment fixtures", soft_alignment_fixtures},
      {"overfit sanity", overfit_sanity},
      {"toy attention quality", toy_attention_quality},
      {"input feeding vs non-recurrent", variant_ordering},
      {"pipeline fidelity", pipeline_fidelity},
      {"spearman endpoints", spearman_endpoints},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failures);
  return failures == 0 ? 0 : 1;
}
