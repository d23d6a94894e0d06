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

// Synthetic lexicon-translation task with known gold alignments.
//
// Source sentences come from a small grammar over word classes. Each source
// word has exactly one target translation; the target reorders locally
// (adjective-noun becomes noun-adjective, verb-adverb becomes adverb-verb).
// Every target word is linked to its source word; the sentence-final
// punctuation link is marked possible, all others sure. Both sides come
// with universal POS tags, and the source side with dependency roles.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "attnalign/corpus.hpp"
#include "attnalign/random.hpp"

namespace attnalign {

struct ToyCorpus {
  std::vector<SentencePair> pairs;
  std::vector<HardAlignmentSet> gold;
  std::vector<SentenceAnnotation> source_annotations;
  std::vector<SentenceAnnotation> target_annotations;
};

struct ToyOptions {
  std::size_t determiners = 4;
  std::size_t adjectives = 8;
  std::size_t nouns = 20;
  std::size_t verbs = 10;
  std::size_t adverbs = 4;
  std::size_t adpositions = 4;
  std::size_t conjunctions = 2;
  double adjective_rate = 0.4;
  double adverb_rate = 0.3;
  double object_rate = 0.5;
  double pp_rate = 0.3;
  double second_clause_rate = 0.15;
};

namespace detail {

struct ToyWord {
  std::string source;
  std::string target;
  std::string pos;
  std::string role;
  long head = 0;  // 1-based source position, 0 for root
};

class ToyBuilder {
 public:
  ToyBuilder(const ToyOptions& opts, Rng& rng) : opts_(opts), rng_(rng) {}

  std::vector<ToyWord> sentence() {
    words_.clear();
    order_.clear();
    const std::size_t verb = clause("root", 0);
    if (rng_.bernoulli(opts_.second_clause_rate)) {
      const std::size_t conj = push(word("c", "C", opts_.conjunctions, "CONJ", "kon", static_cast<long>(verb) + 1));
      order_.push_back(conj);
      clause("cj", static_cast<long>(conj) + 1);
    }
    const std::size_t punc = push({".", ".", "PUNC", "root", 0});
    order_.push_back(punc);
    return words_;
  }

  /// Target order as indices into the source sentence.
  const std::vector<std::size_t>& target_order() const { return order_; }

 private:
  ToyWord word(const char* src_prefix, const char* tgt_prefix, std::size_t count, const char* pos, const char* role,
               long head) {
    const auto k = std::to_string(rng_.below(count));
    return {src_prefix + k, tgt_prefix + k, pos, role, head};
  }

  std::size_t push(ToyWord w) {
    words_.push_back(std::move(w));
    return words_.size() - 1;
  }

  /// Appends DET [ADJ] NOUN; the noun's head is patched by the caller.
  std::size_t noun_phrase(const char* role) {
    const std::size_t det = push(word("d", "D", opts_.determiners, "DET", "det", 0));
    std::size_t adj = SIZE_MAX;
    if (rng_.bernoulli(opts_.adjective_rate)) adj = push(word("a", "A", opts_.adjectives, "ADJ", "attr", 0));
    const std::size_t noun = push(word("n", "N", opts_.nouns, "NOUN", role, 0));
    words_[det].head = static_cast<long>(noun) + 1;
    order_.push_back(det);
    if (adj != SIZE_MAX) {
      words_[adj].head = static_cast<long>(noun) + 1;
      order_.push_back(noun);
      order_.push_back(adj);
    } else {
      order_.push_back(noun);
    }
    return noun;
  }

  std::size_t clause(const char* verb_role, long verb_head) {
    const std::size_t subj = noun_phrase("subj");
    const std::size_t verb = push(word("v", "V", opts_.verbs, "VERB", verb_role, verb_head));
    words_[subj].head = static_cast<long>(verb) + 1;
    if (rng_.bernoulli(opts_.adverb_rate)) {
      const std::size_t adv = push(word("r", "R", opts_.adverbs, "ADV", "adv", static_cast<long>(verb) + 1));
      order_.push_back(adv);
    }
    order_.push_back(verb);
    if (rng_.bernoulli(opts_.object_rate)) {
      const std::size_t obj = noun_phrase("obja");
      words_[obj].head = static_cast<long>(verb) + 1;
    }
    if (rng_.bernoulli(opts_.pp_rate)) {
      const std::size_t adp = push(word("p", "P", opts_.adpositions, "ADP", "pp", static_cast<long>(verb) + 1));
      order_.push_back(adp);
      const std::size_t pn = noun_phrase("pn");
      words_[pn].head = static_cast<long>(adp) + 1;
    }
    return verb;
  }

  const ToyOptions& opts_;
  Rng& rng_;
  std::vector<ToyWord> words_;
  std::vector<std::size_t> order_;
};

}  // namespace detail

inline ToyCorpus make_toy_corpus(std::size_t sentences, std::uint64_t seed, const ToyOptions& opts = {}) {
  ToyCorpus out;
  Rng rng(seed);
  detail::ToyBuilder builder(opts, rng);
  for (std::size_t s = 0; s < sentences; ++s) {
    const auto words = builder.sentence();
    const auto& order = builder.target_order();
    SentencePair pair;
    pair.id = s + 1;
    SentenceAnnotation src_ann, tgt_ann;
    for (const auto& w : words) {
      pair.source.push_back(w.source);
      src_ann.tokens.push_back(w.source);
      src_ann.pos.push_back(w.pos);
      src_ann.roles.push_back(w.role);
      src_ann.heads.push_back(w.head);
    }
    HardAlignmentSet gold;
    for (std::size_t t = 0; t < order.size(); ++t) {
      const auto& w = words[order[t]];
      pair.target.push_back(w.target);
      tgt_ann.tokens.push_back(w.target);
      tgt_ann.pos.push_back(w.pos);
      tgt_ann.roles.push_back("_");
      tgt_ann.heads.push_back(0);
      const Link link{order[t], t};
      if (w.pos == "PUNC") {
        gold.add_possible(link);
      } else {
        gold.add_sure(link);
      }
    }
    out.pairs.push_back(std::move(pair));
    out.gold.push_back(std::move(gold));
    out.source_annotations.push_back(std::move(src_ann));
    out.target_annotations.push_back(std::move(tgt_ann));
  }
  return out;
}

}  // namespace attnalign
