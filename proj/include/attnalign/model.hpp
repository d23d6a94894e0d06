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

// Unidirectional stacked-LSTM encoder-decoder with dot-product attention.
//
// Two attention variants share the same parameters layout except for the
// width of the first decoder layer:
//
//   non_recurrent   decoder input is the previous target embedding; its top
//                   hidden state h'_t scores the encoder states.
//   input_feeding   decoder input is [h~_{t-1}; embedding(y_{t-1})]; its top
//                   hidden state h''_t scores the encoder states.
//
// In both, h~_t = tanh([c_t; h_t] W_c) and p(y_t) = softmax(h~_t W_o), using
// row vectors throughout.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "attnalign/autodiff.hpp"
#include "attnalign/corpus.hpp"
#include "attnalign/errors.hpp"
#include "attnalign/lstm.hpp"
#include "attnalign/random.hpp"

namespace attnalign {

enum class AttentionVariant { non_recurrent, input_feeding };

inline std::string to_string(AttentionVariant v) {
  return v == AttentionVariant::non_recurrent ? "non_recurrent" : "input_feeding";
}

inline AttentionVariant parse_variant(const std::string& s) {
  if (s == "non_recurrent" || s == "non-recurrent" || s == "global") return AttentionVariant::non_recurrent;
  if (s == "input_feeding" || s == "input-feeding") return AttentionVariant::input_feeding;
  throw ConfigError("unknown attention variant '" + s + "' (expected non_recurrent or input_feeding)");
}

struct ModelConfig {
  std::size_t dim = 64;
  std::size_t layers = 2;
  AttentionVariant variant = AttentionVariant::input_feeding;
  double dropout = 0.3;
  std::size_t source_vocab = 0;
  std::size_t target_vocab = 0;
  std::uint64_t seed = 1;
  double init_range = 0.08;

  void validate() const {
    if (dim < 1) throw ConfigError("dim must be at least 1");
    if (layers < 1) throw ConfigError("layers must be at least 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
    if (!(init_range >= 0.0)) throw ConfigError("init_range must be non-negative");
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Whether a forward pass applies dropout, and where its masks come from.
struct RunMode {
  bool training = false;
  Rng* rng = nullptr;

  std::uint64_t next_seed() const { return rng ? rng->fork() : 0; }
};

class Model {
 public:
  struct Slots {
    std::size_t source_embedding = 0;
    std::size_t target_embedding = 0;
    std::vector<std::size_t> encoder_weight, encoder_bias;
    std::vector<std::size_t> decoder_weight, decoder_bias;
    std::size_t combine = 0;  // W_c, 2*dim x dim
    std::size_t output = 0;   // W_o, dim x target vocabulary
  };

  /// Builds every parameter and fills it uniformly in [-init_range,
  /// init_range] from config.seed. Vocabulary sizes in config are taken from
  /// the vocabularies.
  Model(ModelConfig config, Vocabulary source_vocab, Vocabulary target_vocab)
      : config_(std::move(config)), source_vocab_(std::move(source_vocab)), target_vocab_(std::move(target_vocab)) {
    config_.source_vocab = source_vocab_.size();
    config_.target_vocab = target_vocab_.size();
    config_.validate();
    const std::size_t d = config_.dim;
    slots_.source_embedding = params_.add("source_embedding", Tensor(config_.source_vocab, d));
    slots_.target_embedding = params_.add("target_embedding", Tensor(config_.target_vocab, d));
    for (std::size_t l = 0; l < config_.layers; ++l) {
      const std::string p = "encoder.l" + std::to_string(l);
      slots_.encoder_weight.push_back(params_.add(p + ".weight", Tensor(2 * d, 4 * d)));
      slots_.encoder_bias.push_back(params_.add(p + ".bias", Tensor(1, 4 * d)));
    }
    for (std::size_t l = 0; l < config_.layers; ++l) {
      const std::string p = "decoder.l" + std::to_string(l);
      const std::size_t in = (l == 0 && config_.variant == AttentionVariant::input_feeding) ? 2 * d : d;
      slots_.decoder_weight.push_back(params_.add(p + ".weight", Tensor(in + d, 4 * d)));
      slots_.decoder_bias.push_back(params_.add(p + ".bias", Tensor(1, 4 * d)));
    }
    slots_.combine = params_.add("attention.combine", Tensor(2 * d, d));
    slots_.output = params_.add("output.projection", Tensor(d, config_.target_vocab));
    Rng rng(config_.seed);
    params_.init_uniform(rng, config_.init_range);
  }

  const ModelConfig& config() const noexcept { return config_; }
  const Vocabulary& source_vocab() const noexcept { return source_vocab_; }
  const Vocabulary& target_vocab() const noexcept { return target_vocab_; }
  ParameterSet& params() noexcept { return params_; }
  const ParameterSet& params() const noexcept { return params_; }
  const Slots& slots() const noexcept { return slots_; }

 private:
  ModelConfig config_;
  Vocabulary source_vocab_;
  Vocabulary target_vocab_;
  ParameterSet params_;
  Slots slots_;
};

/// Model parameters bound as leaves of one tape.
struct ModelVars {
  const ModelConfig* config = nullptr;
  Tape* tape = nullptr;
  Var source_embedding, target_embedding;
  std::vector<Var> encoder_weight, encoder_bias;
  std::vector<Var> decoder_weight, decoder_bias;
  Var combine, output;
};

inline ModelVars bind(Tape& tape, Model& model) {
  ModelVars v;
  v.config = &model.config();
  v.tape = &tape;
  auto& ps = model.params();
  const auto& s = model.slots();
  v.source_embedding = tape.parameter(ps[s.source_embedding]);
  v.target_embedding = tape.parameter(ps[s.target_embedding]);
  for (std::size_t l = 0; l < s.encoder_weight.size(); ++l) {
    v.encoder_weight.push_back(tape.parameter(ps[s.encoder_weight[l]]));
    v.encoder_bias.push_back(tape.parameter(ps[s.encoder_bias[l]]));
  }
  for (std::size_t l = 0; l < s.decoder_weight.size(); ++l) {
    v.decoder_weight.push_back(tape.parameter(ps[s.decoder_weight[l]]));
    v.decoder_bias.push_back(tape.parameter(ps[s.decoder_bias[l]]));
  }
  v.combine = tape.parameter(ps[s.combine]);
  v.output = tape.parameter(ps[s.output]);
  return v;
}

struct EncoderStates {
  std::vector<Var> top;             // one rows x dim state per source position
  std::vector<LstmState> final;     // per layer, state after each row's last real token
};

/// Left-to-right stacked LSTM over a right-padded rows x width id matrix.
/// At padded positions every layer carries its previous state forward, so
/// `final` holds the state after each row's own last token.
inline EncoderStates encode(const ModelVars& m, const std::vector<std::size_t>& ids, const std::vector<bool>& mask,
                            std::size_t rows, const RunMode& mode) {
  if (rows == 0 || ids.size() % rows != 0 || ids.empty() || mask.size() != ids.size()) {
    throw ShapeError("encode: " + std::to_string(ids.size()) + " ids / " + std::to_string(mask.size()) +
                     " mask entries for " + std::to_string(rows) + " rows");
  }
  Tape& t = *m.tape;
  const std::size_t width = ids.size() / rows;
  const std::size_t d = m.config->dim;
  const std::size_t vocab = m.source_embedding.value().rows();
  for (auto id : ids) {
    if (id >= vocab) throw ContractError("encode: source id " + std::to_string(id) + " outside vocabulary");
  }
  EncoderStates out;
  for (std::size_t l = 0; l < m.encoder_weight.size(); ++l) {
    out.final.push_back({t.constant(Tensor(rows, d)), t.constant(Tensor(rows, d))});
  }
  for (std::size_t c = 0; c < width; ++c) {
    std::vector<std::size_t> column(rows);
    std::vector<bool> keep(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      column[r] = ids[r * width + c];
      keep[r] = mask[r * width + c];
    }
    Var input = ad::embedding(m.source_embedding, column);
    for (std::size_t l = 0; l < out.final.size(); ++l) {
      if (l > 0) input = ad::dropout(input, m.config->dropout, mode.next_seed(), mode.training);
      auto& st = out.final[l];
      LstmState next = lstm_cell(input, st.hidden, st.cell, m.encoder_weight[l], m.encoder_bias[l]);
      st.hidden = ad::select_rows(keep, next.hidden, st.hidden);
      st.cell = ad::select_rows(keep, next.cell, st.cell);
      input = st.hidden;
    }
    out.top.push_back(input);
  }
  return out;
}

struct Attention {
  Var weights;  // rows x source positions
  Var context;  // rows x dim
};

/// e_{t,i} = h_i . query, alpha = masked softmax(e), c = sum_i alpha_i h_i.
inline Attention attend(Var query, const std::vector<Var>& memory, const std::vector<bool>& mask) {
  Var scores = ad::attention_scores(memory, query);
  Var weights = ad::masked_softmax(scores, mask);
  return {weights, ad::weighted_sum(memory, weights)};
}

/// h~_t = tanh([c_t; h_t] W_c)
inline Var attentional_output(const ModelVars& m, Var context, Var hidden) {
  if (!context.value().same_shape(hidden.value())) {
    throw ShapeError("attentional_output: context " + shape_string(context.value().shape()) + " vs hidden " +
                     shape_string(hidden.value().shape()));
  }
  return ad::tanh(ad::matmul(ad::concat_cols({context, hidden}), m.combine));
}

inline Var output_logits(const ModelVars& m, Var attentional) { return ad::matmul(attentional, m.output); }

/// softmax(h~_t W_o) over the full target vocabulary.
inline Var predict(const ModelVars& m, Var attentional) {
  Var logits = output_logits(m, attentional);
  return ad::masked_softmax(logits, std::vector<bool>(logits.value().size(), true));
}

struct DecoderState {
  std::vector<LstmState> layers;
  Var prev_attentional;  // h~_{t-1}; zeros before the first step
};

inline DecoderState init_decoder(const ModelVars& m, const EncoderStates& enc) {
  const std::size_t rows = enc.final.front().hidden.value().rows();
  return {enc.final, m.tape->constant(Tensor(rows, m.config->dim))};
}

/// Runs the decoder LSTM stack one step and returns the top hidden state.
inline Var decoder_stack(const ModelVars& m, DecoderState& state, Var input, const RunMode& mode) {
  for (std::size_t l = 0; l < state.layers.size(); ++l) {
    if (l > 0) input = ad::dropout(input, m.config->dropout, mode.next_seed(), mode.training);
    auto& st = state.layers[l];
    st = lstm_cell(input, st.hidden, st.cell, m.decoder_weight[l], m.decoder_bias[l]);
    input = st.hidden;
  }
  return input;
}

/// h''_t = f([h~_{t-1}; y_{t-1}]) through the decoder stack.
inline Var input_feeding_state(const ModelVars& m, DecoderState& state, Var prev_attentional, Var prev_embedding,
                               const RunMode& mode) {
  if (m.config->variant != AttentionVariant::input_feeding) {
    throw ContractError("input_feeding_state called on a non_recurrent model");
  }
  return decoder_stack(m, state, ad::concat_cols({prev_attentional, prev_embedding}), mode);
}

struct DecoderStep {
  Attention attention;
  Var hidden;       // h'_t or h''_t
  Var attentional;  // h~_t
  Var logits;
};

inline DecoderStep decoder_step(const ModelVars& m, DecoderState& state, const std::vector<std::size_t>& prev_ids,
                                const std::vector<Var>& memory, const std::vector<bool>& source_mask,
                                const RunMode& mode) {
  Var emb = ad::embedding(m.target_embedding, prev_ids);
  Var hidden = m.config->variant == AttentionVariant::input_feeding
                   ? input_feeding_state(m, state, state.prev_attentional, emb, mode)
                   : decoder_stack(m, state, emb, mode);
  Attention att = attend(hidden, memory, source_mask);
  Var attentional = attentional_output(m, att.context, hidden);
  state.prev_attentional = attentional;
  Var logits = output_logits(m, ad::dropout(attentional, m.config->dropout, mode.next_seed(), mode.training));
  return {att, hidden, attentional, logits};
}

struct BatchLoss {
  Var total;              // summed token negative log-likelihood, 1x1
  std::size_t tokens = 0; // target tokens plus one end-of-sentence per row
};

/// Teacher-forced loss of a batch. Each row predicts its target tokens
/// followed by </s>; positions past that carry zero weight.
inline BatchLoss batch_loss(const ModelVars& m, const Batch& batch, const RunMode& mode) {
  const std::size_t rows = batch.rows();
  EncoderStates enc = encode(m, batch.source, batch.source_mask, rows, mode);
  DecoderState state = init_decoder(m, enc);
  std::vector<std::size_t> lengths(rows);
  for (std::size_t r = 0; r < rows; ++r) lengths[r] = batch.target_length(r);
  BatchLoss out;
  std::vector<Var> step_losses;
  for (std::size_t t = 0; t <= batch.target_width; ++t) {
    std::vector<std::size_t> prev(rows), next(rows);
    std::vector<double> weight(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      prev[r] = t == 0 ? Vocabulary::kBos
                       : (t - 1 < lengths[r] ? batch.target[r * batch.target_width + t - 1] : Vocabulary::kPad);
      next[r] = t < lengths[r] ? batch.target[r * batch.target_width + t] : Vocabulary::kEos;
      weight[r] = t <= lengths[r] ? 1.0 : 0.0;
      out.tokens += t <= lengths[r];
    }
    DecoderStep step = decoder_step(m, state, prev, enc.top, batch.source_mask, mode);
    step_losses.push_back(ad::nll_loss(step.logits, next, weight));
  }
  out.total = step_losses.front();
  for (std::size_t i = 1; i < step_losses.size(); ++i) out.total = ad::add(out.total, step_losses[i]);
  return out;
}

using AttentionRows = std::vector<std::vector<double>>;

struct ForcedDecoding {
  AttentionRows attention;                     // one row per reference token
  std::vector<double> word_loss;               // -log p(y_t | y_<t, x)
  std::vector<std::vector<double>> distributions;
  std::vector<bool> unknown;                   // reference token mapped to <unk>
  double eos_loss = 0.0;
};

namespace detail {

inline Batch single_batch(const Model& model, const Tokens& source, const Tokens& target) {
  EncodedPair p{0, model.source_vocab().encode(source), model.target_vocab().encode(target)};
  if (p.source.empty()) throw ContractError("source sentence is empty");
  if (p.target.empty()) p.target.push_back(Vocabulary::kEos);
  return make_batch({&p});
}

inline std::vector<double> row_of(const Tensor& t, std::size_t r = 0) {
  auto row = t.row(r);
  return {row.begin(), row.end()};
}

}  // namespace detail

/// Teacher-forced pass in evaluation mode, collecting one attention row,
/// loss and output distribution per reference token.
inline ForcedDecoding force_decode(Model& model, const Tokens& source, const Tokens& reference) {
  if (reference.empty()) throw ContractError("force_decode: reference is empty");
  Batch b = detail::single_batch(model, source, reference);
  Tape tape;
  ModelVars m = bind(tape, model);
  const RunMode eval;
  EncoderStates enc = encode(m, b.source, b.source_mask, 1, eval);
  DecoderState state = init_decoder(m, enc);
  ForcedDecoding out;
  std::size_t prev = Vocabulary::kBos;
  for (std::size_t t = 0; t <= b.target.size(); ++t) {
    DecoderStep step = decoder_step(m, state, {prev}, enc.top, b.source_mask, eval);
    auto dist = softmax(step.logits.value().row(0));
    if (t == b.target.size()) {
      out.eos_loss = -std::log(dist[Vocabulary::kEos]);
      break;
    }
    const std::size_t y = b.target[t];
    out.attention.push_back(detail::row_of(step.attention.weights.value()));
    out.word_loss.push_back(-std::log(dist[y]));
    out.unknown.push_back(y == Vocabulary::kUnk && reference[t] != Vocabulary::kReservedTokens[Vocabulary::kUnk]);
    out.distributions.push_back(std::move(dist));
    prev = y;
  }
  return out;
}

struct Translation {
  Tokens tokens;
  AttentionRows attention;
  bool hit_max_len = false;
};

/// Argmax decoding until </s> or max_len tokens. <pad> and <s> are never
/// emitted; ties go to the lowest id.
inline Translation translate_greedy(Model& model, const Tokens& source, std::size_t max_len) {
  Batch b = detail::single_batch(model, source, {});
  Tape tape;
  ModelVars m = bind(tape, model);
  const RunMode eval;
  EncoderStates enc = encode(m, b.source, b.source_mask, 1, eval);
  DecoderState state = init_decoder(m, enc);
  Translation out;
  std::size_t prev = Vocabulary::kBos;
  while (true) {
    if (out.tokens.size() >= max_len) {
      out.hit_max_len = true;
      break;
    }
    DecoderStep step = decoder_step(m, state, {prev}, enc.top, b.source_mask, eval);
    auto logits = step.logits.value().row(0);
    std::size_t best = Vocabulary::kUnk;
    for (std::size_t j = Vocabulary::kUnk; j < logits.size(); ++j) {
      if (j == Vocabulary::kBos) continue;
      if (logits[j] > logits[best]) best = j;
    }
    if (best == Vocabulary::kEos) break;
    out.tokens.push_back(model.target_vocab().token(best));
    out.attention.push_back(detail::row_of(step.attention.weights.value()));
    prev = best;
  }
  return out;
}

}  // namespace attnalign
