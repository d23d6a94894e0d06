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

#include <cmath>
#include <cstdio>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "attnalign/autodiff.hpp"
#include "attnalign/checkpoint.hpp"
#include "attnalign/corpus.hpp"
#include "attnalign/model.hpp"

namespace attnalign {

struct TrainOptions {
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  double learning_rate = 1.0;
  double clip_norm = 5.0;
  std::uint64_t seed = 1;
  // Learning rate is multiplied by `decay` after every epoch past
  // `decay_start`. The default keeps it constant.
  double decay = 1.0;
  std::size_t decay_start = 0;
  // When set, epoch_NNN.ckpt is written here after every epoch.
  std::string checkpoint_dir;

  void validate() const {
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be positive");
    if (!(decay > 0.0 && decay <= 1.0)) throw ConfigError("decay must lie in (0, 1]");
  }
};

/// Named configuration bundles. "desk" runs in minutes on one CPU core;
/// "large" is the full-size setup (1000 dims, 4 layers, batch 80, 20 epochs).
struct Preset {
  ModelConfig model;
  TrainOptions train;
};

inline Preset preset(const std::string& name) {
  Preset p;
  if (name == "desk") {
    p.model.dim = 64;
    p.model.layers = 2;
    p.model.init_range = 0.2;
    p.train.batch_size = 16;
    p.train.epochs = 30;
  } else if (name == "large") {
    p.model.dim = 1000;
    p.model.layers = 4;
    p.train.batch_size = 80;
    p.train.epochs = 20;
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected desk or large)");
  }
  p.model.dropout = 0.3;
  p.train.learning_rate = 1.0;
  p.train.clip_norm = 5.0;
  return p;
}

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double mean_token_loss = 0.0;
  double learning_rate = 0.0;
  std::size_t tokens = 0;
};

struct TrainLog {
  std::vector<EpochStats> epochs;
};

inline std::string epoch_checkpoint_name(std::size_t epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch_%03zu.ckpt", epoch);
  return buf;
}

/// Minimizes the summed negative log-likelihood per sentence with clipped
/// SGD. The reported epoch loss is the mean per target token. Deterministic for a given model, data and options.
inline TrainLog train(Model& model, const std::vector<EncodedPair>& data, const TrainOptions& opts,
                      const std::function<void(const EpochStats&)>& on_epoch = {}) {
  opts.validate();
  if (data.empty()) throw ContractError("train: no training pairs");
  if (!opts.checkpoint_dir.empty()) std::filesystem::create_directories(opts.checkpoint_dir);
  Rng dropout_rng(opts.seed ^ 0xd1b54a32d192ed03ULL);
  const RunMode mode{true, &dropout_rng};
  double lr = opts.learning_rate;
  TrainLog log;
  for (std::size_t epoch = 1; epoch <= opts.epochs; ++epoch) {
    auto batches = make_batches(data, opts.batch_size, opts.seed * 1000003ULL + epoch);
    double loss_sum = 0.0;
    std::size_t tokens = 0;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      Tape tape;
      ModelVars vars = bind(tape, model);
      BatchLoss bl = batch_loss(vars, batches[bi], mode);
      const double total = bl.total.value()[0];
      if (!std::isfinite(total)) {
        std::string ids;
        for (auto id : batches[bi].sentence_ids) ids += (ids.empty() ? "" : ",") + std::to_string(id);
        throw DivergenceError("non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(bi + 1) + " (sentences " + ids + ")");
      }
      // Gradients are averaged over sentences, not tokens.
      tape.backward(ad::scale(bl.total, 1.0 / static_cast<double>(batches[bi].rows())));
      sgd_step(model.params(), lr, opts.clip_norm);
      loss_sum += total;
      tokens += bl.tokens;
    }
    EpochStats stats{epoch, loss_sum / static_cast<double>(tokens), lr, tokens};
    log.epochs.push_back(stats);
    if (!opts.checkpoint_dir.empty()) {
      save_checkpoint((std::filesystem::path(opts.checkpoint_dir) / epoch_checkpoint_name(epoch)).string(), model);
    }
    if (on_epoch) on_epoch(stats);
    if (epoch > opts.decay_start) lr *= opts.decay;
  }
  return log;
}

}  // namespace attnalign
