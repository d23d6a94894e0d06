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

#include <string>

#include "attnalign/autodiff.hpp"

namespace attnalign {

struct LstmState {
  Var hidden;
  Var cell;
};

/// One LSTM step on a batch of rows.
///
/// weights is (input + hidden) x 4*hidden and bias is 1 x 4*hidden, with the
/// gate blocks laid out as [input | forget | output | candidate]:
///
///   z = [x; h] W + b
///   c' = sigmoid(z_f) * c + sigmoid(z_i) * tanh(z_g)
///   h' = sigmoid(z_o) * tanh(c')
inline LstmState lstm_cell(Var input, Var prev_hidden, Var prev_cell, Var weights, Var bias) {
  const std::size_t hidden = prev_hidden.value().cols();
  const Tensor& w = weights.value();
  if (!prev_cell.value().same_shape(prev_hidden.value())) {
    throw ShapeError("lstm_cell: cell " + shape_string(prev_cell.value().shape()) + " vs hidden " +
                     shape_string(prev_hidden.value().shape()));
  }
  if (input.value().rows() != prev_hidden.value().rows()) {
    throw ShapeError("lstm_cell: input " + shape_string(input.value().shape()) + " vs hidden " +
                     shape_string(prev_hidden.value().shape()));
  }
  if (w.rows() != input.value().cols() + hidden || w.cols() != 4 * hidden) {
    throw ShapeError("lstm_cell: weights " + shape_string(w.shape()) + " do not fit input width " +
                     std::to_string(input.value().cols()) + " and hidden size " + std::to_string(hidden));
  }
  Var z = ad::add_bias(ad::matmul(ad::concat_cols({input, prev_hidden}), weights), bias);
  Var in_gate = ad::sigmoid(ad::slice_cols(z, 0, hidden));
  Var forget_gate = ad::sigmoid(ad::slice_cols(z, hidden, hidden));
  Var out_gate = ad::sigmoid(ad::slice_cols(z, 2 * hidden, hidden));
  Var candidate = ad::tanh(ad::slice_cols(z, 3 * hidden, hidden));
  Var cell = ad::add(ad::mul(forget_gate, prev_cell), ad::mul(in_gate, candidate));
  Var h = ad::mul(out_gate, ad::tanh(cell));
  return {h, cell};
}

}  // namespace attnalign
