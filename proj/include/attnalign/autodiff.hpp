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

// Reverse-mode differentiation over dense matrices.
//
// A Tape records every primitive application as a node holding its value, a
// closure that recomputes the value from the node's inputs, and a closure that
// pushes the node's gradient back to those inputs. Nodes are appended in
// evaluation order, so the tape is acyclic by construction and a single
// reverse sweep visits each node once.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "attnalign/errors.hpp"
#include "attnalign/random.hpp"
#include "attnalign/tensor.hpp"

namespace attnalign {

struct Parameter {
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape(), 0.0) {}

  void zero_grad() { grad.fill(0.0); }

  std::string name;
  Tensor value;
  Tensor grad;
};

/// Named, ordered collection of trainable parameters.
class ParameterSet {
 public:
  /// Returns the index of the new parameter. Names must be unique.
  std::size_t add(std::string name, Tensor value) {
    if (index_.count(name)) throw ContractError("duplicate parameter name '" + name + "'");
    index_.emplace(name, params_.size());
    params_.emplace_back(std::move(name), std::move(value));
    return params_.size() - 1;
  }

  Parameter& operator[](std::size_t i) { return params_.at(i); }
  const Parameter& operator[](std::size_t i) const { return params_.at(i); }

  bool contains(std::string_view name) const { return index_.find(std::string(name)) != index_.end(); }

  Parameter& at(std::string_view name) { return params_[lookup(name)]; }
  const Parameter& at(std::string_view name) const { return params_[lookup(name)]; }

  std::size_t size() const noexcept { return params_.size(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  /// Global L2 norm over every gradient.
  double grad_norm() const {
    double s = 0.0;
    for (const auto& p : params_) s += p.grad.squared_norm();
    return std::sqrt(s);
  }

  void init_uniform(Rng& rng, double range) {
    for (auto& p : params_) {
      for (auto& v : p.value.data()) v = rng.uniform(-range, range);
    }
  }

 private:
  std::size_t lookup(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) throw ContractError("unknown parameter '" + std::string(name) + "'");
    return it->second;
  }

  std::vector<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

class Tape;

/// Handle to a node on a Tape.
class Var {
 public:
  Var() = default;

  bool valid() const noexcept { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  const Tensor& value() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using Forward = std::function<Tensor(const Tape&)>;
  using Backward = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value) {
    nodes_.push_back(Node{std::move(value), {}, {}, {}, nullptr});
    return Var(this, nodes_.size() - 1);
  }

  /// Leaf bound to a trainable parameter. Repeated calls return the same node,
  /// so every use of the parameter funnels into one gradient.
  Var parameter(Parameter& p) {
    auto it = param_nodes_.find(&p);
    if (it != param_nodes_.end()) return Var(this, it->second);
    nodes_.push_back(Node{p.value, {}, {}, {}, &p});
    param_nodes_.emplace(&p, nodes_.size() - 1);
    return Var(this, nodes_.size() - 1);
  }

  /// Appends an interior node; its value is computed immediately.
  Var record(Forward forward, Backward backward) {
    Tensor value = forward(*this);
    nodes_.push_back(Node{std::move(value), {}, std::move(forward), std::move(backward), nullptr});
    return Var(this, nodes_.size() - 1);
  }

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }

  /// Gradient buffer of a node, allocated as zeros on first access.
  Tensor& grad(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad = Tensor(n.value.shape(), 0.0);
    return n.grad;
  }

  std::size_t size() const noexcept { return nodes_.size(); }

  /// Back-propagates from a 1x1 loss and adds the result into the gradients
  /// of every Parameter reachable from it.
  void backward(Var loss) {
    if (loss.tape_ != this) throw ContractError("backward: loss was recorded on a different tape");
    const Tensor& lv = value(loss.id_);
    if (lv.size() != 1) {
      throw ContractError("backward: loss must be scalar, got shape " + shape_string(lv.shape()));
    }
    for (auto& n : nodes_) n.grad = Tensor();
    grad(loss.id_).fill(1.0);
    for (std::size_t id = loss.id_ + 1; id-- > 0;) {
      Node& n = nodes_[id];
      if (n.grad.empty()) continue;
      if (n.backward) n.backward(*this, id);
      if (n.param) n.param->grad += n.grad;
    }
  }

  /// Recomputes every interior node from its inputs. Returns true when each
  /// recomputed value is bit-identical to the recorded one.
  bool replay() {
    bool identical = true;
    for (auto& n : nodes_) {
      if (!n.forward) continue;
      Tensor v = n.forward(*this);
      if (!(v == n.value)) identical = false;
      n.value = std::move(v);
    }
    return identical;
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Forward forward;
    Backward backward;
    Parameter* param;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }

namespace ad {

namespace detail {

inline Tape& same_tape(const Var& a, const Var& b) {
  if (!a.valid() || !b.valid() || &a.tape() != &b.tape()) throw ContractError("operands live on different tapes");
  return a.tape();
}

inline void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()) +
                     " differ");
  }
}

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

inline Var matmul(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  const std::size_t ia = a.id(), ib = b.id();
  if (a.value().cols() != b.value().rows()) {
    throw ShapeError("matmul: inner dimensions disagree for " + shape_string(a.value().shape()) + " x " +
                     shape_string(b.value().shape()));
  }
  return t.record([=](const Tape& t) { return matmul_values(t.value(ia), t.value(ib)); },
                  [=](Tape& t, std::size_t self) {
                    const Tensor& g = t.grad(self);
                    accumulate_a_bt(g, t.value(ib), t.grad(ia));
                    accumulate_at_b(t.value(ia), g, t.grad(ib));
                  });
}

inline Var add(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  detail::require_same_shape("add", a.value(), b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(
      [=](const Tape& t) {
        Tensor out = t.value(ia);
        out += t.value(ib);
        return out;
      },
      [=](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        t.grad(ia) += g;
        t.grad(ib) += g;
      });
}

/// a (n x m) plus a 1 x m row broadcast over every row.
inline Var add_bias(Var a, Var bias) {
  Tape& t = detail::same_tape(a, bias);
  const std::size_t ia = a.id(), ib = bias.id();
  if (bias.value().rows() != 1 || bias.value().cols() != a.value().cols()) {
    throw ShapeError("add_bias: bias " + shape_string(bias.value().shape()) + " does not broadcast over " +
                     shape_string(a.value().shape()));
  }
  return t.record(
      [=](const Tape& t) {
        Tensor out = t.value(ia);
        const Tensor& b = t.value(ib);
        for (std::size_t r = 0; r < out.rows(); ++r) {
          auto row = out.row(r);
          for (std::size_t c = 0; c < row.size(); ++c) row[c] += b[c];
        }
        return out;
      },
      [=](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        t.grad(ia) += g;
        Tensor& gb = t.grad(ib);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          auto row = g.row(r);
          for (std::size_t c = 0; c < row.size(); ++c) gb[c] += row[c];
        }
      });
}

/// Elementwise product.
inline Var mul(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  detail::require_same_shape("mul", a.value(), b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(
      [=](const Tape& t) {
        Tensor out = t.value(ia);
        const Tensor& bv = t.value(ib);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
        return out;
      },
      [=](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& av = t.value(ia);
        const Tensor& bv = t.value(ib);
        Tensor& ga = t.grad(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
        Tensor& gb = t.grad(ib);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
      });
}

inline Var scale(Var a, double s) {
  const std::size_t ia = a.id();
  return a.tape().record(
      [=](const Tape& t) {
        Tensor out = t.value(ia);
        out *= s;
        return out;
      },
      [=](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& ga = t.grad(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
      });
}

inline Var sigmoid(Var a) {
  const std::size_t ia = a.id();
  return a.tape().record(
      [=](const Tape& t) {
        Tensor out = t.value(ia);
        for (auto& v : out.data()) v = detail::sigmoid(v);
        return out;
      },
      [=](Tape& t, std::size_t self) {
        const Tensor& y = t.value(self);
        const Tensor& g = t.grad(self);
        Tensor& ga = t.grad(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
      });
}

inline Var tanh(Var a) {
  const std::size_t ia = a.id();
  return a.tape().record(
      [=](const Tape& t) {
        Tensor out = t.value(ia);
        for (auto& v : out.data()) v = std::tanh(v);
        return out;
      },
      [=](Tape& t, std::size_t self) {
        const Tensor& y = t.value(self);
        const Tensor& g = t.grad(self);
        Tensor& ga = t.grad(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
      });
}

/// Sum of all elements as a 1x1 array.
inline Var sum(Var a) {
  const std::size_t ia = a.id();
  return a.tape().record(
      [=](const Tape& t) {
        double s = 0.0;
        for (double v : t.value(ia).data()) s += v;
        return Tensor(1, 1, s);
      },
      [=](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0];
        for (auto& v : t.grad(ia).data()) v += g;
      });
}

/// Horizontal concatenation of matrices with equal row counts.
inline Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: nothing to concatenate");
  Tape& t = parts.front().tape();
  std::vector<std::size_t> ids;
  const std::size_t rows = parts.front().value().rows();
  for (const auto& p : parts) {
    detail::same_tape(parts.front(), p);
    if (p.value().rows() != rows) {
      throw ShapeError("concat_cols: row counts " + std::to_string(rows) + " and " +
                       std::to_string(p.value().rows()) + " differ");
    }
    ids.push_back(p.id());
  }
  return t.record(
      [ids](const Tape& t) {
        const std::size_t rows = t.value(ids.front()).rows();
        std::size_t cols = 0;
        for (auto id : ids) cols += t.value(id).cols();
        Tensor out(rows, cols);
        std::size_t offset = 0;
        for (auto id : ids) {
          const Tensor& v = t.value(id);
          for (std::size_t r = 0; r < rows; ++r) std::copy(v.row(r).begin(), v.row(r).end(), &out(r, offset));
          offset += v.cols();
        }
        return out;
      },
      [ids](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        std::size_t offset = 0;
        for (auto id : ids) {
          Tensor& gi = t.grad(id);
          const std::size_t c = gi.cols();
          for (std::size_t r = 0; r < gi.rows(); ++r) {
            for (std::size_t j = 0; j < c; ++j) gi(r, j) += g(r, offset + j);
          }
          offset += c;
        }
      });
}

inline Var slice_cols(Var a, std::size_t start, std::size_t count) {
  const std::size_t ia = a.id();
  if (count == 0 || start + count > a.value().cols()) {
    throw ShapeError("slice_cols: columns [" + std::to_string(start) + ", " + std::to_string(start + count) +
                     ") out of range for " + shape_string(a.value().shape()));
  }
  return a.tape().record(
      [=](const Tape& t) {
        const Tensor& v = t.value(ia);
        Tensor out(v.rows(), count);
        for (std::size_t r = 0; r < v.rows(); ++r) {
          for (std::size_t j = 0; j < count; ++j) out(r, j) = v(r, start + j);
        }
        return out;
      },
      [=](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& ga = t.grad(ia);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          for (std::size_t j = 0; j < count; ++j) ga(r, start + j) += g(r, j);
        }
      });
}

/// Gathers rows of an embedding table: out[r] = table[ids[r]].
inline Var embedding(Var table, std::vector<std::size_t> ids) {
  const std::size_t it = table.id();
  const std::size_t vocab = table.value().rows();
  for (auto id : ids) {
    if (id >= vocab) {
      throw ContractError("embedding: id " + std::to_string(id) + " outside table of " + std::to_string(vocab) +
                          " rows");
    }
  }
  if (ids.empty()) throw ContractError("embedding: empty id list");
  return table.tape().record(
      [=](const Tape& t) {
        const Tensor& tab = t.value(it);
        Tensor out(ids.size(), tab.cols());
        for (std::size_t r = 0; r < ids.size(); ++r) {
          auto src = tab.row(ids[r]);
          std::copy(src.begin(), src.end(), out.row(r).begin());
        }
        return out;
      },
      [=](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& gt = t.grad(it);
        for (std::size_t r = 0; r < ids.size(); ++r) {
          auto dst = gt.row(ids[r]);
          auto src = g.row(r);
          for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
        }
      });
}

/// Row-wise masked softmax. mask is row-major with one entry per element;
/// every row needs at least one true entry.
inline Var masked_softmax(Var scores, std::vector<bool> mask) {
  const std::size_t is = scores.id();
  const Tensor& sv = scores.value();
  if (mask.size() != sv.size()) {
    throw ShapeError("masked_softmax: mask has " + std::to_string(mask.size()) + " entries for scores " +
                     shape_string(sv.shape()));
  }
  return scores.tape().record(
      [=](const Tape& t) {
        const Tensor& s = t.value(is);
        Tensor out(s.shape(), 0.0);
        const std::size_t cols = s.cols();
        for (std::size_t r = 0; r < s.rows(); ++r) {
          std::vector<bool> row_mask(mask.begin() + static_cast<std::ptrdiff_t>(r * cols),
                                     mask.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols));
          auto p = attnalign::masked_softmax(s.row(r), row_mask);
          std::copy(p.begin(), p.end(), out.row(r).begin());
        }
        return out;
      },
      [=](Tape& t, std::size_t self) {
        const Tensor& y = t.value(self);
        const Tensor& g = t.grad(self);
        Tensor& gs = t.grad(is);
        for (std::size_t r = 0; r < y.rows(); ++r) {
          auto yr = y.row(r);
          auto gr = g.row(r);
          double dot = 0.0;
          for (std::size_t j = 0; j < yr.size(); ++j) dot += yr[j] * gr[j];
          auto out = gs.row(r);
          for (std::size_t j = 0; j < yr.size(); ++j) out[j] += yr[j] * (gr[j] - dot);
        }
      });
}

/// Dot-product scores of a query against a memory of per-position states:
/// out(r, i) = memory[i](r, :) . query(r, :)
inline Var attention_scores(const std::vector<Var>& memory, Var query) {
  if (memory.empty()) throw ContractError("attention_scores: empty memory");
  std::vector<std::size_t> ids;
  for (const auto& m : memory) {
    detail::same_tape(m, query);
    if (!m.value().same_shape(query.value())) {
      throw ShapeError("attention_scores: memory state " + shape_string(m.value().shape()) + " vs query " +
                       shape_string(query.value().shape()));
    }
    ids.push_back(m.id());
  }
  const std::size_t iq = query.id();
  return query.tape().record(
      [=](const Tape& t) {
        const Tensor& q = t.value(iq);
        Tensor out(q.rows(), ids.size());
        for (std::size_t i = 0; i < ids.size(); ++i) {
          const Tensor& h = t.value(ids[i]);
          for (std::size_t r = 0; r < q.rows(); ++r) {
            auto hr = h.row(r);
            auto qr = q.row(r);
            double s = 0.0;
            for (std::size_t k = 0; k < qr.size(); ++k) s += hr[k] * qr[k];
            out(r, i) = s;
          }
        }
        return out;
      },
      [=](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& q = t.value(iq);
        for (std::size_t i = 0; i < ids.size(); ++i) {
          const Tensor& h = t.value(ids[i]);
          Tensor& gh = t.grad(ids[i]);
          Tensor& gq = t.grad(iq);
          for (std::size_t r = 0; r < q.rows(); ++r) {
            const double gri = g(r, i);
            if (gri == 0.0) continue;
            auto hr = h.row(r);
            auto qr = q.row(r);
            auto ghr = gh.row(r);
            auto gqr = gq.row(r);
            for (std::size_t k = 0; k < qr.size(); ++k) {
              ghr[k] += gri * qr[k];
              gqr[k] += gri * hr[k];
            }
          }
        }
      });
}

/// out(r, :) = sum_i weights(r, i) * memory[i](r, :)
inline Var weighted_sum(const std::vector<Var>& memory, Var weights) {
  if (memory.empty()) throw ContractError("weighted_sum: empty memory");
  const Tensor& wv = weights.value();
  if (wv.cols() != memory.size()) {
    throw ShapeError("weighted_sum: " + std::to_string(wv.cols()) + " weights for " +
                     std::to_string(memory.size()) + " memory states");
  }
  std::vector<std::size_t> ids;
  for (const auto& m : memory) {
    detail::same_tape(m, weights);
    if (m.value().rows() != wv.rows() || !m.value().same_shape(memory.front().value())) {
      throw ShapeError("weighted_sum: memory state " + shape_string(m.value().shape()) + " vs weights " +
                       shape_string(wv.shape()));
    }
    ids.push_back(m.id());
  }
  const std::size_t iw = weights.id();
  return weights.tape().record(
      [=](const Tape& t) {
        const Tensor& w = t.value(iw);
        Tensor out(t.value(ids.front()).shape(), 0.0);
        for (std::size_t i = 0; i < ids.size(); ++i) {
          const Tensor& h = t.value(ids[i]);
          for (std::size_t r = 0; r < out.rows(); ++r) {
            const double a = w(r, i);
            if (a == 0.0) continue;
            auto hr = h.row(r);
            auto orow = out.row(r);
            for (std::size_t k = 0; k < orow.size(); ++k) orow[k] += a * hr[k];
          }
        }
        return out;
      },
      [=](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& w = t.value(iw);
        for (std::size_t i = 0; i < ids.size(); ++i) {
          const Tensor& h = t.value(ids[i]);
          Tensor& gh = t.grad(ids[i]);
          Tensor& gw = t.grad(iw);
          for (std::size_t r = 0; r < g.rows(); ++r) {
            auto gr = g.row(r);
            auto hr = h.row(r);
            auto ghr = gh.row(r);
            const double a = w(r, i);
            double dot = 0.0;
            for (std::size_t k = 0; k < gr.size(); ++k) {
              ghr[k] += a * gr[k];
              dot += gr[k] * hr[k];
            }
            gw(r, i) += dot;
          }
        }
      });
}

/// Row selection: out[r] = keep[r] ? a[r] : b[r].
inline Var select_rows(const std::vector<bool>& keep, Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  detail::require_same_shape("select_rows", a.value(), b.value());
  if (keep.size() != a.value().rows()) {
    throw ShapeError("select_rows: " + std::to_string(keep.size()) + " flags for " +
                     std::to_string(a.value().rows()) + " rows");
  }
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(
      [=](const Tape& t) {
        Tensor out = t.value(ia);
        const Tensor& bv = t.value(ib);
        for (std::size_t r = 0; r < keep.size(); ++r) {
          if (!keep[r]) std::copy(bv.row(r).begin(), bv.row(r).end(), out.row(r).begin());
        }
        return out;
      },
      [=](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& ga = t.grad(ia);
        Tensor& gb = t.grad(ib);
        for (std::size_t r = 0; r < keep.size(); ++r) {
          auto src = g.row(r);
          auto dst = keep[r] ? ga.row(r) : gb.row(r);
          for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
        }
      });
}

/// Inverted dropout. In evaluation mode, or with rate 0, the input is
/// returned unchanged. The mask is a pure function of the seed.
inline Var dropout(Var x, double rate, std::uint64_t seed, bool training = true) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  if (!training || rate == 0.0) return x;
  const std::size_t ix = x.id();
  Rng rng(seed);
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(x.value().size());
  for (auto& m : mask) m = rng.bernoulli(rate) ? 0.0 : keep_scale;
  return x.tape().record(
      [=](const Tape& t) {
        Tensor out = t.value(ix);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
        return out;
      },
      [=](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& gx = t.grad(ix);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
      });
}

/// Per-row negative log-likelihood of softmax(logits) at the target ids,
/// weighted and summed into a 1x1 array. Rows with weight 0 (padding)
/// contribute nothing.
inline Var nll_loss(Var logits, std::vector<std::size_t> targets, std::vector<double> weights) {
  const Tensor& lv = logits.value();
  if (targets.size() != lv.rows() || weights.size() != lv.rows()) {
    throw ShapeError("nll_loss: " + std::to_string(targets.size()) + " targets / " + std::to_string(weights.size()) +
                     " weights for logits " + shape_string(lv.shape()));
  }
  for (auto y : targets) {
    if (y >= lv.cols()) throw ContractError("nll_loss: target id " + std::to_string(y) + " out of range");
  }
  const std::size_t il = logits.id();
  return logits.tape().record(
      [=](const Tape& t) {
        const Tensor& l = t.value(il);
        double total = 0.0;
        for (std::size_t r = 0; r < l.rows(); ++r) {
          if (weights[r] == 0.0) continue;
          auto row = l.row(r);
          const double m = *std::max_element(row.begin(), row.end());
          double z = 0.0;
          for (double v : row) z += std::exp(v - m);
          total += weights[r] * (m + std::log(z) - row[targets[r]]);
        }
        return Tensor(1, 1, total);
      },
      [=](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0];
        const Tensor& l = t.value(il);
        Tensor& gl = t.grad(il);
        for (std::size_t r = 0; r < l.rows(); ++r) {
          if (weights[r] == 0.0) continue;
          auto p = softmax(l.row(r));
          auto out = gl.row(r);
          const double c = g * weights[r];
          for (std::size_t j = 0; j < p.size(); ++j) out[j] += c * p[j];
          out[targets[r]] -= c;
        }
      });
}

}  // namespace ad

/// Rescales every gradient by clip_norm / g when the global gradient norm g
/// exceeds clip_norm. Returns g as measured before rescaling.
inline double clip_gradients(ParameterSet& params, double clip_norm) {
  if (!(clip_norm > 0.0)) throw ConfigError("clip norm must be positive");
  const double norm = params.grad_norm();
  if (norm > clip_norm) {
    const double factor = clip_norm / norm;
    for (auto& p : params) p.grad *= factor;
  }
  return norm;
}

/// Plain SGD step: clip, value -= lr * grad, then zero the gradients.
/// Returns the pre-clipping gradient norm.
inline double sgd_step(ParameterSet& params, double learning_rate, double clip_norm) {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  const double norm = clip_gradients(params, clip_norm);
  for (auto& p : params) {
    auto value = p.value.data();
    auto grad = p.grad.data();
    for (std::size_t i = 0; i < value.size(); ++i) value[i] -= learning_rate * grad[i];
    p.zero_grad();
  }
  return norm;
}

}  // namespace attnalign
