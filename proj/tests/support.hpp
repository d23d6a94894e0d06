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

// Shared helpers for the test suites: random tensors, a central
// finite-difference gradient checker, and temporary directories.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <unistd.h>
#include <sstream>
#include <string>
#include <vector>

#include "attnalign/autodiff.hpp"
#include "attnalign/random.hpp"
#include "attnalign/tensor.hpp"

namespace testing_support {

using namespace attnalign;

inline Tensor random_tensor(Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0, double hi = 1.0) {
  Tensor t(rows, cols);
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

inline std::vector<double> random_distribution(Rng& rng, std::size_t n) {
  std::vector<double> p(n);
  double s = 0.0;
  for (auto& v : p) s += v = rng.uniform(0.01, 1.0);
  for (auto& v : p) v /= s;
  return p;
}

struct GradientCheck {
  double worst = 0.0;  // largest relative error seen
  std::string where;
  std::size_t checked = 0;
};

/// Relative error with the denominator floored at 1e-3, so entries whose
/// true gradient is essentially zero are judged on absolute error.
inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-3});
}

using LossBuilder = std::function<Var(Tape&)>;

/// Compares backward() against central differences for every element of
/// every parameter in `params`. The builder must bind parameters with
/// tape.parameter() on each call.
inline GradientCheck check_gradients(ParameterSet& params, const LossBuilder& build, double step = 1e-5) {
  params.zero_grad();
  {
    Tape tape;
    Var loss = build(tape);
    tape.backward(loss);
  }
  std::vector<Tensor> analytic;
  for (auto& p : params) analytic.push_back(p.grad);
  params.zero_grad();
  auto eval = [&] {
    Tape tape;
    return build(tape).value()[0];
  };
  GradientCheck out;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double saved = p.value[k];
      p.value[k] = saved + step;
      const double up = eval();
      p.value[k] = saved - step;
      const double down = eval();
      p.value[k] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double err = relative_error(analytic[i][k], numeric);
      ++out.checked;
      if (err > out.worst) {
        out.worst = err;
        out.where = p.name + "[" + std::to_string(k) + "] analytic " + std::to_string(analytic[i][k]) + " numeric " +
                    std::to_string(numeric);
      }
    }
  }
  return out;
}

/// Collapses any array to a scalar with fixed random weights, so gradients
/// differ per element.
inline Var weighted_total(Var x, Rng& rng) {
  const Tensor& v = x.value();
  Tensor w(v.shape());
  for (auto& e : w.data()) e = rng.uniform(-1.0, 1.0);
  return ad::sum(ad::mul(x, x.tape().constant(std::move(w))));
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("attnalign_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace testing_support
