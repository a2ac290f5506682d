// tests/support/test_util.hpp

// Copyright 2026  The mixse authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include "mixse/autodiff.hpp"
#include "mixse/tensor.hpp"

namespace mixse::testing {

inline double rel_err(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline Tensor random_tensor(std::vector<int> shape, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = dist(rng);
  return t;
}

/// Central finite differences of a scalar-valued graph builder w.r.t. one
/// input tensor. The builder is re-run from scratch per evaluation, so the
/// check is independent of the reverse-mode path it validates.
inline double max_fd_rel_err(const std::function<double(const Tensor&)>& f, Tensor x,
                             const Tensor& analytic_grad, double step = 1e-4,
                             double floor = 1e-6) {
  double worst = 0.0;
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    const double orig = x[i];
    x[i] = orig + step;
    const double fp = f(x);
    x[i] = orig - step;
    const double fm = f(x);
    x[i] = orig;
    const double fd = (fp - fm) / (2.0 * step);
    worst = std::max(worst, rel_err(fd, analytic_grad[i], floor));
  }
  return worst;
}

}  // namespace mixse::testing
