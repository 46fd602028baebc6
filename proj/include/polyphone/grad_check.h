// Copyright 2026 The Polyphone Authors
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

#ifndef POLYPHONE_GRAD_CHECK_H_
#define POLYPHONE_GRAD_CHECK_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "polyphone/tensor.h"

namespace polyphone {

// A parameter tensor together with its analytic gradient. The checker
// perturbs `param` in place and restores it before returning.
struct GradCheckEntry {
  std::string name;
  Tensor *param;
  const Tensor *grad;
};

struct GradCheckOptions {
  double eps = 1e-5;
  // Differences below this are treated as exact agreement.
  double abs_floor = 1e-11;
  // 0 checks every element; otherwise a seeded sample of this many per tensor.
  int64_t max_entries_per_tensor = 0;
  uint64_t seed = 0;
};

struct TensorGradReport {
  std::string name;
  double max_rel_error = 0.0;
  int64_t checked = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::vector<TensorGradReport> tensors;
};

double RelativeError(double analytic, double numeric, double abs_floor);

// Compares each analytic gradient element against the central difference
// (L(t + eps) - L(t - eps)) / (2 eps). `loss` must be deterministic.
GradCheckReport GradCheck(const std::function<double()> &loss,
                          std::span<const GradCheckEntry> entries,
                          const GradCheckOptions &options = {});

}  // namespace polyphone

#endif  // POLYPHONE_GRAD_CHECK_H_
