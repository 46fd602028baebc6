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

#include "polyphone/grad_check.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "polyphone/errors.h"
#include "polyphone/rng.h"

namespace polyphone {

double RelativeError(double analytic, double numeric, double abs_floor) {
  const double diff = std::abs(analytic - numeric);
  if (diff <= abs_floor) return 0.0;
  return diff / std::max(std::abs(analytic), std::abs(numeric));
}

GradCheckReport GradCheck(const std::function<double()> &loss,
                          std::span<const GradCheckEntry> entries,
                          const GradCheckOptions &options) {
  auto eval = [&loss]() {
    const double v = loss();
    if (!std::isfinite(v)) throw NumericError("gradient check: non-finite loss");
    return v;
  };
  eval();

  Rng rng(options.seed);
  GradCheckReport report;
  for (const auto &entry : entries) {
    RequireShape(*entry.grad, entry.param->shape(), entry.name.c_str());
    std::vector<int64_t> indices(entry.param->size());
    std::iota(indices.begin(), indices.end(), 0);
    const auto limit = options.max_entries_per_tensor;
    if (limit > 0 && limit < entry.param->size()) {
      // Partial Fisher-Yates: the first `limit` slots become the sample.
      for (int64_t i = 0; i < limit; ++i) {
        const auto j = i + static_cast<int64_t>(rng.UniformInt(indices.size() - i));
        std::swap(indices[i], indices[j]);
      }
      indices.resize(limit);
      std::sort(indices.begin(), indices.end());
    }

    TensorGradReport tr{entry.name, 0.0, 0};
    Tensor &param = *entry.param;
    for (int64_t idx : indices) {
      const double saved = param[idx];
      param[idx] = saved + options.eps;
      const double plus = eval();
      param[idx] = saved - options.eps;
      const double minus = eval();
      param[idx] = saved;
      const double numeric = (plus - minus) / (2.0 * options.eps);
      tr.max_rel_error = std::max(
          tr.max_rel_error, RelativeError((*entry.grad)[idx], numeric, options.abs_floor));
      ++tr.checked;
    }
    report.max_rel_error = std::max(report.max_rel_error, tr.max_rel_error);
    report.tensors.push_back(std::move(tr));
  }
  return report;
}

}  // namespace polyphone
