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

#ifndef POLYPHONE_MODEL_CHECK_H_
#define POLYPHONE_MODEL_CHECK_H_

#include <cstdint>

#include "polyphone/grad_check.h"
#include "polyphone/model.h"

namespace polyphone {

// Small dimensions for exhaustive checks (every parameter element).
ModelDims GradCheckDims();

// Finite-difference check of the whole graph of `variant` on a random
// two-sentence batch of unequal lengths, with random parameters (biases
// included) and dropout disabled.
GradCheckReport CheckModelGradients(Variant variant, const ModelDims &dims, uint64_t seed,
                                    const GradCheckOptions &options = {});

}  // namespace polyphone

#endif  // POLYPHONE_MODEL_CHECK_H_
