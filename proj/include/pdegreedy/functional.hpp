// Copyright 2026 The pdegreedy Authors
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

#include <string_view>
#include <vector>

namespace pdegreedy {

/// Differential operator acting on the position block of a joint point.
/// L = -Laplace for interior conditions, B = Id for Dirichlet conditions.
enum class DiffOp { Identity, NegLaplacian };

/// One collocation condition: delta_x o L(mu) (interior) or delta_x o B(mu)
/// (boundary), with its selection weight and target value.
struct Functional {
    DiffOp op = DiffOp::Identity;
    std::vector<double> position;
    std::vector<double> parameter;
    double weight = 1.0;
    double target = 0.0;

    [[nodiscard]] bool interior() const { return op == DiffOp::NegLaplacian; }
};

/// 'I' for interior, 'B' for boundary.
[[nodiscard]] inline char kind_code(DiffOp op) { return op == DiffOp::NegLaplacian ? 'I' : 'B'; }

[[nodiscard]] inline std::string_view kind_name(DiffOp op) {
    return op == DiffOp::NegLaplacian ? "interior" : "boundary";
}

}  // namespace pdegreedy
