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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pdegreedy/functional.hpp"
#include "pdegreedy/kernels.hpp"

namespace pdegreedy {

struct Interval {
    double lo;
    double hi;

    [[nodiscard]] double mid() const { return 0.5 * (lo + hi); }
    [[nodiscard]] double width() const { return hi - lo; }
};

/// Sampled training (or validation/test) functionals for one problem.
/// Interior functionals come first, then boundary functionals.
struct CandidateSet {
    std::vector<Functional> functionals;
    std::size_t n_interior = 0;
    std::size_t n_boundary = 0;
    std::uint64_t seed = 0;
    int position_dim = 0;
    int parameter_dim = 0;

    [[nodiscard]] std::size_t size() const { return functionals.size(); }
    [[nodiscard]] bool empty() const { return functionals.empty(); }
};

using ScalarField = std::function<double(ConstPoint x, ConstPoint mu)>;

enum class Geometry { MovingCircles, UnitCube };

/// Poisson problem -Laplace u(.,mu) = f(.,mu) in Omega(mu), u = g on the
/// boundary, over a scalar parameter range.
struct ParametricProblem {
    std::string name;
    int position_dim = 2;
    int parameter_dim = 1;
    Geometry geometry = Geometry::UnitCube;
    Interval parameter_range{0.0, 1.0};
    ScalarField source;
    ScalarField boundary_data;
    std::optional<ScalarField> exact;

    /// x in the open domain Omega(mu).
    [[nodiscard]] bool contains(ConstPoint x, ConstPoint mu) const;
    /// x on the boundary of Omega(mu) up to tol.
    [[nodiscard]] bool on_boundary(ConstPoint x, ConstPoint mu, double tol = 1e-12) const;
    /// Axis-aligned box containing Omega(mu) for every mu.
    [[nodiscard]] std::vector<Interval> position_box() const;

    /// Samples sites with the geometry's sampler and attaches f/g targets.
    /// Weights are left at 1.
    [[nodiscard]] CandidateSet sample(std::size_t n_interior, std::size_t n_boundary, std::uint64_t seed) const;

    /// f for interior functionals, g for boundary functionals.
    [[nodiscard]] double target_of(const Functional& lam) const;
};

struct SamplingStats {
    std::size_t interior_proposals = 0;  // box draws of (x, mu) including rejected ones
};

/// Omega(mu) = B_1(0) u B_1((mu,0)), mu in [0, 1.1]. Interior sites are drawn
/// jointly in (x, mu) by rejection from the box, boundary sites at a fixed mu.
/// Targets are left at 0.
[[nodiscard]] CandidateSet sample_moving_circles(std::size_t n_interior, std::size_t n_boundary,
                                                 std::uint64_t seed, SamplingStats* stats = nullptr);

/// Omega = (0,1)^dx, mu uniform in mu_range. Targets are left at 0.
[[nodiscard]] CandidateSet sample_unit_cube(int dx, Interval mu_range, std::size_t n_interior,
                                            std::size_t n_boundary, std::uint64_t seed);

void attach_targets(const ParametricProblem& problem, CandidateSet& set);

/// w_L on interior functionals, w_B on boundary functionals.
void assign_weights(CandidateSet& set, double w_interior, double w_boundary);

/// Known names: moving-circles-smooth, moving-circles-singular,
/// moving-source, sinus-highdim (position dimension from dx). Throws
/// ConfigError otherwise.
[[nodiscard]] ParametricProblem make_problem(std::string_view name, int dx = 2);

/// kind,x_1..x_dx,mu_1..mu_dmu,weight,target
void write_candidates_csv(std::ostream& out, const CandidateSet& set);
[[nodiscard]] CandidateSet read_candidates_csv(std::istream& in);

}  // namespace pdegreedy
