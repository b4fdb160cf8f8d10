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
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pdegreedy/greedy.hpp"
#include "pdegreedy/kernels.hpp"
#include "pdegreedy/problem.hpp"

namespace pdegreedy {

enum class KernelFamily { Gaussian, GaussianAniso, Matern };

/// Product-kernel recipe. Shape parameters are stored squared; the Matern
/// family uses eps = sqrt(eps2). The anisotropic family uses `aniso` for
/// the position block and a Gaussian with eps_mu2 for the parameter.
struct KernelSpec {
    KernelFamily family = KernelFamily::Gaussian;
    double eps_x2 = 1.0;
    double eps_mu2 = 1.0;
    Eigen::MatrixXd aniso;

    [[nodiscard]] ProductKernel build(int dx, int dmu) const;
};

[[nodiscard]] KernelFamily parse_kernel_family(const std::string& name);
[[nodiscard]] std::string to_string(KernelFamily family);

/// Everything a single greedy training run depends on besides the data.
struct TrainingSetup {
    KernelSpec kernel;
    GreedyConfig greedy;
    double w_interior = 1.0;
    double w_boundary = 1.0;
};

/// Applies the setup's weights to a copy of `training` and runs the greedy
/// loop.
[[nodiscard]] GreedyResult train(const TrainingSetup& setup, const CandidateSet& training);

struct ValidationSets {
    std::vector<Functional> interior;
    std::vector<Functional> boundary;
    double gamma_interior = 1.0;
    double gamma_boundary = 1.0;

    /// Splits a sampled set by functional kind.
    static ValidationSets from(const CandidateSet& set, double gamma_interior = 1.0, double gamma_boundary = 1.0);
};

/// gamma_L max_{L,val} |y - lambda(s)| + gamma_B max_{B,val} |y - lambda(s)|.
[[nodiscard]] double validation_loss(const Surrogate& s, const ValidationSets& v);
/// The same loss for s = 0 (a run that stopped before selecting anything).
[[nodiscard]] double validation_loss_of_zero(const ValidationSets& v);

struct SearchStage {
    std::string parameter;  // eps_x2, eps_mu2, w_B; eps_x and eps_mu are squared on use
    std::vector<double> grid;
};

struct SearchSpec {
    std::vector<SearchStage> stages;

    void validate() const;
};

struct LossRow {
    std::size_t stage = 0;
    std::string parameter;
    double value = 0.0;
    double loss = 0.0;
    std::size_t n_final = 0;
    StopCause stop = StopCause::MaxIterations;
};

struct SearchResult {
    TrainingSetup best;
    double best_loss = 0.0;
    std::vector<LossRow> table;
};

/// Sets one named hyperparameter on a setup.
void set_hyperparameter(TrainingSetup& setup, const std::string& name, double value);

/// Consecutive 1D grid searches: each stage trains one surrogate per grid
/// value with the other settings at their current best, then fixes the
/// argmin (ties to the smaller value) before the next stage.
[[nodiscard]] SearchResult consecutive_grid_search(const SearchSpec& spec, const TrainingSetup& initial,
                                                   const CandidateSet& training, const ValidationSets& validation);

/// stage,parameter,value,validation_loss,n_final,stop_cause
void write_loss_table_csv(std::ostream& out, const std::vector<LossRow>& table);

/// Logarithmic grid with `per_decade` points per decade over [lo, hi].
[[nodiscard]] std::vector<double> log_grid(double lo, double hi, int per_decade = 7);

struct ActiveDirection {
    Eigen::VectorXd direction;  // unit norm, first nonzero component >= 0
    double eigenvalue = 0.0;    // Rayleigh quotient of the second-moment matrix
    Eigen::MatrixXd second_moment;
};

/// Dominant eigenvector of (1/N) sum g g^T by power iteration. Rows of
/// `gradients` are samples.
[[nodiscard]] ActiveDirection active_subspace_direction(const Eigen::MatrixXd& gradients);

/// Central-difference gradients of the source f in x at the interior sites
/// of `set`, one row per site.
[[nodiscard]] Eigen::MatrixXd source_gradients(const ParametricProblem& problem, const CandidateSet& set,
                                               double h = 1e-6);

/// V diag(along, across, ..., across) V^T with V an orthonormal completion
/// of v1.
[[nodiscard]] Eigen::MatrixXd build_anisotropic_B(const Eigen::VectorXd& v1, double along, double across);

}  // namespace pdegreedy
