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
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pdegreedy/functional.hpp"
#include "pdegreedy/kernels.hpp"
#include "pdegreedy/problem.hpp"

namespace pdegreedy {

/// Selection and stopping parameters of the greedy loop. beta may be
/// +infinity, which selects by w |r| / P.
struct GreedyConfig {
    double beta = 1.0;
    std::size_t n_max = 100;
    double eps_acc = 1e-15;
    double eps_stab = 1e-15;
    // Candidates whose squared power has dropped to rel_power_floor times
    // their Gram diagonal are treated as numerically spanned.
    double rel_power_floor = 1e-14;

    static constexpr double kInfiniteBeta = std::numeric_limits<double>::infinity();

    [[nodiscard]] bool beta_infinite() const { return beta == kInfiniteBeta; }
    void validate() const;
};

enum class StopCause { MaxIterations, Accuracy, Stability };

/// "n_max", "accuracy" or "stability".
[[nodiscard]] std::string to_string(StopCause cause);

/// Newton basis over all candidates, i.e. the rows of a partial pivoted
/// Cholesky factor of the full candidate Gram matrix.
struct GreedyState {
    using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    std::vector<std::size_t> selected;
    std::vector<char> is_selected;
    RowMatrix newton;                    // N x capacity, first n columns in use
    std::vector<double> diagonal;        // k_Lambda(lambda_j, lambda_j)
    std::vector<double> power2;          // squared power function per candidate
    std::vector<double> residual;        // y - lambda(s_n) per candidate
    std::vector<double> power_history;   // P_i, the Cholesky diagonal
    std::vector<double> newton_coeffs;   // c_i = r_{i-1}(lambda_i) / P_i
    double min_unclamped_power2 = 0.0;   // most negative power2 seen before clamping

    [[nodiscard]] std::size_t size() const { return selected.size(); }
    [[nodiscard]] double max_abs_residual() const;

    /// n x n lower-triangular factor, row i = Newton values at the i-th
    /// selected functional.
    [[nodiscard]] Eigen::MatrixXd cholesky_factor() const;
};

/// s_n = sum_i alpha_i v_{lambda_i}.
class Surrogate {
public:
    /// Checks K alpha = y against the assembled Gram matrix; the relative
    /// residual is kept for diagnostics. Throws NumericalError on non-finite
    /// coefficients.
    Surrogate(ProductKernel kernel, std::vector<Functional> functionals, Eigen::VectorXd alpha,
              Eigen::MatrixXd cholesky);

    [[nodiscard]] const ProductKernel& kernel() const { return kernel_; }
    [[nodiscard]] const std::vector<Functional>& functionals() const { return functionals_; }
    [[nodiscard]] const Eigen::VectorXd& alpha() const { return alpha_; }
    [[nodiscard]] const Eigen::MatrixXd& cholesky() const { return chol_; }
    [[nodiscard]] std::size_t size() const { return functionals_.size(); }
    [[nodiscard]] std::size_t interior_count() const;
    [[nodiscard]] std::size_t boundary_count() const { return size() - interior_count(); }

    /// ||K alpha - y|| / ||y|| at construction.
    [[nodiscard]] double interpolation_residual() const { return interp_residual_; }

    [[nodiscard]] double eval(ConstPoint x, ConstPoint mu) const;
    [[nodiscard]] double eval(ConstPoint z) const;

    /// lambda(s_n) = sum_i alpha_i k_Lambda(lambda, lambda_i).
    [[nodiscard]] double apply(const Functional& lam) const;

    /// ||s_n||^2 in the native space, alpha^T K alpha.
    [[nodiscard]] double native_norm_sq() const;

private:
    ProductKernel kernel_;
    std::vector<Functional> functionals_;
    Eigen::VectorXd alpha_;
    Eigen::MatrixXd chol_;
    double interp_residual_ = 0.0;
    double norm_sq_ = 0.0;
};

struct IterationRecord {
    std::size_t iteration = 0;
    std::size_t candidate = 0;
    DiffOp kind = DiffOp::Identity;
    std::vector<double> position;
    std::vector<double> parameter;
    double eta = 0.0;
    double power = 0.0;
    double max_residual = 0.0;  // after the update
    std::size_t n_interior = 0;
    std::size_t n_boundary = 0;
    double elapsed_s = 0.0;
};

struct History {
    std::vector<IterationRecord> records;
    StopCause stop = StopCause::MaxIterations;
    double initial_max_residual = 0.0;
};

struct GreedyResult {
    /// Empty when the accuracy criterion already holds for s_0 = 0.
    std::optional<Surrogate> surrogate;
    History history;
    std::vector<std::size_t> selected;

    [[nodiscard]] StopCause stop() const { return history.stop; }
    [[nodiscard]] std::size_t size() const { return selected.size(); }
};

/// Called after every accepted iteration with the updated state.
using GreedyObserver = std::function<void(const GreedyState&)>;

/// argmax of eta(lambda) = w |r|^beta P^{1-beta} over unselected candidates
/// with P^2 > max(eps_stab^2, rel_floor * diagonal); ties go to the lowest
/// index. nullopt when no candidate is eligible.
[[nodiscard]] std::optional<std::size_t> select_next(const GreedyState& state, std::span<const Functional> candidates,
                                                     double beta, double eps_stab, double rel_floor = 0.0,
                                                     double* eta_out = nullptr);

/// Greedy generalized kernel interpolation with incremental Newton-basis
/// updates.
[[nodiscard]] GreedyResult run_greedy(const ProductKernel& kernel, const CandidateSet& candidates,
                                      const GreedyConfig& config, const GreedyObserver& observer = {});

/// Dense symmetric collocation on the given functionals. Solves K alpha = y
/// by Cholesky, escalating diagonal jitter through 0, 1e-12, 1e-10, 1e-8
/// (relative to the mean diagonal). At most 5000 functionals.
[[nodiscard]] Surrogate full_collocation_solve(const ProductKernel& kernel, std::vector<Functional> functionals,
                                               const Eigen::VectorXd& y);

/// Gram matrix (k_Lambda(lambda_i, lambda_j))_{ij}.
[[nodiscard]] Eigen::MatrixXd assemble_gram(const ProductKernel& kernel, std::span<const Functional> functionals);

void write_history_csv(std::ostream& out, const History& history);
/// kind,x_*,mu_*,target,alpha
void write_selected_csv(std::ostream& out, const Surrogate& s);

/// Flat text persistence: a header with kernel families, shape parameters,
/// dimensions and n, then one line per functional.
void save_surrogate(std::ostream& out, const Surrogate& s);
[[nodiscard]] Surrogate load_surrogate(std::istream& in);

}  // namespace pdegreedy
