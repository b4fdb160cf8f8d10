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

#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "pdegreedy/functional.hpp"

namespace pdegreedy {

using ConstPoint = std::span<const double>;

/// k(x,x') = exp(-eps2 * |x-x'|^2)
struct GaussianIso {
    double eps2;
};

/// k(x,x') = exp(-(x-x')^T B (x-x')), B symmetric positive definite.
struct GaussianAniso {
    Eigen::MatrixXd B;
};

/// k(x,x') = (3 + 3 eps r + eps^2 r^2) exp(-eps r), r = |x-x'|. C^4, so at
/// most one Laplacian per argument.
struct MaternQuadratic {
    double eps;
};

/// Radial (or Mahalanobis-radial) kernel on R^dim with closed-form Laplacian
/// and bi-Laplacian entries. Immutable after construction.
class PositionKernel {
public:
    using Spec = std::variant<GaussianIso, GaussianAniso, MaternQuadratic>;

    PositionKernel(Spec spec, int dim);

    static PositionKernel gaussian(double eps2, int dim) { return {GaussianIso{eps2}, dim}; }
    static PositionKernel gaussian_aniso(const Eigen::MatrixXd& B) {
        return {GaussianAniso{B}, static_cast<int>(B.rows())};
    }
    static PositionKernel matern(double eps, int dim) { return {MaternQuadratic{eps}, dim}; }

    [[nodiscard]] int dim() const { return dim_; }
    [[nodiscard]] const Spec& spec() const { return spec_; }

    /// Short family tag: "gaussian", "gaussian-aniso" or "matern".
    [[nodiscard]] std::string family() const;

    [[nodiscard]] double eval(ConstPoint x, ConstPoint y) const;

    /// (Laplace^{[1]} k)(x, y). Callers negate for L = -Laplace.
    [[nodiscard]] double laplacian_first(ConstPoint x, ConstPoint y) const;

    /// (Laplace^{[1]} Laplace^{[2]} k)(x, y).
    [[nodiscard]] double bilaplacian(ConstPoint x, ConstPoint y) const;

    /// (opL^{[1]} opR^{[2]} k)(x, y).
    [[nodiscard]] double apply(DiffOp opL, ConstPoint x, DiffOp opR, ConstPoint y) const;

private:
    struct Forms {
        double q;   // d^T B d (or eps2 r^2)
        double q2;  // d^T B^2 d
        double q3;  // d^T B^3 d
    };

    void check(ConstPoint x, ConstPoint y) const;
    [[nodiscard]] double squared_distance(ConstPoint x, ConstPoint y) const;
    [[nodiscard]] Forms aniso_forms(ConstPoint x, ConstPoint y) const;

    Spec spec_;
    int dim_;
    // Row-major copies of B, B^2, B^3 plus traces for the anisotropic case.
    std::vector<double> b1_, b2_, b3_;
    double tr_b1_ = 0.0;
    double tr_b2_ = 0.0;
};

/// k((x,mu),(x',mu')) = kx(x,x') * kmu(mu,mu'). Operators act on the
/// position factor only.
class ProductKernel {
public:
    ProductKernel(PositionKernel kx, PositionKernel kmu);

    [[nodiscard]] const PositionKernel& position() const { return kx_; }
    [[nodiscard]] const PositionKernel& parameter() const { return kmu_; }
    [[nodiscard]] int position_dim() const { return kx_.dim(); }
    [[nodiscard]] int parameter_dim() const { return kmu_.dim(); }

    [[nodiscard]] double eval(ConstPoint x, ConstPoint mu, ConstPoint x2, ConstPoint mu2) const;

    [[nodiscard]] double gram_entry(DiffOp opL, ConstPoint x, ConstPoint mu, DiffOp opR, ConstPoint x2,
                                    ConstPoint mu2) const;

    /// k_Lambda(a, b) = <v_a, v_b>; a's operator in the first slot.
    /// Weights and targets do not enter.
    [[nodiscard]] double functional_gram(const Functional& a, const Functional& b) const;

    /// Riesz representer v_lam evaluated at the joint point (x, mu).
    [[nodiscard]] double riesz_eval(const Functional& lam, ConstPoint x, ConstPoint mu) const;

    /// Same, with z = (x, mu) concatenated.
    [[nodiscard]] double riesz_eval(const Functional& lam, ConstPoint z) const;

private:
    PositionKernel kx_;
    PositionKernel kmu_;
};

/// True if B is symmetric to 1e-12 relative and admits a Cholesky factor.
[[nodiscard]] bool is_spd(const Eigen::MatrixXd& B);

}  // namespace pdegreedy
