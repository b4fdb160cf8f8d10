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

#include "pdegreedy/kernels.hpp"

#include <cmath>
#include <string>

#include "pdegreedy/error.hpp"

namespace pdegreedy {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::vector<double> row_major(const Eigen::MatrixXd& m) {
    std::vector<double> out(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
    return out;
}

}  // namespace

bool is_spd(const Eigen::MatrixXd& B) {
    if (B.rows() != B.cols() || B.rows() == 0) return false;
    if (!B.allFinite()) return false;
    const double scale = B.cwiseAbs().maxCoeff();
    if ((B - B.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) return false;
    Eigen::LLT<Eigen::MatrixXd> llt(B);
    return llt.info() == Eigen::Success;
}

PositionKernel::PositionKernel(Spec spec, int dim) : spec_(std::move(spec)), dim_(dim) {
    if (dim_ < 1) throw std::invalid_argument("kernel dimension must be positive");
    std::visit(Overloaded{
                   [](const GaussianIso& g) {
                       if (!(g.eps2 > 0.0) || !std::isfinite(g.eps2))
                           throw std::invalid_argument("Gaussian kernel requires eps^2 > 0");
                   },
                   [this](const GaussianAniso& g) {
                       if (g.B.rows() != dim_ || g.B.cols() != dim_)
                           throw DimensionError("anisotropic Gaussian: B must be " + std::to_string(dim_) + "x" +
                                                std::to_string(dim_));
                       if (!is_spd(g.B)) throw std::invalid_argument("anisotropic Gaussian: B is not SPD");
                       const Eigen::MatrixXd b2 = g.B * g.B;
                       b1_ = row_major(g.B);
                       b2_ = row_major(b2);
                       b3_ = row_major(b2 * g.B);
                       tr_b1_ = g.B.trace();
                       tr_b2_ = b2.trace();
                   },
                   [](const MaternQuadratic& m) {
                       if (!(m.eps > 0.0) || !std::isfinite(m.eps))
                           throw std::invalid_argument("Matern kernel requires eps > 0");
                   },
               },
               spec_);
}

std::string PositionKernel::family() const {
    return std::visit(Overloaded{
                          [](const GaussianIso&) { return std::string("gaussian"); },
                          [](const GaussianAniso&) { return std::string("gaussian-aniso"); },
                          [](const MaternQuadratic&) { return std::string("matern"); },
                      },
                      spec_);
}

void PositionKernel::check(ConstPoint x, ConstPoint y) const {
    const auto d = static_cast<std::size_t>(dim_);
    if (x.size() != d || y.size() != d)
        throw DimensionError("kernel of dimension " + std::to_string(dim_) + " evaluated at points of dimension " +
                             std::to_string(x.size()) + " and " + std::to_string(y.size()));
}

double PositionKernel::squared_distance(ConstPoint x, ConstPoint y) const {
    double r2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = x[i] - y[i];
        r2 += t * t;
    }
    return r2;
}

PositionKernel::Forms PositionKernel::aniso_forms(ConstPoint x, ConstPoint y) const {
    const auto d = static_cast<std::size_t>(dim_);
    Forms f{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < d; ++i) {
        const double di = x[i] - y[i];
        double s1 = 0.0, s2 = 0.0, s3 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double dj = x[j] - y[j];
            s1 += b1_[i * d + j] * dj;
            s2 += b2_[i * d + j] * dj;
            s3 += b3_[i * d + j] * dj;
        }
        f.q += di * s1;
        f.q2 += di * s2;
        f.q3 += di * s3;
    }
    return f;
}

double PositionKernel::eval(ConstPoint x, ConstPoint y) const {
    check(x, y);
    return std::visit(Overloaded{
                          [&](const GaussianIso& g) { return std::exp(-g.eps2 * squared_distance(x, y)); },
                          [&](const GaussianAniso&) { return std::exp(-aniso_forms(x, y).q); },
                          [&](const MaternQuadratic& m) {
                              const double s = m.eps * std::sqrt(squared_distance(x, y));
                              return (3.0 + 3.0 * s + s * s) * std::exp(-s);
                          },
                      },
                      spec_);
}

// The closed forms below come from Laplace f(r) = f'' + (d-1) f'/r applied
// once or twice. After simplification no 1/r term survives, so r = 0 needs no
// special branch.
double PositionKernel::laplacian_first(ConstPoint x, ConstPoint y) const {
    check(x, y);
    const double d = dim_;
    return std::visit(Overloaded{
                          [&](const GaussianIso& g) {
                              const double r2 = squared_distance(x, y);
                              return (4.0 * g.eps2 * g.eps2 * r2 - 2.0 * g.eps2 * d) * std::exp(-g.eps2 * r2);
                          },
                          [&](const GaussianAniso&) {
                              const Forms f = aniso_forms(x, y);
                              return (4.0 * f.q2 - 2.0 * tr_b1_) * std::exp(-f.q);
                          },
                          [&](const MaternQuadratic& m) {
                              const double s = m.eps * std::sqrt(squared_distance(x, y));
                              return m.eps * m.eps * std::exp(-s) * (s * s - d * (1.0 + s));
                          },
                      },
                      spec_);
}

double PositionKernel::bilaplacian(ConstPoint x, ConstPoint y) const {
    check(x, y);
    const double d = dim_;
    return std::visit(Overloaded{
                          [&](const GaussianIso& g) {
                              const double e2 = g.eps2;
                              const double r2 = squared_distance(x, y);
                              const double a = 4.0 * e2 * e2 * r2 - 2.0 * e2 * d;
                              return (a * a + 8.0 * e2 * e2 * d - 32.0 * e2 * e2 * e2 * r2) * std::exp(-e2 * r2);
                          },
                          [&](const GaussianAniso&) {
                              const Forms f = aniso_forms(x, y);
                              const double a = 4.0 * f.q2 - 2.0 * tr_b1_;
                              return (a * a + 8.0 * tr_b2_ - 32.0 * f.q3) * std::exp(-f.q);
                          },
                          [&](const MaternQuadratic& m) {
                              const double e2 = m.eps * m.eps;
                              const double s = m.eps * std::sqrt(squared_distance(x, y));
                              return e2 * e2 * std::exp(-s) * (s * s - (2.0 * d + 3.0) * s + d * (d + 2.0));
                          },
                      },
                      spec_);
}

double PositionKernel::apply(DiffOp opL, ConstPoint x, DiffOp opR, ConstPoint y) const {
    if (opL == DiffOp::Identity && opR == DiffOp::Identity) return eval(x, y);
    if (opL == DiffOp::NegLaplacian && opR == DiffOp::NegLaplacian) return bilaplacian(x, y);
    // Laplace^{[2]} k(x,y) = Laplace^{[1]} k(x,y) since k depends on x - y
    // through an even form.
    return -laplacian_first(x, y);
}

ProductKernel::ProductKernel(PositionKernel kx, PositionKernel kmu) : kx_(std::move(kx)), kmu_(std::move(kmu)) {}

double ProductKernel::eval(ConstPoint x, ConstPoint mu, ConstPoint x2, ConstPoint mu2) const {
    return kx_.eval(x, x2) * kmu_.eval(mu, mu2);
}

double ProductKernel::gram_entry(DiffOp opL, ConstPoint x, ConstPoint mu, DiffOp opR, ConstPoint x2,
                                 ConstPoint mu2) const {
    return kx_.apply(opL, x, opR, x2) * kmu_.eval(mu, mu2);
}

double ProductKernel::functional_gram(const Functional& a, const Functional& b) const {
    return gram_entry(a.op, a.position, a.parameter, b.op, b.position, b.parameter);
}

double ProductKernel::riesz_eval(const Functional& lam, ConstPoint x, ConstPoint mu) const {
    return gram_entry(lam.op, lam.position, lam.parameter, DiffOp::Identity, x, mu);
}

double ProductKernel::riesz_eval(const Functional& lam, ConstPoint z) const {
    const auto dx = static_cast<std::size_t>(position_dim());
    const auto dmu = static_cast<std::size_t>(parameter_dim());
    if (z.size() != dx + dmu)
        throw DimensionError("joint point has dimension " + std::to_string(z.size()) + ", expected " +
                             std::to_string(dx + dmu));
    return riesz_eval(lam, z.first(dx), z.subspan(dx));
}

}  // namespace pdegreedy
