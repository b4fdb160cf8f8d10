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

#include "pdegreedy/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "pdegreedy/csv.hpp"
#include "pdegreedy/error.hpp"

namespace pdegreedy {

ProductKernel KernelSpec::build(int dx, int dmu) const {
    switch (family) {
        case KernelFamily::Gaussian:
            return {PositionKernel::gaussian(eps_x2, dx), PositionKernel::gaussian(eps_mu2, dmu)};
        case KernelFamily::Matern:
            return {PositionKernel::matern(std::sqrt(eps_x2), dx), PositionKernel::matern(std::sqrt(eps_mu2), dmu)};
        case KernelFamily::GaussianAniso:
            if (aniso.rows() != dx) throw DimensionError("anisotropic matrix does not match position dimension");
            return {PositionKernel::gaussian_aniso(aniso), PositionKernel::gaussian(eps_mu2, dmu)};
    }
    throw std::logic_error("unhandled kernel family");
}

KernelFamily parse_kernel_family(const std::string& name) {
    if (name == "gaussian") return KernelFamily::Gaussian;
    if (name == "gaussian-aniso") return KernelFamily::GaussianAniso;
    if (name == "matern") return KernelFamily::Matern;
    throw ConfigError("unknown kernel family '" + name + "'");
}

std::string to_string(KernelFamily family) {
    switch (family) {
        case KernelFamily::Gaussian: return "gaussian";
        case KernelFamily::GaussianAniso: return "gaussian-aniso";
        case KernelFamily::Matern: return "matern";
    }
    return "unknown";
}

GreedyResult train(const TrainingSetup& setup, const CandidateSet& training) {
    CandidateSet weighted = training;
    assign_weights(weighted, setup.w_interior, setup.w_boundary);
    const ProductKernel kernel = setup.kernel.build(training.position_dim, training.parameter_dim);
    return run_greedy(kernel, weighted, setup.greedy);
}

ValidationSets ValidationSets::from(const CandidateSet& set, double gamma_interior, double gamma_boundary) {
    ValidationSets v;
    v.gamma_interior = gamma_interior;
    v.gamma_boundary = gamma_boundary;
    for (const auto& lam : set.functionals) (lam.interior() ? v.interior : v.boundary).push_back(lam);
    return v;
}

namespace {

void require_nonempty(const ValidationSets& v) {
    if (v.interior.empty() || v.boundary.empty())
        throw std::invalid_argument("validation loss needs nonempty interior and boundary sets");
}

}  // namespace

double validation_loss(const Surrogate& s, const ValidationSets& v) {
    require_nonempty(v);
    auto worst = [&](const std::vector<Functional>& set) {
        double m = 0.0;
        for (const auto& lam : set) m = std::max(m, std::abs(lam.target - s.apply(lam)));
        return m;
    };
    return v.gamma_interior * worst(v.interior) + v.gamma_boundary * worst(v.boundary);
}

double validation_loss_of_zero(const ValidationSets& v) {
    require_nonempty(v);
    auto worst = [](const std::vector<Functional>& set) {
        double m = 0.0;
        for (const auto& lam : set) m = std::max(m, std::abs(lam.target));
        return m;
    };
    return v.gamma_interior * worst(v.interior) + v.gamma_boundary * worst(v.boundary);
}

void SearchSpec::validate() const {
    for (const auto& st : stages) {
        if (st.grid.empty()) throw ConfigError("search grid for '" + st.parameter + "' is empty");
        for (double g : st.grid)
            if (!(g > 0.0)) throw ConfigError("search grid for '" + st.parameter + "' has a non-positive value");
        if (!std::is_sorted(st.grid.begin(), st.grid.end()))
            throw ConfigError("search grid for '" + st.parameter + "' must be ascending");
        TrainingSetup probe;
        set_hyperparameter(probe, st.parameter, st.grid.front());
    }
}

void set_hyperparameter(TrainingSetup& setup, const std::string& name, double value) {
    if (name == "eps_x2")
        setup.kernel.eps_x2 = value;
    else if (name == "eps_mu2")
        setup.kernel.eps_mu2 = value;
    else if (name == "eps_x")
        setup.kernel.eps_x2 = value * value;
    else if (name == "eps_mu")
        setup.kernel.eps_mu2 = value * value;
    else if (name == "w_B")
        setup.w_boundary = value;
    else if (name == "w_L")
        setup.w_interior = value;
    else
        throw ConfigError("unknown search parameter '" + name + "'");
}

SearchResult consecutive_grid_search(const SearchSpec& spec, const TrainingSetup& initial,
                                     const CandidateSet& training, const ValidationSets& validation) {
    spec.validate();
    SearchResult out;
    out.best = initial;
    out.best_loss = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < spec.stages.size(); ++s) {
        const auto& stage = spec.stages[s];
        TrainingSetup stage_best = out.best;
        double stage_loss = std::numeric_limits<double>::infinity();
        for (double value : stage.grid) {
            TrainingSetup trial = out.best;
            set_hyperparameter(trial, stage.parameter, value);
            GreedyResult run;
            try {
                run = train(trial, training);
            } catch (const std::exception& e) {
                throw NumericalError("grid search: training failed for " + stage.parameter + " = " +
                                     csv::num(value) + ": " + e.what());
            }
            const double loss =
                run.surrogate ? validation_loss(*run.surrogate, validation) : validation_loss_of_zero(validation);
            out.table.push_back({s, stage.parameter, value, loss, run.size(), run.stop()});
            // Strict comparison keeps the smaller grid value on ties.
            if (loss < stage_loss) {
                stage_loss = loss;
                stage_best = trial;
            }
        }
        out.best = stage_best;
        out.best_loss = stage_loss;
    }
    return out;
}

void write_loss_table_csv(std::ostream& out, const std::vector<LossRow>& table) {
    out << "stage,parameter,value,validation_loss,n_final,stop_cause\n";
    for (const auto& r : table)
        out << r.stage << ',' << r.parameter << ',' << csv::num(r.value) << ',' << csv::num(r.loss) << ','
            << r.n_final << ',' << to_string(r.stop) << '\n';
}

std::vector<double> log_grid(double lo, double hi, int per_decade) {
    if (!(lo > 0.0) || !(hi >= lo) || per_decade < 1) throw std::invalid_argument("log_grid: bad range");
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    const auto steps = static_cast<int>(std::lround((b - a) * per_decade));
    std::vector<double> g;
    for (int i = 0; i <= steps; ++i) g.push_back(std::pow(10.0, a + (steps ? (b - a) * i / steps : 0.0)));
    return g;
}

ActiveDirection active_subspace_direction(const Eigen::MatrixXd& gradients) {
    const Eigen::Index n = gradients.rows();
    const Eigen::Index d = gradients.cols();
    if (d < 1 || n < d) throw std::invalid_argument("active subspace needs at least dx gradient samples");
    ActiveDirection out;
    out.second_moment = gradients.transpose() * gradients / static_cast<double>(n);
    const Eigen::MatrixXd& M = out.second_moment;
    if (!M.allFinite()) throw std::invalid_argument("active subspace: non-finite gradients");
    if (M.trace() <= 0.0) throw std::invalid_argument("active subspace: all gradients are zero");

    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = 1.0 / std::sqrt(static_cast<double>(i + 1));
    v.normalize();
    if ((M * v).norm() <= 1e-14 * M.trace()) {
        Eigen::Index k = 0;
        M.diagonal().maxCoeff(&k);
        v = Eigen::VectorXd::Unit(d, k);
    }

    double theta = v.dot(M * v);
    constexpr int kMaxIter = 1'000'000;
    for (int it = 0; it < kMaxIter; ++it) {
        Eigen::VectorXd w = M * v;
        v = w / w.norm();
        const double next = v.dot(M * v);
        const bool settled = std::abs(next - theta) <= 1e-10 * next;
        theta = next;
        if (settled && (M * v - theta * v).norm() <= 1e-10 * theta) break;
    }
    for (Eigen::Index i = 0; i < d; ++i) {
        if (std::abs(v(i)) > 1e-12) {
            if (v(i) < 0.0) v = -v;
            break;
        }
    }
    out.direction = v;
    out.eigenvalue = theta;
    return out;
}

Eigen::MatrixXd source_gradients(const ParametricProblem& problem, const CandidateSet& set, double h) {
    const auto d = static_cast<std::size_t>(problem.position_dim);
    std::vector<const Functional*> sites;
    for (const auto& lam : set.functionals)
        if (lam.interior()) sites.push_back(&lam);
    Eigen::MatrixXd G(static_cast<Eigen::Index>(sites.size()), static_cast<Eigen::Index>(d));
    std::vector<double> xp(d), xm(d);
    for (std::size_t r = 0; r < sites.size(); ++r) {
        const auto& lam = *sites[r];
        for (std::size_t k = 0; k < d; ++k) {
            xp = lam.position;
            xm = lam.position;
            xp[k] += h;
            xm[k] -= h;
            G(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) =
                (problem.source(xp, lam.parameter) - problem.source(xm, lam.parameter)) / (2.0 * h);
        }
    }
    return G;
}

Eigen::MatrixXd build_anisotropic_B(const Eigen::VectorXd& v1, double along, double across) {
    const Eigen::Index d = v1.size();
    if (d < 1 || std::abs(v1.norm() - 1.0) > 1e-10) throw std::invalid_argument("anisotropic B: v1 must be a unit vector");
    if (!(along > 0.0) || !(across > 0.0)) throw std::invalid_argument("anisotropic B: scales must be positive");
    Eigen::Index drop = 0;
    v1.cwiseAbs().maxCoeff(&drop);
    Eigen::MatrixXd V(d, d);
    V.col(0) = v1;
    Eigen::Index col = 1;
    for (Eigen::Index j = 0; j < d; ++j) {
        if (j == drop) continue;
        Eigen::VectorXd e = Eigen::VectorXd::Unit(d, j);
        for (int pass = 0; pass < 2; ++pass)
            for (Eigen::Index c = 0; c < col; ++c) e -= V.col(c).dot(e) * V.col(c);
        V.col(col++) = e.normalized();
    }
    Eigen::VectorXd diag = Eigen::VectorXd::Constant(d, across);
    diag(0) = along;
    Eigen::MatrixXd B = V * diag.asDiagonal() * V.transpose();
    return 0.5 * (B + B.transpose());
}

}  // namespace pdegreedy
