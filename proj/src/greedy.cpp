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

#include "pdegreedy/greedy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "pdegreedy/csv.hpp"
#include "pdegreedy/error.hpp"

namespace pdegreedy {

namespace {

constexpr std::size_t kMaxDenseSize = 5000;

double criterion(double weight, double residual, double power, double beta) {
    const double r = std::abs(residual);
    if (beta == 0.0) return weight * power;
    if (beta == 1.0) return weight * r;
    if (std::isinf(beta)) return weight * r / power;
    return weight * std::pow(r, beta) * std::pow(power, 1.0 - beta);
}

struct Factorization {
    Eigen::MatrixXd lower;
    bool ok = false;
    Eigen::Index failed_pivot = -1;
    double failed_value = 0.0;
};

// Left-looking column Cholesky; reports the first non-positive pivot.
Factorization cholesky(const Eigen::MatrixXd& K) {
    const Eigen::Index n = K.rows();
    Factorization f;
    f.lower = Eigen::MatrixXd::Zero(n, n);
    auto& L = f.lower;
    for (Eigen::Index j = 0; j < n; ++j) {
        const Eigen::Index m = n - j;
        Eigen::VectorXd v = K.col(j).tail(m);
        if (j > 0) v.noalias() -= L.bottomLeftCorner(m, j) * L.row(j).head(j).transpose();
        if (!(v(0) > 0.0)) {
            f.failed_pivot = j;
            f.failed_value = v(0);
            return f;
        }
        const double d = std::sqrt(v(0));
        L(j, j) = d;
        L.col(j).tail(m - 1) = v.tail(m - 1) / d;
    }
    f.ok = true;
    return f;
}

Eigen::VectorXd solve_llt(const Eigen::MatrixXd& L, const Eigen::VectorXd& y) {
    const Eigen::VectorXd z = L.triangularView<Eigen::Lower>().solve(y);
    return L.transpose().triangularView<Eigen::Upper>().solve(z);
}

std::string site_string(const Functional& lam) {
    std::ostringstream os;
    os << kind_name(lam.op) << " (";
    for (std::size_t i = 0; i < lam.position.size(); ++i) os << (i ? "," : "") << lam.position[i];
    os << "; ";
    for (std::size_t i = 0; i < lam.parameter.size(); ++i) os << (i ? "," : "") << lam.parameter[i];
    os << ")";
    return os.str();
}

}  // namespace

void GreedyConfig::validate() const {
    if (!(beta >= 0.0)) throw std::invalid_argument("beta must lie in [0, inf]");
    if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
    if (!(eps_acc >= 0.0) || !(eps_stab >= 0.0)) throw std::invalid_argument("tolerances must be >= 0");
    if (!(rel_power_floor >= 0.0) || !(rel_power_floor < 1.0))
        throw std::invalid_argument("rel_power_floor must lie in [0, 1)");
}

std::string to_string(StopCause cause) {
    switch (cause) {
        case StopCause::MaxIterations: return "n_max";
        case StopCause::Accuracy: return "accuracy";
        case StopCause::Stability: return "stability";
    }
    return "unknown";
}

double GreedyState::max_abs_residual() const {
    double m = 0.0;
    for (double r : residual) m = std::max(m, std::abs(r));
    return m;
}

Eigen::MatrixXd GreedyState::cholesky_factor() const {
    const auto n = static_cast<Eigen::Index>(selected.size());
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        L.row(i).head(i + 1) = newton.row(static_cast<Eigen::Index>(selected[static_cast<std::size_t>(i)])).head(i + 1);
    return L;
}

Eigen::MatrixXd assemble_gram(const ProductKernel& kernel, std::span<const Functional> functionals) {
    const auto n = static_cast<Eigen::Index>(functionals.size());
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const auto& a = functionals[static_cast<std::size_t>(i)];
            const auto& b = functionals[static_cast<std::size_t>(j)];
            const double v = kernel.functional_gram(a, b);
            if (!std::isfinite(v))
                throw NumericalError("non-finite Gram entry between " + site_string(a) + " and " + site_string(b));
            K(i, j) = v;
            K(j, i) = v;
        }
    }
    return K;
}

Surrogate::Surrogate(ProductKernel kernel, std::vector<Functional> functionals, Eigen::VectorXd alpha,
                     Eigen::MatrixXd cholesky)
    : kernel_(std::move(kernel)), functionals_(std::move(functionals)), alpha_(std::move(alpha)),
      chol_(std::move(cholesky)) {
    if (functionals_.empty()) throw std::invalid_argument("surrogate needs at least one functional");
    if (static_cast<std::size_t>(alpha_.size()) != functionals_.size())
        throw DimensionError("coefficient count does not match functional count");
    if (!alpha_.allFinite()) throw NumericalError("surrogate coefficients are not finite");
    const Eigen::MatrixXd K = assemble_gram(kernel_, functionals_);
    Eigen::VectorXd y(alpha_.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = functionals_[static_cast<std::size_t>(i)].target;
    const Eigen::VectorXd Ka = K * alpha_;
    const double ynorm = y.norm();
    interp_residual_ = (Ka - y).norm() / (ynorm > 0.0 ? ynorm : 1.0);
    norm_sq_ = alpha_.dot(Ka);
}

std::size_t Surrogate::interior_count() const {
    return static_cast<std::size_t>(
        std::count_if(functionals_.begin(), functionals_.end(), [](const Functional& f) { return f.interior(); }));
}

double Surrogate::eval(ConstPoint x, ConstPoint mu) const {
    double s = 0.0;
    for (std::size_t i = 0; i < functionals_.size(); ++i)
        s += alpha_(static_cast<Eigen::Index>(i)) * kernel_.riesz_eval(functionals_[i], x, mu);
    return s;
}

double Surrogate::eval(ConstPoint z) const {
    const auto dx = static_cast<std::size_t>(kernel_.position_dim());
    if (z.size() != dx + static_cast<std::size_t>(kernel_.parameter_dim()))
        throw DimensionError("joint point has wrong dimension " + std::to_string(z.size()));
    return eval(z.first(dx), z.subspan(dx));
}

double Surrogate::apply(const Functional& lam) const {
    double s = 0.0;
    for (std::size_t i = 0; i < functionals_.size(); ++i)
        s += alpha_(static_cast<Eigen::Index>(i)) * kernel_.functional_gram(lam, functionals_[i]);
    return s;
}

double Surrogate::native_norm_sq() const { return norm_sq_; }

std::optional<std::size_t> select_next(const GreedyState& state, std::span<const Functional> candidates, double beta,
                                       double eps_stab, double rel_floor, double* eta_out) {
    const double floor2 = eps_stab * eps_stab;
    std::optional<std::size_t> best;
    double best_eta = -1.0;
    for (std::size_t j = 0; j < candidates.size(); ++j) {
        if (state.is_selected[j] || !(state.power2[j] > floor2) || !(state.power2[j] > rel_floor * state.diagonal[j])) continue;
        const double eta = criterion(candidates[j].weight, state.residual[j], std::sqrt(state.power2[j]), beta);
        if (eta > best_eta) {
            best_eta = eta;
            best = j;
        }
    }
    if (eta_out) *eta_out = best_eta;
    return best;
}

GreedyResult run_greedy(const ProductKernel& kernel, const CandidateSet& candidates, const GreedyConfig& config,
                        const GreedyObserver& observer) {
    config.validate();
    if (candidates.empty()) throw std::invalid_argument("run_greedy: empty candidate set");
    if (candidates.position_dim != kernel.position_dim() || candidates.parameter_dim != kernel.parameter_dim())
        throw DimensionError("run_greedy: candidate dimensions do not match the kernel");

    using Clock = std::chrono::steady_clock;
    const auto t0 = Clock::now();
    const auto& cands = candidates.functionals;
    const std::size_t N = cands.size();
    const auto NN = static_cast<Eigen::Index>(N);

    GreedyState st;
    st.is_selected.assign(N, 0);
    st.power2.resize(N);
    st.diagonal.resize(N);
    st.residual.resize(N);
    for (std::size_t j = 0; j < N; ++j) {
        const double d = kernel.functional_gram(cands[j], cands[j]);
        if (!std::isfinite(d))
            throw NumericalError("non-finite Gram diagonal at " + site_string(cands[j]));
        st.power2[j] = d;
        st.diagonal[j] = d;
        st.residual[j] = cands[j].target;
    }
    const std::size_t n_cap = std::min(config.n_max, N);
    Eigen::Index capacity = static_cast<Eigen::Index>(std::min<std::size_t>(n_cap, 64));
    st.newton.resize(NN, capacity);

    GreedyResult result;
    result.history.initial_max_residual = st.max_abs_residual();
    double max_res = result.history.initial_max_residual;
    std::size_t n_int = 0;
    std::size_t n_bnd = 0;
    Eigen::VectorXd column(NN);

    StopCause cause = StopCause::MaxIterations;
    while (true) {
        const std::size_t i = st.size();
        if (i >= config.n_max) {
            cause = StopCause::MaxIterations;
            break;
        }
        if (!(max_res > config.eps_acc)) {
            cause = StopCause::Accuracy;
            break;
        }
        double eta = 0.0;
        const auto pick = select_next(st, cands, config.beta, config.eps_stab, config.rel_power_floor, &eta);
        if (!pick) {
            cause = StopCause::Stability;
            break;
        }
        const std::size_t p = *pick;
        const double P = std::sqrt(std::max(st.power2[p], 0.0));
        if (!(P > config.eps_stab)) {
            cause = StopCause::Stability;
            break;
        }

        const auto ii = static_cast<Eigen::Index>(i);
        if (ii >= capacity) {
            capacity = std::min<Eigen::Index>(2 * capacity, static_cast<Eigen::Index>(n_cap));
            st.newton.conservativeResize(NN, capacity);
        }
        for (std::size_t j = 0; j < N; ++j) {
            const double g = kernel.functional_gram(cands[j], cands[p]);
            if (!std::isfinite(g))
                throw NumericalError("non-finite Gram entry between " + site_string(cands[j]) + " and " +
                                     site_string(cands[p]));
            column(static_cast<Eigen::Index>(j)) = g;
        }
        if (ii > 0) {
            const Eigen::VectorXd pivot_row = st.newton.row(static_cast<Eigen::Index>(p)).head(ii).transpose();
            column.noalias() -= st.newton.leftCols(ii) * pivot_row;
        }
        column /= P;
        column(static_cast<Eigen::Index>(p)) = P;
        st.newton.col(ii) = column;

        const double c = st.residual[p] / P;
        max_res = 0.0;
        for (std::size_t j = 0; j < N; ++j) {
            const double nj = column(static_cast<Eigen::Index>(j));
            double p2 = st.power2[j] - nj * nj;
            st.min_unclamped_power2 = std::min(st.min_unclamped_power2, p2);
            st.power2[j] = std::max(p2, 0.0);
            st.residual[j] -= c * nj;
            max_res = std::max(max_res, std::abs(st.residual[j]));
        }
        st.power2[p] = 0.0;
        st.selected.push_back(p);
        st.is_selected[p] = 1;
        st.power_history.push_back(P);
        st.newton_coeffs.push_back(c);

        const auto& lam = cands[p];
        (lam.interior() ? n_int : n_bnd)++;
        IterationRecord rec;
        rec.iteration = i + 1;
        rec.candidate = p;
        rec.kind = lam.op;
        rec.position = lam.position;
        rec.parameter = lam.parameter;
        rec.eta = eta;
        rec.power = P;
        rec.max_residual = max_res;
        rec.n_interior = n_int;
        rec.n_boundary = n_bnd;
        rec.elapsed_s = std::chrono::duration<double>(Clock::now() - t0).count();
        result.history.records.push_back(std::move(rec));

        if (observer) observer(st);
    }
    result.history.stop = cause;
    result.selected = st.selected;
    if (st.selected.empty()) return result;

    const Eigen::MatrixXd L = st.cholesky_factor();
    Eigen::VectorXd y(L.rows());
    std::vector<Functional> chosen;
    chosen.reserve(st.selected.size());
    for (std::size_t k = 0; k < st.selected.size(); ++k) {
        chosen.push_back(cands[st.selected[k]]);
        y(static_cast<Eigen::Index>(k)) = cands[st.selected[k]].target;
    }
    Eigen::VectorXd alpha = solve_llt(L, y);
    result.surrogate.emplace(kernel, std::move(chosen), std::move(alpha), L);
    return result;
}

Surrogate full_collocation_solve(const ProductKernel& kernel, std::vector<Functional> functionals,
                                 const Eigen::VectorXd& y) {
    if (functionals.empty()) throw std::invalid_argument("full collocation: no functionals");
    if (functionals.size() > kMaxDenseSize)
        throw std::invalid_argument("full collocation: " + std::to_string(functionals.size()) +
                                    " functionals exceed the dense limit of " + std::to_string(kMaxDenseSize));
    if (static_cast<std::size_t>(y.size()) != functionals.size())
        throw DimensionError("full collocation: target vector length mismatch");
    for (std::size_t i = 0; i < functionals.size(); ++i) functionals[i].target = y(static_cast<Eigen::Index>(i));

    const Eigen::MatrixXd K = assemble_gram(kernel, functionals);
    const double mean_diag = K.diagonal().mean();
    Factorization f;
    for (double rel : {0.0, 1e-12, 1e-10, 1e-8}) {
        if (rel == 0.0) {
            f = cholesky(K);
        } else {
            Eigen::MatrixXd Kj = K;
            Kj.diagonal().array() += rel * mean_diag;
            f = cholesky(Kj);
        }
        if (f.ok) break;
    }
    if (!f.ok)
        throw NumericalError("full collocation: Cholesky failed at pivot " + std::to_string(f.failed_pivot) + " (" +
                             site_string(functionals[static_cast<std::size_t>(f.failed_pivot)]) +
                             ", value " + std::to_string(f.failed_value) + ") even with jitter 1e-8");
    Eigen::VectorXd alpha = solve_llt(f.lower, y);
    return Surrogate(kernel, std::move(functionals), std::move(alpha), std::move(f.lower));
}

void write_history_csv(std::ostream& out, const History& history) {
    out << "iteration,kind,eta,P_i,max_residual,n_interior_cum,n_boundary_cum,elapsed_s\n";
    for (const auto& r : history.records) {
        out << r.iteration << ',' << kind_code(r.kind) << ',' << csv::num(r.eta) << ',' << csv::num(r.power) << ','
            << csv::num(r.max_residual) << ',' << r.n_interior << ',' << r.n_boundary << ',' << csv::num(r.elapsed_s)
            << '\n';
    }
}

void write_selected_csv(std::ostream& out, const Surrogate& s) {
    std::vector<std::string> header{"kind"};
    for (auto& c : csv::numbered("x", s.kernel().position_dim())) header.push_back(c);
    for (auto& c : csv::numbered("mu", s.kernel().parameter_dim())) header.push_back(c);
    header.emplace_back("target");
    header.emplace_back("alpha");
    csv::write_row(out, header);
    std::vector<std::string> row;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto& lam = s.functionals()[i];
        row.clear();
        row.emplace_back(1, kind_code(lam.op));
        for (double v : lam.position) row.push_back(csv::num(v));
        for (double v : lam.parameter) row.push_back(csv::num(v));
        row.push_back(csv::num(lam.target));
        row.push_back(csv::num(s.alpha()(static_cast<Eigen::Index>(i))));
        csv::write_row(out, row);
    }
}

namespace {

void write_kernel_line(std::ostream& out, std::string_view role, const PositionKernel& k) {
    out << role << ' ' << k.family() << ' ' << k.dim();
    if (const auto* g = std::get_if<GaussianIso>(&k.spec())) out << ' ' << csv::num(g->eps2);
    if (const auto* m = std::get_if<MaternQuadratic>(&k.spec())) out << ' ' << csv::num(m->eps);
    if (const auto* a = std::get_if<GaussianAniso>(&k.spec()))
        for (Eigen::Index i = 0; i < a->B.rows(); ++i)
            for (Eigen::Index j = 0; j < a->B.cols(); ++j) out << ' ' << csv::num(a->B(i, j));
    out << '\n';
}

PositionKernel read_kernel_line(std::istream& in, std::string_view role) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("surrogate file: missing " + std::string(role));
    std::istringstream ls(line);
    std::string tag, family;
    int dim = 0;
    ls >> tag >> family >> dim;
    if (tag != role || dim < 1) throw std::invalid_argument("surrogate file: bad kernel line '" + line + "'");
    if (family == "gaussian") {
        double e2 = 0.0;
        ls >> e2;
        return PositionKernel::gaussian(e2, dim);
    }
    if (family == "matern") {
        double e = 0.0;
        ls >> e;
        return PositionKernel::matern(e, dim);
    }
    if (family == "gaussian-aniso") {
        Eigen::MatrixXd B(dim, dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) ls >> B(i, j);
        if (!ls) throw std::invalid_argument("surrogate file: truncated anisotropic matrix");
        return PositionKernel::gaussian_aniso(B);
    }
    throw std::invalid_argument("surrogate file: unknown kernel family '" + family + "'");
}

}  // namespace

void save_surrogate(std::ostream& out, const Surrogate& s) {
    out << "pdegreedy-surrogate 1\n";
    write_kernel_line(out, "position_kernel", s.kernel().position());
    write_kernel_line(out, "parameter_kernel", s.kernel().parameter());
    out << "dims " << s.kernel().position_dim() << ' ' << s.kernel().parameter_dim() << '\n';
    out << "n " << s.size() << '\n';
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto& lam = s.functionals()[i];
        out << kind_code(lam.op);
        for (double v : lam.position) out << ' ' << csv::num(v);
        for (double v : lam.parameter) out << ' ' << csv::num(v);
        out << ' ' << csv::num(lam.target) << ' ' << csv::num(s.alpha()(static_cast<Eigen::Index>(i))) << '\n';
    }
}

Surrogate load_surrogate(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "pdegreedy-surrogate 1")
        throw std::invalid_argument("surrogate file: bad magic line");
    PositionKernel kx = read_kernel_line(in, "position_kernel");
    PositionKernel kmu = read_kernel_line(in, "parameter_kernel");
    std::string tag;
    int dx = 0, dmu = 0;
    std::size_t n = 0;
    in >> tag >> dx >> dmu;
    if (tag != "dims" || dx != kx.dim() || dmu != kmu.dim())
        throw std::invalid_argument("surrogate file: dims line inconsistent with kernels");
    in >> tag >> n;
    if (tag != "n" || n == 0) throw std::invalid_argument("surrogate file: bad size line");
    std::vector<Functional> lams(n);
    Eigen::VectorXd alpha(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        char kind = 0;
        in >> kind;
        if (kind != 'I' && kind != 'B') throw std::invalid_argument("surrogate file: bad functional kind");
        auto& lam = lams[i];
        lam.op = kind == 'I' ? DiffOp::NegLaplacian : DiffOp::Identity;
        lam.position.resize(static_cast<std::size_t>(dx));
        lam.parameter.resize(static_cast<std::size_t>(dmu));
        for (auto& v : lam.position) in >> v;
        for (auto& v : lam.parameter) in >> v;
        in >> lam.target >> alpha(static_cast<Eigen::Index>(i));
        if (!in) throw std::invalid_argument("surrogate file: truncated at functional " + std::to_string(i));
    }
    ProductKernel kernel(std::move(kx), std::move(kmu));
    const Eigen::MatrixXd K = assemble_gram(kernel, lams);
    Factorization f = cholesky(K);
    return Surrogate(std::move(kernel), std::move(lams), std::move(alpha),
                     f.ok ? std::move(f.lower) : Eigen::MatrixXd());
}

}  // namespace pdegreedy
