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


#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include <doctest.h>

#include "oracle.hpp"
#include "pdegreedy/error.hpp"
#include "pdegreedy/greedy.hpp"
#include "pdegreedy/problem.hpp"

using namespace pdegreedy;

namespace {

Functional make(DiffOp op, std::vector<double> x, std::vector<double> mu, double target = 0.0, double w = 1.0) {
    return {op, std::move(x), std::move(mu), w, target};
}

// u = x^2 on (0,1) with a constant parameter; 48 interior and 2 boundary sites.
CandidateSet toy_1d() {
    CandidateSet set;
    set.position_dim = 1;
    set.parameter_dim = 1;
    for (int i = 1; i <= 48; ++i) {
        const double x = i / 49.0;
        set.functionals.push_back(make(DiffOp::NegLaplacian, {x}, {0.0}, -2.0));
    }
    set.functionals.push_back(make(DiffOp::Identity, {0.0}, {0.0}, 0.0));
    set.functionals.push_back(make(DiffOp::Identity, {1.0}, {0.0}, 1.0));
    set.n_interior = 48;
    set.n_boundary = 2;
    return set;
}

ProductKernel toy_kernel() { return {PositionKernel::gaussian(2.0, 1), PositionKernel::gaussian(1.0, 1)}; }

GreedyState state_with(std::vector<double> power2, std::vector<double> residual) {
    GreedyState st;
    st.diagonal = power2;
    st.power2 = std::move(power2);
    st.residual = std::move(residual);
    st.is_selected.assign(st.power2.size(), 0);
    return st;
}

CandidateSet circles(std::size_t n, std::uint64_t seed) { return make_problem("moving-circles-smooth").sample(n, n, seed); }

ProductKernel circles_kernel() { return {PositionKernel::gaussian(0.5, 2), PositionKernel::gaussian(0.5, 1)}; }

}  // namespace

TEST_CASE("selection criterion") {
    std::vector<Functional> c(4, make(DiffOp::Identity, {0.0}, {0.0}));
    auto st = state_with({4.0, 1.0, 9.0, 0.25}, {1.0, 3.0, 0.5, 2.0});
    double eta = 0.0;

    SUBCASE("beta = 0 ignores residuals") {
        CHECK(select_next(st, c, 0.0, 1e-15, 0.0, &eta) == 2);
        CHECK(eta == doctest::Approx(3.0));
        st.residual = {0.0, 0.0, 0.0, 0.0};
        CHECK(select_next(st, c, 0.0, 1e-15) == 2);
    }
    SUBCASE("beta = 1 ignores the power function") {
        CHECK(select_next(st, c, 1.0, 1e-15, 0.0, &eta) == 1);
        CHECK(eta == doctest::Approx(3.0));
    }
    SUBCASE("beta = infinity divides by the power function") {
        CHECK(select_next(st, c, GreedyConfig::kInfiniteBeta, 1e-15, 0.0, &eta) == 3);
        CHECK(eta == doctest::Approx(4.0));
    }
    SUBCASE("intermediate beta") {
        CHECK(select_next(st, c, 0.5, 1e-15, 0.0, &eta) == 1);
        CHECK(eta == doctest::Approx(std::sqrt(3.0)));
    }
    SUBCASE("weights scale the criterion") {
        c[0].weight = 10.0;
        CHECK(select_next(st, c, 1.0, 1e-15) == 0);
    }
    SUBCASE("ties go to the lowest index") {
        st.residual = {2.0, 2.0, 2.0, 2.0};
        CHECK(select_next(st, c, 1.0, 1e-15) == 0);
    }
    SUBCASE("selected and degenerate candidates are skipped") {
        st.is_selected[1] = 1;
        CHECK(select_next(st, c, 1.0, 1e-15) == 3);
        st.power2[3] = 1e-31;
        CHECK(select_next(st, c, 1.0, 1e-15) == 0);
        st.power2[0] = 1e-15;
        CHECK(select_next(st, c, 1.0, 1e-15, 1e-14) == 2);
        st.power2 = {0.0, 0.0, 0.0, 0.0};
        CHECK_FALSE(select_next(st, c, 0.0, 1e-15).has_value());
    }
}

TEST_CASE("zero data stops before the first iteration") {
    auto set = toy_1d();
    for (auto& f : set.functionals) f.target = 0.0;
    GreedyConfig cfg;
    const auto r = run_greedy(toy_kernel(), set, cfg);
    CHECK(r.stop() == StopCause::Accuracy);
    CHECK(r.size() == 0);
    CHECK_FALSE(r.surrogate.has_value());
    CHECK(r.history.records.empty());
}

TEST_CASE("one-dimensional Poisson toy problem") {
    const auto set = toy_1d();
    GreedyConfig cfg;
    cfg.n_max = 15;
    const auto r = run_greedy(toy_kernel(), set, cfg);
    REQUIRE(r.surrogate.has_value());
    CHECK(r.size() == 15);
    const double greedy_res = r.history.records.back().max_residual;
    CHECK(greedy_res < 1e-6);

    Eigen::VectorXd y(50);
    for (int i = 0; i < 50; ++i) y(i) = set.functionals[static_cast<std::size_t>(i)].target;
    const auto dense = full_collocation_solve(toy_kernel(), set.functionals, y);
    const std::vector<double> mu{0.0};
    double err_greedy = 0.0;
    double err_dense = 0.0;
    for (int i = 0; i <= 200; ++i) {
        const std::vector<double> x{i / 200.0};
        err_greedy = std::max(err_greedy, std::abs(r.surrogate->eval(x, mu) - x[0] * x[0]));
        err_dense = std::max(err_dense, std::abs(dense.eval(x, mu) - x[0] * x[0]));
    }
    CHECK(err_greedy <= std::max(10.0 * err_dense, 1e-6));
}

TEST_CASE("power function and residual invariants hold along a run") {
    const auto set = circles(1000, 3);
    const auto kernel = circles_kernel();
    GreedyConfig cfg;
    cfg.n_max = 60;
    std::vector<double> previous;
    int calls = 0;
    bool first_ok = true, monotone = true, bounded = true, zero_at_selected = true;
    double min_unclamped = 0.0;
    double max_y = 0.0;
    for (const auto& f : set.functionals) max_y = std::max(max_y, std::abs(f.target));
    const auto observer = [&](const GreedyState& st) {
        if (calls++ == 0) {
            for (std::size_t j = 0; j < set.size(); ++j)
                first_ok = first_ok && st.diagonal[j] == kernel.functional_gram(set.functionals[j], set.functionals[j]);
        }
        for (std::size_t j = 0; j < set.size(); ++j) {
            bounded = bounded && st.power2[j] >= 0.0 && st.power2[j] <= st.diagonal[j];
            if (!previous.empty()) monotone = monotone && st.power2[j] <= previous[j] + 1e-12;
        }
        for (std::size_t s : st.selected)
            zero_at_selected = zero_at_selected && st.power2[s] == 0.0 &&
                               std::abs(st.residual[s]) <= 1e-10 * (1.0 + max_y);
        min_unclamped = std::min(min_unclamped, st.min_unclamped_power2);
        const Eigen::MatrixXd L = st.cholesky_factor();
        for (std::size_t i = 0; i < st.size(); ++i) CHECK(L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) == st.power_history[i]);
        previous = st.power2;
    };
    const auto r = run_greedy(kernel, set, cfg, observer);
    CHECK(calls == 60);
    CHECK(first_ok);
    CHECK(bounded);
    CHECK(monotone);
    CHECK(zero_at_selected);
    CHECK(min_unclamped >= -1e-12);
    for (std::size_t i = 0; i < r.size(); ++i) CHECK(r.history.records[i].power == r.surrogate->cholesky()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)));
}

TEST_CASE("surrogate interpolates the selected functionals") {
    const auto set = circles(1000, 5);
    GreedyConfig cfg;
    cfg.n_max = 80;
    const auto r = run_greedy(circles_kernel(), set, cfg);
    REQUIRE(r.surrogate.has_value());
    const auto& s = *r.surrogate;
    CHECK(s.interpolation_residual() <= 1e-8);
    for (const auto& lam : s.functionals()) {
        CHECK(std::abs(s.apply(lam) - lam.target) <= 1e-8 * (1.0 + std::abs(lam.target)));
        if (!lam.interior()) CHECK(std::abs(s.eval(lam.position, lam.parameter) - lam.target) <= 1e-8 * (1.0 + std::abs(lam.target)));
    }
    std::vector<double> z = s.functionals()[0].position;
    z.push_back(s.functionals()[0].parameter[0]);
    CHECK(s.eval(z) == s.eval(s.functionals()[0].position, s.functionals()[0].parameter));
    CHECK_THROWS_AS((void)s.eval(std::vector<double>{0.1, 0.2}), DimensionError);
    CHECK(s.interior_count() + s.boundary_count() == s.size());
    CHECK(s.interior_count() == r.history.records.back().n_interior);
}

TEST_CASE("greedy coefficients agree with the dense solve on the selected functionals") {
    const auto set = circles(1000, 9);
    const auto kernel = circles_kernel();
    for (std::size_t n : {10u, 30u, 60u}) {
        GreedyConfig cfg;
        cfg.n_max = n;
        const auto r = run_greedy(kernel, set, cfg);
        const auto& s = *r.surrogate;
        Eigen::VectorXd y(static_cast<Eigen::Index>(s.size()));
        for (std::size_t i = 0; i < s.size(); ++i) y(static_cast<Eigen::Index>(i)) = s.functionals()[i].target;
        const auto d = full_collocation_solve(kernel, s.functionals(), y);
        const double rel = (d.alpha() - s.alpha()).cwiseAbs().maxCoeff() / s.alpha().cwiseAbs().maxCoeff();
        CAPTURE(n);
        CHECK(rel <= 1e-8);
    }
}

TEST_CASE("native norm") {
    const auto kernel = circles_kernel();
    SUBCASE("single boundary functional") {
        const Functional lam = make(DiffOp::Identity, {0.3, 0.4}, {0.5}, 1.0);
        Eigen::VectorXd y(1);
        y << 1.0;
        const auto s = full_collocation_solve(kernel, {lam}, y);
        CHECK(s.native_norm_sq() == doctest::Approx(1.0 / kernel.functional_gram(lam, lam)));

        const Surrogate unit(kernel, {lam}, Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Ones(1, 1));
        const std::vector<double> x{0.9, -0.1}, mu{0.2};
        CHECK(unit.eval(x, mu) == doctest::Approx(kernel.eval(lam.position, lam.parameter, x, mu)));

        const Surrogate zero(kernel, {lam}, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Ones(1, 1));
        CHECK(zero.apply(make(DiffOp::NegLaplacian, {0.1, 0.1}, {0.3})) == 0.0);
        CHECK(zero.native_norm_sq() == 0.0);
    }
    SUBCASE("non-decreasing along the iteration") {
        const auto set = circles(500, 4);
        double prev = 0.0;
        for (std::size_t n = 1; n <= 40; ++n) {
            GreedyConfig cfg;
            cfg.n_max = n;
            const auto r = run_greedy(kernel, set, cfg);
            const double v = r.surrogate->native_norm_sq();
            CHECK(v >= prev - 1e-10 * std::max(1.0, prev));
            prev = v;
        }
    }
}

TEST_CASE("identity functionals give the plain kernel matrix and the plain greedy order") {
    const ProductKernel kernel(PositionKernel::matern(4.0, 2), PositionKernel::matern(4.0, 1));
    const oracle::PlainKernel px{oracle::Family::Matern, 4.0, {}};
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    CandidateSet set;
    set.position_dim = 2;
    set.parameter_dim = 1;
    for (int i = 0; i < 200; ++i) {
        const double a = u(rng), b = u(rng), m = u(rng);
        set.functionals.push_back(make(DiffOp::Identity, {a, b}, {m}, std::sin(3 * a) * std::cos(2 * b) + m * m));
    }
    set.n_boundary = 200;
    const Eigen::MatrixXd K = assemble_gram(kernel, set.functionals);
    Eigen::MatrixXd P(200, 200);
    Eigen::VectorXd y(200);
    for (int i = 0; i < 200; ++i) {
        const auto& fi = set.functionals[static_cast<std::size_t>(i)];
        y(i) = fi.target;
        for (int j = 0; j < 200; ++j) {
            const auto& fj = set.functionals[static_cast<std::size_t>(j)];
            P(i, j) = px(fi.position, fj.position) * px(fi.parameter, fj.parameter);
        }
    }
    CHECK((K - P).cwiseAbs().maxCoeff() <= 1e-13);
    for (double beta : {0.0, 0.5, 1.0}) {
        GreedyConfig cfg;
        cfg.beta = beta;
        cfg.n_max = 40;
        const auto r = run_greedy(kernel, set, cfg);
        CAPTURE(beta);
        CHECK(r.selected == oracle::plain_beta_greedy(P, y, beta, 40));
    }
}

TEST_CASE("duplicate candidates end in a stability stop") {
    CandidateSet set;
    set.position_dim = 2;
    set.parameter_dim = 1;
    for (int i = 0; i < 5; ++i) set.functionals.push_back(make(DiffOp::Identity, {0.2, 0.2}, {0.1}, 1.0 + i));
    set.n_boundary = 5;
    GreedyConfig cfg;
    cfg.beta = 0.0;
    const auto r = run_greedy(circles_kernel(), set, cfg);
    CHECK(r.stop() == StopCause::Stability);
    CHECK(r.size() == 1);
    CHECK(r.selected.front() == 0);
}

TEST_CASE("dense solve escalates jitter for a singular system") {
    const Functional lam = make(DiffOp::Identity, {0.2, 0.2}, {0.1}, 1.0);
    Eigen::VectorXd y(2);
    y << 1.0, 1.0;
    const auto s = full_collocation_solve(circles_kernel(), {lam, lam}, y);
    CHECK(std::isfinite(s.alpha().sum()));
    CHECK(s.apply(lam) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK_THROWS_AS((void)full_collocation_solve(circles_kernel(), {}, Eigen::VectorXd()), std::invalid_argument);
    CHECK_THROWS_AS((void)full_collocation_solve(circles_kernel(), {lam}, y), DimensionError);
}

TEST_CASE("errors and configuration checks") {
    GreedyConfig bad;
    bad.beta = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = GreedyConfig{};
    bad.n_max = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = GreedyConfig{};
    bad.rel_power_floor = 1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    CandidateSet set;
    set.position_dim = 2;
    set.parameter_dim = 1;
    set.functionals.push_back(make(DiffOp::Identity, {0.2, std::numeric_limits<double>::quiet_NaN()}, {0.1}, 1.0));
    set.n_boundary = 1;
    CHECK_THROWS_AS((void)run_greedy(circles_kernel(), set, GreedyConfig{}), NumericalError);
    CHECK_THROWS_AS((void)run_greedy(circles_kernel(), CandidateSet{}, GreedyConfig{}), std::invalid_argument);
    CHECK_THROWS_AS((void)run_greedy(toy_kernel(), circles(5, 1), GreedyConfig{}), DimensionError);
}

TEST_CASE("history and persistence") {
    const auto set = circles(300, 8);
    GreedyConfig cfg;
    cfg.n_max = 25;
    const auto r = run_greedy(circles_kernel(), set, cfg);
    REQUIRE(r.history.records.size() == 25);
    for (std::size_t i = 1; i < 25; ++i) {
        const auto& a = r.history.records[i - 1];
        const auto& b = r.history.records[i];
        CHECK(b.iteration == a.iteration + 1);
        CHECK(b.n_interior >= a.n_interior);
        CHECK(b.n_boundary >= a.n_boundary);
        CHECK(b.n_interior + b.n_boundary == b.iteration);
    }
    std::stringstream hs;
    write_history_csv(hs, r.history);
    std::string line;
    std::getline(hs, line);
    CHECK(line == "iteration,kind,eta,P_i,max_residual,n_interior_cum,n_boundary_cum,elapsed_s");
    int rows = 0;
    while (std::getline(hs, line)) ++rows;
    CHECK(rows == 25);

    std::stringstream ss;
    save_surrogate(ss, *r.surrogate);
    const auto back = load_surrogate(ss);
    CHECK(back.size() == r.surrogate->size());
    CHECK(back.alpha() == r.surrogate->alpha());
    const std::vector<double> x{0.4, 0.3}, mu{0.7};
    CHECK(back.eval(x, mu) == r.surrogate->eval(x, mu));

    const ProductKernel aniso(PositionKernel::gaussian_aniso((Eigen::Matrix2d() << 2.0, 0.3, 0.3, 1.0).finished()),
                              PositionKernel::matern(2.0, 1));
    const auto ra = run_greedy(aniso, set, cfg);
    std::stringstream sa;
    save_surrogate(sa, *ra.surrogate);
    const auto ba = load_surrogate(sa);
    CHECK(ba.eval(x, mu) == ra.surrogate->eval(x, mu));

    std::stringstream junk("not a surrogate\n");
    CHECK_THROWS_AS((void)load_surrogate(junk), std::invalid_argument);

    std::stringstream sel;
    write_selected_csv(sel, *r.surrogate);
    std::getline(sel, line);
    CHECK(line == "kind,x_1,x_2,mu_1,target,alpha");
}
