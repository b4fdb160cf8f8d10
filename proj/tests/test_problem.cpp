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
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include <doctest.h>

#include "pdegreedy/error.hpp"
#include "pdegreedy/problem.hpp"

using namespace pdegreedy;

namespace {

// Central-difference Laplacian of u in x.
double fd_laplacian(const ScalarField& u, std::vector<double> x, const std::vector<double>& mu, double h) {
    const double u0 = u(x, mu);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        x[i] = xi + h;
        const double up = u(x, mu);
        x[i] = xi - h;
        const double um = u(x, mu);
        x[i] = xi;
        s += (up - 2.0 * u0 + um) / (h * h);
    }
    return s;
}

bool same_functional(const Functional& a, const Functional& b) {
    return a.op == b.op && a.position == b.position && a.parameter == b.parameter && a.weight == b.weight &&
           a.target == b.target;
}

}  // namespace

TEST_CASE("moving circles samples satisfy the membership predicates") {
    const auto p = make_problem("moving-circles-smooth");
    const auto set = p.sample(3000, 3000, 7);
    REQUIRE(set.size() == 6000);
    CHECK(set.n_interior == 3000);
    CHECK(set.n_boundary == 3000);
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto& f = set.functionals[i];
        CHECK(f.parameter[0] >= 0.0);
        CHECK(f.parameter[0] <= 1.1);
        if (i < 3000) {
            CHECK(f.op == DiffOp::NegLaplacian);
            CHECK(p.contains(f.position, f.parameter));
        } else {
            CHECK(f.op == DiffOp::Identity);
            const double r1 = std::hypot(f.position[0], f.position[1]);
            const double r2 = std::hypot(f.position[0] - f.parameter[0], f.position[1]);
            CHECK(std::min(std::abs(r1 - 1.0), std::abs(r2 - 1.0)) <= 1e-12);
            CHECK(p.on_boundary(f.position, f.parameter));
        }
    }
}

TEST_CASE("moving circles at mu = 0 is the unit disc") {
    const auto p = make_problem("moving-circles-singular");
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int t = 0; t < 2000; ++t) {
        const std::vector<double> x{u(rng), u(rng)};
        CHECK(p.contains(x, std::vector<double>{0.0}) == (x[0] * x[0] + x[1] * x[1] < 1.0));
    }
}

TEST_CASE("interior rejection acceptance matches a Monte-Carlo area estimate") {
    SamplingStats stats;
    const std::size_t n = 200000;
    (void)sample_moving_circles(n, 1, 99, &stats);
    const double p_hat = static_cast<double>(n) / static_cast<double>(stats.interior_proposals);

    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> ux(-1.0, 2.1), uy(-1.0, 1.0), um(0.0, 1.1);
    const std::size_t m = 1000000;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double x = ux(rng), y = uy(rng), mu = um(rng);
        if (x * x + y * y < 1.0 || (x - mu) * (x - mu) + y * y < 1.0) ++hits;
    }
    const double p_mc = static_cast<double>(hits) / static_cast<double>(m);
    const double sigma = std::sqrt(p_mc * (1.0 - p_mc) * (1.0 / m + 1.0 / static_cast<double>(stats.interior_proposals)));
    CHECK(std::abs(p_hat - p_mc) <= 3.0 * sigma);
}

TEST_CASE("unit cube samples") {
    const int dx = 3;
    const auto set = sample_unit_cube(dx, {0.0, 1.0}, 20000, 5000, 3);
    std::vector<double> mean(dx + 1, 0.0);
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto& f = set.functionals[i];
        if (f.interior()) {
            for (int j = 0; j < dx; ++j) {
                CHECK(f.position[static_cast<std::size_t>(j)] > 0.0);
                CHECK(f.position[static_cast<std::size_t>(j)] < 1.0);
                mean[static_cast<std::size_t>(j)] += f.position[static_cast<std::size_t>(j)];
            }
            mean[dx] += f.parameter[0];
        } else {
            int on_face = 0;
            for (double v : f.position) on_face += (v == 0.0 || v == 1.0);
            CHECK(on_face >= 1);
        }
    }
    const double sigma = std::sqrt(1.0 / 12.0 / 20000.0);
    for (double& v : mean) CHECK(std::abs(v / 20000.0 - 0.5) <= 3.0 * sigma);
}

TEST_CASE("sampling is reproducible and sites are distinct") {
    for (const char* name : {"moving-circles-smooth", "moving-source"}) {
        const auto p = make_problem(name);
        const auto a = p.sample(500, 500, 42);
        const auto b = p.sample(500, 500, 42);
        const auto c = p.sample(500, 500, 43);
        REQUIRE(a.size() == b.size());
        bool identical = true;
        for (std::size_t i = 0; i < a.size(); ++i) identical = identical && same_functional(a.functionals[i], b.functionals[i]);
        CHECK(identical);
        CHECK_FALSE(same_functional(a.functionals[0], c.functionals[0]));
        std::set<std::vector<double>> sites;
        for (const auto& f : a.functionals) {
            auto z = f.position;
            z.insert(z.end(), f.parameter.begin(), f.parameter.end());
            sites.insert(z);
        }
        CHECK(sites.size() == a.size());
    }
}

TEST_CASE("sources are consistent with known solutions") {
    struct Case {
        const char* name;
        int dx;
    };
    for (const auto c : {Case{"moving-circles-smooth", 2}, Case{"sinus-highdim", 2}, Case{"sinus-highdim", 5},
                         Case{"sinus-highdim", 9}}) {
        const auto p = make_problem(c.name, c.dx);
        REQUIRE(p.exact.has_value());
        const auto set = p.sample(200, 200, 5);
        double worst = 0.0;
        double worst_bnd = 0.0;
        for (const auto& f : set.functionals) {
            if (f.interior()) {
                const double lap = fd_laplacian(*p.exact, f.position, f.parameter, 1e-4);
                worst = std::max(worst, std::abs(f.target + lap) / (1.0 + std::abs(f.target)));
            } else {
                worst_bnd = std::max(worst_bnd, std::abs(f.target - (*p.exact)(f.position, f.parameter)));
            }
        }
        CAPTURE(c.name);
        CAPTURE(c.dx);
        CHECK(worst <= 1e-5);
        CHECK(worst_bnd <= 1e-6);
    }
}

TEST_CASE("problem data at known points") {
    const auto smooth = make_problem("moving-circles-smooth");
    CHECK(smooth.source(std::vector<double>{0.2, 0.3}, std::vector<double>{0.4}) == doctest::Approx(-2.0));
    CHECK((*smooth.exact)(std::vector<double>{1.0, 0.0}, std::vector<double>{1.0}) == doctest::Approx(1.0));

    const auto singular = make_problem("moving-circles-singular");
    CHECK(singular.source(std::vector<double>{0.2, 0.3}, std::vector<double>{0.4}) == -1.0);
    CHECK(singular.boundary_data(std::vector<double>{1.0, 0.0}, std::vector<double>{0.4}) == 0.0);
    CHECK_FALSE(singular.exact.has_value());

    const auto src = make_problem("moving-source");
    CHECK(src.source(std::vector<double>{0.5, 0.5}, std::vector<double>{0.5}) == 50.0);
    CHECK(src.source(std::vector<double>{0.1, 0.1}, std::vector<double>{0.0}) == 50.0);
    CHECK(src.source(std::vector<double>{4.5, 0.5}, std::vector<double>{0.5}) == 0.0);
    CHECK(src.source(std::vector<double>{0.5, 4.5}, std::vector<double>{0.5}) == 0.0);
    CHECK(src.source(std::vector<double>{0.9, 0.1}, std::vector<double>{1.0}) ==
          doctest::Approx(50.0 * (1.0 - 0.64 / 16.0)));
    CHECK_FALSE(src.exact.has_value());

    const auto sinus = make_problem("sinus-highdim", 2);
    const std::vector<double> x{0.13, 0.41};
    CHECK(sinus.source(x, std::vector<double>{1.0}) ==
          doctest::Approx(2.0 * std::numbers::pi * std::numbers::pi * std::sin(std::numbers::pi * 0.54)));
    CHECK((*sinus.exact)(x, std::vector<double>{0.0}) == doctest::Approx(std::sin(std::numbers::pi * 0.27)));

    CHECK_THROWS_AS((void)make_problem("moving-squares"), ConfigError);
}

TEST_CASE("candidate CSV round trip") {
    std::mt19937_64 rng(2024);
    for (int t = 0; t < 20; ++t) {
        const char* names[] = {"moving-circles-smooth", "moving-source", "sinus-highdim"};
        const auto p = make_problem(names[t % 3], 1 + t % 4);
        auto set = p.sample(1 + rng() % 50, 1 + rng() % 50, rng());
        assign_weights(set, 1.0 + t, 0.5 + t);
        std::stringstream ss;
        write_candidates_csv(ss, set);
        const auto back = read_candidates_csv(ss);
        REQUIRE(back.size() == set.size());
        CHECK(back.position_dim == set.position_dim);
        CHECK(back.parameter_dim == set.parameter_dim);
        CHECK(back.n_interior == set.n_interior);
        CHECK(back.n_boundary == set.n_boundary);
        bool identical = true;
        for (std::size_t i = 0; i < set.size(); ++i)
            identical = identical && same_functional(set.functionals[i], back.functionals[i]);
        CHECK(identical);
    }
    std::stringstream header_only("kind,x_1,x_2,mu_1,weight,target\n");
    CHECK(read_candidates_csv(header_only).empty());
    std::stringstream bad("kind,x_1,x_2,mu_1,weight,target\nI,0.1,0.2\n");
    CHECK_THROWS_AS((void)read_candidates_csv(bad), std::invalid_argument);
    std::stringstream bad_header("kind,y_1,weight,target\n");
    CHECK_THROWS_AS((void)read_candidates_csv(bad_header), std::invalid_argument);
}

TEST_CASE("weights are assigned by kind") {
    auto set = make_problem("moving-source").sample(3, 4, 1);
    assign_weights(set, 1.0, 1000.0);
    for (const auto& f : set.functionals) CHECK(f.weight == (f.interior() ? 1.0 : 1000.0));
    CHECK_THROWS_AS(assign_weights(set, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS((void)sample_unit_cube(2, {0.0, 1.0}, 0, 1, 1), std::invalid_argument);
}
