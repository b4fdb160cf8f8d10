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

#include "pdegreedy/problem.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

#include "pdegreedy/csv.hpp"
#include "pdegreedy/error.hpp"

namespace pdegreedy {

namespace {

constexpr double kMovingCirclesMuMax = 1.1;

double norm2(ConstPoint x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

double dist2_to(ConstPoint x, double cx, double cy) {
    const double a = x[0] - cx;
    const double b = x[1] - cy;
    return a * a + b * b;
}

bool in_moving_circles(ConstPoint x, double mu) { return norm2(x) < 1.0 || dist2_to(x, mu, 0.0) < 1.0; }

CandidateSet make_set(int dx, int dmu, std::uint64_t seed) {
    CandidateSet set;
    set.seed = seed;
    set.position_dim = dx;
    set.parameter_dim = dmu;
    return set;
}

void require_counts(std::size_t n_interior, std::size_t n_boundary) {
    if (n_interior < 1 || n_boundary < 1) throw std::invalid_argument("sampler needs N_L >= 1 and N_B >= 1");
}

}  // namespace

CandidateSet sample_moving_circles(std::size_t n_interior, std::size_t n_boundary, std::uint64_t seed,
                                   SamplingStats* stats) {
    require_counts(n_interior, n_boundary);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mu_dist(0.0, kMovingCirclesMuMax);
    std::uniform_real_distribution<double> bx(-1.0, 1.0 + kMovingCirclesMuMax);
    std::uniform_real_distribution<double> by(-1.0, 1.0);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    std::bernoulli_distribution second_circle(0.5);

    CandidateSet set = make_set(2, 1, seed);
    set.functionals.reserve(n_interior + n_boundary);
    std::size_t proposals = 0;
    for (std::size_t i = 0; i < n_interior; ++i) {
        double mu = 0.0;
        std::vector<double> x(2);
        do {
            mu = mu_dist(rng);
            x[0] = bx(rng);
            x[1] = by(rng);
            ++proposals;
        } while (!in_moving_circles(x, mu));
        set.functionals.push_back({DiffOp::NegLaplacian, std::move(x), {mu}, 1.0, 0.0});
    }
    for (std::size_t i = 0; i < n_boundary; ++i) {
        const double mu = mu_dist(rng);
        std::vector<double> x(2);
        while (true) {
            const bool second = second_circle(rng);
            const double t = angle(rng);
            const double cx = second ? mu : 0.0;
            const double ox = second ? 0.0 : mu;
            x[0] = cx + std::cos(t);
            x[1] = std::sin(t);
            if (!(dist2_to(x, ox, 0.0) < 1.0)) break;
        }
        set.functionals.push_back({DiffOp::Identity, std::move(x), {mu}, 1.0, 0.0});
    }
    set.n_interior = n_interior;
    set.n_boundary = n_boundary;
    if (stats) stats->interior_proposals = proposals;
    return set;
}

CandidateSet sample_unit_cube(int dx, Interval mu_range, std::size_t n_interior, std::size_t n_boundary,
                              std::uint64_t seed) {
    if (dx < 1) throw std::invalid_argument("unit cube needs dx >= 1");
    require_counts(n_interior, n_boundary);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> mu_dist(mu_range.lo, mu_range.hi);
    std::uniform_int_distribution<int> face(0, dx - 1);
    std::bernoulli_distribution side(0.5);
    auto open_unit = [&] {
        double v;
        do v = unit(rng);
        while (v == 0.0);
        return v;
    };

    CandidateSet set = make_set(dx, 1, seed);
    set.functionals.reserve(n_interior + n_boundary);
    const auto d = static_cast<std::size_t>(dx);
    for (std::size_t i = 0; i < n_interior; ++i) {
        std::vector<double> x(d);
        for (auto& v : x) v = open_unit();
        const double mu = mu_dist(rng);
        set.functionals.push_back({DiffOp::NegLaplacian, std::move(x), {mu}, 1.0, 0.0});
    }
    for (std::size_t i = 0; i < n_boundary; ++i) {
        std::vector<double> x(d);
        const auto j = static_cast<std::size_t>(face(rng));
        const double s = side(rng) ? 1.0 : 0.0;
        for (std::size_t k = 0; k < d; ++k) x[k] = k == j ? s : unit(rng);
        const double mu = mu_dist(rng);
        set.functionals.push_back({DiffOp::Identity, std::move(x), {mu}, 1.0, 0.0});
    }
    set.n_interior = n_interior;
    set.n_boundary = n_boundary;
    return set;
}

bool ParametricProblem::contains(ConstPoint x, ConstPoint mu) const {
    if (geometry == Geometry::MovingCircles) return in_moving_circles(x, mu[0]);
    for (double v : x)
        if (!(v > 0.0 && v < 1.0)) return false;
    return true;
}

bool ParametricProblem::on_boundary(ConstPoint x, ConstPoint mu, double tol) const {
    if (geometry == Geometry::MovingCircles) {
        const double r1 = std::sqrt(norm2(x));
        const double r2 = std::sqrt(dist2_to(x, mu[0], 0.0));
        const bool on1 = std::abs(r1 - 1.0) <= tol && r2 >= 1.0 - tol;
        const bool on2 = std::abs(r2 - 1.0) <= tol && r1 >= 1.0 - tol;
        return on1 || on2;
    }
    bool any_face = false;
    for (double v : x) {
        if (v < -tol || v > 1.0 + tol) return false;
        if (std::abs(v) <= tol || std::abs(v - 1.0) <= tol) any_face = true;
    }
    return any_face;
}

std::vector<Interval> ParametricProblem::position_box() const {
    if (geometry == Geometry::MovingCircles) return {{-1.0, 1.0 + kMovingCirclesMuMax}, {-1.0, 1.0}};
    return std::vector<Interval>(static_cast<std::size_t>(position_dim), Interval{0.0, 1.0});
}

double ParametricProblem::target_of(const Functional& lam) const {
    return lam.interior() ? source(lam.position, lam.parameter) : boundary_data(lam.position, lam.parameter);
}

CandidateSet ParametricProblem::sample(std::size_t n_interior, std::size_t n_boundary, std::uint64_t seed) const {
    CandidateSet set = geometry == Geometry::MovingCircles
                           ? sample_moving_circles(n_interior, n_boundary, seed)
                           : sample_unit_cube(position_dim, parameter_range, n_interior, n_boundary, seed);
    attach_targets(*this, set);
    return set;
}

void attach_targets(const ParametricProblem& problem, CandidateSet& set) {
    if (set.position_dim != problem.position_dim || set.parameter_dim != problem.parameter_dim)
        throw DimensionError("candidate set dimensions do not match problem " + problem.name);
    for (auto& lam : set.functionals) lam.target = problem.target_of(lam);
}

void assign_weights(CandidateSet& set, double w_interior, double w_boundary) {
    if (!(w_interior > 0.0) || !(w_boundary > 0.0)) throw std::invalid_argument("weights must be positive");
    for (auto& lam : set.functionals) lam.weight = lam.interior() ? w_interior : w_boundary;
}

ParametricProblem make_problem(std::string_view name, int dx) {
    ParametricProblem p;
    p.name = std::string(name);
    if (name == "moving-circles-smooth" || name == "moving-circles-singular") {
        p.position_dim = 2;
        p.geometry = Geometry::MovingCircles;
        p.parameter_range = {0.0, kMovingCirclesMuMax};
        if (name == "moving-circles-smooth") {
            p.exact = [](ConstPoint x, ConstPoint mu) { return 0.5 * (norm2(x) + mu[0] * mu[0]); };
            p.source = [](ConstPoint x, ConstPoint) { return -static_cast<double>(x.size()); };
            p.boundary_data = *p.exact;
        } else {
            p.source = [](ConstPoint, ConstPoint) { return -1.0; };
            p.boundary_data = [](ConstPoint, ConstPoint) { return 0.0; };
        }
        return p;
    }
    if (name == "moving-source") {
        p.position_dim = 2;
        p.geometry = Geometry::UnitCube;
        p.parameter_range = {0.0, 1.0};
        p.source = [](ConstPoint x, ConstPoint mu) {
            const double m = 0.1 + 0.8 * mu[0];
            const double r2 = dist2_to(x, m, m);
            return 50.0 * std::max(1.0 - r2 / 16.0, 0.0);
        };
        p.boundary_data = [](ConstPoint, ConstPoint) { return 0.0; };
        return p;
    }
    if (name == "sinus-highdim") {
        if (dx < 1) throw ConfigError("sinus-highdim needs dx >= 1");
        p.position_dim = dx;
        p.geometry = Geometry::UnitCube;
        p.parameter_range = {0.0, 1.0};
        // kappa(mu) = c(mu)/dx * (1,...,1), c(mu) = (1-mu) pi + mu 2 pi
        auto phase = [](ConstPoint x, double mu) {
            const double c = (1.0 + mu) * std::numbers::pi / static_cast<double>(x.size());
            double s = 0.0;
            for (double v : x) s += v;
            return c * s;
        };
        p.exact = [phase](ConstPoint x, ConstPoint mu) { return std::sin(phase(x, mu[0])); };
        p.source = [phase](ConstPoint x, ConstPoint mu) {
            const double c = (1.0 + mu[0]) * std::numbers::pi;
            const double kappa2 = c * c / static_cast<double>(x.size());
            return kappa2 * std::sin(phase(x, mu[0]));
        };
        p.boundary_data = *p.exact;
        return p;
    }
    throw ConfigError("unknown problem '" + std::string(name) + "'");
}

void write_candidates_csv(std::ostream& out, const CandidateSet& set) {
    std::vector<std::string> header{"kind"};
    for (auto& c : csv::numbered("x", set.position_dim)) header.push_back(c);
    for (auto& c : csv::numbered("mu", set.parameter_dim)) header.push_back(c);
    header.emplace_back("weight");
    header.emplace_back("target");
    csv::write_row(out, header);
    std::vector<std::string> row;
    for (const auto& lam : set.functionals) {
        row.clear();
        row.emplace_back(1, kind_code(lam.op));
        for (double v : lam.position) row.push_back(csv::num(v));
        for (double v : lam.parameter) row.push_back(csv::num(v));
        row.push_back(csv::num(lam.weight));
        row.push_back(csv::num(lam.target));
        csv::write_row(out, row);
    }
}

CandidateSet read_candidates_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("candidate CSV: missing header");
    const auto header = csv::split(line);
    int dx = 0, dmu = 0;
    for (const auto& h : header) {
        if (h.starts_with("x_")) ++dx;
        if (h.starts_with("mu_")) ++dmu;
    }
    const auto expected = static_cast<std::size_t>(3 + dx + dmu);
    if (header.size() != expected || header.front() != "kind" || header[expected - 2] != "weight" ||
        header.back() != "target")
        throw std::invalid_argument("candidate CSV: unexpected header '" + line + "'");

    CandidateSet set = make_set(dx, dmu, 0);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = csv::split(line);
        if (f.size() != expected || (f[0] != "I" && f[0] != "B"))
            throw std::invalid_argument("candidate CSV: malformed line " + std::to_string(lineno));
        Functional lam;
        lam.op = f[0] == "I" ? DiffOp::NegLaplacian : DiffOp::Identity;
        std::size_t k = 1;
        for (int i = 0; i < dx; ++i) lam.position.push_back(std::stod(f[k++]));
        for (int i = 0; i < dmu; ++i) lam.parameter.push_back(std::stod(f[k++]));
        lam.weight = std::stod(f[k++]);
        lam.target = std::stod(f[k]);
        (lam.interior() ? set.n_interior : set.n_boundary)++;
        set.functionals.push_back(std::move(lam));
    }
    return set;
}

}  // namespace pdegreedy
