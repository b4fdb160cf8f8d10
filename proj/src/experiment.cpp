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

#include "pdegreedy/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "pdegreedy/csv.hpp"
#include "pdegreedy/error.hpp"

namespace pdegreedy {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- ConfigFile

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

ConfigFile ConfigFile::parse(std::istream& in, const std::string& source) {
    ConfigFile cfg;
    cfg.source_ = source;
    std::string section;
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto cut = raw.find_first_of("#;");
        const std::string line = trim(std::string_view(raw).substr(0, cut));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3)
                throw ConfigError(source + ":" + std::to_string(lineno) + ": malformed section header");
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
        if (section.empty())
            throw ConfigError(source + ":" + std::to_string(lineno) + ": key '" + key + "' outside of a section");
        const std::string full = section + "." + key;
        if (cfg.entries_.contains(full))
            throw ConfigError(source + ":" + std::to_string(lineno) + ": duplicate key '" + full + "' (first on line " +
                              std::to_string(cfg.entries_[full].line) + ")");
        cfg.entries_[full] = {trim(std::string_view(line).substr(eq + 1)), lineno};
    }
    return cfg;
}

ConfigFile ConfigFile::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return parse(in, path.string());
}

void ConfigFile::fail(const std::string& key, const std::string& what) const {
    const auto it = entries_.find(key);
    const std::string where = it != entries_.end() ? source_ + ":" + std::to_string(it->second.line) : source_;
    throw ConfigError(where + ": " + key + ": " + what);
}

double ConfigFile::to_double(const std::string& key, const std::string& text) const {
    const std::string t = trim(text);
    if (t == "inf" || t == "infinity") return std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &used);
    } catch (const std::exception&) {
        fail(key, "'" + t + "' is not a number");
    }
    if (used != t.size()) fail(key, "'" + t + "' is not a number");
    return v;
}

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second.value;
}

std::string ConfigFile::require_string(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError(source_ + ": missing required key " + key);
    return it->second.value;
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? fallback : to_double(key, it->second.value);
}

long ConfigFile::get_int(const std::string& key, long fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    const double v = to_double(key, it->second.value);
    if (v != std::floor(v) || std::abs(v) > 9e15) fail(key, "expected an integer");
    return static_cast<long>(v);
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    const auto& v = it->second.value;
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail(key, "expected true or false");
}

std::vector<double> ConfigFile::get_list(const std::string& key, const std::vector<double>& fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::vector<double> out;
    for (const auto& item : csv::split(it->second.value))
        if (!trim(item).empty()) out.push_back(to_double(key, item));
    return out;
}

std::vector<std::string> ConfigFile::get_words(const std::string& key) const {
    std::vector<std::string> out;
    const auto it = entries_.find(key);
    if (it == entries_.end()) return out;
    for (const auto& item : csv::split(it->second.value))
        if (auto t = trim(item); !t.empty()) out.push_back(t);
    return out;
}

void ConfigFile::set(const std::string& key, const std::string& value) { entries_[key] = {value, 0}; }

void ConfigFile::reject_unknown(const std::set<std::string>& known) const {
    for (const auto& [key, entry] : entries_)
        if (!known.contains(key)) fail(key, "unknown key");
}

// ---------------------------------------------------------- ExperimentConfig

namespace {

const std::set<std::string> kKnownKeys = {
    "experiment.problem", "experiment.dx", "experiment.seed",
    "sampling.n_interior", "sampling.n_boundary", "sampling.val_interior", "sampling.val_boundary",
    "sampling.test_interior", "sampling.test_boundary",
    "kernel.family", "kernel.eps_x2", "kernel.eps_x", "kernel.eps_mu2", "kernel.eps_mu", "kernel.aniso_source",
    "kernel.aniso_along", "kernel.aniso_across", "kernel.aniso_matrix",
    "greedy.beta", "greedy.n_max", "greedy.eps_acc", "greedy.eps_stab", "greedy.rel_power_floor", "greedy.w_L", "greedy.w_B",
    "search.stages", "search.gamma_L", "search.gamma_B", "search.grid_eps_x2", "search.grid_eps_mu2",
    "search.grid_eps_x", "search.grid_eps_mu", "search.grid_w_B", "search.grid_w_L",
    "output.dir", "output.slice_mu", "output.slice_resolution", "output.checkpoints",
    "compare.betas", "compare.eps_x2", "compare.eps_x", "compare.eps_mu2", "compare.eps_mu", "compare.w_B",
    "compare.reference_n", "compare.reference_boundary_ratio", "compare.reference_eps_x2",
    "compare.reference_eps_x", "compare.reference_eps_mu2", "compare.reference_eps_mu", "compare.n_mu",
    "compare.grid_resolution",
};

// Shape parameters may be given squared (eps_x2) or plain (eps_x).
double shape2(const ConfigFile& f, const std::string& section, const std::string& base, double fallback) {
    const bool sq = f.has(section + "." + base + "2");
    const bool plain = f.has(section + "." + base);
    if (sq && plain)
        throw ConfigError(section + ": give either " + base + "2 or " + base + ", not both");
    if (plain) {
        const double e = f.get_double(section + "." + base, 0.0);
        return e * e;
    }
    return f.get_double(section + "." + base + "2", fallback);
}

std::vector<double> shape2_list(const ConfigFile& f, const std::string& section, const std::string& base) {
    if (f.has(section + "." + base + "2") && f.has(section + "." + base))
        throw ConfigError(section + ": give either " + base + "2 or " + base + ", not both");
    if (f.has(section + "." + base)) {
        auto v = f.get_list(section + "." + base, {});
        for (auto& e : v) e *= e;
        return v;
    }
    return f.get_list(section + "." + base + "2", {});
}

std::size_t count(const ConfigFile& f, const std::string& key, std::size_t fallback) {
    const long v = f.get_int(key, static_cast<long>(fallback));
    if (v < 0) throw ConfigError(key + " must be non-negative");
    return static_cast<std::size_t>(v);
}

}  // namespace

ExperimentConfig ExperimentConfig::from(const ConfigFile& f) {
    ExperimentConfig c;
    f.reject_unknown(kKnownKeys);
    c.problem = f.get_string("experiment.problem", c.problem);
    c.dx = static_cast<int>(f.get_int("experiment.dx", c.dx));
    c.seed = static_cast<std::uint64_t>(f.get_int("experiment.seed", static_cast<long>(c.seed)));

    c.n_interior = count(f, "sampling.n_interior", c.n_interior);
    c.n_boundary = count(f, "sampling.n_boundary", c.n_boundary);
    c.val_interior = count(f, "sampling.val_interior", c.val_interior);
    c.val_boundary = count(f, "sampling.val_boundary", c.val_boundary);
    c.test_interior = count(f, "sampling.test_interior", c.test_interior);
    c.test_boundary = count(f, "sampling.test_boundary", c.test_boundary);

    auto& k = c.setup.kernel;
    k.family = parse_kernel_family(f.get_string("kernel.family", "gaussian"));
    k.eps_x2 = shape2(f, "kernel", "eps_x", 1.0);
    k.eps_mu2 = shape2(f, "kernel", "eps_mu", 1.0);
    if (!(k.eps_x2 > 0.0) || !(k.eps_mu2 > 0.0)) throw ConfigError("kernel: shape parameters must be positive");
    c.aniso_source = f.get_string("kernel.aniso_source", c.aniso_source);
    c.aniso_along = f.get_double("kernel.aniso_along", c.aniso_along);
    c.aniso_across = f.get_double("kernel.aniso_across", c.aniso_across);
    if (c.aniso_source != "diagonal" && c.aniso_source != "active-subspace" && c.aniso_source != "literal")
        throw ConfigError("kernel.aniso_source must be diagonal, active-subspace or literal");
    if (k.family == KernelFamily::GaussianAniso) {
        if (c.aniso_source == "literal") {
            const auto m = f.get_list("kernel.aniso_matrix", {});
            const auto d = static_cast<std::size_t>(c.dx);
            if (m.size() != d * d)
                throw ConfigError("kernel.aniso_matrix needs " + std::to_string(d * d) + " row-major entries");
            k.aniso = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                m.data(), c.dx, c.dx);
        }
    }

    auto& g = c.setup.greedy;
    g.beta = f.get_double("greedy.beta", g.beta);
    g.n_max = count(f, "greedy.n_max", g.n_max);
    g.eps_acc = f.get_double("greedy.eps_acc", g.eps_acc);
    g.eps_stab = f.get_double("greedy.eps_stab", g.eps_stab);
    g.rel_power_floor = f.get_double("greedy.rel_power_floor", g.rel_power_floor);
    c.setup.w_interior = f.get_double("greedy.w_L", 1.0);
    c.setup.w_boundary = f.get_double("greedy.w_B", 1.0);
    try {
        g.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("greedy: ") + e.what());
    }
    if (!(c.setup.w_interior > 0.0) || !(c.setup.w_boundary > 0.0))
        throw ConfigError("greedy: weights must be positive");

    const auto stages = f.get_words("search.stages");
    if (!stages.empty()) {
        SearchSpec spec;
        for (const auto& name : stages) {
            std::vector<double> def;
            if (name == "w_B" || name == "w_L")
                def = log_grid(1e-1, 1e3);
            else if (name == "eps_x2" || name == "eps_mu2")
                def = log_grid(1e-3, 1e2);
            else if (name == "eps_x" || name == "eps_mu")
                def = log_grid(std::sqrt(1e-3), std::sqrt(1e2));
            else
                throw ConfigError("search.stages: unknown parameter '" + name + "'");
            spec.stages.push_back({name, f.get_list("search.grid_" + name, def)});
        }
        spec.validate();
        c.search = spec;
    }
    c.gamma_interior = f.get_double("search.gamma_L", 1.0);
    c.gamma_boundary = f.get_double("search.gamma_B", 1.0);

    c.output_dir = f.get_string("output.dir", c.output_dir.string());
    c.slice_mu = f.get_list("output.slice_mu", {});
    c.slice_resolution = static_cast<int>(f.get_int("output.slice_resolution", c.slice_resolution));
    for (double v : f.get_list("output.checkpoints", {})) {
        if (!(v >= 1.0)) throw ConfigError("output.checkpoints must be positive model sizes");
        c.checkpoints.push_back(static_cast<std::size_t>(v));
    }

    c.compare_betas = f.get_list("compare.betas", {});
    c.compare_eps_x2 = shape2_list(f, "compare", "eps_x");
    c.compare_eps_mu2 = shape2_list(f, "compare", "eps_mu");
    c.compare_w_boundary = f.get_list("compare.w_B", {});
    for (const auto* list : {&c.compare_eps_x2, &c.compare_eps_mu2, &c.compare_w_boundary})
        if (list->size() > 1 && list->size() != c.compare_betas.size())
            throw ConfigError("compare: per-beta lists must have one entry or one per beta");
    c.reference_n = count(f, "compare.reference_n", c.reference_n);
    c.reference_boundary_ratio = f.get_double("compare.reference_boundary_ratio", c.reference_boundary_ratio);
    c.reference_eps_x2 = shape2(f, "compare", "reference_eps_x", 0.0);
    c.reference_eps_mu2 = shape2(f, "compare", "reference_eps_mu", 0.0);
    c.n_mu = static_cast<int>(f.get_int("compare.n_mu", c.n_mu));
    c.grid_resolution = static_cast<int>(f.get_int("compare.grid_resolution", c.grid_resolution));
    if (c.n_mu < 1 || c.grid_resolution < 1 || c.slice_resolution < 2)
        throw ConfigError("grid sizes must be positive (slice_resolution >= 2)");
    if (!(c.reference_boundary_ratio > 0.0 && c.reference_boundary_ratio < 1.0))
        throw ConfigError("compare.reference_boundary_ratio must lie in (0, 1)");

    (void)make_problem(c.problem, c.dx);
    return c;
}

// --------------------------------------------------------------- helpers

namespace {

void log(const ExperimentConfig& cfg, const std::string& msg) {
    if (!cfg.quiet) std::cerr << "[pdegreedy] " << msg << '\n';
}

std::ofstream open_out(const fs::path& dir, const std::string& name) {
    std::ofstream out(dir / name);
    if (!out) throw ConfigError("cannot write " + (dir / name).string());
    return out;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("output directory " + dir.string() + " is not writable");
}

double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct TestErrors {
    std::optional<double> linf;
    double max_interior = 0.0;
    double max_boundary = 0.0;
};

TestErrors test_errors(const Surrogate& s, const ParametricProblem& problem, const CandidateSet& test) {
    TestErrors e;
    double linf = 0.0;
    for (const auto& lam : test.functionals) {
        const double r = std::abs(lam.target - s.apply(lam));
        (lam.interior() ? e.max_interior : e.max_boundary) = std::max(lam.interior() ? e.max_interior : e.max_boundary, r);
        if (problem.exact)
            linf = std::max(linf, std::abs((*problem.exact)(lam.position, lam.parameter) -
                                           s.eval(lam.position, lam.parameter)));
    }
    if (problem.exact) e.linf = linf;
    return e;
}

}  // namespace

TrainingSetup resolve_setup(const ExperimentConfig& cfg, const ParametricProblem& problem,
                            const CandidateSet& training) {
    TrainingSetup setup = cfg.setup;
    if (setup.kernel.family != KernelFamily::GaussianAniso || cfg.aniso_source == "literal") return setup;
    const auto d = static_cast<Eigen::Index>(problem.position_dim);
    Eigen::VectorXd v1;
    if (cfg.aniso_source == "diagonal") {
        v1 = Eigen::VectorXd::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
    } else {
        v1 = active_subspace_direction(source_gradients(problem, training)).direction;
    }
    setup.kernel.aniso = build_anisotropic_B(v1, cfg.aniso_along, cfg.aniso_across);
    return setup;
}

Surrogate prefix_surrogate(const Surrogate& full, std::size_t n) {
    if (n < 1 || n > full.size()) throw std::invalid_argument("prefix_surrogate: n out of range");
    const auto nn = static_cast<Eigen::Index>(n);
    const Eigen::MatrixXd L = full.cholesky().topLeftCorner(nn, nn);
    std::vector<Functional> lams(full.functionals().begin(), full.functionals().begin() + static_cast<long>(n));
    Eigen::VectorXd y(nn);
    for (Eigen::Index i = 0; i < nn; ++i) y(i) = lams[static_cast<std::size_t>(i)].target;
    const Eigen::VectorXd z = L.triangularView<Eigen::Lower>().solve(y);
    Eigen::VectorXd alpha = L.transpose().triangularView<Eigen::Upper>().solve(z);
    return Surrogate(full.kernel(), std::move(lams), std::move(alpha), L);
}

std::vector<GridPoint> cartesian_test_grid(const ParametricProblem& problem, int n_mu, int resolution) {
    if (n_mu < 1 || resolution < 1) throw std::invalid_argument("cartesian_test_grid: sizes must be positive");
    const auto box = problem.position_box();
    const auto [lo, hi] = problem.parameter_range;
    std::vector<double> mus;
    for (int k = 0; k < n_mu; ++k) {
        const double mu = n_mu == 1 ? lo : lo + (hi - lo) * k / (n_mu - 1);
        if (mus.empty() || mu != mus.back()) mus.push_back(mu);
    }
    const std::size_t d = box.size();
    std::vector<GridPoint> out;
    std::vector<int> idx(d, 0);
    std::vector<double> x(d);
    for (double mu : mus) {
        std::fill(idx.begin(), idx.end(), 0);
        while (true) {
            for (std::size_t a = 0; a < d; ++a)
                x[a] = resolution == 1 ? box[a].mid() : box[a].lo + box[a].width() * idx[a] / (resolution - 1);
            const std::vector<double> m{mu};
            if (problem.contains(x, m) || problem.on_boundary(x, m)) out.push_back({x, m});
            std::size_t a = 0;
            while (a < d && ++idx[a] == resolution) idx[a++] = 0;
            if (a == d) break;
        }
    }
    return out;
}

void write_report_csv(std::ostream& out, const RunReport& r) {
    out << "problem,n,n_interior,n_boundary,r_bnd,stop_cause,max_train_residual,linf_test_error,"
           "max_test_residual_interior,max_test_residual_boundary,max_abs_boundary_train,train_time_s\n";
    out << r.problem << ',' << r.n << ',' << r.n_interior << ',' << r.n_boundary << ',' << csv::num(r.r_bnd) << ','
        << to_string(r.stop) << ',' << csv::num(r.max_train_residual) << ','
        << (r.linf_test_error ? csv::num(*r.linf_test_error) : "") << ',' << csv::num(r.max_test_residual_interior)
        << ',' << csv::num(r.max_test_residual_boundary) << ',' << csv::num(r.max_abs_boundary_train) << ','
        << csv::num(r.train_time_s) << '\n';
}

// ---------------------------------------------------------------- commands

namespace {

void write_slices(const fs::path& dir, const ParametricProblem& problem, const Surrogate& s,
                  const ExperimentConfig& cfg) {
    auto out = open_out(dir, "slices.csv");
    const auto box = problem.position_box();
    const std::size_t d = box.size();
    const std::size_t shown = std::min<std::size_t>(d, 2);
    out << "mu_1";
    for (std::size_t a = 0; a < shown; ++a) out << ",x_" << a + 1;
    out << ",value,exact\n";
    std::vector<double> mus = cfg.slice_mu;
    if (mus.empty()) mus = {problem.parameter_range.lo, problem.parameter_range.mid(), problem.parameter_range.hi};
    const int res = cfg.slice_resolution;
    std::vector<double> x(d);
    for (double mu : mus) {
        const std::vector<double> m{mu};
        const int ny = shown > 1 ? res : 1;
        for (int j = 0; j < ny; ++j) {
            for (int i = 0; i < res; ++i) {
                for (std::size_t a = 0; a < d; ++a) x[a] = box[a].mid();
                x[0] = box[0].lo + box[0].width() * i / (res - 1);
                if (shown > 1) x[1] = box[1].lo + box[1].width() * j / (res - 1);
                out << csv::num(mu);
                for (std::size_t a = 0; a < shown; ++a) out << ',' << csv::num(x[a]);
                if (problem.contains(x, m) || problem.on_boundary(x, m)) {
                    out << ',' << csv::num(s.eval(x, m)) << ',';
                    if (problem.exact) out << csv::num((*problem.exact)(x, m));
                } else {
                    out << ",,";
                }
                out << '\n';
            }
        }
    }
}

void write_residuals(const fs::path& dir, const Surrogate& s, const CandidateSet& test) {
    auto out = open_out(dir, "residuals.csv");
    std::vector<std::string> header{"kind"};
    for (auto& c : csv::numbered("x", test.position_dim)) header.push_back(c);
    for (auto& c : csv::numbered("mu", test.parameter_dim)) header.push_back(c);
    header.emplace_back("target");
    header.emplace_back("abs_residual");
    csv::write_row(out, header);
    std::vector<std::string> row;
    for (const auto& lam : test.functionals) {
        row.clear();
        row.emplace_back(1, kind_code(lam.op));
        for (double v : lam.position) row.push_back(csv::num(v));
        for (double v : lam.parameter) row.push_back(csv::num(v));
        row.push_back(csv::num(lam.target));
        row.push_back(csv::num(std::abs(lam.target - s.apply(lam))));
        csv::write_row(out, row);
    }
}

}  // namespace

RunReport cmd_run(const ExperimentConfig& cfg) {
    ensure_dir(cfg.output_dir);
    const ParametricProblem problem = make_problem(cfg.problem, cfg.dx);
    log(cfg, "sampling " + std::to_string(cfg.n_interior) + "+" + std::to_string(cfg.n_boundary) +
                 " training functionals for " + problem.name);
    const CandidateSet training = problem.sample(cfg.n_interior, cfg.n_boundary, cfg.seed);
    const CandidateSet test = problem.sample(cfg.test_interior, cfg.test_boundary, cfg.seed + 2);

    TrainingSetup setup = resolve_setup(cfg, problem, training);
    if (cfg.search) {
        const CandidateSet val = problem.sample(cfg.val_interior, cfg.val_boundary, cfg.seed + 1);
        log(cfg, "grid search over " + std::to_string(cfg.search->stages.size()) + " stage(s)");
        const SearchResult sr = consecutive_grid_search(
            *cfg.search, setup, training, ValidationSets::from(val, cfg.gamma_interior, cfg.gamma_boundary));
        auto out = open_out(cfg.output_dir, "loss_table.csv");
        write_loss_table_csv(out, sr.table);
        setup = sr.best;
    }

    const auto t0 = std::chrono::steady_clock::now();
    const GreedyResult run = train(setup, training);
    RunReport rep;
    rep.train_time_s = elapsed(t0);
    rep.problem = problem.name;
    rep.stop = run.stop();
    rep.n = run.size();
    rep.max_train_residual =
        run.history.records.empty() ? run.history.initial_max_residual : run.history.records.back().max_residual;
    log(cfg, "greedy selected " + std::to_string(rep.n) + " functionals (stop: " + to_string(rep.stop) + ") in " +
                 csv::num(rep.train_time_s) + " s");

    {
        auto out = open_out(cfg.output_dir, "history.csv");
        write_history_csv(out, run.history);
    }
    if (!run.surrogate) {
        auto out = open_out(cfg.output_dir, "report.csv");
        write_report_csv(out, rep);
        return rep;
    }
    const Surrogate& s = *run.surrogate;
    rep.n_interior = s.interior_count();
    rep.n_boundary = s.boundary_count();
    rep.r_bnd = static_cast<double>(rep.n_boundary) / static_cast<double>(rep.n);

    const TestErrors te = test_errors(s, problem, test);
    rep.linf_test_error = te.linf;
    rep.max_test_residual_interior = te.max_interior;
    rep.max_test_residual_boundary = te.max_boundary;
    for (const auto& lam : training.functionals)
        if (!lam.interior())
            rep.max_abs_boundary_train = std::max(rep.max_abs_boundary_train, std::abs(s.eval(lam.position, lam.parameter)));

    {
        auto out = open_out(cfg.output_dir, "selected.csv");
        write_selected_csv(out, s);
    }
    {
        auto out = open_out(cfg.output_dir, "surrogate.txt");
        save_surrogate(out, s);
    }
    write_residuals(cfg.output_dir, s, test);
    write_slices(cfg.output_dir, problem, s, cfg);
    if (!cfg.checkpoints.empty()) {
        auto out = open_out(cfg.output_dir, "convergence.csv");
        out << "n,linf_test_error,max_test_residual\n";
        for (std::size_t n : cfg.checkpoints) {
            if (n > s.size()) continue;
            const Surrogate sn = prefix_surrogate(s, n);
            const TestErrors e = test_errors(sn, problem, test);
            out << n << ',' << (e.linf ? csv::num(*e.linf) : "") << ','
                << csv::num(std::max(e.max_interior, e.max_boundary)) << '\n';
        }
    }
    {
        auto out = open_out(cfg.output_dir, "report.csv");
        write_report_csv(out, rep);
    }
    return rep;
}

CompareResult cmd_compare_beta(const ExperimentConfig& cfg) {
    if (cfg.compare_betas.empty()) throw ConfigError("compare.betas is empty");
    ensure_dir(cfg.output_dir);
    const ParametricProblem problem = make_problem(cfg.problem, cfg.dx);
    const CandidateSet training = problem.sample(cfg.n_interior, cfg.n_boundary, cfg.seed);
    const std::vector<GridPoint> grid = cartesian_test_grid(problem, cfg.n_mu, cfg.grid_resolution);
    log(cfg, "test grid with " + std::to_string(grid.size()) + " points");

    CompareResult result;
    std::vector<double> reference(grid.size());
    if (problem.exact) {
        result.error_reference = "exact";
        for (std::size_t i = 0; i < grid.size(); ++i) reference[i] = (*problem.exact)(grid[i].x, grid[i].mu);
    } else {
        result.error_reference = "full-collocation";
        const auto nb = static_cast<std::size_t>(std::lround(cfg.reference_boundary_ratio * cfg.reference_n));
        const std::size_t ni = cfg.reference_n - nb;
        if (ni < 1 || nb < 1) throw ConfigError("compare.reference_n too small for the boundary ratio");
        const CandidateSet centers = problem.sample(ni, nb, cfg.seed + 3);
        KernelSpec ks = cfg.setup.kernel;
        if (cfg.reference_eps_x2 > 0.0) ks.eps_x2 = cfg.reference_eps_x2;
        if (cfg.reference_eps_mu2 > 0.0) ks.eps_mu2 = cfg.reference_eps_mu2;
        if (ks.family == KernelFamily::GaussianAniso) ks = resolve_setup(cfg, problem, training).kernel;
        Eigen::VectorXd y(static_cast<Eigen::Index>(centers.size()));
        for (std::size_t i = 0; i < centers.size(); ++i) y(static_cast<Eigen::Index>(i)) = centers.functionals[i].target;
        log(cfg, "building full-collocation reference with n = " + std::to_string(centers.size()));
        const Surrogate ref = full_collocation_solve(ks.build(problem.position_dim, problem.parameter_dim),
                                                     centers.functionals, y);
        for (std::size_t i = 0; i < grid.size(); ++i) reference[i] = ref.eval(grid[i].x, grid[i].mu);
    }

    auto pick = [](const std::vector<double>& list, std::size_t i, double fallback) {
        if (list.empty()) return fallback;
        return list.size() == 1 ? list.front() : list[i];
    };
    for (std::size_t b = 0; b < cfg.compare_betas.size(); ++b) {
        TrainingSetup setup = resolve_setup(cfg, problem, training);
        setup.greedy.beta = cfg.compare_betas[b];
        setup.kernel.eps_x2 = pick(cfg.compare_eps_x2, b, setup.kernel.eps_x2);
        setup.kernel.eps_mu2 = pick(cfg.compare_eps_mu2, b, setup.kernel.eps_mu2);
        setup.w_boundary = pick(cfg.compare_w_boundary, b, setup.w_boundary);
        const GreedyResult run = train(setup, training);
        CompareRow row;
        row.beta = setup.greedy.beta;
        row.n = run.size();
        row.eps_x2 = setup.kernel.eps_x2;
        row.eps_mu2 = setup.kernel.eps_mu2;
        row.w_boundary = setup.w_boundary;
        row.stop = run.stop();
        if (run.surrogate) {
            row.r_bnd = static_cast<double>(run.surrogate->boundary_count()) / static_cast<double>(row.n);
            for (std::size_t i = 0; i < grid.size(); ++i)
                row.error = std::max(row.error, std::abs(reference[i] - run.surrogate->eval(grid[i].x, grid[i].mu)));
        } else {
            for (double r : reference) row.error = std::max(row.error, std::abs(r));
        }
        log(cfg, "beta = " + csv::num(row.beta) + ": n = " + std::to_string(row.n) + ", error = " + csv::num(row.error));
        result.rows.push_back(row);
    }

    auto out = open_out(cfg.output_dir, "compare.csv");
    out << "beta,n,eps_x2,eps_mu2,w_B,r_bnd,stop_cause,linf_error,error_reference\n";
    for (const auto& r : result.rows)
        out << csv::num(r.beta) << ',' << r.n << ',' << csv::num(r.eps_x2) << ',' << csv::num(r.eps_mu2) << ','
            << csv::num(r.w_boundary) << ',' << csv::num(r.r_bnd) << ',' << to_string(r.stop) << ','
            << csv::num(r.error) << ',' << result.error_reference << '\n';
    return result;
}

std::size_t cmd_export_testset(const ExperimentConfig& cfg) {
    ensure_dir(cfg.output_dir);
    const ParametricProblem problem = make_problem(cfg.problem, cfg.dx);
    const auto grid = cartesian_test_grid(problem, cfg.n_mu, cfg.grid_resolution);
    auto out = open_out(cfg.output_dir, "testset.csv");
    std::vector<std::string> header = csv::numbered("mu", problem.parameter_dim);
    for (auto& c : csv::numbered("x", problem.position_dim)) header.push_back(c);
    header.emplace_back("u");
    csv::write_row(out, header);
    for (const auto& p : grid) {
        for (double v : p.mu) out << csv::num(v) << ',';
        for (double v : p.x) out << csv::num(v) << ',';
        if (problem.exact) out << csv::num((*problem.exact)(p.x, p.mu));
        out << '\n';
    }
    return grid.size();
}

SearchResult cmd_search(const ExperimentConfig& cfg) {
    if (!cfg.search) throw ConfigError("search.stages is empty");
    ensure_dir(cfg.output_dir);
    const ParametricProblem problem = make_problem(cfg.problem, cfg.dx);
    const CandidateSet training = problem.sample(cfg.n_interior, cfg.n_boundary, cfg.seed);
    const CandidateSet val = problem.sample(cfg.val_interior, cfg.val_boundary, cfg.seed + 1);
    const TrainingSetup setup = resolve_setup(cfg, problem, training);
    SearchResult sr = consecutive_grid_search(*cfg.search, setup, training,
                                              ValidationSets::from(val, cfg.gamma_interior, cfg.gamma_boundary));
    {
        auto out = open_out(cfg.output_dir, "loss_table.csv");
        write_loss_table_csv(out, sr.table);
    }
    auto out = open_out(cfg.output_dir, "search_best.csv");
    out << "family,eps_x2,eps_mu2,w_L,w_B,validation_loss\n";
    out << to_string(sr.best.kernel.family) << ',' << csv::num(sr.best.kernel.eps_x2) << ','
        << csv::num(sr.best.kernel.eps_mu2) << ',' << csv::num(sr.best.w_interior) << ','
        << csv::num(sr.best.w_boundary) << ',' << csv::num(sr.best_loss) << '\n';
    return sr;
}

}  // namespace pdegreedy
