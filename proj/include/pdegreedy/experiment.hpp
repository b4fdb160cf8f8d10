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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pdegreedy/greedy.hpp"
#include "pdegreedy/problem.hpp"
#include "pdegreedy/tuning.hpp"

namespace pdegreedy {

/// Flat `key = value` text with `[section]` headers; '#' and ';' start
/// comments. Keys are addressed as "section.key" and remember their line.
class ConfigFile {
public:
    static ConfigFile parse(std::istream& in, const std::string& source = "<config>");
    static ConfigFile load(const std::filesystem::path& path);

    [[nodiscard]] bool has(const std::string& key) const { return entries_.contains(key); }
    [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback) const;
    [[nodiscard]] std::string require_string(const std::string& key) const;
    [[nodiscard]] double get_double(const std::string& key, double fallback) const;
    [[nodiscard]] long get_int(const std::string& key, long fallback) const;
    [[nodiscard]] bool get_bool(const std::string& key, bool fallback) const;
    [[nodiscard]] std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;
    [[nodiscard]] std::vector<std::string> get_words(const std::string& key) const;
    void set(const std::string& key, const std::string& value);
    /// Throws ConfigError naming the line of the first key not in `known`.
    void reject_unknown(const std::set<std::string>& known) const;

private:
    struct Entry {
        std::string value;
        int line = 0;
    };
    [[noreturn]] void fail(const std::string& key, const std::string& what) const;
    [[nodiscard]] double to_double(const std::string& key, const std::string& text) const;

    std::string source_;
    std::map<std::string, Entry> entries_;
};

/// Every setting of one experiment, resolved from a ConfigFile.
struct ExperimentConfig {
    std::string problem = "moving-circles-smooth";
    int dx = 2;
    std::uint64_t seed = 1;
    std::size_t n_interior = 10000;
    std::size_t n_boundary = 10000;
    std::size_t val_interior = 10000;
    std::size_t val_boundary = 10000;
    std::size_t test_interior = 10000;
    std::size_t test_boundary = 10000;

    TrainingSetup setup;
    std::string aniso_source = "diagonal";  // diagonal | active-subspace | literal
    double aniso_along = 1.0;
    double aniso_across = 1.0;

    std::optional<SearchSpec> search;
    double gamma_interior = 1.0;
    double gamma_boundary = 1.0;

    std::vector<double> slice_mu;
    int slice_resolution = 51;
    std::vector<std::size_t> checkpoints;

    std::vector<double> compare_betas;
    std::vector<double> compare_eps_x2;
    std::vector<double> compare_eps_mu2;
    std::vector<double> compare_w_boundary;
    std::size_t reference_n = 2000;
    double reference_boundary_ratio = 0.1;
    double reference_eps_x2 = 0.0;  // 0 = use the kernel section
    double reference_eps_mu2 = 0.0;
    int n_mu = 20;
    int grid_resolution = 101;

    std::filesystem::path output_dir = "out";
    bool quiet = false;

    static ExperimentConfig from(const ConfigFile& file);
};

struct RunReport {
    std::string problem;
    std::size_t n = 0;
    std::size_t n_interior = 0;
    std::size_t n_boundary = 0;
    double r_bnd = 0.0;
    StopCause stop = StopCause::MaxIterations;
    double max_train_residual = 0.0;
    std::optional<double> linf_test_error;
    double max_test_residual_interior = 0.0;
    double max_test_residual_boundary = 0.0;
    double max_abs_boundary_train = 0.0;  // max |s_n| over boundary training sites
    double train_time_s = 0.0;
};

struct CompareRow {
    double beta = 0.0;
    std::size_t n = 0;
    double eps_x2 = 0.0;
    double eps_mu2 = 0.0;
    double w_boundary = 0.0;
    double r_bnd = 0.0;
    StopCause stop = StopCause::MaxIterations;
    double error = 0.0;
};

struct CompareResult {
    std::vector<CompareRow> rows;
    std::string error_reference;  // "exact" or "full-collocation"
    std::optional<double> reference_exact_error;
};

/// Setup with the anisotropic matrix resolved (active subspace needs the
/// training set).
[[nodiscard]] TrainingSetup resolve_setup(const ExperimentConfig& cfg, const ParametricProblem& problem,
                                          const CandidateSet& training);

/// Surrogate on the first n functionals of a greedy surrogate, reusing the
/// leading block of its Cholesky factor.
[[nodiscard]] Surrogate prefix_surrogate(const Surrogate& full, std::size_t n);

/// One point of a Cartesian parameter x position grid.
struct GridPoint {
    std::vector<double> x;
    std::vector<double> mu;
};

/// n_mu equidistant parameters times a regular grid with `resolution`
/// points per axis over the position box, restricted to the closed domain.
[[nodiscard]] std::vector<GridPoint> cartesian_test_grid(const ParametricProblem& problem, int n_mu, int resolution);

/// Samples, optionally searches, trains and writes history.csv,
/// selected.csv, residuals.csv, slices.csv, report.csv and surrogate.txt
/// (plus loss_table.csv / convergence.csv when configured).
RunReport cmd_run(const ExperimentConfig& cfg);

/// One training run per beta on shared candidate sets; writes compare.csv.
CompareResult cmd_compare_beta(const ExperimentConfig& cfg);

/// Writes testset.csv with the Cartesian test grid and exact values.
std::size_t cmd_export_testset(const ExperimentConfig& cfg);

/// Runs the grid search only; writes loss_table.csv and search_best.csv.
SearchResult cmd_search(const ExperimentConfig& cfg);

void write_report_csv(std::ostream& out, const RunReport& r);

}  // namespace pdegreedy
