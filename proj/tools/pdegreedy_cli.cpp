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

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pdegreedy/csv.hpp"
#include "pdegreedy/error.hpp"
#include "pdegreedy/experiment.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

struct CommonOptions {
    std::string config;
    std::optional<long> seed;
    std::string out;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config, "experiment config file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", opts.seed, "overrides experiment.seed");
    cmd->add_option("--out", opts.out, "overrides output.dir");
    cmd->add_flag("--quiet", opts.quiet, "suppress progress output");
}

pdegreedy::ExperimentConfig load(const CommonOptions& opts, const std::string& betas = {}) {
    auto file = pdegreedy::ConfigFile::load(opts.config);
    if (opts.seed) file.set("experiment.seed", std::to_string(*opts.seed));
    if (!opts.out.empty()) file.set("output.dir", opts.out);
    if (!betas.empty()) file.set("compare.betas", betas);
    auto cfg = pdegreedy::ExperimentConfig::from(file);
    cfg.quiet = opts.quiet;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace pdegreedy;
    CLI::App app{"Greedy kernel collocation for parametric Poisson problems"};
    app.require_subcommand(1);

    CommonOptions opts;
    std::string betas;
    auto* run = app.add_subcommand("run", "train a surrogate and write CSV artifacts");
    add_common(run, opts);
    auto* compare = app.add_subcommand("compare-beta", "compare selection criteria on shared candidates");
    add_common(compare, opts);
    compare->add_option("--betas", betas, "comma-separated beta list (overrides compare.betas)");
    auto* testset = app.add_subcommand("export-testset", "write the Cartesian parameter x position test grid");
    add_common(testset, opts);
    auto* search = app.add_subcommand("search", "run the consecutive 1D hyperparameter search");
    add_common(search, opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    }

    try {
        if (run->parsed()) {
            const auto cfg = load(opts);
            const RunReport rep = cmd_run(cfg);
            write_report_csv(std::cout, rep);
        } else if (compare->parsed()) {
            const auto cfg = load(opts, betas);
            const CompareResult res = cmd_compare_beta(cfg);
            std::cout << "beta,n,r_bnd,linf_error (" << res.error_reference << ")\n";
            for (const auto& r : res.rows)
                std::cout << csv::num(r.beta) << ',' << r.n << ',' << csv::num(r.r_bnd) << ',' << csv::num(r.error)
                          << '\n';
        } else if (testset->parsed()) {
            const auto cfg = load(opts);
            const std::size_t rows = cmd_export_testset(cfg);
            std::cout << rows << " test points written to " << (cfg.output_dir / "testset.csv").string() << '\n';
        } else if (search->parsed()) {
            const auto cfg = load(opts);
            const SearchResult sr = cmd_search(cfg);
            std::cout << "eps_x2=" << csv::num(sr.best.kernel.eps_x2) << " eps_mu2=" << csv::num(sr.best.kernel.eps_mu2)
                      << " w_B=" << csv::num(sr.best.w_boundary) << " loss=" << csv::num(sr.best_loss) << '\n';
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumericalError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
