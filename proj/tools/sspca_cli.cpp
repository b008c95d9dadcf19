// sspca_cli: simulate, fit, tune and bench subcommands over a JSON spec.

#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "sspca/experiment.hpp"

namespace {

struct Overrides {
    std::string spec_path;
    std::optional<std::size_t> n, d, k, reps;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> methods;
    std::string out = "sspca_out";
    bool header = false;
    std::optional<std::size_t> threads;
};

void add_common(CLI::App* sub, Overrides& o) {
    sub->add_option("spec", o.spec_path, "JSON experiment spec")->required()->check(CLI::ExistingFile);
    sub->add_option("--n", o.n, "sample size (replaces the n grid)");
    sub->add_option("--d", o.d, "dimension (replaces the d grid)");
    sub->add_option("--seed", o.seed, "base seed");
    sub->add_option("--method", o.methods, "TP, ECA, SSPCA or SSPCA_FP; repeatable");
    sub->add_option("--k", o.k, "sparsity level (replaces the k grid)");
    sub->add_option("--reps", o.reps, "replications");
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    sub->add_flag("--header", o.header, "input CSV has a header row");
    sub->add_option("--threads", o.threads, "worker threads (0 = all cores)");
}

sspca::ExperimentSpec load(const Overrides& o) {
    auto spec = sspca::read_spec_file(o.spec_path);
    if (o.n) spec.n_grid = {*o.n};
    if (o.d) spec.d_grid = {*o.d};
    if (o.k) spec.k_grid = {*o.k};
    if (o.reps) spec.replications = *o.reps;
    if (o.seed) spec.base_seed = *o.seed;
    if (o.header) spec.header = true;
    if (o.threads) spec.threads = *o.threads;
    if (!o.methods.empty()) {
        spec.methods.clear();
        for (const auto& m : o.methods) spec.methods.push_back(sspca::method_from_string(m));
    }
    return spec;
}

void print_summary(const sspca::ExperimentReport& r, const std::string& out) {
    for (const auto& g : sspca::summarize(r.records)) {
        std::cout << g.at("metric").get<std::string>();
        for (const auto& [k, v] : g.at("tags").items()) std::cout << ' ' << k << '=' << v.get<std::string>();
        std::cout << "  mean=" << g.at("mean").get<double>() << " sd=" << g.at("sd").get<double>()
                  << " count=" << g.at("count").get<std::size_t>() << '\n';
    }
    if (!r.failures.empty()) std::cout << r.failures.size() << " failed fits (see summary.json)\n";
    std::cout << "wrote " << out << "/records.csv, summary.json, timing.csv\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust sparse principal component analysis"};
    app.set_version_flag("--version", std::string(sspca::kVersion));
    app.require_subcommand(1);
    Overrides o;
    auto* simulate = app.add_subcommand("simulate", "seeded simulation study (leading_eigvec, top_m, tune_histogram)");
    auto* fit = app.add_subcommand("fit", "fit sparse components to a CSV file");
    auto* tune = app.add_subcommand("tune", "select k by sample splitting (simulated or CSV data)");
    auto* bench = app.add_subcommand("bench", "median-of-repeats runtime per method and n");
    for (auto* s : {simulate, fit, tune, bench}) add_common(s, o);
    std::string input;
    fit->add_option("--input", input, "CSV file (overrides the spec's input)");
    tune->add_option("--input", input, "CSV file (overrides the spec's input)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        auto spec = load(o);
        if (!input.empty()) spec.input_path = input;
        if (*simulate) {
            if (spec.scenario != sspca::Scenario::LeadingEigvec && spec.scenario != sspca::Scenario::TopM &&
                spec.scenario != sspca::Scenario::TuneHistogram)
                throw sspca::InvalidSpec("simulate expects scenario leading_eigvec, top_m or tune_histogram");
        } else if (*fit) {
            spec.scenario = sspca::Scenario::FitCsv;
        } else if (*tune) {
            if (!spec.tune) throw sspca::InvalidSpec("tune needs a 'tune' block in the spec");
            spec.scenario = spec.input_path.empty() ? sspca::Scenario::TuneHistogram : sspca::Scenario::FitCsv;
        } else {
            spec.scenario = sspca::Scenario::RuntimeBench;
        }
        const auto report = sspca::run_experiment(spec);
        sspca::write_report(report, o.out);
        print_summary(report, o.out);
        return 0;
    } catch (const sspca::NotConverged& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const sspca::DegenerateIterate& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const sspca::EmptySupport& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const sspca::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
