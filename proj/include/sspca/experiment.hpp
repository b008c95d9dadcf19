#pragma once

// Experiment harness behind the command-line tool: seeded simulation
// studies, CSV fitting, tuning histograms and runtime benchmarks.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "sspca/data.hpp"
#include "sspca/errors.hpp"
#include "sspca/fantope_init.hpp"
#include "sspca/location.hpp"
#include "sspca/metrics.hpp"
#include "sspca/sampler.hpp"
#include "sspca/scatter.hpp"
#include "sspca/sparse_pca.hpp"
#include "sspca/tuning.hpp"
#include "sspca/version.hpp"

namespace sspca {

enum class Scenario { LeadingEigvec, TopM, TuneHistogram, RuntimeBench, FitCsv };
enum class Method { TP, ECA, SSPCA, SSPCA_FP };

inline std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::LeadingEigvec: return "leading_eigvec";
        case Scenario::TopM: return "top_m";
        case Scenario::TuneHistogram: return "tune_histogram";
        case Scenario::RuntimeBench: return "runtime_bench";
        default: return "fit_csv";
    }
}

inline Scenario scenario_from_string(const std::string& s) {
    for (auto v : {Scenario::LeadingEigvec, Scenario::TopM, Scenario::TuneHistogram, Scenario::RuntimeBench, Scenario::FitCsv})
        if (to_string(v) == s) return v;
    throw InvalidSpec("unknown scenario '" + s + "'");
}

inline std::string to_string(Method m) {
    switch (m) {
        case Method::TP: return "TP";
        case Method::ECA: return "ECA";
        case Method::SSPCA: return "SSPCA";
        default: return "SSPCA_FP";
    }
}

inline Method method_from_string(const std::string& s) {
    for (auto v : {Method::TP, Method::ECA, Method::SSPCA, Method::SSPCA_FP})
        if (to_string(v) == s) return v;
    throw InvalidSpec("unknown method '" + s + "' (expected TP, ECA, SSPCA or SSPCA_FP)");
}

/// λ = lambda_scale · λ₁(Ŝ) · √(log d / n) and ρ = rho_scale · λ₁(Ŝ);
/// phi is used as given.
struct FantopeHeuristic {
    double lambda_scale = 0.3;
    double phi = 0.1;
    double rho_scale = 0.3;
    double tol = 1e-6;
    std::size_t max_iter = 2000;
};

struct ExperimentSpec {
    Scenario scenario = Scenario::LeadingEigvec;
    EllipticalModel model;
    std::string input_path;  // FitCsv
    bool header = false;
    bool standardize = false;
    CenterMethod center = CenterMethod::SpatialMedian;
    std::vector<Method> methods{Method::SSPCA};
    std::vector<std::size_t> n_grid{200};
    std::vector<std::size_t> d_grid;  // empty: the model's own d
    std::vector<std::size_t> s_grid;  // empty: the model's own cardinalities
    std::vector<std::size_t> k_grid;  // empty: k = true cardinality per component
    std::size_t m = 1;
    std::size_t replications = 1;
    std::uint64_t base_seed = 0;
    std::optional<TuneConfig> tune;  // seed field is ignored; derived per replication
    FantopeHeuristic fantope;
    double eps = 1e-6;
    std::size_t max_iter = 1000;
    double leverage_threshold = 0.05;
    std::size_t bench_repeats = 5;
    std::size_t threads = 0;  // 0: hardware concurrency

    void validate() const;
};

struct Failure {
    std::string cell;
    std::string method;
    std::size_t replication = 0;
    std::string message;
};

struct ExperimentReport {
    std::vector<MetricRecord> records;
    nlohmann::json config;
    std::string version = kVersion;
    std::vector<Failure> failures;
    std::vector<MetricRecord> timings;  // wall clock; kept apart from the deterministic outputs
    nlohmann::json fit;               // FitCsv only
};

// ---------------------------------------------------------------------------
// JSON spec

inline nlohmann::json to_json(const ExperimentSpec& s) {
    nlohmann::json j;
    j["scenario"] = to_string(s.scenario);
    if (s.scenario == Scenario::FitCsv) {
        j["input"] = s.input_path;
        j["header"] = s.header;
        j["standardize"] = s.standardize;
        j["center"] = to_string(s.center);
    } else {
        j["model"] = to_json(s.model);
    }
    std::vector<std::string> methods;
    for (auto m : s.methods) methods.push_back(to_string(m));
    j["methods"] = methods;
    j["grid"] = {{"n", s.n_grid}, {"d", s.d_grid}, {"s", s.s_grid}, {"k", s.k_grid}};
    j["m"] = s.m;
    j["replications"] = s.replications;
    j["base_seed"] = s.base_seed;
    if (s.tune) j["tune"] = {{"candidates", s.tune->candidates}, {"splits", s.tune->splits}, {"split_fraction", s.tune->split_fraction}};
    j["fantope"] = {{"lambda_scale", s.fantope.lambda_scale}, {"phi", s.fantope.phi}, {"rho_scale", s.fantope.rho_scale},
                    {"tol", s.fantope.tol}, {"max_iter", s.fantope.max_iter}};
    j["solver"] = {{"eps", s.eps}, {"max_iter", s.max_iter}};
    j["leverage_threshold"] = s.leverage_threshold;
    j["bench_repeats"] = s.bench_repeats;
    return j;
}

inline ExperimentSpec spec_from_json(const nlohmann::json& j) {
    try {
        ExperimentSpec s;
        s.scenario = scenario_from_string(j.value("scenario", std::string("leading_eigvec")));
        if (j.contains("model")) s.model = model_from_json(j.at("model"));
        s.input_path = j.value("input", std::string());
        s.header = j.value("header", false);
        s.standardize = j.value("standardize", false);
        const auto center = j.value("center", std::string("spatial_median"));
        if (center == "spatial_median") s.center = CenterMethod::SpatialMedian;
        else if (center == "mean") s.center = CenterMethod::Mean;
        else throw InvalidSpec("center must be 'spatial_median' or 'mean'");
        if (j.contains("methods")) {
            s.methods.clear();
            for (const auto& m : j.at("methods")) s.methods.push_back(method_from_string(m.get<std::string>()));
        }
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            s.n_grid = g.value("n", s.n_grid);
            s.d_grid = g.value("d", s.d_grid);
            s.s_grid = g.value("s", s.s_grid);
            s.k_grid = g.value("k", s.k_grid);
        }
        s.m = j.value("m", s.m);
        s.replications = j.value("replications", s.replications);
        s.base_seed = j.value("base_seed", s.base_seed);
        if (j.contains("tune")) {
            const auto& t = j.at("tune");
            TuneConfig tc;
            tc.candidates = t.at("candidates").get<std::vector<std::size_t>>();
            tc.splits = t.value("splits", tc.splits);
            tc.split_fraction = t.value("split_fraction", tc.split_fraction);
            s.tune = tc;
        }
        if (j.contains("fantope")) {
            const auto& f = j.at("fantope");
            s.fantope.lambda_scale = f.value("lambda_scale", s.fantope.lambda_scale);
            s.fantope.phi = f.value("phi", s.fantope.phi);
            s.fantope.rho_scale = f.value("rho_scale", s.fantope.rho_scale);
            s.fantope.tol = f.value("tol", s.fantope.tol);
            s.fantope.max_iter = f.value("max_iter", s.fantope.max_iter);
        }
        if (j.contains("solver")) {
            s.eps = j.at("solver").value("eps", s.eps);
            s.max_iter = j.at("solver").value("max_iter", s.max_iter);
        }
        s.leverage_threshold = j.value("leverage_threshold", s.leverage_threshold);
        s.bench_repeats = j.value("bench_repeats", s.bench_repeats);
        s.threads = j.value("threads", s.threads);
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidSpec(std::string("experiment spec: ") + e.what());
    }
}

inline ExperimentSpec read_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("spec '") + path + "': " + e.what());
    }
    return spec_from_json(j);
}

inline void ExperimentSpec::validate() const {
    if (methods.empty()) throw InvalidSpec("no methods");
    if (replications < 1) throw InvalidSpec("replications must be >= 1");
    if (m < 1) throw InvalidSpec("m must be >= 1");
    if (bench_repeats < 1) throw InvalidSpec("bench_repeats must be >= 1");
    for (const auto* grid : {&n_grid, &d_grid, &s_grid, &k_grid})
        for (std::size_t v : *grid)
            if (v == 0) throw InvalidSpec("grid values must be positive");
    if (scenario == Scenario::FitCsv) {
        if (input_path.empty()) throw InvalidSpec("fit_csv needs an input path");
        return;
    }
    if (n_grid.empty()) throw InvalidSpec("empty n grid");
    if (scenario == Scenario::TuneHistogram && !tune) throw InvalidSpec("tune_histogram needs a tune block");
    if ((!d_grid.empty() || !s_grid.empty()) && !std::holds_alternative<SpikedCovarianceSpec>(model.scatter))
        throw InvalidSpec("d and s grids need a spiked model");
    model.validate();
}

// ---------------------------------------------------------------------------
// fitting one method

namespace detail {

inline SymMatrix scatter_for(Method method, const DataMatrix& x, CenterMethod center = CenterMethod::SpatialMedian) {
    switch (method) {
        case Method::TP: return pearson(x).matrix;
        case Method::ECA: return kendall_tau(x).matrix;
        default:
            if (center == CenterMethod::Mean) return sscm(x, coordinate_mean(x)).matrix;
            return sscm(x).matrix;
    }
}

inline FantopeConfig fantope_config(const FantopeHeuristic& h, const SymMatrix& s, std::size_t n) {
    FantopeConfig c;
    const double d = static_cast<double>(s.dim());
    const double top = std::max(0.0, sym_eigen(s).front().value);
    c.lambda = h.lambda_scale * top * std::sqrt(std::max(0.0, std::log(d)) / static_cast<double>(n));
    c.phi = h.phi;
    if (top > 0.0) c.admm_rho = h.rho_scale * top;
    c.tol = h.tol;
    c.max_iter = h.max_iter;
    return c;
}

// The truncated-power start for a method: Fantope for SSPCA_FP, the dense
// leading eigenvector otherwise. An empty Fantope support falls back to the
// eigenvector and reports it through `fell_back`.
inline PcInit init_for(Method method, const ExperimentSpec& spec, const SymMatrix& s, std::size_t n, bool& fell_back) {
    fell_back = false;
    if (method != Method::SSPCA_FP) return LeadingEigenvectorInit{};
    try {
        return GivenInit{fantope_initializer(s, fantope_config(spec.fantope, s, n))};
    } catch (const EmptySupport&) {
        fell_back = true;
        return LeadingEigenvectorInit{};
    }
}

struct ScatterFor {
    Method method;
    SymMatrix operator()(const DataMatrix& x) const { return scatter_for(method, x); }
};

inline std::size_t worker_count(std::size_t requested, std::size_t tasks) {
    std::size_t hw = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
    return std::max<std::size_t>(1, std::min(hw, tasks));
}

// Runs f(i) for i in [0, count) on a pool; results are written by index so
// the outcome does not depend on scheduling.
template <class F>
void parallel_for(std::size_t count, std::size_t threads, F&& f) {
    const std::size_t workers = worker_count(threads, count);
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

struct Cell {
    std::size_t n = 0;
    EllipticalModel model;
    std::vector<Vector> truth;
    std::vector<std::size_t> k;  // per component
    std::map<std::string, std::string> tags;
};

inline std::string join(const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "/" : "") + std::to_string(v[i]);
    return s;
}

inline std::vector<Cell> expand_cells(const ExperimentSpec& spec) {
    std::vector<Cell> cells;
    const auto* spiked = std::get_if<SpikedCovarianceSpec>(&spec.model.scatter);
    const std::vector<std::size_t> d_grid = spec.d_grid.empty() ? std::vector<std::size_t>{spec.model.dim()} : spec.d_grid;
    const std::vector<std::size_t> s_grid = spec.s_grid.empty() ? std::vector<std::size_t>{0} : spec.s_grid;
    const std::vector<std::size_t> k_grid = spec.k_grid.empty() ? std::vector<std::size_t>{0} : spec.k_grid;
    for (std::size_t d : d_grid)
        for (std::size_t s : s_grid)
            for (std::size_t k : k_grid)
                for (std::size_t n : spec.n_grid) {
                    Cell c;
                    c.n = n;
                    c.model = spec.model;
                    std::vector<std::size_t> card;
                    if (spiked) {
                        SpikedCovarianceSpec sp = *spiked;
                        sp.d = d;
                        if (s) for (auto& spike : sp.spikes) spike.s = s;
                        if (!spec.model.mu.empty() && spec.model.mu.size() != d)
                            throw InvalidSpec("model mu does not match grid d = " + std::to_string(d));
                        sp.validate();
                        c.model.scatter = sp;
                        c.truth = spike_eigenvectors(sp);
                        for (const auto& spike : sp.spikes) card.push_back(spike.s);
                    } else {
                        for (const auto& p : sym_eigen(c.model.sigma())) c.truth.push_back(p.vector);
                        card.assign(c.truth.size(), c.model.dim());
                    }
                    const std::size_t comps = spec.scenario == Scenario::TopM ? spec.m : 1;
                    if (comps > c.truth.size()) throw InvalidSpec("m exceeds the number of model components");
                    c.truth.resize(comps);
                    for (std::size_t r = 0; r < comps; ++r) c.k.push_back(k ? k : card[r]);
                    for (std::size_t kk : c.k)
                        if (kk > c.model.dim()) throw InvalidSpec("k exceeds d");
                    card.resize(comps);
                    c.tags = {{"scenario", to_string(spec.scenario)},
                              {"distribution", family_name(spec.model.family)},
                              {"n", std::to_string(n)},
                              {"d", std::to_string(c.model.dim())},
                              {"s", join(card)},
                              {"k", join(c.k)}};
                    cells.push_back(std::move(c));
                }
    return cells;
}

inline std::string cell_label(const Cell& c) {
    return "n=" + c.tags.at("n") + ",d=" + c.tags.at("d") + ",s=" + c.tags.at("s") + ",k=" + c.tags.at("k");
}

struct TaskOutput {
    std::vector<MetricRecord> records;
    std::vector<Failure> failures;
    std::vector<MetricRecord> timings;
};

inline TaskOutput run_replication(const ExperimentSpec& spec, const Cell& cell, std::size_t cell_index, std::size_t rep) {
    TaskOutput out;
    const std::uint64_t seed = substream_seed(substream_seed(spec.base_seed, cell_index), rep);
    EllipticalModel model = cell.model;
    model.seed = seed;
    const DataMatrix x = sample(model, cell.n);
    const std::string label = cell_label(cell);

    for (Method method : spec.methods) {
        auto tags = cell.tags;
        tags["method"] = to_string(method);
        tags["replication"] = std::to_string(rep);
        tags["seed"] = std::to_string(seed);
        auto emit = [&](const std::string& name, double value, std::optional<std::size_t> component = {}) {
            auto t = tags;
            if (component) t["component"] = std::to_string(*component + 1);
            out.records.push_back({name, value, std::move(t)});
        };
        const auto start = std::chrono::steady_clock::now();
        try {
            const SymMatrix s = scatter_for(method, x);
            std::vector<std::size_t> ks = cell.k;
            if (spec.scenario == Scenario::TuneHistogram) {
                TuneConfig tc = *spec.tune;
                tc.seed = substream_seed(seed, 0x7e);
                SparsePCConfig tmpl;
                tmpl.eps = spec.eps;
                tmpl.max_iter = spec.max_iter;
                const auto tuned = select_k(x, tc, tmpl, ScatterFor{method});
                ks.front() = tuned.chosen_k;
                tags["k"] = "tuned";
                emit("chosen_k", static_cast<double>(tuned.chosen_k));
            }
            std::vector<SparsePCConfig> configs;
            bool fell_back = false;
            for (std::size_t r = 0; r < ks.size(); ++r) {
                SparsePCConfig c;
                c.k = ks[r];
                c.eps = spec.eps;
                c.max_iter = spec.max_iter;
                configs.push_back(c);
            }
            // The Fantope start applies to the first component; later
            // components start from the deflated matrix's eigenvector.
            configs.front().init = init_for(method, spec, s, cell.n, fell_back);
            if (method == Method::SSPCA_FP) emit("fantope_fallback", fell_back ? 1.0 : 0.0);
            const auto fit = top_m_sparse_pcs(s, configs);
            std::vector<Vector> est;
            for (std::size_t r = 0; r < fit.vectors.size(); ++r) {
                emit("sin_angle", sin_angle(fit.vectors[r].vector, cell.truth[r]), r);
                emit("converged", fit.vectors[r].converged ? 1.0 : 0.0, r);
                est.push_back(fit.vectors[r].vector);
            }
            if (spec.scenario == Scenario::TopM) {
                // Deflated estimates are only approximately orthogonal;
                // orthonormalize before comparing projectors.
                std::vector<Vector> q;
                for (auto v : est) {
                    for (const auto& u : q) {
                        const double c = dot(v, u);
                        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * u[i];
                    }
                    if (normalize(v) > 0.0) q.push_back(std::move(v));
                }
                if (q.size() == cell.truth.size()) emit("subspace_distance", subspace_distance(q, cell.truth));
            }
        } catch (const Error& e) {
            out.failures.push_back({label, to_string(method), rep, e.what()});
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.timings.push_back({"wall_seconds", secs, tags});
    }
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// FitCsv

struct FitResult {
    std::size_t n = 0, d = 0;
    Method method = Method::SSPCA;
    std::optional<CenterEstimate> center;
    SubspaceResult components;
    std::optional<TuneResult> tuning;
    Vector leverage;  // empty when fewer than two components were fitted
    std::vector<std::size_t> flagged;
};

/// Column-wise (x − mean)/sd with the unbiased sd; constant columns are
/// only centered.
inline DataMatrix standardize_columns(const DataMatrix& x) {
    DataMatrix out = x;
    const auto mean = coordinate_mean(x).center;
    for (std::size_t j = 0; j < x.cols(); ++j) {
        double ss = 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i) ss += (x(i, j) - mean[j]) * (x(i, j) - mean[j]);
        const double sd = x.rows() > 1 ? std::sqrt(ss / static_cast<double>(x.rows() - 1)) : 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i) out(i, j) = sd > 0.0 ? (x(i, j) - mean[j]) / sd : x(i, j) - mean[j];
    }
    return out;
}

/// Fits m components with one method on a data matrix. k comes from the
/// spec's k grid (first entry, or d when empty) unless a tune block is set.
inline FitResult fit_data(const DataMatrix& raw, const ExperimentSpec& spec, Method method) {
    raw.validate();
    const DataMatrix x = spec.standardize ? standardize_columns(raw) : raw;
    FitResult res;
    res.n = x.rows();
    res.d = x.cols();
    res.method = method;
    if (spec.m > x.cols()) throw InvalidInput("m exceeds the number of columns");

    SymMatrix s;
    switch (method) {
        case Method::TP: {
            auto est = pearson(x);
            res.center = est.center;
            s = std::move(est.matrix);
            break;
        }
        case Method::ECA: s = kendall_tau(x).matrix; break;
        default: {
            CenterEstimate c;
            if (spec.center == CenterMethod::Mean) {
                c = coordinate_mean(x);
            } else {
                try {
                    c = spatial_median(x);
                } catch (const NotConverged& e) {
                    c = {e.iterate(), CenterMethod::SpatialMedian, e.iterations(), e.residual(), {}};
                }
            }
            auto est = sscm(x, c);
            res.center = est.center;
            s = std::move(est.matrix);
        }
    }

    std::size_t k = spec.k_grid.empty() ? x.cols() : spec.k_grid.front();
    if (spec.tune) {
        TuneConfig tc = *spec.tune;
        tc.seed = spec.base_seed;
        SparsePCConfig tmpl;
        tmpl.eps = spec.eps;
        tmpl.max_iter = spec.max_iter;
        res.tuning = select_k(x, tc, tmpl, detail::ScatterFor{method});
        k = res.tuning->chosen_k;
    }
    if (k > x.cols()) throw InvalidInput("k exceeds the number of columns");
    std::vector<SparsePCConfig> configs(spec.m);
    for (auto& c : configs) {
        c.k = k;
        c.eps = spec.eps;
        c.max_iter = spec.max_iter;
    }
    bool fell_back = false;
    configs.front().init = detail::init_for(method, spec, s, x.rows(), fell_back);
    res.components = top_m_sparse_pcs(s, configs);

    if (spec.m >= 2) {
        // Scores about the center used by the scatter (column mean for ECA).
        const Vector center = res.center ? res.center->center : coordinate_mean(x).center;
        Vector pc1(x.rows(), 0.0), pc2(x.rows(), 0.0);
        const auto& v1 = res.components.vectors[0].vector;
        const auto& v2 = res.components.vectors[1].vector;
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t j = 0; j < x.cols(); ++j) {
                pc1[i] += (x(i, j) - center[j]) * v1[j];
                pc2[i] += (x(i, j) - center[j]) * v2[j];
            }
        res.leverage = leverage_influence(pc1, pc2);
        res.flagged = flag_leverage(res.leverage, spec.leverage_threshold);
    }
    return res;
}

inline nlohmann::json to_json(const FitResult& r, double leverage_threshold) {
    nlohmann::json j{{"n", r.n}, {"d", r.d}, {"method", to_string(r.method)}};
    j["center"] = r.center ? to_json(*r.center) : nlohmann::json(nullptr);
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : r.components.vectors) comps.push_back(to_json(c));
    j["components"] = std::move(comps);
    if (r.tuning) j["tuning"] = to_json(*r.tuning);
    if (!r.leverage.empty())
        j["leverage"] = {{"threshold", leverage_threshold}, {"h", r.leverage}, {"flagged", r.flagged}};
    return j;
}

// ---------------------------------------------------------------------------

namespace detail {

inline ExperimentReport run_fit_csv(const ExperimentSpec& spec) {
    ExperimentReport rep;
    rep.config = to_json(spec);
    const auto table = read_csv_file(spec.input_path, spec.header);
    nlohmann::json fits = nlohmann::json::array();
    for (Method method : spec.methods) {
        const auto start = std::chrono::steady_clock::now();
        const auto fit = fit_data(table.data, spec, method);
        rep.timings.push_back({"wall_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(),
                               {{"scenario", "fit_csv"}, {"method", to_string(method)}}});
        auto j = to_json(fit, spec.leverage_threshold);
        if (!table.header.empty()) j["columns"] = table.header;
        fits.push_back(std::move(j));
        std::map<std::string, std::string> tags{{"scenario", "fit_csv"}, {"method", to_string(method)},
                                                {"n", std::to_string(fit.n)}, {"d", std::to_string(fit.d)}};
        for (std::size_t r = 0; r < fit.components.vectors.size(); ++r) {
            auto t = tags;
            t["component"] = std::to_string(r + 1);
            t["k"] = std::to_string(fit.components.vectors[r].support.size());
            rep.records.push_back({"rayleigh", fit.components.vectors[r].rayleigh, t});
        }
        if (!fit.leverage.empty()) rep.records.push_back({"flagged_count", static_cast<double>(fit.flagged.size()), tags});
    }
    rep.fit = std::move(fits);
    return rep;
}

inline ExperimentReport run_bench(const ExperimentSpec& spec) {
    ExperimentReport rep;
    rep.config = to_json(spec);
    const std::size_t d = spec.model.dim();
    for (std::size_t ni = 0; ni < spec.n_grid.size(); ++ni) {
        const std::size_t n = spec.n_grid[ni];
        EllipticalModel model = spec.model;
        model.seed = substream_seed(spec.base_seed, ni);
        const DataMatrix x = sample(model, n);
        for (Method method : spec.methods) {
            std::vector<double> times;
            for (std::size_t r = 0; r < spec.bench_repeats; ++r) {
                const auto start = std::chrono::steady_clock::now();
                const SymMatrix s = scatter_for(method, x);
                SparsePCConfig c;
                c.k = spec.k_grid.empty() ? std::min<std::size_t>(d, 10) : std::min(d, spec.k_grid.front());
                bool fell_back = false;
                c.init = init_for(method, spec, s, n, fell_back);
                (void)truncated_power(s, c);
                times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
            }
            std::sort(times.begin(), times.end());
            const double median = times.size() % 2 ? times[times.size() / 2]
                                                   : 0.5 * (times[times.size() / 2 - 1] + times[times.size() / 2]);
            rep.records.push_back({"seconds", median,
                                   {{"scenario", "runtime_bench"}, {"method", to_string(method)},
                                    {"distribution", family_name(spec.model.family)},
                                    {"n", std::to_string(n)}, {"d", std::to_string(d)}}});
        }
    }
    return rep;
}

}  // namespace detail

/// Runs the spec's scenario. Simulation replications run on a thread pool;
/// each draws its data from substream_seed(substream_seed(base_seed, cell),
/// replication), so records depend only on the spec.
inline ExperimentReport run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    if (spec.scenario == Scenario::FitCsv) return detail::run_fit_csv(spec);
    if (spec.scenario == Scenario::RuntimeBench) return detail::run_bench(spec);

    ExperimentReport rep;
    rep.config = to_json(spec);
    const auto cells = detail::expand_cells(spec);
    const std::size_t tasks = cells.size() * spec.replications;
    std::vector<detail::TaskOutput> outputs(tasks);
    detail::parallel_for(tasks, spec.threads, [&](std::size_t t) {
        const std::size_t c = t / spec.replications, r = t % spec.replications;
        outputs[t] = detail::run_replication(spec, cells[c], c, r);
    });
    for (auto& o : outputs) {
        std::move(o.records.begin(), o.records.end(), std::back_inserter(rep.records));
        std::move(o.failures.begin(), o.failures.end(), std::back_inserter(rep.failures));
        std::move(o.timings.begin(), o.timings.end(), std::back_inserter(rep.timings));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// report output

/// Mean, standard deviation and count of every metric grouped by all tags
/// except replication and seed, in first-appearance order.
inline nlohmann::json summarize(const std::vector<MetricRecord>& records) {
    struct Acc {
        nlohmann::json tags;
        std::string name;
        double sum = 0.0, sumsq = 0.0;
        std::size_t count = 0;
    };
    std::vector<Acc> groups;
    std::map<std::string, std::size_t> index;
    for (const auto& r : records) {
        nlohmann::json tags = nlohmann::json::object();
        for (const auto& [k, v] : r.context)
            if (k != "replication" && k != "seed") tags[k] = v;
        const std::string key = r.name + '|' + tags.dump();
        auto [it, inserted] = index.emplace(key, groups.size());
        if (inserted) groups.push_back({tags, r.name});
        auto& g = groups[it->second];
        g.sum += r.value;
        g.sumsq += r.value * r.value;
        ++g.count;
    }
    nlohmann::json out = nlohmann::json::array();
    for (const auto& g : groups) {
        const double n = static_cast<double>(g.count);
        const double mean = g.sum / n;
        const double var = g.count > 1 ? std::max(0.0, (g.sumsq - n * mean * mean) / (n - 1.0)) : 0.0;
        out.push_back({{"metric", g.name}, {"tags", g.tags}, {"count", g.count}, {"mean", mean}, {"sd", std::sqrt(var)}});
    }
    return out;
}

inline nlohmann::json summary_json(const ExperimentReport& r) {
    nlohmann::json j{{"version", r.version}, {"config", r.config}, {"summary", summarize(r.records)}};
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& f : r.failures)
        failures.push_back({{"cell", f.cell}, {"method", f.method}, {"replication", f.replication}, {"message", f.message}});
    j["failures"] = std::move(failures);
    if (!r.fit.is_null()) j["fits"] = r.fit;
    return j;
}

/// Writes records.csv and summary.json (deterministic) and timing.csv
/// (wall clock) into dir.
inline void write_report(const ExperimentReport& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream f(dir / name);
        if (!f) throw InvalidInput("cannot write '" + (dir / name).string() + "'");
        return f;
    };
    {
        auto f = open("records.csv");
        write_metric_csv(f, r.records);
    }
    {
        auto f = open("summary.json");
        f << summary_json(r).dump(2) << '\n';
    }
    auto f = open("timing.csv");
    write_metric_csv(f, r.timings);
}

}  // namespace sspca
