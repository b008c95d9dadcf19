#pragma once

// Synthetic elliptical data over the spiked sparse covariance model.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sspca/data.hpp"
#include "sspca/errors.hpp"
#include "sspca/numerics.hpp"
#include "sspca/rng.hpp"

namespace sspca {

struct Spike {
    double omega = 0.0;   // eigenvalue
    std::size_t s = 0;    // support size of the eigenvector
};

/// Σ = Σ_j (ω_j − ω_tail) v_j v_jᵀ + ω_tail I, where v_j is 1/√s_j on the
/// j-th consecutive block of s_j coordinates.
struct SpikedCovarianceSpec {
    std::size_t d = 0;
    std::vector<Spike> spikes;
    double omega_tail = 1.0;

    void validate() const {
        if (d == 0) throw InvalidSpec("spiked model: d must be >= 1");
        if (!(omega_tail > 0.0)) throw InvalidSpec("spiked model: omega_tail must be > 0");
        std::size_t used = 0;
        for (std::size_t j = 0; j < spikes.size(); ++j) {
            if (spikes[j].s == 0) throw InvalidSpec("spiked model: spike cardinality must be >= 1");
            if (!(spikes[j].omega > omega_tail)) throw InvalidSpec("spiked model: spike eigenvalues must exceed omega_tail");
            if (j > 0 && !(spikes[j - 1].omega > spikes[j].omega))
                throw InvalidSpec("spiked model: spike eigenvalues must be strictly decreasing");
            used += spikes[j].s;
        }
        if (used > d) throw InvalidSpec("spiked model: spike supports overlap (sum of s_j exceeds d)");
    }
};

struct SpikedSigma {
    SymMatrix sigma;
    std::vector<Vector> eigenvectors;  // v_1..v_m
};

inline std::vector<Vector> spike_eigenvectors(const SpikedCovarianceSpec& spec) {
    spec.validate();
    std::vector<Vector> vs;
    std::size_t offset = 0;
    for (const auto& sp : spec.spikes) {
        Vector v(spec.d, 0.0);
        const double w = 1.0 / std::sqrt(static_cast<double>(sp.s));
        for (std::size_t k = 0; k < sp.s; ++k) v[offset + k] = w;
        offset += sp.s;
        vs.push_back(std::move(v));
    }
    return vs;
}

inline SpikedSigma build_spiked_sigma(const SpikedCovarianceSpec& spec) {
    auto vs = spike_eigenvectors(spec);
    SymMatrix sigma = spec.omega_tail * SymMatrix::identity(spec.d);
    for (std::size_t j = 0; j < vs.size(); ++j) sigma += (spec.spikes[j].omega - spec.omega_tail) * SymMatrix::outer(vs[j]);
    return {std::move(sigma), std::move(vs)};
}

// ---------------------------------------------------------------------------
// elliptical families

struct Gaussian {};

/// Multivariate t, rescaled by √((df−2)/df) so its covariance equals Σ.
struct StudentT {
    double df = 3.0;
};

/// κ·N(0,Σ) + (1−κ)·N(0, inflation·Σ), rescaled by 1/√(κ + inflation·(1−κ)).
struct MixtureNormal {
    double kappa = 0.8;
    double inflation = 9.0;
};

using Family = std::variant<Gaussian, StudentT, MixtureNormal>;

struct EllipticalModel {
    Vector mu;  // empty means the origin
    std::variant<SpikedCovarianceSpec, SymMatrix> scatter;
    Family family = Gaussian{};
    std::uint64_t seed = 0;

    std::size_t dim() const {
        return std::visit([](const auto& s) {
            if constexpr (std::is_same_v<std::decay_t<decltype(s)>, SymMatrix>)
                return s.dim();
            else
                return s.d;
        }, scatter);
    }

    SymMatrix sigma() const {
        if (auto* spec = std::get_if<SpikedCovarianceSpec>(&scatter)) return build_spiked_sigma(*spec).sigma;
        return std::get<SymMatrix>(scatter);
    }

    void validate() const {
        if (auto* spec = std::get_if<SpikedCovarianceSpec>(&scatter)) spec->validate();
        if (!mu.empty() && mu.size() != dim()) throw InvalidSpec("model: mu has the wrong dimension");
        if (auto* t = std::get_if<StudentT>(&family); t && !(t->df > 2.0))
            throw InvalidSpec("model: StudentT needs df > 2 for the covariance standardization");
        if (auto* mix = std::get_if<MixtureNormal>(&family)) {
            if (!(mix->kappa >= 0.0 && mix->kappa <= 1.0)) throw InvalidSpec("model: mixture kappa must be in [0,1]");
            if (!(mix->inflation > 0.0)) throw InvalidSpec("model: mixture inflation must be > 0");
        }
    }
};

namespace detail {

// Applies Σ^{1/2} to z.
class SqrtFactor {
public:
    explicit SqrtFactor(const EllipticalModel& model) {
        if (auto* spec = std::get_if<SpikedCovarianceSpec>(&model.scatter)) {
            spiked_ = true;
            tail_sqrt_ = std::sqrt(spec->omega_tail);
            vectors_ = spike_eigenvectors(*spec);
            for (const auto& sp : spec->spikes) coef_.push_back(std::sqrt(sp.omega) - tail_sqrt_);
        } else {
            const auto& sigma = std::get<SymMatrix>(model.scatter);
            SymMatrix root(sigma.dim());
            for (const auto& p : sym_eigen(sigma))
                root += std::sqrt(std::max(p.value, 0.0)) * SymMatrix::outer(p.vector);
            root_ = std::move(root);
        }
    }

    void apply(std::span<const double> z, std::span<double> out) const {
        if (spiked_) {
            for (std::size_t i = 0; i < z.size(); ++i) out[i] = tail_sqrt_ * z[i];
            for (std::size_t j = 0; j < vectors_.size(); ++j) {
                const double c = coef_[j] * dot(vectors_[j], z);
                for (std::size_t i = 0; i < z.size(); ++i) out[i] += c * vectors_[j][i];
            }
        } else {
            for (std::size_t i = 0; i < z.size(); ++i) out[i] = dot(root_->row(i), z);
        }
    }

private:
    bool spiked_ = false;
    double tail_sqrt_ = 0.0;
    std::vector<Vector> vectors_;
    Vector coef_;
    std::optional<SymMatrix> root_;
};

}  // namespace detail

/// n draws from the model. Gaussian directions come from substream 1 of the
/// model seed and the radial scale variable from substream 2, so families
/// that share a Gaussian core (e.g. MixtureNormal with κ=1) produce
/// bit-identical output for the same seed.
inline DataMatrix sample(const EllipticalModel& model, std::size_t n) {
    if (n == 0) throw InvalidInput("sample: n must be >= 1");
    model.validate();
    const std::size_t d = model.dim();
    const detail::SqrtFactor factor(model);

    CounterRng gauss_rng(substream_seed(model.seed, 1));
    CounterRng scale_rng(substream_seed(model.seed, 2));
    std::normal_distribution<double> normal;

    DataMatrix x(n, d);
    Vector z(d), y(d);
    for (std::size_t i = 0; i < n; ++i) {
        for (double& zi : z) zi = normal(gauss_rng);
        factor.apply(z, y);
        const double scale = std::visit(
            [&](const auto& fam) -> double {
                using F = std::decay_t<decltype(fam)>;
                if constexpr (std::is_same_v<F, Gaussian>) {
                    return 1.0;
                } else if constexpr (std::is_same_v<F, StudentT>) {
                    std::chi_squared_distribution<double> chi2(fam.df);
                    const double w = chi2(scale_rng) / fam.df;
                    return 1.0 / std::sqrt(w) / std::sqrt(fam.df / (fam.df - 2.0));
                } else {
                    const bool core = scale_rng.uniform() < fam.kappa;
                    return (core ? 1.0 : std::sqrt(fam.inflation)) /
                           std::sqrt(fam.kappa + fam.inflation * (1.0 - fam.kappa));
                }
            },
            model.family);
        auto row = x.row(i);
        for (std::size_t j = 0; j < d; ++j) row[j] = (model.mu.empty() ? 0.0 : model.mu[j]) + y[j] * scale;
    }
    return x;
}

// ---------------------------------------------------------------------------
// JSON

inline std::string family_name(const Family& f) {
    switch (f.index()) {
        case 0: return "gaussian";
        case 1: return "student_t";
        default: return "mixture_normal";
    }
}

inline nlohmann::json to_json(const Family& f) {
    nlohmann::json j{{"type", family_name(f)}};
    if (auto* t = std::get_if<StudentT>(&f)) j["df"] = t->df;
    if (auto* m = std::get_if<MixtureNormal>(&f)) {
        j["kappa"] = m->kappa;
        j["inflation"] = m->inflation;
    }
    return j;
}

inline Family family_from_json(const nlohmann::json& j) {
    const std::string type = j.is_string() ? j.get<std::string>() : j.at("type").get<std::string>();
    if (type == "gaussian" || type == "I") return Gaussian{};
    if (type == "student_t" || type == "II")
        return StudentT{j.is_object() ? j.value("df", 3.0) : 3.0};
    if (type == "mixture_normal" || type == "III")
        return MixtureNormal{j.is_object() ? j.value("kappa", 0.8) : 0.8, j.is_object() ? j.value("inflation", 9.0) : 9.0};
    throw InvalidSpec("unknown family '" + type + "'");
}

inline nlohmann::json to_json(const EllipticalModel& m) {
    nlohmann::json j;
    j["d"] = m.dim();
    if (!m.mu.empty()) j["mu"] = m.mu;
    if (auto* spec = std::get_if<SpikedCovarianceSpec>(&m.scatter)) {
        j["spikes"] = nlohmann::json::array();
        for (const auto& sp : spec->spikes) j["spikes"].push_back({{"omega", sp.omega}, {"s", sp.s}});
        j["omega_tail"] = spec->omega_tail;
    } else {
        const auto& sigma = std::get<SymMatrix>(m.scatter);
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t i = 0; i < sigma.dim(); ++i) {
            const auto r = sigma.row(i);
            rows.push_back(Vector(r.begin(), r.end()));
        }
        j["sigma"] = rows;
    }
    j["family"] = to_json(m.family);
    j["seed"] = m.seed;
    return j;
}

inline EllipticalModel model_from_json(const nlohmann::json& j) {
    try {
        EllipticalModel m;
        if (j.contains("sigma")) {
            const auto rows = j.at("sigma").get<std::vector<Vector>>();
            Vector flat;
            for (const auto& r : rows) {
                if (r.size() != rows.size()) throw InvalidSpec("model: sigma must be square");
                flat.insert(flat.end(), r.begin(), r.end());
            }
            m.scatter = SymMatrix::from_dense(rows.size(), flat);
        } else {
            SpikedCovarianceSpec spec;
            spec.d = j.at("d").get<std::size_t>();
            spec.omega_tail = j.value("omega_tail", 1.0);
            for (const auto& sp : j.value("spikes", nlohmann::json::array()))
                spec.spikes.push_back({sp.at("omega").get<double>(), sp.at("s").get<std::size_t>()});
            m.scatter = spec;
        }
        if (j.contains("mu")) m.mu = j.at("mu").get<Vector>();
        if (j.contains("family")) m.family = family_from_json(j.at("family"));
        m.seed = j.value("seed", std::uint64_t{0});
        m.validate();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidSpec(std::string("model JSON: ") + e.what());
    }
}

}  // namespace sspca
