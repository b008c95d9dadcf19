#pragma once

// Choice of the sparsity level k by repeated sample splitting: fit on one
// half, score the fitted direction by its Rayleigh value on the other half.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sspca/data.hpp"
#include "sspca/errors.hpp"
#include "sspca/rng.hpp"
#include "sspca/scatter.hpp"
#include "sspca/sparse_pca.hpp"

namespace sspca {

struct TuneConfig {
    std::vector<std::size_t> candidates;
    std::size_t splits = 10;
    double split_fraction = 0.5;
    std::uint64_t seed = 0;

    void validate(std::size_t d) const {
        if (candidates.empty()) throw InvalidInput("TuneConfig: no candidates");
        for (std::size_t k : candidates)
            if (k < 1 || k > d) throw InvalidInput("TuneConfig: candidate k = " + std::to_string(k) + " outside [1, d]");
        if (splits < 1) throw InvalidInput("TuneConfig: need at least one split");
        if (!(split_fraction > 0.0 && split_fraction < 1.0)) throw InvalidInput("TuneConfig: split_fraction must lie in (0, 1)");
    }
};

struct TuneResult {
    std::size_t chosen_k = 0;
    std::vector<std::size_t> candidates;  // sorted ascending
    std::vector<double> mean_scores;      // NaN for a disqualified candidate
    std::vector<std::size_t> valid_splits;
    /// scores[l][c]: validation Rayleigh value of candidate c on split l;
    /// empty when that fit failed.
    std::vector<std::vector<std::optional<double>>> scores;
};

/// SSCM about the sample's own spatial median.
struct SscmScatter {
    SymMatrix operator()(const DataMatrix& x) const { return sscm(x).matrix; }
};

namespace detail {

inline std::size_t first_half_size(std::size_t n, double fraction) {
    const auto n1 = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    return std::clamp<std::size_t>(n1, 2, n - 2);
}

}  // namespace detail

/// Each split is a seeded random partition of the rows. Both halves get
/// their own scatter estimate (by default SSCM with its own spatial median).
/// A (split, k) fit that throws is recorded as missing; a candidate with
/// more than B/2 missing splits is disqualified. The chosen k maximizes the
/// mean score over the valid splits, ties going to the smallest k.
template <class ScatterFn = SscmScatter>
TuneResult select_k(const DataMatrix& x, const TuneConfig& cfg, const SparsePCConfig& pc_template,
                    ScatterFn scatter = {}) {
    x.validate();
    if (x.rows() < 4) throw InvalidInput("select_k: needs at least four rows");
    cfg.validate(x.cols());

    TuneResult res;
    res.candidates = cfg.candidates;
    std::sort(res.candidates.begin(), res.candidates.end());
    res.candidates.erase(std::unique(res.candidates.begin(), res.candidates.end()), res.candidates.end());
    const std::size_t nc = res.candidates.size();
    const std::size_t n1 = detail::first_half_size(x.rows(), cfg.split_fraction);

    res.scores.assign(cfg.splits, std::vector<std::optional<double>>(nc));
    for (std::size_t l = 0; l < cfg.splits; ++l) {
        CounterRng rng(substream_seed(cfg.seed, l));
        const auto perm = random_permutation(x.rows(), rng);
        std::vector<std::size_t> a(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n1));
        std::vector<std::size_t> b(perm.begin() + static_cast<std::ptrdiff_t>(n1), perm.end());
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        SymMatrix s_fit, s_val;
        try {
            s_fit = scatter(x.select_rows(a));
            s_val = scatter(x.select_rows(b));
        } catch (const Error&) {
            continue;
        }
        for (std::size_t c = 0; c < nc; ++c) {
            SparsePCConfig pc = pc_template;
            pc.k = res.candidates[c];
            try {
                const auto fit = truncated_power(s_fit, pc);
                res.scores[l][c] = s_val.quadratic_form(fit.vector);
            } catch (const Error&) {
            }
        }
    }

    res.mean_scores.assign(nc, std::numeric_limits<double>::quiet_NaN());
    res.valid_splits.assign(nc, 0);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < nc; ++c) {
        double sum = 0.0;
        for (std::size_t l = 0; l < cfg.splits; ++l)
            if (res.scores[l][c]) {
                sum += *res.scores[l][c];
                ++res.valid_splits[c];
            }
        const std::size_t invalid = cfg.splits - res.valid_splits[c];
        if (2 * invalid > cfg.splits || res.valid_splits[c] == 0) continue;
        res.mean_scores[c] = sum / static_cast<double>(res.valid_splits[c]);
        if (res.mean_scores[c] > best) {
            best = res.mean_scores[c];
            res.chosen_k = res.candidates[c];
        }
    }
    if (res.chosen_k == 0) throw NotConverged("select_k: every candidate was disqualified", {}, 0.0, cfg.splits);
    return res;
}

inline nlohmann::json to_json(const TuneResult& r) {
    nlohmann::json table = nlohmann::json::array();
    for (std::size_t c = 0; c < r.candidates.size(); ++c) {
        nlohmann::json row{{"k", r.candidates[c]}, {"valid_splits", r.valid_splits[c]}};
        row["mean_score"] = std::isnan(r.mean_scores[c]) ? nlohmann::json(nullptr) : nlohmann::json(r.mean_scores[c]);
        nlohmann::json per = nlohmann::json::array();
        for (const auto& split : r.scores) per.push_back(split[c] ? nlohmann::json(*split[c]) : nlohmann::json(nullptr));
        row["split_scores"] = std::move(per);
        table.push_back(std::move(row));
    }
    return {{"chosen_k", r.chosen_k}, {"score_table", std::move(table)}};
}

/// k,mean_score,valid_splits; a disqualified candidate has an empty score.
inline void write_score_table_csv(std::ostream& out, const TuneResult& r) {
    out << "k,mean_score,valid_splits\n";
    for (std::size_t c = 0; c < r.candidates.size(); ++c)
        out << r.candidates[c] << ',' << (std::isnan(r.mean_scores[c]) ? std::string() : format_double(r.mean_scores[c]))
            << ',' << r.valid_splits[c] << '\n';
}

struct ScoreRow {
    std::size_t k = 0;
    std::optional<double> mean_score;
    std::size_t valid_splits = 0;

    friend bool operator==(const ScoreRow&, const ScoreRow&) = default;
};

inline std::vector<ScoreRow> read_score_table_csv(std::istream& in) {
    std::vector<ScoreRow> rows;
    std::string line;
    std::size_t lineno = 0;
    auto parse_uint = [&](std::string_view cell, std::size_t col) {
        std::size_t v = 0;
        const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size())
            throw ParseError("score table: bad integer '" + std::string(cell) + "'", lineno, col);
        return v;
    };
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view text = detail::trim(line);
        if (text.empty()) continue;
        if (lineno == 1) {
            if (text != "k,mean_score,valid_splits") throw ParseError("score table: unexpected header", 1);
            continue;
        }
        const auto c1 = text.find(','), c2 = c1 == text.npos ? text.npos : text.find(',', c1 + 1);
        if (c2 == text.npos || text.find(',', c2 + 1) != text.npos) throw ParseError("score table: expected 3 cells", lineno);
        ScoreRow r;
        r.k = parse_uint(text.substr(0, c1), 1);
        const auto score = text.substr(c1 + 1, c2 - c1 - 1);
        if (!score.empty()) {
            double v = 0.0;
            const auto res = std::from_chars(score.data(), score.data() + score.size(), v);
            if (res.ec != std::errc() || res.ptr != score.data() + score.size())
                throw ParseError("score table: bad score '" + std::string(score) + "'", lineno, 2);
            r.mean_score = v;
        }
        r.valid_splits = parse_uint(text.substr(c2 + 1), 3);
        rows.push_back(r);
    }
    return rows;
}

}  // namespace sspca
