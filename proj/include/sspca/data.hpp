#pragma once

// Observation matrix and its headerless/with-header CSV representation.

#include <charconv>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sspca/errors.hpp"
#include "sspca/numerics.hpp"

namespace sspca {

/// n×d observations, rows are observations, stored row-major.
class DataMatrix {
public:
    DataMatrix() = default;
    DataMatrix(std::size_t n, std::size_t d, double fill = 0.0) : n_(n), d_(d), x_(n * d, fill) {}
    DataMatrix(std::size_t n, std::size_t d, Vector values) : n_(n), d_(d), x_(std::move(values)) {
        if (x_.size() != n * d) throw InvalidInput("DataMatrix: value count is not n*d");
    }

    static DataMatrix from_rows(const std::vector<Vector>& rows) {
        if (rows.empty()) return {};
        DataMatrix m(rows.size(), rows.front().size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != m.d_) throw InvalidInput("DataMatrix: ragged rows");
            std::copy(rows[i].begin(), rows[i].end(), m.x_.begin() + static_cast<std::ptrdiff_t>(i * m.d_));
        }
        return m;
    }

    std::size_t rows() const noexcept { return n_; }
    std::size_t cols() const noexcept { return d_; }
    bool empty() const noexcept { return n_ == 0; }

    std::span<const double> row(std::size_t i) const noexcept { return {x_.data() + i * d_, d_}; }
    std::span<double> row(std::size_t i) noexcept { return {x_.data() + i * d_, d_}; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return x_[i * d_ + j]; }
    double& operator()(std::size_t i, std::size_t j) noexcept { return x_[i * d_ + j]; }

    std::span<const double> values() const noexcept { return x_; }

    /// Rows picked by index, in the given order.
    DataMatrix select_rows(std::span<const std::size_t> idx) const {
        DataMatrix out(idx.size(), d_);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            if (idx[i] >= n_) throw InvalidInput("DataMatrix: row index out of range");
            const auto r = row(idx[i]);
            std::copy(r.begin(), r.end(), out.row(i).begin());
        }
        return out;
    }

    /// Throws InvalidInput unless n ≥ 1 and every entry is finite.
    void validate() const {
        if (n_ == 0 || d_ == 0) throw InvalidInput("DataMatrix: needs at least one row and one column");
        if (!all_finite(x_)) throw InvalidInput("DataMatrix: non-finite entry");
    }

    friend bool operator==(const DataMatrix&, const DataMatrix&) = default;

private:
    std::size_t n_ = 0;
    std::size_t d_ = 0;
    Vector x_;
};

// ---------------------------------------------------------------------------
// CSV

/// Shortest decimal text that parses back to exactly x.
inline std::string format_double(double x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace detail

struct CsvTable {
    std::vector<std::string> header;  // empty when the file had none
    DataMatrix data;
};

/// Parses comma-separated numeric rows. With has_header the first line is
/// kept as column names. Blank lines are skipped. Ragged rows, empty or
/// non-numeric cells and non-finite values raise ParseError with the
/// 1-based line and column.
inline CsvTable read_csv(std::istream& in, bool has_header = false) {
    CsvTable table;
    Vector values;
    std::size_t width = 0, nrows = 0, lineno = 0;
    std::string line;
    bool header_pending = has_header;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view text = detail::trim(line);
        if (text.empty()) continue;
        std::vector<std::string_view> cells;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = text.find(',', start);
            cells.push_back(detail::trim(text.substr(start, comma == std::string_view::npos ? text.npos : comma - start)));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (header_pending) {
            for (auto c : cells) table.header.emplace_back(c);
            width = cells.size();
            header_pending = false;
            continue;
        }
        if (width == 0) width = cells.size();
        if (cells.size() != width)
            throw ParseError("CSV: expected " + std::to_string(width) + " cells, found " + std::to_string(cells.size()),
                             lineno);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            std::string_view cell = cells[c];
            if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
            double v = 0.0;
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size())
                throw ParseError("CSV: non-numeric cell '" + std::string(cells[c]) + "'", lineno, c + 1);
            if (!std::isfinite(v)) throw ParseError("CSV: non-finite cell", lineno, c + 1);
            values.push_back(v);
        }
        ++nrows;
    }
    if (nrows == 0) throw ParseError("CSV: no data rows");
    table.data = DataMatrix(nrows, width, std::move(values));
    return table;
}

inline CsvTable read_csv_file(const std::string& path, bool has_header = false) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    return read_csv(in, has_header);
}

inline void write_csv(std::ostream& out, const DataMatrix& x, std::span<const std::string> header = {}) {
    if (!header.empty()) {
        for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
        out << '\n';
    }
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto r = x.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) out << (j ? "," : "") << format_double(r[j]);
        out << '\n';
    }
}

inline void write_csv_file(const std::string& path, const DataMatrix& x, std::span<const std::string> header = {}) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write '" + path + "'");
    write_csv(out, x, header);
}

}  // namespace sspca
