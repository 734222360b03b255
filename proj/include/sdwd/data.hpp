#pragma once
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>
#include <Eigen/Dense>
#include <sdwd/error.hpp>
#include <sdwd/format.hpp>

namespace sdwd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/**
 * Design matrix with +-1 labels.
 *
 * x is n x p, column-major (coordinate descent sweeps columns).
 * label_names, when set, holds the original label strings for -1 and +1.
 */
struct Dataset
{
    Matrix x;
    Vector y;
    std::vector<std::string> feature_names;
    std::vector<std::string> label_names;
    bool standardized = false;

    Index n() const noexcept { return x.rows(); }
    Index p() const noexcept { return x.cols(); }

    Index count_positive() const { return static_cast<Index>((y.array() > 0).count()); }
    Index count_negative() const { return n() - count_positive(); }

    /// Shape, label and finiteness checks.
    void validate() const
    {
        if (y.size() != x.rows()) {
            throw DataError("dataset: label count does not match row count");
        }
        for (Index i = 0; i < y.size(); ++i) {
            if (y[i] != 1.0 && y[i] != -1.0) {
                throw DataError("dataset: labels must be -1 or +1");
            }
        }
        if (!x.allFinite()) {
            throw DataError("dataset: non-finite feature value");
        }
        if (!feature_names.empty() && static_cast<Index>(feature_names.size()) != x.cols()) {
            throw DataError("dataset: feature name count does not match column count");
        }
    }

    /// Additionally requires n >= 2 and both classes present.
    void validate_for_fit() const
    {
        validate();
        if (n() < 2) throw DataError("dataset: need at least 2 rows");
        if (count_positive() == 0 || count_negative() == 0) {
            throw DataError("dataset: both classes must be present");
        }
    }

    Dataset rows(const std::vector<Index>& idx) const
    {
        Dataset out;
        out.x.resize(static_cast<Index>(idx.size()), p());
        out.y.resize(static_cast<Index>(idx.size()));
        for (std::size_t r = 0; r < idx.size(); ++r) {
            out.x.row(static_cast<Index>(r)) = x.row(idx[r]);
            out.y[static_cast<Index>(r)] = y[idx[r]];
        }
        out.feature_names = feature_names;
        out.label_names = label_names;
        out.standardized = standardized;
        return out;
    }
};

/**
 * Per-feature centering and scaling learned on training data.
 *
 * scales are root-mean-square after centering with divisor n. Constant
 * columns are listed in `dropped` and removed from the output.
 */
struct Standardizer
{
    Vector means;
    Vector scales;
    std::vector<Index> dropped;
    std::vector<Index> retained;

    Index input_dim() const noexcept { return means.size(); }
    Index output_dim() const noexcept { return static_cast<Index>(retained.size()); }

    static Standardizer identity(Index p)
    {
        Standardizer s;
        s.means = Vector::Zero(p);
        s.scales = Vector::Ones(p);
        s.retained.resize(static_cast<std::size_t>(p));
        for (Index j = 0; j < p; ++j) s.retained[static_cast<std::size_t>(j)] = j;
        return s;
    }
};

/**
 * Standardizes a single row (any compile-time vector) or a matrix whose
 * rows are observations. Rows come back as a column Vector.
 */
template <class Derived>
auto apply_standardizer(const Standardizer& s, const Eigen::MatrixBase<Derived>& raw)
{
    if constexpr (Derived::IsVectorAtCompileTime) {
        if (raw.size() != s.input_dim()) {
            throw InvalidArgument("apply_standardizer: row has " + std::to_string(raw.size())
                                  + " features, expected " + std::to_string(s.input_dim()));
        }
        Vector out(s.output_dim());
        for (Index k = 0; k < out.size(); ++k) {
            const Index j = s.retained[static_cast<std::size_t>(k)];
            out[k] = (raw(j) - s.means[j]) / s.scales[j];
        }
        return out;
    } else {
        if (raw.cols() != s.input_dim()) {
            throw InvalidArgument("apply_standardizer: column count mismatch");
        }
        Matrix out(raw.rows(), s.output_dim());
        for (Index k = 0; k < out.cols(); ++k) {
            const Index j = s.retained[static_cast<std::size_t>(k)];
            out.col(k) = (raw.col(j).array() - s.means[j]) / s.scales[j];
        }
        return out;
    }
}

/// Applies a fitted standardizer to a whole dataset (e.g. a test split).
inline Dataset apply_standardizer(const Standardizer& s, const Dataset& raw)
{
    Dataset out;
    out.x = apply_standardizer(s, raw.x);
    out.y = raw.y;
    out.label_names = raw.label_names;
    if (!raw.feature_names.empty()) {
        for (Index j : s.retained) out.feature_names.push_back(raw.feature_names[static_cast<std::size_t>(j)]);
    }
    out.standardized = true;
    return out;
}

struct Standardized
{
    Dataset data;
    Standardizer standardizer;
};

/// Centers every column and scales it to (1/n) sum x_ij^2 = 1; drops constant columns.
inline Standardized standardize(const Dataset& raw)
{
    const Index n = raw.n();
    const Index p = raw.p();
    if (n < 2) throw DataError("standardize: need at least 2 rows");
    if (!raw.x.allFinite()) throw DataError("standardize: non-finite feature value");

    Standardizer s;
    s.means = Vector::Zero(p);
    s.scales = Vector::Zero(p);
    for (Index j = 0; j < p; ++j) {
        const auto col = raw.x.col(j);
        const bool constant = (col.array() == col[0]).all();
        if (constant) {
            s.means[j] = col[0];
            s.dropped.push_back(j);
            continue;
        }
        const double mean = col.mean();
        const double ms = (col.array() - mean).square().sum() / static_cast<double>(n);
        if (!(ms > 0)) {
            s.means[j] = mean;
            s.dropped.push_back(j);
            continue;
        }
        s.means[j] = mean;
        s.scales[j] = std::sqrt(ms);
        s.retained.push_back(j);
    }
    if (s.retained.empty()) {
        throw DataError("standardize: every feature column is constant");
    }
    Standardized out{apply_standardizer(s, raw), std::move(s)};
    return out;
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline std::string unquote(std::string_view s)
{
    s = trim(s);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return std::string(s);
}

// Maps two distinct label strings to -1/+1. Numeric labels compare by value,
// anything else lexicographically; the smaller one becomes -1.
inline std::vector<std::string> order_labels(const std::vector<std::string>& distinct)
{
    std::vector<std::string> sorted = distinct;
    double a, b;
    const bool numeric = try_parse_double(sorted[0], a) && try_parse_double(sorted[1], b);
    if (numeric) {
        if (b < a) std::swap(sorted[0], sorted[1]);
    } else {
        std::sort(sorted.begin(), sorted.end());
    }
    return sorted;
}

inline Vector encode_labels(const std::vector<std::string>& labels, std::vector<std::string>& names,
                            const std::string& context)
{
    std::vector<std::string> distinct;
    for (const auto& l : labels) {
        if (std::find(distinct.begin(), distinct.end(), l) == distinct.end()) distinct.push_back(l);
        if (distinct.size() > 2) break;
    }
    if (distinct.size() != 2) {
        throw DataError(context + ": label column must contain exactly two distinct values, found "
                        + (distinct.size() > 2 ? std::string("more than 2") : std::to_string(distinct.size())));
    }
    names = order_labels(distinct);
    Vector y(static_cast<Index>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        y[static_cast<Index>(i)] = labels[i] == names[0] ? -1.0 : 1.0;
    }
    return y;
}

} // namespace detail

/**
 * Reads a comma-separated file. label_column < 0 counts from the end
 * (-1 = last column). Labels are mapped to -1/+1 with the smaller value
 * (numeric order if both parse as numbers, else lexicographic) as -1.
 */
inline Dataset read_csv(const std::string& path, int label_column = -1, bool has_header = true)
{
    std::ifstream in(path);
    if (!in) throw DataError("read_csv: cannot open '" + path + "'");

    Dataset d;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> labels;
    std::size_t width = 0;
    std::size_t label_idx = 0;
    std::string line;
    std::size_t line_no = 0;
    bool first = true;

    auto resolve_label = [&](std::size_t cols) {
        const long idx = label_column < 0 ? static_cast<long>(cols) + label_column : label_column;
        if (idx < 0 || idx >= static_cast<long>(cols)) {
            throw DataError("read_csv: label column " + std::to_string(label_column) + " out of range");
        }
        return static_cast<std::size_t>(idx);
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = detail::split(line, ',');
        const std::string where = path + ":" + std::to_string(line_no);
        if (first) {
            width = cells.size();
            if (width < 2) throw DataError(where + ": need a label column and at least one feature");
            label_idx = resolve_label(width);
            first = false;
            if (has_header) {
                for (std::size_t c = 0; c < cells.size(); ++c) {
                    if (c != label_idx) header.push_back(detail::unquote(cells[c]));
                }
                continue;
            }
        }
        if (cells.size() != width) {
            throw DataError(where + ": expected " + std::to_string(width) + " fields, found "
                            + std::to_string(cells.size()));
        }
        std::vector<double> row;
        row.reserve(width - 1);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c == label_idx) {
                labels.push_back(detail::unquote(cells[c]));
            } else {
                const double v = parse_double(cells[c], where);
                if (!std::isfinite(v)) throw DataError(where + ": non-finite feature value");
                row.push_back(v);
            }
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("read_csv: '" + path + "' has no data rows");

    d.x.resize(static_cast<Index>(rows.size()), static_cast<Index>(width - 1));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            d.x(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
        }
    }
    d.y = detail::encode_labels(labels, d.label_names, "read_csv: '" + path + "'");
    d.feature_names = std::move(header);
    return d;
}

/// Reads a comma-separated file of features only (no label column); y is left empty.
inline Dataset read_csv_features(const std::string& path, bool has_header = true)
{
    std::ifstream in(path);
    if (!in) throw DataError("read_csv: cannot open '" + path + "'");
    Dataset d;
    std::vector<std::vector<double>> rows;
    std::size_t width = 0;
    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = detail::split(line, ',');
        const std::string where = path + ":" + std::to_string(line_no);
        if (first) {
            width = cells.size();
            first = false;
            if (has_header) {
                for (const auto& c : cells) d.feature_names.push_back(detail::unquote(c));
                continue;
            }
        }
        if (cells.size() != width) {
            throw DataError(where + ": expected " + std::to_string(width) + " fields, found "
                            + std::to_string(cells.size()));
        }
        std::vector<double> row;
        for (const auto& c : cells) {
            const double v = parse_double(c, where);
            if (!std::isfinite(v)) throw DataError(where + ": non-finite feature value");
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("read_csv: '" + path + "' has no data rows");
    d.x.resize(static_cast<Index>(rows.size()), static_cast<Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < width; ++j) d.x(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
    return d;
}

/**
 * Reads "label idx:val idx:val ..." records (1-based, strictly increasing
 * indices). Missing entries are zero; p is the largest index seen unless
 * min_features is larger.
 */
inline Dataset read_sparse(const std::string& path, Index min_features = 0)
{
    std::ifstream in(path);
    if (!in) throw DataError("read_sparse: cannot open '" + path + "'");

    struct Entry
    {
        Index row, col;
        double value;
    };
    std::vector<Entry> entries;
    std::vector<std::string> labels;
    Index p = min_features;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view body = line;
        if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
        if (trim(body).empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        std::istringstream tokens{std::string(body)};
        std::string tok;
        tokens >> tok;
        double label_value;
        if (!try_parse_double(tok, label_value)) throw DataError(where + ": malformed label '" + tok + "'");
        const Index row = static_cast<Index>(labels.size());
        labels.push_back(format_double(label_value));
        Index last = 0;
        while (tokens >> tok) {
            const auto colon = tok.find(':');
            if (colon == std::string::npos) throw DataError(where + ": malformed token '" + tok + "'");
            Index idx;
            if (!try_parse_int(std::string_view(tok).substr(0, colon), idx) || idx < 1) {
                throw DataError(where + ": bad feature index in '" + tok + "'");
            }
            if (idx <= last) throw DataError(where + ": feature indices must be strictly increasing");
            last = idx;
            double v;
            if (!try_parse_double(std::string_view(tok).substr(colon + 1), v) || !std::isfinite(v)) {
                throw DataError(where + ": bad feature value in '" + tok + "'");
            }
            entries.push_back({row, idx - 1, v});
            p = std::max(p, idx);
        }
    }
    if (labels.empty()) throw DataError("read_sparse: '" + path + "' has no records");

    Dataset d;
    d.x = Matrix::Zero(static_cast<Index>(labels.size()), p);
    for (const auto& e : entries) d.x(e.row, e.col) = e.value;
    d.y = detail::encode_labels(labels, d.label_names, "read_sparse: '" + path + "'");
    return d;
}

/// Writes features then the label as the last column, with a header row.
inline void write_csv(const Dataset& d, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw DataError("write_csv: cannot open '" + path + "'");
    for (Index j = 0; j < d.p(); ++j) {
        out << (d.feature_names.empty() ? "x" + std::to_string(j + 1) : d.feature_names[static_cast<std::size_t>(j)])
            << ',';
    }
    out << "label\n";
    for (Index i = 0; i < d.n(); ++i) {
        for (Index j = 0; j < d.p(); ++j) out << format_double(d.x(i, j)) << ',';
        if (d.label_names.size() == 2) {
            out << d.label_names[d.y[i] > 0 ? 1 : 0] << '\n';
        } else {
            out << (d.y[i] > 0 ? "1" : "-1") << '\n';
        }
    }
    if (!out) throw DataError("write_csv: write failed for '" + path + "'");
}

} // namespace sdwd
