#pragma once
#include <fstream>
#include <ostream>
#include <string>
#include <sdwd/cv.hpp>
#include <sdwd/data.hpp>
#include <sdwd/format.hpp>
#include <sdwd/path.hpp>

namespace sdwd {

enum class CoefScale { standardized, original };

inline CoefScale parse_coef_scale(std::string_view s)
{
    if (s == "standardized") return CoefScale::standardized;
    if (s == "original") return CoefScale::original;
    throw InvalidArgument("unknown coefficient scale '" + std::string(s) + "' (expected standardized or original)");
}

namespace detail {

struct ScaledPoint
{
    double intercept;
    std::vector<Index> index;  // feature index in the output numbering
    std::vector<double> value;
};

inline ScaledPoint scale_point(double b0, const SparseCoefs& c, const Standardizer* s, CoefScale scale)
{
    ScaledPoint out{b0, {}, {}};
    for (std::size_t k = 0; k < c.nnz(); ++k) {
        if (scale == CoefScale::original && s) {
            const Index j = s->retained[static_cast<std::size_t>(c.index[k])];
            const double b = c.value[k] / s->scales[j];
            out.index.push_back(j);
            out.value.push_back(b);
            out.intercept -= b * s->means[j];
        } else {
            out.index.push_back(c.index[k]);
            out.value.push_back(c.value[k]);
        }
    }
    return out;
}

inline std::ofstream open_out(const std::string& path)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write '" + path + "'");
    return os;
}

} // namespace detail

/**
 * Path summary TSV. Lines starting with '#' carry metadata; then a header
 * and one row per grid point: k, lambda1, intercept, nnz, max_kkt_violation.
 * With CoefScale::original and a standardizer the intercept is on the raw scale.
 */
inline void write_path_tsv(const SolutionPath& path, std::ostream& os, const Standardizer* s = nullptr,
                           CoefScale scale = CoefScale::standardized)
{
    os << "# lambda_max\t" << format_double(path.lambda_max) << '\n';
    os << "# lambda_min_ratio\t" << format_double(path.lambda_min_ratio) << '\n';
    os << "# nlambda\t" << path.lambda1_grid.size() << '\n';
    os << "# lambda2\t" << format_double(path.lambda2) << '\n';
    os << "# coef_scale\t" << (scale == CoefScale::original && s ? "original" : "standardized") << '\n';
    os << "k\tlambda1\tintercept\tnnz\tmax_kkt_violation\n";
    for (std::size_t k = 0; k < path.size(); ++k) {
        const auto pt = detail::scale_point(path.intercepts[k], path.coefficients[k], s, scale);
        os << k + 1 << '\t' << format_double(path.lambda1_grid[static_cast<Index>(k)]) << '\t'
           << format_double(pt.intercept) << '\t' << path.nonzero_counts[k] << '\t'
           << format_double(path.kkt_max_violation[k]) << '\n';
    }
}

/// Sparse coefficients as (k, j, value) rows, k and j 1-based.
inline void write_coef_triplets(const SolutionPath& path, std::ostream& os, const Standardizer* s = nullptr,
                                CoefScale scale = CoefScale::standardized)
{
    os << "k\tj\tvalue\n";
    for (std::size_t k = 0; k < path.size(); ++k) {
        const auto pt = detail::scale_point(path.intercepts[k], path.coefficients[k], s, scale);
        for (std::size_t t = 0; t < pt.index.size(); ++t) {
            os << k + 1 << '\t' << pt.index[t] + 1 << '\t' << format_double(pt.value[t]) << '\n';
        }
    }
}

/// One row per (lambda2, lambda1): lambda2, lambda1, mean_error, se, nnz_mean.
inline void write_cv_tsv(const CvResult& r, std::ostream& os)
{
    os << "lambda2\tlambda1\tmean_error\tse\tnnz_mean\n";
    for (Index l = 0; l < r.error_surface.rows(); ++l) {
        const Vector& grid = r.lambda1_grids[static_cast<std::size_t>(l)];
        for (Index k = 0; k < r.error_surface.cols(); ++k) {
            os << format_double(r.lambda2_grid[static_cast<std::size_t>(l)]) << '\t' << format_double(grid[k]) << '\t'
               << format_double(r.error_surface(l, k)) << '\t' << format_double(r.se_surface(l, k)) << '\t'
               << format_double(r.nnz_mean(l, k)) << '\n';
        }
    }
}

inline void write_path_tsv(const SolutionPath& path, const std::string& file, const Standardizer* s = nullptr,
                           CoefScale scale = CoefScale::standardized)
{
    auto os = detail::open_out(file);
    write_path_tsv(path, os, s, scale);
}

inline void write_coef_triplets(const SolutionPath& path, const std::string& file, const Standardizer* s = nullptr,
                                CoefScale scale = CoefScale::standardized)
{
    auto os = detail::open_out(file);
    write_coef_triplets(path, os, s, scale);
}

inline void write_cv_tsv(const CvResult& r, const std::string& file)
{
    auto os = detail::open_out(file);
    write_cv_tsv(r, os);
}

} // namespace sdwd
