#pragma once
#include <cmath>
#include <cstdint>
#include <string>
#include <Eigen/Cholesky>
#include <sdwd/data.hpp>
#include <sdwd/rng.hpp>

namespace sdwd {

/**
 * Simulation designs. Classes are N(+mu, S) and N(-mu, S) with equal sizes.
 *  1: mu = (2.2, 0, ...), S = I.
 *  2: as 1, except 20% of each class uses mu = (100, 500, 0, ...).
 *  3: mu = 0.7 on the first five coordinates, S = I.
 *  4: as 3, with the first 5x5 block of S equicorrelated at 0.7.
 *  5: as 3, with the first 5x5 block of S having entries 0.7^|i-j|.
 */
struct SimSpec
{
    int example_id = 1;
    Index p = 300;
    Index n_train = 50;
    Index n_valid = 50;
    Index n_test = 10000;
    std::uint64_t seed = 1;

    void validate() const
    {
        if (example_id < 1 || example_id > 5) {
            throw InvalidArgument("simulate: example must be 1..5, got " + std::to_string(example_id));
        }
        const Index min_p = example_id >= 3 ? 5 : 2;
        if (p < min_p) throw InvalidArgument("simulate: example " + std::to_string(example_id) + " needs p >= " + std::to_string(min_p));
        for (Index c : {n_train, n_valid, n_test}) {
            if (c < 2 || c % 2 != 0) throw InvalidArgument("simulate: split sizes must be even and >= 2");
        }
    }
};

struct SimData
{
    Dataset train;
    Dataset valid;
    Dataset test;
};

/// Number of leading coordinates that carry signal.
inline Index signal_size(int example_id) { return example_id <= 2 ? 1 : 5; }

namespace detail {

inline Matrix block_covariance(int example_id)
{
    Matrix s = Matrix::Identity(5, 5);
    for (Index i = 0; i < 5; ++i) {
        for (Index j = 0; j < 5; ++j) {
            if (i == j) continue;
            if (example_id == 4) s(i, j) = 0.7;
            if (example_id == 5) s(i, j) = std::pow(0.7, static_cast<double>(std::abs(i - j)));
        }
    }
    return s;
}

inline Vector mean_vector(int example_id)
{
    Vector mu = Vector::Zero(5);
    if (example_id <= 2) mu[0] = 2.2;
    else mu.setConstant(0.7);
    return mu;
}

inline Dataset draw_split(const SimSpec& spec, Index count, Rng& rng)
{
    Dataset d;
    d.x.resize(count, spec.p);
    d.y.resize(count);
    const Index half = count / 2;
    const bool correlated = spec.example_id >= 4;
    const Matrix chol = correlated ? Matrix(block_covariance(spec.example_id).llt().matrixL()) : Matrix();
    const Vector mu = mean_vector(spec.example_id);
    const Index outliers = spec.example_id == 2 ? static_cast<Index>(std::llround(0.2 * static_cast<double>(half))) : 0;
    Vector e(5);
    for (Index i = 0; i < count; ++i) {
        const bool positive = i < half;
        const double sign = positive ? 1.0 : -1.0;
        const Index rank = positive ? i : i - half;
        d.y[i] = sign;
        for (Index j = 0; j < spec.p; ++j) d.x(i, j) = rng.gaussian();
        if (correlated) {
            e = d.x.row(i).head(5).transpose();
            d.x.row(i).head(5) = (chol * e).transpose();
        }
        if (rank < outliers) {
            d.x(i, 0) += sign * 100.0;
            d.x(i, 1) += sign * 500.0;
        } else {
            const Index m = std::min<Index>(5, spec.p);
            for (Index j = 0; j < m; ++j) d.x(i, j) += sign * mu[j];
        }
    }
    d.feature_names.reserve(static_cast<std::size_t>(spec.p));
    for (Index j = 0; j < spec.p; ++j) d.feature_names.push_back("x" + std::to_string(j + 1));
    return d;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

} // namespace detail

/**
 * Draws train, validation and test splits in that order from one generator
 * seeded with spec.seed. Within a split the positive half comes first. In
 * example 2 the first round(0.2 * half) rows of each class are outliers.
 */
inline SimData generate(const SimSpec& spec)
{
    spec.validate();
    Rng rng(spec.seed);
    SimData out;
    out.train = detail::draw_split(spec, spec.n_train, rng);
    out.valid = detail::draw_split(spec, spec.n_valid, rng);
    out.test = detail::draw_split(spec, spec.n_test, rng);
    return out;
}

/**
 * Phi(-sqrt(mu' S^-1 mu)) for classes N(+-mu, S). Example 2 is a mixture
 * with no closed form; its tabulated value 0.0111 is returned.
 */
inline double bayes_error(int example_id, Index p = 300)
{
    SimSpec s;
    s.example_id = example_id;
    s.p = p;
    s.validate();
    if (example_id == 2) return 0.0111;
    const Vector mu = detail::mean_vector(example_id);
    double q;
    if (example_id == 4) {
        // (1 - r) I + r 11' has 1' S^-1 1 = k / (1 + (k - 1) r).
        const double a = 0.7, r = 0.7, k = 5.0;
        q = a * a * k / (1.0 + (k - 1.0) * r);
    } else {
        q = mu.dot(detail::block_covariance(example_id).ldlt().solve(mu));
    }
    return detail::normal_cdf(-std::sqrt(q));
}

} // namespace sdwd
