#pragma once
#include <cmath>
#include <string>
#include <sdwd/error.hpp>

namespace sdwd {

/**
 * Constants of the quadratic majorizer of the DWD loss.
 *
 * V' is Lipschitz with constant 4, so V(a) <= V(b) + V'(b)(a-b) + 2(a-b)^2.
 * With standardized columns ((1/n) sum x_ij^2 = 1) the same bound holds for
 * the empirical loss along any single coordinate, which gives the
 * closed-form coordinate update S(4 b - g, lambda1) / (4 + lambda2).
 */
struct MajorizationConstants
{
    double lipschitz = 4.0;
    double quad_coeff = 2.0;

    constexpr bool valid() const noexcept
    {
        return lipschitz > 0 && quad_coeff > 0 && quad_coeff == lipschitz / 2;
    }
};

inline constexpr MajorizationConstants dwd_majorization{};

namespace detail {

inline void require_finite(double u, const char* what)
{
    if (!std::isfinite(u)) {
        throw InvalidArgument(std::string(what) + ": non-finite argument");
    }
}

} // namespace detail

/// DWD loss: 1 - u for u <= 1/2, 1/(4u) otherwise.
inline double dwd_loss(double u)
{
    detail::require_finite(u, "dwd_loss");
    return u <= 0.5 ? 1.0 - u : 0.25 / u;
}

/// Derivative of dwd_loss; lies in [-1, 0).
inline double dwd_loss_deriv(double u)
{
    detail::require_finite(u, "dwd_loss_deriv");
    return u <= 0.5 ? -1.0 : -0.25 / (u * u);
}

// Unchecked versions for the inner loops, where margins are finite by construction.
namespace detail {

inline double loss(double u) noexcept { return u <= 0.5 ? 1.0 - u : 0.25 / u; }
inline double deriv(double u) noexcept { return u <= 0.5 ? -1.0 : -0.25 / (u * u); }

inline double soft_threshold(double z, double r) noexcept
{
    if (z > r) return z - r;
    if (z < -r) return z + r;
    return 0.0;
}

} // namespace detail

/// sign(z) * max(|z| - r, 0).
inline double soft_threshold(double z, double r)
{
    if (!(r >= 0)) {
        throw InvalidArgument("soft_threshold: threshold must be >= 0");
    }
    return detail::soft_threshold(z, r);
}

} // namespace sdwd
