#pragma once
#include <algorithm>
#include <cmath>
#include <sdwd/loss.hpp>
#include <sdwd/rng.hpp>

namespace sdwd::test {

struct LossPropertyCounts
{
    int majorization = 0;
    int lipschitz = 0;
    int convexity = 0;
    int derivative = 0;
    int soft_threshold = 0;

    int total() const { return majorization + lipschitz + convexity + derivative + soft_threshold; }
};

inline double draw_margin(Rng& rng) { return -4.0 + 10.0 * rng.uniform(); }

/// Checks every loss property on `count` random points each.
inline LossPropertyCounts check_loss_properties(std::uint64_t seed, int count)
{
    Rng rng(seed);
    LossPropertyCounts bad;
    for (int k = 0; k < count; ++k) {
        const double a = draw_margin(rng);
        const double b = draw_margin(rng);
        if (a != b) {
            // V(a) < V(b) + V'(b)(a - b) + 2(a - b)^2
            const double gap = dwd_loss(a) - dwd_loss(b) - dwd_loss_deriv(b) * (a - b);
            if (!(gap < dwd_majorization.quad_coeff * (a - b) * (a - b))) ++bad.majorization;
            // |V'(a) - V'(b)| < 4 |a - b|
            if (!(std::abs(dwd_loss_deriv(a) - dwd_loss_deriv(b)) < dwd_majorization.lipschitz * std::abs(a - b))) {
                ++bad.lipschitz;
            }
        }
        const double t = rng.uniform();
        if (dwd_loss(t * a + (1 - t) * b) > t * dwd_loss(a) + (1 - t) * dwd_loss(b) + 1e-12) ++bad.convexity;

        const double u = draw_margin(rng);
        const double h = 1e-5;
        if (std::abs(u - 0.5) > 2 * h) {
            const double fd = (dwd_loss(u + h) - dwd_loss(u - h)) / (2 * h);
            if (std::abs(fd - dwd_loss_deriv(u)) > 1e-6) ++bad.derivative;
        }

        const double z = draw_margin(rng);
        const double r = 3.0 * rng.uniform();
        const double s = soft_threshold(z, r);
        if (std::abs(std::abs(s) - std::max(std::abs(z) - r, 0.0)) > 1e-15 || s * z < 0) ++bad.soft_threshold;
    }
    return bad;
}

} // namespace sdwd::test
