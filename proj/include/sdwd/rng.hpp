#pragma once
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace sdwd {

/**
 * Platform-stable random source.
 *
 * The engine is std::mt19937_64, whose output sequence is fixed by the
 * standard. The standard distributions are implementation-defined, so the
 * uniform, integer and Gaussian draws are done here:
 *  - uniform(): top 53 bits of one engine output, scaled to [0, 1).
 *  - below(m): rejection sampling on the raw 64-bit output.
 *  - gaussian(): Marsaglia polar method, second variate cached.
 */
class Rng
{
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, m), m > 0.
    std::uint64_t below(std::uint64_t m)
    {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % m;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % m;
    }

    double gaussian()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double a, b, s;
        do {
            a = 2.0 * uniform() - 1.0;
            b = 2.0 * uniform() - 1.0;
            s = a * a + b * b;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = b * f;
        has_spare_ = true;
        return a * f;
    }

    /// Fisher-Yates shuffle.
    template <class T>
    void shuffle(std::vector<T>& v)
    {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace sdwd
