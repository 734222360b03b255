#pragma once
#include <vector>
#include <sdwd/data.hpp>

namespace sdwd {

/// Sorted (index, value) pairs of a coefficient vector; zeros omitted.
struct SparseCoefs
{
    std::vector<Index> index;
    std::vector<double> value;

    static SparseCoefs from_dense(const Vector& v)
    {
        SparseCoefs s;
        for (Index j = 0; j < v.size(); ++j) {
            if (v[j] != 0.0) {
                s.index.push_back(j);
                s.value.push_back(v[j]);
            }
        }
        return s;
    }

    Vector dense(Index p) const
    {
        Vector v = Vector::Zero(p);
        for (std::size_t k = 0; k < index.size(); ++k) v[index[k]] = value[k];
        return v;
    }

    std::size_t nnz() const noexcept { return index.size(); }

    bool operator==(const SparseCoefs&) const = default;
};

} // namespace sdwd
