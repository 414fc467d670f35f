#pragma once

#include <cstddef>
#include <span>
#include <utility>

namespace arxrls {

/// Pairwise (cascade) summation of term(0) + ... + term(count - 1).
///
/// The split points depend only on `count`, so the result is a pure function
/// of the terms and their order. T may be any additive value type (double,
/// Eigen vectors or matrices); `term` must return something convertible to T.
template <class T, class Term>
T pairwise_sum(std::size_t first, std::size_t count, Term&& term)
{
    constexpr std::size_t kLeaf = 8;
    if (count <= kLeaf)
    {
        T acc = term(first);
        for (std::size_t i = 1; i < count; ++i)
        {
            acc += term(first + i);
        }
        return acc;
    }
    const std::size_t half = count / 2;
    T lo = pairwise_sum<T>(first, half, term);
    T hi = pairwise_sum<T>(first + half, count - half, term);
    lo += hi;
    return lo;
}

template <class T, class Term>
T pairwise_mean(std::size_t count, Term&& term)
{
    T sum = pairwise_sum<T>(0, count, std::forward<Term>(term));
    sum /= static_cast<double>(count);
    return sum;
}

} // namespace arxrls
