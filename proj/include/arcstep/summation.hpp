#pragma once

#include <cstddef>
#include <utility>

namespace arcstep {

// Pairwise summation of term(i) for i in [first, last). Fixed recursive
// splitting with a 64-element base case, so the reduction tree depends only
// on the index range: the result is bit-identical no matter how callers
// partition work across threads, and rounding error grows like O(log n)
// instead of O(n).
template <class F>
double pairwise_sum(std::size_t first, std::size_t last, F&& term) {
    const std::size_t n = last - first;
    if (n <= 64) {
        double s = 0.0;
        for (std::size_t i = first; i < last; ++i) s += term(i);
        return s;
    }
    const std::size_t mid = first + n / 2;
    return pairwise_sum(first, mid, term) + pairwise_sum(mid, last, std::forward<F>(term));
}

template <class F>
double pairwise_sum(std::size_t n, F&& term) {
    return pairwise_sum(std::size_t{0}, n, std::forward<F>(term));
}

} // namespace arcstep
