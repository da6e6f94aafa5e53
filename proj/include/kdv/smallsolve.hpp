#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace kdv {

// Dense solve by Gaussian elimination with partial pivoting, for the small
// transition systems (N <= 8). Also reports a 1-norm condition estimate via
// the explicit inverse, which is affordable at these sizes.
template <class T>
struct SmallSolveResult {
    std::vector<T> x;
    double cond1 = 0.0;
};

template <class T>
SmallSolveResult<T> solve_dense(std::vector<std::vector<T>> A, std::vector<T> b) {
    const std::size_t n = A.size();
    if (n == 0 || A[0].size() != n || b.size() != n)
        throw std::invalid_argument("solve_dense: inconsistent dimensions");

    double norm_a = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < n; ++i) col += std::abs(A[i][j]);
        norm_a = std::max(norm_a, col);
    }

    // Augment with the identity so the same elimination yields the inverse.
    std::vector<std::vector<T>> aug(n, std::vector<T>(2 * n, T{}));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) aug[i][j] = A[i][j];
        aug[i][n + i] = T{1};
    }
    std::vector<T> rhs = b;

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::abs(aug[k][k]);
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(aug[i][k]) > best) {
                best = std::abs(aug[i][k]);
                piv = i;
            }
        if (best == 0.0) throw std::runtime_error("solve_dense: singular matrix");
        std::swap(aug[k], aug[piv]);
        std::swap(rhs[k], rhs[piv]);
        for (std::size_t i = k + 1; i < n; ++i) {
            const T m = aug[i][k] / aug[k][k];
            if (m == T{}) continue;
            for (std::size_t j = k; j < 2 * n; ++j) aug[i][j] -= m * aug[k][j];
            rhs[i] -= m * rhs[k];
        }
    }
    SmallSolveResult<T> res;
    res.x.assign(n, T{});
    std::vector<std::vector<T>> inv(n, std::vector<T>(n, T{}));
    for (std::size_t col = 0; col < n + 1; ++col) {
        // back-substitute for the solution (col == n) and each inverse column
        std::vector<T> y(n);
        for (std::size_t ii = 0; ii < n; ++ii) {
            const std::size_t i = n - 1 - ii;
            T s = (col == n) ? rhs[i] : aug[i][n + col];
            for (std::size_t j = i + 1; j < n; ++j) s -= aug[i][j] * y[j];
            y[i] = s / aug[i][i];
        }
        if (col == n)
            res.x = y;
        else
            for (std::size_t i = 0; i < n; ++i) inv[i][col] = y[i];
    }
    double norm_inv = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < n; ++i) col += std::abs(inv[i][j]);
        norm_inv = std::max(norm_inv, col);
    }
    res.cond1 = norm_a * norm_inv;
    return res;
}

}  // namespace kdv
