#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace radctl {

/// Thomas algorithm for rows lower[k] x[k-1] + diag[k] x[k] + upper[k] x[k+1] = rhs[k].
/// lower[0] and upper[n-1] are ignored. No pivoting: callers supply
/// diagonally dominant systems.
class TridiagonalSolver {
public:
    explicit TridiagonalSolver(std::size_t n = 0) : scratch_(n) {}

    void solve(std::span<const double> lower, std::span<const double> diag,
               std::span<const double> upper, std::span<const double> rhs, std::span<double> x) {
        const std::size_t n = diag.size();
        if (scratch_.size() < n) scratch_.resize(n);
        double denom = diag[0];
        x[0] = rhs[0] / denom;
        for (std::size_t k = 1; k < n; ++k) {
            scratch_[k] = upper[k - 1] / denom;
            denom = diag[k] - lower[k] * scratch_[k];
            x[k] = (rhs[k] - lower[k] * x[k - 1]) / denom;
        }
        for (std::size_t k = n - 1; k-- > 0;) {
            x[k] -= scratch_[k + 1] * x[k + 1];
        }
    }

    /// Solves with the transposed matrix of the same bands.
    void solve_transposed(std::span<const double> lower, std::span<const double> diag,
                          std::span<const double> upper, std::span<const double> rhs,
                          std::span<double> x) {
        const std::size_t n = diag.size();
        if (lower_t_.size() < n) {
            lower_t_.resize(n);
            upper_t_.resize(n);
        }
        for (std::size_t k = 0; k < n; ++k) {
            lower_t_[k] = k > 0 ? upper[k - 1] : 0.0;
            upper_t_[k] = k + 1 < n ? lower[k + 1] : 0.0;
        }
        solve(std::span<const double>(lower_t_.data(), n), diag,
              std::span<const double>(upper_t_.data(), n), rhs, x);
    }

private:
    std::vector<double> scratch_;
    std::vector<double> lower_t_;
    std::vector<double> upper_t_;
};

} // namespace radctl
