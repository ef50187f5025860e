#pragma once

// Conjugate gradient for operators symmetric under a caller-supplied inner
// product. The true residual is recomputed whenever the recurrence claims
// convergence, and the iteration restarts from there if they disagree.

#include <cmath>
#include <span>
#include <vector>

namespace radctl {

struct CGResult {
    std::vector<double> x;
    int iterations = 0;
    std::vector<double> residuals;  ///< relative residual norms, one per iteration
    double final_residual = 0.0;    ///< relative true residual at exit
    bool converged = false;
};

/// Solves Op x = rhs. `apply(in, out)` writes Op in into out; `inner(u, v)`
/// is the inner product under which Op is symmetric positive definite.
template <class Apply, class Inner>
CGResult conjugate_gradient(Apply&& apply, Inner&& inner, std::span<const double> rhs,
                            double tol, int max_iters) {
    const std::size_t n = rhs.size();
    CGResult res;
    res.x.assign(n, 0.0);
    const double bnorm = std::sqrt(inner(rhs, rhs));
    if (bnorm == 0.0) {
        res.converged = true;
        return res;
    }

    std::vector<double> r(rhs.begin(), rhs.end()), p(n), q(n);
    auto true_residual = [&] {
        apply(std::span<const double>(res.x), std::span<double>(q));
        for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - q[i];
        return std::sqrt(inner(r, r));
    };

    double rr = inner(r, r);
    p = r;
    while (res.iterations < max_iters) {
        apply(std::span<const double>(p), std::span<double>(q));
        const double pq = inner(p, q);
        if (!(pq > 0.0)) break;
        const double alpha = rr / pq;
        for (std::size_t i = 0; i < n; ++i) {
            res.x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        ++res.iterations;
        const double rr_new = inner(r, r);
        res.residuals.push_back(std::sqrt(rr_new) / bnorm);
        if (std::sqrt(rr_new) <= tol * bnorm) {
            const double actual = true_residual();
            if (actual <= tol * bnorm) {
                res.final_residual = actual / bnorm;
                res.converged = true;
                return res;
            }
            rr = actual * actual;
            p = r;
            continue;
        }
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    }
    res.final_residual = true_residual() / bnorm;
    res.converged = res.final_residual <= tol;
    return res;
}

} // namespace radctl
