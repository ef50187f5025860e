#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "radctl/errors.hpp"

namespace radctl {

enum class NonlinearityKind { Zero, Linear, Sine, Table };

inline std::string to_string(NonlinearityKind kind) {
    switch (kind) {
    case NonlinearityKind::Zero: return "zero";
    case NonlinearityKind::Linear: return "linear";
    case NonlinearityKind::Sine: return "sine";
    case NonlinearityKind::Table: return "table";
    }
    return "unknown";
}

/// Globally Lipschitz reaction term f with f(0) = 0.
///
/// `Linear` is f(s) = c s, `Sine` is f(s) = c sin(s), and `Table` is the
/// piecewise-linear interpolant of user samples, extended linearly past the
/// end points.
class Nonlinearity {
public:
    Nonlinearity() = default;

    static Nonlinearity zero() { return Nonlinearity{}; }

    static Nonlinearity linear(double slope) {
        Nonlinearity nl;
        nl.kind_ = NonlinearityKind::Linear;
        nl.coefficient_ = slope;
        nl.lipschitz_ = std::abs(slope);
        nl.derivative_at_zero_ = slope;
        return nl;
    }

    static Nonlinearity sine(double amplitude = 1.0) {
        Nonlinearity nl;
        nl.kind_ = NonlinearityKind::Sine;
        nl.coefficient_ = amplitude;
        nl.lipschitz_ = std::abs(amplitude);
        nl.derivative_at_zero_ = amplitude;
        return nl;
    }

    /// Samples must be strictly increasing in s and contain s = 0 with f = 0.
    static Nonlinearity table(std::vector<double> s, std::vector<double> f) {
        if (s.size() != f.size() || s.size() < 2) {
            throw DimensionError("nonlinearity table needs >= 2 matching (s, f) samples");
        }
        for (std::size_t i = 1; i < s.size(); ++i) {
            if (!(s[i] > s[i - 1])) {
                throw ValidationError("nonlinearity.s", "table abscissae must be strictly increasing");
            }
        }
        Nonlinearity nl;
        nl.kind_ = NonlinearityKind::Table;
        nl.derivative_at_zero_.reset();
        nl.table_s_ = std::move(s);
        nl.table_f_ = std::move(f);
        double lip = 0.0;
        for (std::size_t i = 1; i < nl.table_s_.size(); ++i) {
            lip = std::max(lip, std::abs(nl.segment_slope(i - 1)));
        }
        nl.lipschitz_ = lip;
        if (std::abs(nl(0.0)) > 1e-14) {
            throw ValidationError("nonlinearity.f", "table must satisfy f(0) = 0");
        }
        return nl;
    }

    NonlinearityKind kind() const noexcept { return kind_; }
    double coefficient() const noexcept { return coefficient_; }
    double lipschitz_bound() const noexcept { return lipschitz_; }
    std::optional<double> derivative_at_zero() const noexcept { return derivative_at_zero_; }
    const std::vector<double>& table_s() const noexcept { return table_s_; }
    const std::vector<double>& table_f() const noexcept { return table_f_; }

    double operator()(double s) const {
        switch (kind_) {
        case NonlinearityKind::Zero: return 0.0;
        case NonlinearityKind::Linear: return coefficient_ * s;
        case NonlinearityKind::Sine: return coefficient_ * std::sin(s);
        case NonlinearityKind::Table: return table_eval(s);
        }
        return 0.0;
    }

    /// Checks f(0) = 0 and the Lipschitz bound on `samples` points of [-range, range].
    void validate(double range = 10.0, int samples = 2001) const {
        if (std::abs((*this)(0.0)) > 1e-14) {
            throw ValidationError("nonlinearity", "f(0) must vanish");
        }
        const double h = 2.0 * range / (samples - 1);
        double prev = (*this)(-range);
        for (int i = 1; i < samples; ++i) {
            const double s = -range + i * h;
            const double cur = (*this)(s);
            if (std::abs(cur - prev) > (lipschitz_ + 1e-12) * h * (1.0 + 1e-12)) {
                throw ValidationError("nonlinearity", "Lipschitz bound violated near s = " +
                                                          std::to_string(s));
            }
            prev = cur;
        }
    }

private:
    double segment_slope(std::size_t k) const {
        return (table_f_[k + 1] - table_f_[k]) / (table_s_[k + 1] - table_s_[k]);
    }

    double table_eval(double s) const {
        const auto& xs = table_s_;
        std::size_t k;
        if (s <= xs.front()) {
            k = 0;
        } else if (s >= xs.back()) {
            k = xs.size() - 2;
        } else {
            k = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), s) - xs.begin()) - 1;
        }
        return table_f_[k] + segment_slope(k) * (s - xs[k]);
    }

    NonlinearityKind kind_ = NonlinearityKind::Zero;
    double coefficient_ = 0.0;
    double lipschitz_ = 0.0;
    std::optional<double> derivative_at_zero_ = 0.0;
    std::vector<double> table_s_;
    std::vector<double> table_f_;
};

/// g(s) = f(s)/s with the removable singularity closed by f'(0). When f'(0)
/// is not known, a symmetric difference of f stands in for |s| < 1e-8.
inline double g_of(const Nonlinearity& nl, double s) {
    constexpr double kThreshold = 1e-8;
    if (std::abs(s) >= kThreshold) {
        return nl(s) / s;
    }
    if (auto d = nl.derivative_at_zero()) {
        return *d;
    }
    constexpr double h = 1e-6;
    return (nl(h) - nl(-h)) / (2.0 * h);
}

} // namespace radctl
