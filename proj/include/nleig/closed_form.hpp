#pragma once

// Laplace transforms and moment generating functions of Brownian exit times
// from an interval [a, b]. These are the analytic oracles for the Monte Carlo
// and boundary-value solvers.

#include <cmath>
#include <limits>
#include <numbers>

#include "nleig/error.hpp"

namespace nleig {

enum class ExitSide {
    left,  ///< exit through a, before hitting b
    right, ///< exit through b, before hitting a
    both   ///< exit through either end
};

struct IntervalExitQuery {
    double a = 0.0;
    double b = 1.0;
    double y = 0.5;
    double rho = 1.0;
    ExitSide side = ExitSide::both;

    void validate() const
    {
        if (!(a >= 0.0 && b <= 1.0)) throw DomainError("exit query: need 0 <= a, b <= 1");
        if (!(a < y && y < b)) throw DomainError("exit query: need a < y < b");
        if (!(rho > 0.0) || !std::isfinite(rho)) throw DomainError("exit query: need rho > 0");
    }

    /// Distance from y to the end that must NOT be hit first.
    [[nodiscard]] double far_distance() const noexcept
    {
        return side == ExitSide::left ? b - y : y - a;
    }
};

inline constexpr double kInfinite = std::numeric_limits<double>::infinity();

[[nodiscard]] inline bool is_infinite(double v) noexcept { return std::isinf(v) && v > 0; }

/// E_y[exp(-rho * T)] for T the one-sided or two-sided exit time.
/// Written as ratios of expm1 so it neither overflows nor loses the
/// small-rho limit.
inline double mgf_exit_decay(const IntervalExitQuery& q)
{
    q.validate();
    const double k = std::sqrt(2.0 * q.rho);
    if (q.side == ExitSide::both) {
        const double c = std::abs(k * (q.y - 0.5 * (q.a + q.b)));
        const double e = 0.5 * k * (q.b - q.a);
        // cosh(c)/cosh(e) = exp(c - e) (1 + exp(-2c)) / (1 + exp(-2e))
        return std::exp(c - e) * (1.0 + std::exp(-2.0 * c)) / (1.0 + std::exp(-2.0 * e));
    }
    const double num = k * q.far_distance();
    const double den = k * (q.b - q.a);
    // sinh(num)/sinh(den) = exp(num - den) expm1(-2 num) / expm1(-2 den)
    return std::exp(num - den) * std::expm1(-2.0 * num) / std::expm1(-2.0 * den);
}

/// Values above this are reported as infinite; sin near pi carries no signal.
inline constexpr double kGrowthCeiling = 1e15;

/// E_y[exp(rho * T_i) 1{A_i}] for a one-sided exit; +infinity once
/// sqrt(2 rho)(b - a) >= pi.
inline double mgf_exit_growth(const IntervalExitQuery& q)
{
    q.validate();
    if (q.side == ExitSide::both) {
        throw DomainError("mgf_exit_growth: only one-sided exits are supported");
    }
    const double k = std::sqrt(2.0 * q.rho);
    const double den_arg = k * (q.b - q.a);
    if (den_arg >= std::numbers::pi) return kInfinite;

    // pi - den_arg with pi split into hi + lo parts
    constexpr double pi_hi = 3.141592653589793116;
    constexpr double pi_lo = 1.2246467991473532e-16;
    const double gap = (pi_hi - den_arg) + pi_lo;
    if (gap <= 0.0) return kInfinite;
    const double num_arg = k * q.far_distance();
    const double den = den_arg > 0.5 * std::numbers::pi ? std::sin(gap) : std::sin(den_arg);
    const double value = std::sin(num_arg) / den;
    if (!(value < kGrowthCeiling)) return kInfinite;
    return value;
}

} // namespace nleig
