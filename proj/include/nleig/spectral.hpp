#pragma once

// Principal eigenvalue of L = -1/2 d^2/dx^2 - gamma V (integral(u) - u) on
// (0,1) with Dirichlet conditions.
//
// On a mesh the operator is A = B - (gamma V) w^T, with B the tridiagonal
// local part (-1/2 second difference + gamma V) and w the quadrature weights.
// A has nonpositive off-diagonal entries, so its principal eigenvalue is real
// with a positive eigenvector; inverse iteration finds it with two O(n)
// tridiagonal solves per step via the Sherman-Morrison formula.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nleig/error.hpp"
#include "nleig/mesh.hpp"
#include "nleig/model.hpp"
#include "nleig/refine.hpp"
#include "nleig/tridiag.hpp"

namespace nleig {

struct DiscreteOperator {
    Tridiagonal local;               ///< B: -1/2 second difference + gamma V
    std::vector<double> jump_rate;   ///< gamma V(x_i), left factor of the rank-1 term
    std::vector<double> weights;     ///< quadrature weights, right factor of the rank-1 term
    std::vector<double> dual;        ///< (h_{i-1} + h_i) / 2; B is symmetric in this inner product
    double boundary_left = 0.0;      ///< coupling of x_1 to the boundary value at 0
    double boundary_right = 0.0;     ///< coupling of x_n to the boundary value at 1

    [[nodiscard]] std::size_t size() const noexcept { return local.size(); }

    /// Rounding scales of A x: max_i (|A| |x|)_i and the dual-weighted
    /// <|x|, |A| |x|> / <x, x>, which bounds rounding in the Rayleigh quotient.
    [[nodiscard]] std::pair<double, double> magnitude(std::span<const double> x) const noexcept
    {
        double mean = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) mean += weights[i] * std::abs(x[i]);
        double row_max = 0.0;
        double num = 0.0;
        double den = 0.0;
        const std::size_t n = x.size();
        for (std::size_t i = 0; i < n; ++i) {
            double acc = std::abs(local.diag[i] * x[i]) + jump_rate[i] * mean;
            if (i > 0) acc += std::abs(local.lower[i] * x[i - 1]);
            if (i + 1 < n) acc += std::abs(local.upper[i] * x[i + 1]);
            row_max = std::max(row_max, acc);
            num += dual[i] * std::abs(x[i]) * acc;
            den += dual[i] * x[i] * x[i];
        }
        return {row_max, num / den};
    }

    /// y = A x
    void apply(std::span<const double> x, std::span<double> y) const noexcept
    {
        local.multiply(x, y);
        double mean = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) mean += weights[i] * x[i];
        for (std::size_t i = 0; i < x.size(); ++i) y[i] -= jump_rate[i] * mean;
    }
};

inline DiscreteOperator discretize(const ProblemInstance& instance, const Mesh& mesh)
{
    instance.validate();
    const std::size_t n = mesh.size();
    if (n < 2) throw DomainError("discretize: mesh needs at least two nodes");
    DiscreteOperator op;
    op.local.lower.assign(n, 0.0);
    op.local.diag.assign(n, 0.0);
    op.local.upper.assign(n, 0.0);
    op.jump_rate.resize(n);
    op.dual.resize(n);
    op.weights = mesh.weights;
    for (std::size_t i = 0; i < n; ++i) {
        const double hm = mesh.widths[i];
        const double hp = mesh.widths[i + 1];
        const double rate = instance.gamma * instance.potential(mesh.nodes[i], mesh.from_right[i]);
        op.jump_rate[i] = rate;
        op.dual[i] = 0.5 * (hm + hp);
        op.local.diag[i] = 1.0 / (hm * hp) + rate;
        op.local.lower[i] = -1.0 / ((hm + hp) * hm);
        op.local.upper[i] = -1.0 / ((hm + hp) * hp);
    }
    op.boundary_left = -op.local.lower.front();
    op.boundary_right = -op.local.upper.back();
    op.local.lower.front() = 0.0;
    op.local.upper.back() = 0.0;
    return op;
}

struct EigenResult {
    double lambda0 = 0.0;
    std::vector<double> eigenvector; ///< positive, max-norm 1
    std::size_t iterations = 0;
    double residual = 0.0;           ///< |A v - lambda0 v|_inf / lambda0
    double shift = 0.0;              ///< final shift used by inverse iteration
};

namespace detail {

/// (A - s I)^{-1} applied through one factorization of B - s I.
class ShiftedSolver {
public:
    static std::optional<ShiftedSolver> make(const DiscreteOperator& op, double shift)
    {
        auto f = TridiagonalFactor::factor(op.local, shift);
        if (!f) return std::nullopt;
        ShiftedSolver s{std::move(*f), shift};
        s.q_.resize(op.size());
        s.f_.solve(op.jump_rate, s.q_);
        double wq = 0.0;
        for (std::size_t i = 0; i < op.size(); ++i) wq += op.weights[i] * s.q_[i];
        s.denom_ = 1.0 - wq;
        if (!(std::abs(s.denom_) > 1e-14)) return std::nullopt;
        return s;
    }

    void solve(const DiscreteOperator& op, std::span<const double> rhs, std::span<double> out) const
    {
        f_.solve(rhs, out);
        double wz = 0.0;
        for (std::size_t i = 0; i < op.size(); ++i) wz += op.weights[i] * out[i];
        const double c = wz / denom_;
        for (std::size_t i = 0; i < op.size(); ++i) out[i] += c * q_[i];
    }

    [[nodiscard]] double shift() const noexcept { return shift_; }

private:
    ShiftedSolver(TridiagonalFactor f, double shift) : f_(std::move(f)), shift_(shift) {}

    TridiagonalFactor f_;
    double shift_;
    std::vector<double> q_;
    double denom_ = 1.0;
};

} // namespace detail

/// Inverse iteration for the principal eigenpair of A.
///
/// Starts with shift 0 (retried at -1 if singular); once the estimate has
/// settled to 1% it moves the shift to 98% of the estimate, which stays below
/// the local ground state of B and accelerates convergence.
inline EigenResult principal_eigenvalue(const DiscreteOperator& op, double tol,
                                        std::size_t max_iter = 500)
{
    if (!(tol > 0.0 && tol <= 1e-3)) {
        throw DomainError("principal_eigenvalue: tol must lie in (0, 1e-3]");
    }
    const std::size_t n = op.size();
    auto solver = detail::ShiftedSolver::make(op, 0.0);
    if (!solver) solver = detail::ShiftedSolver::make(op, -1.0);
    if (!solver) throw ConvergenceError("principal_eigenvalue: shifted system singular", 0.0);

    std::vector<double> v(n, 1.0), y(n), av(n);
    double prev = 0.0;
    double residual = 0.0;
    bool moved_shift = false;

    for (std::size_t it = 1; it <= max_iter; ++it) {
        solver->solve(op, v, y);
        std::size_t imax = 0;
        for (std::size_t i = 1; i < n; ++i) {
            if (std::abs(y[i]) > std::abs(y[imax])) imax = i;
        }
        const double scale = y[imax];
        if (!(std::abs(scale) > 0.0) || !std::isfinite(scale)) {
            throw ConvergenceError("principal_eigenvalue: iterate collapsed", residual);
        }
        for (std::size_t i = 0; i < n; ++i) v[i] = y[i] / scale;

        op.apply(v, av);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            num += op.dual[i] * v[i] * av[i];
            den += op.dual[i] * v[i] * v[i];
        }
        const double lambda = num / den;
        residual = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            residual = std::max(residual, std::abs(av[i] - lambda * v[i]));
        }
        residual /= std::abs(lambda);
        const double change = it == 1 ? 1.0 : std::abs(lambda - prev) / std::abs(lambda);
        prev = lambda;
        // changes and residuals below rounding in |A||v| are not attainable
        const auto [row_scale, quotient_scale] = op.magnitude(v);
        constexpr double eps = std::numeric_limits<double>::epsilon();
        const double residual_floor = 256.0 * eps * row_scale / std::abs(lambda);
        const double change_floor = 256.0 * eps * quotient_scale / std::abs(lambda);

        if (change < std::max(tol, change_floor) && residual < std::max(tol, residual_floor)) {
            for (double vi : v) {
                if (!(vi > 0.0)) {
                    throw ConvergenceError("principal_eigenvalue: eigenvector not positive",
                                           residual);
                }
            }
            return EigenResult{lambda, std::move(v), it, residual, solver->shift()};
        }
        if (!moved_shift && it >= 2 && change < 1e-2 && lambda > 0.0) {
            moved_shift = true;
            if (auto s = detail::ShiftedSolver::make(op, 0.98 * lambda)) solver = std::move(s);
        }
    }
    throw ConvergenceError("principal_eigenvalue: no convergence after " +
                               std::to_string(max_iter) + " iterations",
                           residual);
}

/// Inner tolerance used on each mesh by the refinement drivers.
inline double inner_tolerance(double tol) { return std::clamp(tol * 1e-3, 1e-12, 1e-9); }

/// lambda0 with mesh refinement and Richardson extrapolation.
inline RefinementResult lambda0_detailed(const ProblemInstance& instance, double tol)
{
    if (!(tol > 0.0 && tol <= 1e-3)) throw DomainError("lambda0: tol must lie in (0, 1e-3]");
    const double inner = inner_tolerance(tol);
    return richardson_refine(instance, tol, [&](const Mesh& mesh) {
        const auto op = discretize(instance, mesh);
        const auto eig = principal_eigenvalue(op, inner, 2000);
        return std::pair{eig.lambda0, eig.residual};
    });
}

inline double lambda0(const ProblemInstance& instance, double tol)
{
    return lambda0_detailed(instance, tol).value;
}

} // namespace nleig
