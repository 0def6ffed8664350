#pragma once

// Boundary-value problems for the operator  Au = 1/2 u'' + (lambda - gamma V) u:
//
//   gauge      u:  Au = 0  on (0,1),  u = 1 at 0 and 1   (u(x) = E_x exp(R(tau)))
//   potential  w:  Aw = -1 on (0,1),  w = 0 at 0 and 1   (w(x) = E_x int_0^tau exp(R(t)) dt)
//
// with R(t) = lambda t - gamma int_0^t V(X(s)) ds along Brownian paths. The
// moment generating function of the exit time of the jump process started
// from the uniform law is 1 / D(lambda) with D = 1 - lambda <w> / <u>, and the
// principal eigenvalue is the first zero of D.
//
// Both problems reuse the spectral discretization, so at the discrete level
// D(lambda) = 0 exactly when lambda is an eigenvalue of the spectral matrix.

#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nleig/closed_form.hpp"
#include "nleig/error.hpp"
#include "nleig/mesh.hpp"
#include "nleig/model.hpp"
#include "nleig/refine.hpp"
#include "nleig/spectral.hpp"
#include "nleig/tridiag.hpp"

namespace nleig {

enum class FkValidity {
    ok,
    past_local_eigenvalue ///< lambda at or above the Dirichlet ground state of -1/2 u'' + gamma V u
};

struct FkSolution {
    double lambda = 0.0;
    std::vector<double> gauge;     ///< nodal u; boundary values are 1
    std::vector<double> potential; ///< nodal w; boundary values are 0
    double gauge_mean = 0.0;       ///< quadrature of u against the uniform law
    double potential_mean = 0.0;   ///< quadrature of w against the uniform law
    FkValidity validity = FkValidity::ok;

    [[nodiscard]] bool ok() const noexcept { return validity == FkValidity::ok; }

    /// D(lambda) = 1 - lambda <w> / <u>.
    [[nodiscard]] double identity_denominator() const noexcept
    {
        return 1.0 - lambda * potential_mean / gauge_mean;
    }
};

namespace detail {

inline FkSolution solve_fk_on(const DiscreteOperator& op, const Mesh& mesh, double lambda)
{
    FkSolution sol;
    sol.lambda = lambda;
    // Sturm: every pivot positive iff lambda is below the local ground state
    const auto factor = TridiagonalFactor::factor(op.local, lambda);
    if (!factor) {
        sol.validity = FkValidity::past_local_eigenvalue;
        return sol;
    }
    const std::size_t n = op.size();
    std::vector<double> rhs(n, 0.0);
    rhs.front() += op.boundary_left;
    rhs.back() += op.boundary_right;
    sol.gauge.resize(n);
    factor->solve(rhs, sol.gauge);
    rhs.assign(n, 1.0);
    sol.potential.resize(n);
    factor->solve(rhs, sol.potential);
    sol.gauge_mean = mesh.integrate(sol.gauge);
    sol.potential_mean = mesh.integrate(sol.potential);
    return sol;
}

} // namespace detail

inline FkSolution solve_fk(const ProblemInstance& instance, double lambda, const Mesh& mesh)
{
    return detail::solve_fk_on(discretize(instance, mesh), mesh, lambda);
}

/// Nodal gauge u, or nothing once lambda is past the local eigenvalue.
inline std::optional<std::vector<double>> solve_gauge(const ProblemInstance& instance,
                                                      double lambda, const Mesh& mesh)
{
    auto sol = solve_fk(instance, lambda, mesh);
    if (!sol.ok()) return std::nullopt;
    return std::move(sol.gauge);
}

/// Nodal potential w, or nothing once lambda is past the local eigenvalue.
inline std::optional<std::vector<double>> solve_potential(const ProblemInstance& instance,
                                                          double lambda, const Mesh& mesh)
{
    auto sol = solve_fk(instance, lambda, mesh);
    if (!sol.ok()) return std::nullopt;
    return std::move(sol.potential);
}

/// E_mu[exp(lambda tau)] for the jump process via 1 / D(lambda); +infinity
/// when D <= 0 or lambda is past the local eigenvalue.
inline double mgf_via_identity(const ProblemInstance& instance, double lambda, const Mesh& mesh)
{
    if (!(lambda >= 0.0)) throw DomainError("mgf_via_identity: lambda must be >= 0");
    if (lambda == 0.0) return 1.0;
    const auto sol = solve_fk(instance, lambda, mesh);
    if (!sol.ok()) return kInfinite;
    const double d = sol.identity_denominator();
    return d > 0.0 ? 1.0 / d : kInfinite;
}

struct CriticalOnMesh {
    double lambda = 0.0;
    bool local_limited = false; ///< bracket closed on the local eigenvalue, not on a zero of D
};

/// First lambda > 0 where D(lambda) <= 0 or the local eigenvalue is passed,
/// bracketed to relative width rel_tol by bisection.
inline CriticalOnMesh critical_lambda_on_mesh(const ProblemInstance& instance, const Mesh& mesh,
                                              double rel_tol)
{
    const auto op = discretize(instance, mesh);
    auto bad = [&](double lambda) {
        const auto sol = detail::solve_fk_on(op, mesh, lambda);
        return !sol.ok() || sol.identity_denominator() <= 0.0;
    };

    double lo = 0.0;
    double hi = 1.0;
    for (int k = 0; !bad(hi); ++k) {
        if (k > 200) throw BracketError("critical_lambda: no blow-up found below 2^200");
        lo = hi;
        hi *= 2.0;
    }
    while (hi - lo > rel_tol * hi) {
        const double mid = 0.5 * (lo + hi);
        if (bad(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    const auto at_hi = detail::solve_fk_on(op, mesh, hi);
    CriticalOnMesh out;
    out.lambda = 0.5 * (lo + hi);
    out.local_limited = !at_hi.ok();
    if (out.local_limited && instance.gamma > 0.0) {
        const auto at_lo = detail::solve_fk_on(op, mesh, lo);
        std::ostringstream msg;
        msg << "critical_lambda: no sign change of D below the local eigenvalue " << hi
            << " (D(0) = 1, D(" << lo << ") = " << at_lo.identity_denominator() << ")";
        throw BracketError(msg.str());
    }
    return out;
}

/// Blow-up point of E_mu[exp(lambda tau)], i.e. the principal eigenvalue,
/// refined over nested meshes like lambda0().
inline RefinementResult critical_lambda_detailed(const ProblemInstance& instance, double tol)
{
    if (!(tol > 0.0 && tol <= 1e-3)) {
        throw DomainError("critical_lambda: tol must lie in (0, 1e-3]");
    }
    const double inner = inner_tolerance(tol);
    return richardson_refine(instance, tol, [&](const Mesh& mesh) {
        const auto c = critical_lambda_on_mesh(instance, mesh, inner);
        return std::pair{c.lambda, inner};
    });
}

inline double critical_lambda(const ProblemInstance& instance, double tol)
{
    return critical_lambda_detailed(instance, tol).value;
}

/// Lowest Dirichlet eigenvalue of -1/2 u'' + gamma V u on the mesh, located
/// from the pivot signs alone.
inline double local_eigenvalue_on_mesh(const ProblemInstance& instance, const Mesh& mesh,
                                       double rel_tol)
{
    const auto op = discretize(instance, mesh);
    auto past = [&](double s) { return !TridiagonalFactor::factor(op.local, s).has_value(); };
    double lo = 0.0, hi = 1.0;
    while (!past(hi)) {
        lo = hi;
        hi *= 2.0;
    }
    while (hi - lo > rel_tol * hi) {
        const double mid = 0.5 * (lo + hi);
        if (past(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return 0.5 * (lo + hi);
}

struct BrownianFunctionals {
    double theta = 0.0;
    double lambda = 0.0; ///< theta * gamma * h(gamma)
    double r = 0.0;
    double v_theta = 1.0;
    bool valid = false;  ///< false when lambda is past the local eigenvalue
    double gauge_mean = 0.0;
    double potential_mean = 0.0;
    std::optional<double> gauge_band_ratio;     ///< <u> / r
    std::optional<double> potential_band_ratio; ///< |lambda| <w> / (|theta| r); undefined at theta = 0
};

/// The two Brownian expectations at lambda = lambda(theta, gamma, alpha),
/// normalized by the boundary-layer width.
inline BrownianFunctionals brownian_functionals(const ProblemInstance& instance, double theta,
                                                const Mesh& mesh)
{
    if (!(instance.gamma > std::numbers::e)) {
        throw DomainError("brownian_functionals: gamma must exceed e");
    }
    const auto s = scaling(theta, instance.gamma, instance.potential.alpha());
    BrownianFunctionals out;
    out.theta = theta;
    out.lambda = s.lambda;
    out.r = s.r;
    out.v_theta = s.v_theta;
    const auto sol = solve_fk(instance, s.lambda, mesh);
    if (!sol.ok()) return out;
    out.valid = true;
    out.gauge_mean = sol.gauge_mean;
    out.potential_mean = sol.potential_mean;
    out.gauge_band_ratio = sol.gauge_mean / s.r;
    if (theta != 0.0) {
        out.potential_band_ratio = std::abs(s.lambda) * sol.potential_mean / (std::abs(theta) * s.r);
    }
    return out;
}

} // namespace nleig
