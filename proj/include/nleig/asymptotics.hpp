#pragma once

// gamma sweeps of the principal eigenvalue and the large-gamma checks built
// on them: scaling exponent fits, the alpha = 0 limit constant, the crude
// blow-up threshold and the boundary-layer bands of the Brownian functionals.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "nleig/error.hpp"
#include "nleig/feynman_kac.hpp"
#include "nleig/mesh.hpp"
#include "nleig/model.hpp"
#include "nleig/montecarlo.hpp"
#include "nleig/spectral.hpp"
#include "nleig/stats.hpp"

namespace nleig {

enum class Method { spectral, fk, mc };

inline const char* method_name(Method m) noexcept
{
    switch (m) {
    case Method::spectral: return "spectral";
    case Method::fk: return "fk";
    case Method::mc: return "mc";
    }
    return "?";
}

struct SweepPoint {
    double gamma = 0.0;
    Method method = Method::spectral;
    double lambda0 = 0.0;
    double std_error = 0.0;            ///< Monte Carlo only
    double residual = 0.0;
    std::size_t n_final = 0;
    bool skipped = false;              ///< Monte Carlo above the gamma budget
    std::optional<std::string> error;  ///< solver failure at this point

    [[nodiscard]] bool ok() const noexcept { return !skipped && !error; }
};

struct SweepResult {
    double alpha = 0.0;
    double alpha_prime = 0.0;
    std::vector<double> gammas;
    std::vector<SweepPoint> points;  ///< ordered by (gamma, method)

    /// Successful (gamma, lambda0) pairs of one method.
    [[nodiscard]] std::pair<std::vector<double>, std::vector<double>> series(Method m) const
    {
        std::pair<std::vector<double>, std::vector<double>> out;
        for (const auto& p : points) {
            if (p.method == m && p.ok()) {
                out.first.push_back(p.gamma);
                out.second.push_back(p.lambda0);
            }
        }
        return out;
    }
};

struct SweepOptions {
    std::set<Method> methods{Method::spectral};
    double tol = 1e-6;
    unsigned threads = 1;          ///< 0: one per hardware thread
    SimConfig mc;
    double mc_gamma_limit = 1e4;   ///< Monte Carlo is skipped above this gamma
};

/// Log-uniform grid of `points` values over [lo, hi].
inline std::vector<double> log_grid(double lo, double hi, std::size_t points)
{
    if (!(lo > 0.0 && hi > lo) || points < 2) {
        throw DomainError("log_grid: need 0 < lo < hi and at least two points");
    }
    std::vector<double> out(points);
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (std::size_t i = 0; i < points; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(points - 1);
        out[i] = std::pow(10.0, a + (b - a) * t);
    }
    out.front() = lo;
    out.back() = hi;
    return out;
}

namespace detail {

/// Runs task(i) for i < count on up to `threads` threads; each index is
/// handled exactly once and results are written by index.
template <class Task>
void parallel_for(std::size_t count, unsigned threads, Task&& task)
{
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < count; i += threads) task(i);
        });
    }
    for (auto& th : pool) th.join();
}

inline SweepPoint sweep_point(const ProblemInstance& instance, Method m, const SweepOptions& opt)
{
    SweepPoint p;
    p.gamma = instance.gamma;
    p.method = m;
    try {
        switch (m) {
        case Method::spectral: {
            const auto r = lambda0_detailed(instance, opt.tol);
            p.lambda0 = r.value;
            p.residual = r.residual;
            p.n_final = r.n_final;
            break;
        }
        case Method::fk: {
            const auto r = critical_lambda_detailed(instance, opt.tol);
            p.lambda0 = r.value;
            p.residual = r.residual;
            p.n_final = r.n_final;
            break;
        }
        case Method::mc: {
            if (instance.gamma > opt.mc_gamma_limit) {
                p.skipped = true;
                break;
            }
            SimConfig cfg = opt.mc;
            cfg.threads = 1;
            const auto r = estimate_lambda0_mc(instance, cfg);
            p.lambda0 = r.rate;
            p.std_error = r.std_error;
            break;
        }
        }
    } catch (const SolverError& e) {
        p.error = e.what();
    }
    return p;
}

} // namespace detail

/// Runs the selected methods at each gamma. Solver failures are recorded per
/// point; the sweep throws only when no point succeeds.
inline SweepResult gamma_sweep(const PotentialSpec& spec, const std::vector<double>& gammas,
                               const SweepOptions& opt)
{
    spec.validate();
    if (gammas.empty()) throw DomainError("gamma_sweep: empty gamma list");
    for (std::size_t i = 0; i < gammas.size(); ++i) {
        if (!(gammas[i] > std::numbers::e) || (i > 0 && !(gammas[i] > gammas[i - 1]))) {
            throw DomainError("gamma_sweep: gammas must exceed e and increase strictly");
        }
    }
    if (opt.methods.empty()) throw DomainError("gamma_sweep: no method selected");

    SweepResult out;
    out.alpha = spec.alpha();
    out.alpha_prime = spec.alpha_prime();
    out.gammas = gammas;
    const std::vector<Method> methods(opt.methods.begin(), opt.methods.end());
    out.points.resize(gammas.size() * methods.size());
    detail::parallel_for(out.points.size(), opt.threads, [&](std::size_t k) {
        const ProblemInstance instance{spec, gammas[k / methods.size()]};
        out.points[k] = detail::sweep_point(instance, methods[k % methods.size()], opt);
    });
    if (std::none_of(out.points.begin(), out.points.end(), [](const auto& p) { return p.ok(); })) {
        throw SolverError("gamma_sweep: every sweep point failed");
    }
    return out;
}

enum class Correction { none, log };

inline const char* correction_name(Correction c) noexcept
{
    return c == Correction::log ? "log" : "none";
}

/// Not enough data for an exponent fit.
class FitError : public SolverError {
public:
    using SolverError::SolverError;
};

struct ExponentFit {
    double delta_hat = 0.0;
    double intercept = 0.0;
    double std_error = 0.0;
    Correction correction = Correction::none;
    double r_squared = 1.0;
    double target_delta = 0.0;
    double band_ratio = 1.0;  ///< max / min of lambda0 / (gamma^target * corr)
    std::size_t points = 0;
};

inline constexpr std::size_t kMinFitPoints = 5;
inline constexpr double kMinFitDecades = 3.0;

/// Least squares of ln lambda0 (times ln gamma under the log correction)
/// against ln gamma.
inline ExponentFit fit_exponent(const std::vector<double>& gammas,
                                const std::vector<double>& lambdas, double alpha,
                                Correction correction)
{
    if (gammas.size() != lambdas.size()) throw DomainError("fit_exponent: size mismatch");
    if (gammas.size() < kMinFitPoints) {
        throw FitError("fit_exponent: need at least 5 sweep points, got " +
                       std::to_string(gammas.size()));
    }
    const auto [lo, hi] = std::minmax_element(gammas.begin(), gammas.end());
    if (!(*lo > 1.0) || std::log10(*hi / *lo) < kMinFitDecades - 1e-9) {
        throw FitError("fit_exponent: sweep must span at least 3 decades above gamma = 1");
    }
    std::vector<double> x(gammas.size()), y(gammas.size()), norm(gammas.size());
    ExponentFit fit;
    fit.correction = correction;
    fit.target_delta = delta_exponent(alpha);
    fit.points = gammas.size();
    for (std::size_t i = 0; i < gammas.size(); ++i) {
        if (!(lambdas[i] > 0.0)) throw DomainError("fit_exponent: lambda0 must be positive");
        const double lg = std::log(gammas[i]);
        const double corr = correction == Correction::log ? 1.0 / lg : 1.0;
        x[i] = lg;
        y[i] = std::log(lambdas[i] / corr);
        norm[i] = lambdas[i] / (std::pow(gammas[i], fit.target_delta) * corr);
    }
    const auto ls = least_squares(x, y);
    fit.delta_hat = ls.slope;
    fit.intercept = ls.intercept;
    fit.std_error = ls.slope_se;
    fit.r_squared = ls.r_squared;
    const auto [nmin, nmax] = std::minmax_element(norm.begin(), norm.end());
    fit.band_ratio = *nmax / *nmin;
    return fit;
}

inline ExponentFit fit_exponent(const SweepResult& sweep, Correction correction,
                                Method method = Method::spectral)
{
    const auto [g, l] = sweep.series(method);
    return fit_exponent(g, l, sweep.alpha, correction);
}

/// The correction the scaling law prescribes for alpha.
inline Correction natural_correction(double alpha)
{
    return alpha == 1.0 ? Correction::log : Correction::none;
}

struct LimLimReport {
    double target = 0.0;
    std::vector<double> gammas;
    std::vector<double> ratios;  ///< lambda0 / sqrt(gamma)
};

/// (1/sqrt V(0) + 1/sqrt V(1)) / (sqrt 2 int_0^1 dx / V) for V bounded away
/// from zero.
inline double limlim_target(const PotentialSpec& spec)
{
    spec.validate();
    if (spec.alpha() != 0.0 || spec.alpha_prime() != 0.0) {
        throw DomainError("limlim_check: the limit constant needs alpha = alpha' = 0; "
                          "it is undefined when V vanishes at the boundary");
    }
    double inverse_integral = 0.0;
    if (spec.form() == PotentialSpec::Form::power_law) {
        inverse_integral = 1.0 / spec.amplitude();
    } else {
        const auto& xs = spec.nodes();
        const auto& vs = spec.values();
        CompensatedSum s;
        for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
            const double v0 = vs[i], v1 = vs[i + 1], h = xs[i + 1] - xs[i];
            if (!(v0 > 0.0 && v1 > 0.0)) {
                throw DomainError("limlim_check: V must be positive on [0,1]");
            }
            // exact integral of 1 / (linear interpolant)
            s += std::abs(v1 - v0) <= 1e-12 * v0 ? h / v0 : h * std::log(v1 / v0) / (v1 - v0);
        }
        inverse_integral = s.value();
    }
    const double edge = 1.0 / std::sqrt(spec(0.0)) + 1.0 / std::sqrt(spec(1.0));
    return edge / (std::numbers::sqrt2 * inverse_integral);
}

inline LimLimReport limlim_check(const PotentialSpec& spec, const SweepResult& sweep)
{
    LimLimReport rep;
    rep.target = limlim_target(spec);
    const auto [g, l] = sweep.series(Method::spectral);
    rep.gammas = g;
    for (std::size_t i = 0; i < g.size(); ++i) rep.ratios.push_back(l[i] / std::sqrt(g[i]));
    return rep;
}

struct CrudeThresholdReport {
    std::vector<double> gammas;
    std::vector<double> normalized;  ///< critical_lambda * gamma^(-2/(alpha+2))
    double max = 0.0;                ///< empirical lower estimate of the threshold constant
    double first_decade_max = 0.0;
    double last_decade_max = 0.0;
    bool bounded = false;            ///< last-decade max <= 2 * first-decade max
};

inline CrudeThresholdReport crude_threshold_check(const PotentialSpec& spec,
                                                  const std::vector<double>& gammas,
                                                  double tol = 1e-6, unsigned threads = 1)
{
    SweepOptions opt;
    opt.methods = {Method::fk};
    opt.tol = tol;
    opt.threads = threads;
    const auto sweep = gamma_sweep(spec, gammas, opt);
    for (const auto& p : sweep.points) {
        if (p.error) throw SolverError("crude_threshold_check: " + *p.error);
    }
    CrudeThresholdReport rep;
    rep.gammas = gammas;
    const double power = 2.0 / (spec.alpha() + 2.0);
    const double g_lo = gammas.front() * 10.0;
    const double g_hi = gammas.back() / 10.0;
    for (std::size_t i = 0; i < gammas.size(); ++i) {
        const double v = sweep.points[i].lambda0 * std::pow(gammas[i], -power);
        rep.normalized.push_back(v);
        rep.max = std::max(rep.max, v);
        if (gammas[i] <= g_lo * (1.0 + 1e-12)) rep.first_decade_max = std::max(rep.first_decade_max, v);
        if (gammas[i] >= g_hi * (1.0 - 1e-12)) rep.last_decade_max = std::max(rep.last_decade_max, v);
    }
    rep.bounded = rep.last_decade_max <= 2.0 * rep.first_decade_max;
    return rep;
}

inline constexpr double kThetaProbe = 0.1;
inline constexpr std::size_t kBandMeshCells = 4096;

struct Band {
    std::string functional;     ///< gauge, potential, gauge_lower, potential_lower
    std::vector<double> gammas;
    std::vector<double> values;
    double min = 0.0;
    double max = 0.0;
    double ratio = 1.0;         ///< max / min
};

struct BandReport {
    double theta = 0.0;
    std::vector<Band> bands;
    std::vector<double> excluded_gammas;  ///< past the local eigenvalue
};

/// Tabulates the normalized Brownian functionals over the gamma grid for
/// each theta. Negative theta adds the v_theta-normalized lower bands.
inline std::vector<BandReport> lemma_band_suite(const PotentialSpec& spec,
                                                const std::vector<double>& thetas,
                                                const std::vector<double>& gammas,
                                                double theta_probe = kThetaProbe)
{
    spec.validate();
    for (double th : thetas) {
        if (!(th <= theta_probe)) {
            throw DomainError("lemma_band_suite: theta " + std::to_string(th) +
                              " lies above the probe range");
        }
    }
    std::vector<BandReport> out;
    for (double theta : thetas) {
        BandReport rep;
        rep.theta = theta;
        std::vector<std::string> names{"gauge"};
        if (theta != 0.0) names.emplace_back("potential");
        if (theta < 0.0) {
            names.emplace_back("gauge_lower");
            names.emplace_back("potential_lower");
        }
        for (const auto& name : names) rep.bands.push_back(Band{name, {}, {}, 0.0, 0.0, 1.0});
        for (double gamma : gammas) {
            const ProblemInstance instance{spec, gamma};
            const std::size_t cells = std::max(kBandMeshCells, minimal_mesh_size(instance) + 1);
            const auto f = brownian_functionals(instance, theta, build_mesh(instance, cells - 1));
            if (!f.valid) {
                rep.excluded_gammas.push_back(gamma);
                continue;
            }
            std::vector<double> vals{*f.gauge_band_ratio};
            if (theta != 0.0) vals.push_back(*f.potential_band_ratio);
            if (theta < 0.0) {
                vals.push_back(*f.gauge_band_ratio * std::sqrt(f.v_theta));
                vals.push_back(*f.potential_band_ratio * f.v_theta);
            }
            for (std::size_t k = 0; k < vals.size(); ++k) {
                rep.bands[k].gammas.push_back(gamma);
                rep.bands[k].values.push_back(vals[k]);
            }
        }
        for (auto& b : rep.bands) {
            if (b.values.empty()) continue;
            const auto [mn, mx] = std::minmax_element(b.values.begin(), b.values.end());
            b.min = *mn;
            b.max = *mx;
            b.ratio = *mx / *mn;
        }
        out.push_back(std::move(rep));
    }
    return out;
}

} // namespace nleig
