#pragma once

// Path simulation of the jump-diffusion: Brownian motion on (0,1) killed at
// the boundary and, at rate gamma V(X), redistributed uniformly on (0,1).
//
// Each step thins the jump clock with probability 1 - exp(-gamma V dt) at
// the pre-step position; a jump lands at its truncated-exponential time
// inside the step and the Brownian segment is cut there. The segment is then
// checked for exit (sign crossing, or the Brownian-bridge crossing
// probability between two interior positions), so an exit before the jump
// time wins. Exit times inside a step are drawn from the exact law of the
// bridge's first passage, so the remaining step bias comes from freezing V
// over each step.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "nleig/closed_form.hpp"
#include "nleig/error.hpp"
#include "nleig/feynman_kac.hpp"
#include "nleig/mesh.hpp"
#include "nleig/model.hpp"
#include "nleig/rng.hpp"
#include "nleig/stats.hpp"

namespace nleig {

struct SimConfig {
    double dt = 1e-3;            ///< base step; shrunk so that gamma max(V) dt <= 0.1
    std::size_t n_paths = 100000;
    double t_max = 20.0;         ///< paths still alive at t_max are capped
    std::uint64_t seed = 1;
    bool bridge_correction = true;
    unsigned threads = 0;        ///< 0: one per hardware thread

    void validate() const
    {
        if (!(dt > 0.0 && dt <= 1e-3)) throw DomainError("SimConfig: dt must lie in (0, 1e-3]");
        if (n_paths < 1000) throw DomainError("SimConfig: n_paths must be at least 1000");
        if (!(t_max > 0.0) || !std::isfinite(t_max)) {
            throw DomainError("SimConfig: t_max must be positive and finite");
        }
    }
};

struct PathRecord {
    double tau = 0.0;                  ///< exit time, or t_max when capped
    std::optional<double> first_jump;  ///< time of the first redistribution
    std::uint64_t n_jumps = 0;
    bool capped = false;
};

/// Where paths start: a fixed point or the uniform law.
struct Start {
    double x0 = 0.5;
    bool uniform = false;

    static Start at(double x) { return Start{x, false}; }
    static Start from_mu() { return Start{0.5, true}; }
};

/// Step actually used for an instance: cfg.dt halved until gamma max(V) dt <= 0.1.
inline double effective_dt(const ProblemInstance& instance, const SimConfig& cfg)
{
    const double rate = instance.gamma * instance.potential.max_value();
    double dt = cfg.dt;
    while (rate * dt > 0.1) dt *= 0.5;
    return dt;
}

namespace detail {

/// Time from the step start at which a Brownian bridge over h first reaches
/// a level at distance a, given that it ends at distance b beyond that level
/// (or, by reflection, b short of it and known to have touched it).
/// t / (h - t) is inverse Gaussian with mean a / b and shape a^2 / h.
inline double bridge_passage_time(double a, double b, double h, PathStream& stream)
{
    if (!(a > 0.0)) return 0.0;
    if (!(b > 0.0)) return h;
    const double u = stream.inverse_gaussian(a / b, a * a / h);
    return h * u / (1.0 + u);
}

class PathSimulator {
public:
    PathSimulator(const ProblemInstance& instance, const SimConfig& cfg)
        : instance_(instance), cfg_(cfg), dt_(effective_dt(instance, cfg))
    {
        instance_.validate();
        cfg_.validate();
    }

    [[nodiscard]] double dt() const noexcept { return dt_; }

    [[nodiscard]] PathRecord run(double x0, PathStream& stream) const
    {
        const auto& v = instance_.potential;
        const double gamma = instance_.gamma;
        const double t_max = cfg_.t_max;
        PathRecord rec;
        double x = x0;
        double t = 0.0;
        std::uint64_t k = 1;
        for (;;) {
            // time from the step grid, so long paths do not accumulate rounding
            const double t_grid = std::min(static_cast<double>(k) * dt_, t_max);
            double h = t_grid - t;

            // the jump clock fires in this step with probability 1 - exp(-rate h);
            // if it does, the Brownian segment stops at the jump time
            const double rate = gamma * v(x);
            bool jump = false;
            if (rate > 0.0) {
                const double u = stream.uniform();
                if (u < -std::expm1(-rate * h)) {
                    jump = true;
                    h = std::min(h, -std::log1p(-u) / rate);
                }
            }

            const double y = x + std::sqrt(h) * stream.normal();
            if (y <= 0.0 || y >= 1.0) {
                const double a = y <= 0.0 ? x : 1.0 - x;
                const double b = y <= 0.0 ? -y : y - 1.0;
                const double s = cfg_.bridge_correction ? bridge_passage_time(a, b, h, stream)
                                                        : h * a / (a + b);
                rec.tau = t + s;
                return rec;
            }
            if (cfg_.bridge_correction && h > 0.0) {
                double hit = std::numeric_limits<double>::infinity();
                for (const auto [a, b] : {std::pair{x, y}, std::pair{1.0 - x, 1.0 - y}}) {
                    const double e = 2.0 * a * b / h;
                    if (e < 40.0 && stream.uniform() < std::exp(-e)) {
                        hit = std::min(hit, bridge_passage_time(a, b, h, stream));
                    }
                }
                if (hit <= h) {
                    rec.tau = t + hit;
                    return rec;
                }
            }

            if (jump) {
                t += h;
                x = stream.uniform();
                ++rec.n_jumps;
                if (!rec.first_jump) rec.first_jump = t;
                continue;
            }
            x = y;
            t = t_grid;
            ++k;
            if (t >= t_max) {
                rec.tau = t_max;
                rec.capped = true;
                return rec;
            }
        }
    }

private:
    ProblemInstance instance_;
    SimConfig cfg_;
    double dt_;
};

} // namespace detail

/// One path from x0, drawing from the given stream.
inline PathRecord simulate_path(const ProblemInstance& instance, double x0, const SimConfig& cfg,
                                PathStream& stream)
{
    if (!(x0 > 0.0 && x0 < 1.0)) throw DomainError("simulate_path: x0 must lie in (0,1)");
    return detail::PathSimulator(instance, cfg).run(x0, stream);
}

/// cfg.n_paths paths with stream indices first_index, first_index + 1, ...
/// Records are in index order whatever the thread count.
inline std::vector<PathRecord> simulate_paths(const ProblemInstance& instance, Start start,
                                              const SimConfig& cfg, std::uint64_t first_index = 0)
{
    if (!start.uniform && !(start.x0 > 0.0 && start.x0 < 1.0)) {
        throw DomainError("simulate_paths: x0 must lie in (0,1)");
    }
    const detail::PathSimulator sim(instance, cfg);
    std::vector<PathRecord> out(cfg.n_paths);
    auto work = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            PathStream stream(cfg.seed, first_index + i);
            const double x0 = start.uniform ? stream.uniform() : start.x0;
            out[i] = sim.run(x0, stream);
        }
    };
    unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, cfg.n_paths));
    if (threads <= 1) {
        work(0, cfg.n_paths);
        return out;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (cfg.n_paths + threads - 1) / threads;
    for (std::size_t lo = 0; lo < cfg.n_paths; lo += chunk) {
        pool.emplace_back(work, lo, std::min(cfg.n_paths, lo + chunk));
    }
    for (auto& th : pool) th.join();
    return out;
}

struct SurvivalCurve {
    std::vector<double> times;
    std::vector<double> survival;   ///< fraction of paths with tau > t
    std::vector<double> std_error;
    std::size_t n_paths = 0;
};

/// Empirical P(tau > t) on t_grid; capped paths count as survivors.
inline SurvivalCurve survival_from_records(const std::vector<PathRecord>& records,
                                           const std::vector<double>& t_grid)
{
    std::vector<double> taus;
    taus.reserve(records.size());
    for (const auto& r : records) taus.push_back(r.capped ? kInfinite : r.tau);
    std::sort(taus.begin(), taus.end());
    SurvivalCurve curve;
    curve.n_paths = records.size();
    const double n = static_cast<double>(records.size());
    for (double t : t_grid) {
        const auto alive = static_cast<double>(taus.end() - std::upper_bound(taus.begin(), taus.end(), t));
        const double p = alive / n;
        curve.times.push_back(t);
        curve.survival.push_back(p);
        curve.std_error.push_back(std::sqrt(p * (1.0 - p) / n));
    }
    return curve;
}

inline SurvivalCurve estimate_survival(const ProblemInstance& instance, Start start,
                                       const std::vector<double>& t_grid, const SimConfig& cfg)
{
    cfg.validate();
    if (t_grid.empty()) throw DomainError("estimate_survival: empty time grid");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (!(t_grid[i] >= 0.0) || (i > 0 && !(t_grid[i] > t_grid[i - 1]))) {
            throw DomainError("estimate_survival: time grid must be nonnegative and increasing");
        }
    }
    if (t_grid.back() > cfg.t_max) throw DomainError("estimate_survival: grid extends past t_max");
    auto curve = survival_from_records(simulate_paths(instance, start, cfg), t_grid);
    if (curve.survival.front() == 0.0) {
        throw DegenerateCurveError("estimate_survival: every path exited before t = " +
                                   std::to_string(t_grid.front()));
    }
    return curve;
}

struct FitWindow {
    double t_lo = 0.0;
    double t_hi = 0.0;
};

struct Lambda0Estimate {
    double rate = 0.0;
    double std_error = 0.0;     ///< 10-group jackknife over paths
    FitWindow window;
    std::size_t survivors_at_t_hi = 0;
};

inline constexpr std::size_t kMinSurvivors = 100;
inline constexpr std::size_t kFitPoints = 32;
inline constexpr std::size_t kJackknifeGroups = 10;

namespace detail {

/// Negated WLS slope of ln P(tau > t) over the window, from sorted exit times.
inline double decay_rate(const std::vector<double>& sorted_taus, FitWindow w)
{
    const double n = static_cast<double>(sorted_taus.size());
    std::vector<double> ts, ys, ws;
    for (std::size_t k = 0; k < kFitPoints; ++k) {
        const double t = w.t_lo + (w.t_hi - w.t_lo) * static_cast<double>(k) /
                                      static_cast<double>(kFitPoints - 1);
        const auto alive = static_cast<double>(
            sorted_taus.end() - std::upper_bound(sorted_taus.begin(), sorted_taus.end(), t));
        if (alive == 0.0) continue;
        const double p = alive / n;
        ts.push_back(t);
        ys.push_back(std::log(p));
        // inverse of the binomial variance of ln p, kept finite at p = 1
        ws.push_back(n * p / (1.0 - p + 1.0 / n));
    }
    if (ts.size() < 3) throw WindowError("estimate_lambda0_mc: fewer than 3 usable fit points");
    return -least_squares(ts, ys, ws).slope;
}

inline std::size_t count_alive(const std::vector<double>& sorted_taus, double t)
{
    return static_cast<std::size_t>(sorted_taus.end() -
                                    std::upper_bound(sorted_taus.begin(), sorted_taus.end(), t));
}

} // namespace detail

/// Decay rate of the survival probability from records. Without a window,
/// t_hi is the latest time with at least 100 survivors and t_lo = 2 / rate
/// from a pilot fit over [t_hi / 4, t_hi].
inline Lambda0Estimate lambda0_from_records(const std::vector<PathRecord>& records,
                                            std::optional<FitWindow> window = std::nullopt)
{
    std::vector<double> taus;
    taus.reserve(records.size());
    for (const auto& r : records) taus.push_back(r.capped ? kInfinite : r.tau);
    std::vector<double> sorted = taus;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.size() <= kMinSurvivors) {
        throw WindowError("estimate_lambda0_mc: need more than 100 paths");
    }
    const double default_hi = sorted[sorted.size() - kMinSurvivors - 1];

    FitWindow w;
    if (window) {
        w = *window;
        if (!(w.t_lo >= 0.0 && w.t_hi > w.t_lo)) {
            throw DomainError("estimate_lambda0_mc: fit window must satisfy 0 <= t_lo < t_hi");
        }
        const std::size_t alive = detail::count_alive(sorted, w.t_hi);
        if (alive < kMinSurvivors) {
            std::ostringstream msg;
            msg << "estimate_lambda0_mc: only " << alive << " paths survive to t_hi = " << w.t_hi
                << "; use t_hi <= " << default_hi;
            throw WindowError(msg.str());
        }
    } else {
        if (!std::isfinite(default_hi) || !(default_hi > 0.0)) {
            throw WindowError("estimate_lambda0_mc: survivors do not decay before t_max; raise t_max");
        }
        const double pilot = detail::decay_rate(sorted, {0.25 * default_hi, default_hi});
        if (!(pilot > 0.0)) throw WindowError("estimate_lambda0_mc: survival curve does not decay");
        w = {2.0 / pilot, default_hi};
        if (!(w.t_lo < w.t_hi)) {
            std::ostringstream msg;
            msg << "estimate_lambda0_mc: window [" << w.t_lo << ", " << w.t_hi
                << "] is empty; increase n_paths";
            throw WindowError(msg.str());
        }
    }

    Lambda0Estimate est;
    est.window = w;
    est.survivors_at_t_hi = detail::count_alive(sorted, w.t_hi);
    est.rate = detail::decay_rate(sorted, w);

    std::vector<double> leave_out(kJackknifeGroups);
    for (std::size_t g = 0; g < kJackknifeGroups; ++g) {
        std::vector<double> rest;
        rest.reserve(taus.size());
        for (std::size_t i = 0; i < taus.size(); ++i) {
            if (i % kJackknifeGroups != g) rest.push_back(taus[i]);
        }
        std::sort(rest.begin(), rest.end());
        leave_out[g] = detail::decay_rate(rest, w);
    }
    CompensatedSum mean;
    for (double r : leave_out) mean += r;
    const double m = mean.value() / static_cast<double>(kJackknifeGroups);
    CompensatedSum ss;
    for (double r : leave_out) ss += (r - m) * (r - m);
    const double g = static_cast<double>(kJackknifeGroups);
    est.std_error = std::sqrt((g - 1.0) / g * ss.value());
    return est;
}

inline Lambda0Estimate estimate_lambda0_mc(const ProblemInstance& instance, const SimConfig& cfg,
                                           std::optional<FitWindow> window = std::nullopt,
                                           Start start = Start::at(0.5))
{
    cfg.validate();
    if (window && window->t_hi > cfg.t_max) {
        throw DomainError("estimate_lambda0_mc: t_hi exceeds t_max");
    }
    return lambda0_from_records(simulate_paths(instance, start, cfg), window);
}

struct MgfEstimate {
    double value = 0.0;              ///< +infinity when infinite_suspected
    double sample_mean = 0.0;        ///< mean over uncapped paths, reported even when suspected
    double std_error = 0.0;
    double truncation_mass = 0.0;    ///< share of the sum carried by the top 1% of weights
    double capped_fraction = 0.0;
    bool infinite_suspected = false;
    std::size_t n_used = 0;
};

inline constexpr double kTruncationLimit = 0.5;
inline constexpr double kCappedLimit = 1e-3;
inline constexpr double kCappedHorizon = 30.0;

/// Sample mean of exp(lambda tau) over uncapped records.
inline MgfEstimate mgf_from_records(const std::vector<PathRecord>& records, double lambda,
                                    double t_max)
{
    MgfEstimate est;
    std::vector<double> w;
    w.reserve(records.size());
    std::size_t capped = 0;
    for (const auto& r : records) {
        if (r.capped) {
            ++capped;
            continue;
        }
        w.push_back(lambda == 0.0 ? 1.0 : std::exp(lambda * r.tau));
    }
    est.n_used = w.size();
    est.capped_fraction = static_cast<double>(capped) / static_cast<double>(records.size());
    if (w.empty()) {
        est.infinite_suspected = lambda > 0.0;
        est.value = est.sample_mean = est.infinite_suspected ? kInfinite : 0.0;
        est.truncation_mass = 1.0;
        return est;
    }
    CompensatedSum total;
    for (double x : w) total += x;
    const double n = static_cast<double>(w.size());
    est.sample_mean = total.value() / n;
    CompensatedSum ss;
    for (double x : w) ss += (x - est.sample_mean) * (x - est.sample_mean);
    est.std_error = w.size() > 1 ? std::sqrt(ss.value() / (n - 1.0) / n) : 0.0;

    const std::size_t top = std::max<std::size_t>(1, (w.size() + 99) / 100);
    std::nth_element(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(top - 1), w.end(),
                     std::greater<>());
    CompensatedSum head;
    for (std::size_t i = 0; i < top; ++i) head += w[i];
    est.truncation_mass = std::isfinite(total.value())
                              ? std::clamp(head.value() / total.value(), 0.0, 1.0)
                              : 1.0;

    est.infinite_suspected =
        lambda > 0.0 && (!std::isfinite(est.sample_mean) || est.truncation_mass > kTruncationLimit ||
                         (est.capped_fraction > kCappedLimit && lambda * t_max > kCappedHorizon));
    est.value = est.infinite_suspected ? kInfinite : est.sample_mean;
    return est;
}

/// E[exp(lambda tau)] from the given start, any real lambda.
inline MgfEstimate estimate_exponential_moment(const ProblemInstance& instance, Start start,
                                               double lambda, const SimConfig& cfg)
{
    cfg.validate();
    return mgf_from_records(simulate_paths(instance, start, cfg), lambda, cfg.t_max);
}

/// E_mu[exp(lambda tau)].
inline MgfEstimate estimate_mgf_mc(const ProblemInstance& instance, double lambda,
                                   const SimConfig& cfg)
{
    if (!(lambda >= 0.0)) throw DomainError("estimate_mgf_mc: lambda must be >= 0");
    return estimate_exponential_moment(instance, Start::from_mu(), lambda, cfg);
}

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

struct RenewalReport {
    double lambda = 0.0;
    double x0 = 0.5;
    double critical = 0.0;      ///< blow-up point of the mgf, from the Feynman-Kac solver
    Estimate lhs;               ///< E_x exp(lambda tau)
    Estimate jump_term;         ///< E_x exp(lambda J) 1{J < tau}
    Estimate restart_mgf;       ///< E_mu exp(lambda tau), independent paths
    Estimate no_jump_term;      ///< E_x exp(lambda tau) 1{tau < J}
    double rhs = 0.0;           ///< jump_term * restart_mgf + no_jump_term
    double difference = 0.0;    ///< lhs - rhs
    double combined_se = 0.0;
    double z = 0.0;             ///< difference / combined_se (0 when both vanish)
    double gauge = 0.0;         ///< u(x0)
    double gauge_z = 0.0;       ///< (no_jump_term - u(x0)) / se
    double jump_identity = 0.0; ///< lambda w(x0) + 1 - u(x0)
    double jump_identity_z = 0.0;
    std::size_t n_capped = 0;
};

inline constexpr std::size_t kRenewalMeshCells = 4096;

namespace detail {

inline Estimate mean_estimate(const std::vector<double>& xs)
{
    CompensatedSum s;
    for (double x : xs) s += x;
    const double n = static_cast<double>(xs.size());
    const double m = s.value() / n;
    CompensatedSum ss;
    for (double x : xs) ss += (x - m) * (x - m);
    return {m, xs.size() > 1 ? std::sqrt(ss.value() / (n - 1.0) / n) : 0.0};
}

inline double z_score(double diff, double se)
{
    if (se > 0.0) return diff / se;
    return std::abs(diff) <= 1e-12 ? 0.0 : std::copysign(kInfinite, diff);
}

} // namespace detail

/// Monte Carlo check of the renewal decomposition at the first jump from x0,
/// with the no-jump and jump terms compared to the Feynman-Kac gauge and
/// potential at x0. Requires lambda < critical / 2.
inline RenewalReport check_renewal_identity(const ProblemInstance& instance, double lambda,
                                            double x0, const SimConfig& cfg)
{
    cfg.validate();
    if (!(x0 > 0.0 && x0 < 1.0)) throw DomainError("check_renewal_identity: x0 must lie in (0,1)");
    RenewalReport rep;
    rep.lambda = lambda;
    rep.x0 = x0;
    rep.critical = critical_lambda(instance, 1e-6);
    if (!(lambda >= 0.0 && lambda < 0.5 * rep.critical)) {
        std::ostringstream msg;
        msg << "check_renewal_identity: lambda = " << lambda
            << " must lie in [0, critical_lambda / 2) with critical_lambda = " << rep.critical;
        throw DomainError(msg.str());
    }

    const auto paths = simulate_paths(instance, Start::at(x0), cfg, 0);
    const auto restart = simulate_paths(instance, Start::from_mu(), cfg, cfg.n_paths);
    auto e = [&](double t) { return lambda == 0.0 ? 1.0 : std::exp(lambda * t); };

    std::vector<double> restart_w;
    restart_w.reserve(restart.size());
    for (const auto& r : restart) {
        if (!r.capped) restart_w.push_back(e(r.tau));
    }
    rep.restart_mgf = detail::mean_estimate(restart_w);
    const double m = rep.restart_mgf.value;

    std::vector<double> full, jump, no_jump, balance;
    for (const auto& r : paths) {
        if (r.capped) {
            ++rep.n_capped;
            continue;
        }
        const bool jumped = r.first_jump.has_value();
        full.push_back(e(r.tau));
        jump.push_back(jumped ? e(*r.first_jump) : 0.0);
        no_jump.push_back(jumped ? 0.0 : e(r.tau));
        balance.push_back(jumped ? e(r.tau) - e(*r.first_jump) * m : 0.0);
    }
    if (full.empty()) throw SolverError("check_renewal_identity: every path was capped");
    rep.lhs = detail::mean_estimate(full);
    rep.jump_term = detail::mean_estimate(jump);
    rep.no_jump_term = detail::mean_estimate(no_jump);
    rep.rhs = rep.jump_term.value * m + rep.no_jump_term.value;
    rep.difference = rep.lhs.value - rep.rhs;
    const auto bal = detail::mean_estimate(balance);
    const double jt = rep.jump_term.value;
    rep.combined_se = std::sqrt(bal.std_error * bal.std_error +
                                jt * jt * rep.restart_mgf.std_error * rep.restart_mgf.std_error);
    rep.z = detail::z_score(rep.difference, rep.combined_se);

    const std::size_t cells = std::max(kRenewalMeshCells, minimal_mesh_size(instance) + 1);
    const Mesh mesh = build_mesh(instance, cells - 1);
    const auto fk = solve_fk(instance, lambda, mesh);
    if (!fk.ok()) throw SolverError("check_renewal_identity: lambda past the local eigenvalue");
    rep.gauge = mesh.interpolate(fk.gauge, x0, 1.0, 1.0);
    rep.jump_identity = lambda * mesh.interpolate(fk.potential, x0) + 1.0 - rep.gauge;
    rep.gauge_z = detail::z_score(rep.no_jump_term.value - rep.gauge, rep.no_jump_term.std_error);
    rep.jump_identity_z =
        detail::z_score(rep.jump_term.value - rep.jump_identity, rep.jump_term.std_error);
    return rep;
}

} // namespace nleig
