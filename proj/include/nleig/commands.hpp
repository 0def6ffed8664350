#pragma once

// The experiments behind each CLI subcommand. Every command is a pure
// function of the configuration that returns the text it would write.

#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "nleig/asymptotics.hpp"
#include "nleig/config.hpp"
#include "nleig/csv.hpp"
#include "nleig/feynman_kac.hpp"
#include "nleig/montecarlo.hpp"
#include "nleig/spectral.hpp"

namespace nleig {

inline std::string cmd_eigen(const RunConfig& cfg)
{
    CsvTable csv("nleig-eigen v1",
                 {"gamma", "alpha", "alpha_prime", "lambda0", "residual", "n_final", "error"});
    const auto gammas = cfg.gamma_grid();
    for (const auto& spec : cfg.potentials()) {
        std::vector<CsvTable::Row> rows(gammas.size());
        detail::parallel_for(gammas.size(), cfg.sim.threads, [&](std::size_t i) {
            auto& row = rows[i];
            row << gammas[i] << spec.alpha() << spec.alpha_prime();
            try {
                const auto r = lambda0_detailed(ProblemInstance{spec, gammas[i]}, cfg.tol);
                row << r.value << r.residual << r.n_final << "";
            } catch (const SolverError& e) {
                row << std::nan("") << std::nan("") << std::size_t{0} << e.what();
            }
        });
        for (auto& r : rows) csv.row() = std::move(r);
    }
    return csv.str();
}

namespace detail {

inline Mesh reporting_mesh(const ProblemInstance& instance)
{
    const std::size_t cells = std::max(kBandMeshCells, minimal_mesh_size(instance) + 1);
    return build_mesh(instance, cells - 1);
}

inline std::string join_flags(const std::vector<std::string>& flags)
{
    std::string out;
    for (const auto& f : flags) {
        if (!out.empty()) out += ';';
        out += f;
    }
    return out;
}

} // namespace detail

/// E_mu exp(lambda tau) at multiples of the critical lambda, from the
/// Feynman-Kac identity and (when selected) Monte Carlo.
inline std::string cmd_mgf(const RunConfig& cfg)
{
    CsvTable csv("nleig-mgf v1", {"alpha", "alpha_prime", "gamma", "lambda", "fk_value", "mc_value",
                                  "mc_stderr", "flags"});
    const bool use_mc = cfg.methods.count(Method::mc) > 0;
    for (const auto& spec : cfg.potentials()) {
        for (double gamma : cfg.gamma_grid()) {
            const ProblemInstance instance{spec, gamma};
            const double crit = critical_lambda(instance, cfg.tol);
            const Mesh mesh = detail::reporting_mesh(instance);
            csv.row() << spec.alpha() << spec.alpha_prime() << gamma << crit << kInfinite
                      << std::nan("") << std::nan("") << "critical";
            for (double f : cfg.mgf_fractions) {
                const double lambda = f * crit;
                std::vector<std::string> flags;
                const double fk = mgf_via_identity(instance, lambda, mesh);
                if (is_infinite(fk)) flags.emplace_back("infinite");
                double mc = std::nan(""), se = std::nan("");
                if (use_mc && gamma <= cfg.mc_gamma_limit) {
                    const auto est = estimate_mgf_mc(instance, lambda, cfg.sim);
                    mc = est.value;
                    se = est.std_error;
                    if (est.infinite_suspected) flags.emplace_back("mc_infinite_suspected");
                } else if (use_mc) {
                    flags.emplace_back("mc_skipped");
                }
                csv.row() << spec.alpha() << spec.alpha_prime() << gamma << lambda << fk << mc << se
                          << detail::join_flags(flags);
            }
        }
    }
    return csv.str();
}

/// Survival-decay estimates of lambda0 next to the spectral value.
inline std::string cmd_mc(const RunConfig& cfg)
{
    CsvTable csv("nleig-mc v1", {"alpha", "alpha_prime", "gamma", "rate", "std_error", "t_lo",
                                 "t_hi", "survivors", "spectral", "status"});
    for (const auto& spec : cfg.potentials()) {
        for (double gamma : cfg.gamma_grid()) {
            const ProblemInstance instance{spec, gamma};
            auto& row = csv.row();
            row << spec.alpha() << spec.alpha_prime() << gamma;
            const double nan = std::nan("");
            if (gamma > cfg.mc_gamma_limit) {
                row << nan << nan << nan << nan << std::size_t{0} << nan << "skipped";
                continue;
            }
            try {
                const auto est = estimate_lambda0_mc(instance, cfg.sim, std::nullopt, Start::at(cfg.x0));
                row << est.rate << est.std_error << est.window.t_lo << est.window.t_hi
                    << est.survivors_at_t_hi << lambda0(instance, cfg.tol) << "ok";
            } catch (const SolverError& e) {
                row << nan << nan << nan << nan << std::size_t{0} << nan << e.what();
            }
        }
    }
    return csv.str();
}

namespace detail {

inline CsvTable fit_table() {
    return CsvTable("nleig-fit v1", {"alpha", "alpha_prime", "method", "correction", "delta_hat",
                                     "target_delta", "std_error", "r_squared", "band_ratio",
                                     "points", "status"});
}

inline void add_fit_row(CsvTable& csv, double alpha, double alpha_prime, const std::string& method,
                        const std::vector<double>& g, const std::vector<double>& l)
{
    const auto corr = natural_correction(alpha);
    auto& row = csv.row();
    row << alpha << alpha_prime << method << correction_name(corr);
    try {
        const auto f = fit_exponent(g, l, alpha, corr);
        row << f.delta_hat << f.target_delta << f.std_error << f.r_squared << f.band_ratio
            << f.points << "ok";
    } catch (const SolverError& e) {
        const double nan = std::nan("");
        row << nan << delta_exponent(alpha) << nan << nan << nan << g.size() << e.what();
    }
}

} // namespace detail

/// Sweep rows and the exponent fit per (alpha, alpha', method).
inline std::pair<std::string, std::string> cmd_sweep_fit(const RunConfig& cfg)
{
    CsvTable sweep_csv("nleig-sweep v1", {"alpha", "alpha_prime", "gamma", "method", "lambda0",
                                          "std_error", "residual", "n_final", "status"});
    auto fit_csv = detail::fit_table();
    SweepOptions opt;
    opt.methods = cfg.methods;
    opt.tol = cfg.tol;
    opt.threads = cfg.sim.threads;
    opt.mc = cfg.sim;
    opt.mc_gamma_limit = cfg.mc_gamma_limit;
    for (const auto& spec : cfg.potentials()) {
        const auto sweep = gamma_sweep(spec, cfg.gamma_grid(), opt);
        for (const auto& p : sweep.points) {
            sweep_csv.row() << sweep.alpha << sweep.alpha_prime << p.gamma << method_name(p.method)
                            << p.lambda0 << p.std_error << p.residual << p.n_final
                            << (p.error ? *p.error : p.skipped ? "skipped" : "ok");
        }
        for (Method m : cfg.methods) {
            const auto [g, l] = sweep.series(m);
            detail::add_fit_row(fit_csv, sweep.alpha, sweep.alpha_prime, method_name(m), g, l);
        }
    }
    return {sweep_csv.str(), fit_csv.str()};
}

/// Refits a sweep CSV written by cmd_sweep_fit.
inline std::string cmd_fit(const std::string& sweep_path)
{
    const auto rows = read_csv(sweep_path);
    using Key = std::tuple<double, double, std::string>;
    std::vector<Key> order;
    std::map<Key, std::pair<std::vector<double>, std::vector<double>>> groups;
    for (const auto& r : rows) {
        for (const char* col : {"alpha", "alpha_prime", "gamma", "method", "lambda0", "status"}) {
            if (!r.count(col)) {
                throw ConfigError("fit: '" + sweep_path + "' lacks column '" + col + "'");
            }
        }
        const Key key{parse_real_field(r.at("alpha")), parse_real_field(r.at("alpha_prime")),
                      r.at("method")};
        if (!groups.count(key)) order.push_back(key);
        auto& grp = groups[key];
        if (r.at("status") != "ok") continue;
        grp.first.push_back(parse_real_field(r.at("gamma")));
        grp.second.push_back(parse_real_field(r.at("lambda0")));
    }
    auto csv = detail::fit_table();
    for (const auto& key : order) {
        const auto& [g, l] = groups.at(key);
        detail::add_fit_row(csv, std::get<0>(key), std::get<1>(key), std::get<2>(key), g, l);
    }
    return csv.str();
}

struct VerifyReport {
    std::string text;
    bool all_passed = true;
};

/// Renewal identity, limit constant, crude threshold and band checks.
inline VerifyReport cmd_verify(const RunConfig& cfg)
{
    VerifyReport rep;
    std::ostringstream out;
    out.precision(6);
    auto verdict = [&](bool ok, const std::string& name, const std::string& detail) {
        out << (ok ? "PASS " : "FAIL ") << name << ": " << detail << '\n';
        rep.all_passed = rep.all_passed && ok;
    };
    const auto specs = cfg.potentials();

    if (cfg.checks.count("renewal")) {
        const ProblemInstance instance{specs.front(), cfg.renewal_gamma};
        const auto r = check_renewal_identity(instance, cfg.renewal_lambda, cfg.x0, cfg.sim);
        std::ostringstream d;
        d.precision(6);
        d << "lhs " << r.lhs.value << " rhs " << r.rhs << " z " << r.z;
        verdict(std::abs(r.z) <= 3.0, "renewal identity", d.str());
        d.str("");
        d << "no-jump term " << r.no_jump_term.value << " gauge " << r.gauge << " z " << r.gauge_z;
        verdict(std::abs(r.gauge_z) <= 3.0, "renewal gauge term", d.str());
        d.str("");
        d << "jump term " << r.jump_term.value << " from potential " << r.jump_identity << " z "
          << r.jump_identity_z;
        verdict(std::abs(r.jump_identity_z) <= 3.0, "renewal jump term", d.str());
        const auto r0 = check_renewal_identity(instance, 0.0, cfg.x0, cfg.sim);
        d.str("");
        d << "lhs - rhs = " << r0.difference;
        verdict(std::abs(r0.difference) <= 1e-12, "renewal identity at lambda = 0", d.str());
    }

    if (cfg.checks.count("limlim")) {
        for (const auto& spec : specs) {
            std::ostringstream name;
            name << "limit constant (alpha " << spec.alpha() << ", alpha' " << spec.alpha_prime() << ")";
            double target = 0.0;
            try {
                target = limlim_target(spec);
            } catch (const DomainError& e) {
                out << "REFUSED " << name.str() << ": " << e.what() << '\n';
                continue;
            }
            SweepOptions opt;
            opt.tol = cfg.tol;
            opt.threads = cfg.sim.threads;
            const auto rep_l = limlim_check(spec, gamma_sweep(spec, cfg.limlim_gammas, opt));
            bool decreasing = rep_l.ratios.size() == cfg.limlim_gammas.size();
            for (std::size_t i = 1; decreasing && i < rep_l.ratios.size(); ++i) {
                decreasing = std::abs(rep_l.ratios[i] - target) < std::abs(rep_l.ratios[i - 1] - target);
            }
            const bool close = !rep_l.ratios.empty() &&
                               std::abs(rep_l.ratios.back() - target) <= 0.1 * target;
            std::ostringstream d;
            d.precision(6);
            d << "target " << target << " ratios";
            for (double r : rep_l.ratios) d << ' ' << r;
            verdict(close && decreasing, name.str(), d.str());
        }
    }

    if (cfg.checks.count("crude")) {
        const auto gammas = cfg.gamma_grid();
        for (const auto& spec : specs) {
            const auto c = crude_threshold_check(spec, gammas, cfg.tol, cfg.sim.threads);
            std::ostringstream name, d;
            d.precision(6);
            name << "crude threshold (alpha " << spec.alpha() << ")";
            d << "first-decade max " << c.first_decade_max << " last-decade max "
              << c.last_decade_max;
            verdict(c.bounded, name.str(), d.str());
        }
    }

    if (cfg.checks.count("bands")) {
        for (const auto& spec : specs) {
            for (const auto& b : lemma_band_suite(spec, cfg.theta_list, cfg.band_gammas,
                                                  cfg.theta_probe)) {
                for (const auto& band : b.bands) {
                    std::ostringstream name, d;
                    d.precision(6);
                    name << "band " << band.functional << " (alpha " << spec.alpha() << ", theta "
                         << b.theta << ")";
                    d << "min " << band.min << " max " << band.max << " ratio " << band.ratio
                      << " excluded " << b.excluded_gammas.size();
                    const bool lower = band.functional.find("_lower") != std::string::npos;
                    const bool ok = !band.values.empty() &&
                                    (lower ? band.min > 0.0 : b.theta < 0.0 || band.ratio <= 20.0);
                    verdict(ok, name.str(), d.str());
                }
            }
        }
    }
    rep.text = out.str();
    return rep;
}

} // namespace nleig
