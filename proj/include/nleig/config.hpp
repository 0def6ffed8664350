#pragma once

// Flat `key = value` run configuration. Lists are comma-separated; `#`
// starts a comment. Unknown and repeated keys are errors.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nleig/asymptotics.hpp"
#include "nleig/error.hpp"
#include "nleig/montecarlo.hpp"

namespace nleig {

struct RunConfig {
    std::vector<double> alpha{0.0};
    std::optional<std::vector<double>> alpha_prime;  ///< unset: alpha' = alpha
    double amplitude = 1.0;
    std::optional<std::vector<double>> gammas;       ///< explicit grid, overrides the log grid
    double gamma_min = 1e3;
    double gamma_max = 1e9;
    std::size_t gamma_points = 13;
    double tol = 1e-6;
    std::set<Method> methods{Method::spectral, Method::fk};
    SimConfig sim;
    double x0 = 0.5;
    double mc_gamma_limit = 1e4;
    std::vector<double> mgf_fractions{0.0, 0.25, 0.5, 2.0};  ///< lambda as a multiple of critical
    std::vector<double> theta_list{0.05, 0.1, -1.0};
    double theta_probe = kThetaProbe;
    std::vector<double> band_gammas{1e4, 1e5, 1e6, 1e7, 1e8, 1e9};
    std::vector<double> limlim_gammas{1e4, 1e5, 1e6};
    double renewal_gamma = 10.0;
    double renewal_lambda = 1.0;
    std::set<std::string> checks{"renewal", "limlim", "crude", "bands"};
    std::string out = ".";

    [[nodiscard]] std::vector<double> gamma_grid() const
    {
        return gammas ? *gammas : log_grid(gamma_min, gamma_max, gamma_points);
    }

    /// (alpha, alpha') pairs; a single alpha' applies to every alpha.
    [[nodiscard]] std::vector<PotentialSpec> potentials() const
    {
        std::vector<PotentialSpec> out_specs;
        for (std::size_t i = 0; i < alpha.size(); ++i) {
            double ap = alpha[i];
            if (alpha_prime) ap = alpha_prime->size() == 1 ? alpha_prime->front() : (*alpha_prime)[i];
            out_specs.push_back(PotentialSpec::power_law(alpha[i], ap, amplitude));
        }
        return out_specs;
    }

    void validate() const
    {
        if (alpha.empty()) throw ConfigError("alpha: at least one value required");
        if (alpha_prime && alpha_prime->size() != 1 && alpha_prime->size() != alpha.size()) {
            throw ConfigError("alpha_prime: give one value or one per alpha");
        }
        try {
            for (const auto& s : potentials()) s.validate();
            sim.validate();
            if (!gammas) (void)log_grid(gamma_min, gamma_max, gamma_points);
        } catch (const DomainError& e) {
            throw ConfigError(e.what());
        }
        if (gammas) {
            for (std::size_t i = 0; i < gammas->size(); ++i) {
                if (!((*gammas)[i] >= 0.0) || (i > 0 && !((*gammas)[i] > (*gammas)[i - 1]))) {
                    throw ConfigError("gammas: values must be nonnegative and strictly increasing");
                }
            }
        }
        if (!(tol > 0.0 && tol <= 1e-3)) throw ConfigError("tol: must lie in (0, 1e-3]");
        if (methods.empty()) throw ConfigError("methods: at least one method required");
        if (!(x0 > 0.0 && x0 < 1.0)) throw ConfigError("x0: must lie in (0,1)");
        for (double f : mgf_fractions) {
            if (!(f >= 0.0)) throw ConfigError("mgf_fractions: values must be >= 0");
        }
        for (double th : theta_list) {
            if (!(th <= theta_probe)) throw ConfigError("theta_list: values must not exceed theta_probe");
        }
    }
};

namespace detail {

inline std::string_view trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_list(std::string_view s)
{
    std::vector<std::string_view> out;
    while (true) {
        const auto comma = s.find(',');
        out.push_back(trim(s.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        s.remove_prefix(comma + 1);
    }
    return out;
}

inline double parse_real(std::string_view s)
{
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw ConfigError("'" + std::string(s) + "' is not a number");
    }
    return v;
}

template <class Int>
Int parse_integer(std::string_view s)
{
    Int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw ConfigError("'" + std::string(s) + "' is not a nonnegative integer");
    }
    return v;
}

inline std::vector<double> parse_reals(std::string_view s)
{
    std::vector<double> out;
    for (auto item : split_list(s)) out.push_back(parse_real(item));
    return out;
}

inline bool parse_flag(std::string_view s)
{
    if (s == "true" || s == "on" || s == "1") return true;
    if (s == "false" || s == "off" || s == "0") return false;
    throw ConfigError("'" + std::string(s) + "' is not a flag (true/false)");
}

inline Method parse_method(std::string_view s)
{
    if (s == "spectral") return Method::spectral;
    if (s == "fk") return Method::fk;
    if (s == "mc") return Method::mc;
    throw ConfigError("unknown method '" + std::string(s) + "' (spectral, fk, mc)");
}

} // namespace detail

inline RunConfig parse_config(std::string_view text)
{
    using namespace detail;
    RunConfig cfg;
    using Setter = std::function<void(std::string_view)>;
    const std::map<std::string, Setter, std::less<>> keys{
        {"alpha", [&](auto v) { cfg.alpha = parse_reals(v); }},
        {"alpha_prime", [&](auto v) { cfg.alpha_prime = parse_reals(v); }},
        {"amplitude", [&](auto v) { cfg.amplitude = parse_real(v); }},
        {"gammas", [&](auto v) { cfg.gammas = parse_reals(v); }},
        {"gamma_min", [&](auto v) { cfg.gamma_min = parse_real(v); }},
        {"gamma_max", [&](auto v) { cfg.gamma_max = parse_real(v); }},
        {"gamma_points", [&](auto v) { cfg.gamma_points = parse_integer<std::size_t>(v); }},
        {"tol", [&](auto v) { cfg.tol = parse_real(v); }},
        {"methods",
         [&](auto v) {
             cfg.methods.clear();
             for (auto m : split_list(v)) cfg.methods.insert(parse_method(m));
         }},
        {"seed", [&](auto v) { cfg.sim.seed = parse_integer<std::uint64_t>(v); }},
        {"dt", [&](auto v) { cfg.sim.dt = parse_real(v); }},
        {"n_paths", [&](auto v) { cfg.sim.n_paths = parse_integer<std::size_t>(v); }},
        {"t_max", [&](auto v) { cfg.sim.t_max = parse_real(v); }},
        {"bridge_correction", [&](auto v) { cfg.sim.bridge_correction = parse_flag(v); }},
        {"threads", [&](auto v) { cfg.sim.threads = parse_integer<unsigned>(v); }},
        {"x0", [&](auto v) { cfg.x0 = parse_real(v); }},
        {"mc_gamma_limit", [&](auto v) { cfg.mc_gamma_limit = parse_real(v); }},
        {"mgf_fractions", [&](auto v) { cfg.mgf_fractions = parse_reals(v); }},
        {"theta_list", [&](auto v) { cfg.theta_list = parse_reals(v); }},
        {"theta_probe", [&](auto v) { cfg.theta_probe = parse_real(v); }},
        {"band_gammas", [&](auto v) { cfg.band_gammas = parse_reals(v); }},
        {"limlim_gammas", [&](auto v) { cfg.limlim_gammas = parse_reals(v); }},
        {"renewal_gamma", [&](auto v) { cfg.renewal_gamma = parse_real(v); }},
        {"renewal_lambda", [&](auto v) { cfg.renewal_lambda = parse_real(v); }},
        {"checks",
         [&](auto v) {
             cfg.checks.clear();
             for (auto c : split_list(v)) {
                 if (c != "renewal" && c != "limlim" && c != "crude" && c != "bands") {
                     throw ConfigError("unknown check '" + std::string(c) +
                                       "' (renewal, limlim, crude, bands)");
                 }
                 cfg.checks.insert(std::string(c));
             }
         }},
        {"out", [&](auto v) { cfg.out = std::string(v); }},
    };

    std::map<std::string, std::size_t, std::less<>> seen;
    std::size_t line_no = 0;
    std::string_view rest = text;
    while (!rest.empty()) {
        ++line_no;
        const auto nl = rest.find('\n');
        std::string_view line = rest.substr(0, nl);
        rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = "line " + std::to_string(line_no) + ": ";
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        const auto it = keys.find(key);
        if (it == keys.end()) throw ConfigError(where + "unknown key '" + std::string(key) + "'");
        if (const auto prev = seen.find(key); prev != seen.end()) {
            throw ConfigError(where + "duplicate key '" + std::string(key) + "' (first set on line " +
                              std::to_string(prev->second) + ")");
        }
        seen.emplace(std::string(key), line_no);
        if (value.empty()) throw ConfigError(where + "empty value for '" + std::string(key) + "'");
        try {
            it->second(value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + std::string(key) + ": " + e.what());
        }
    }
    if (seen.count("gammas") &&
        (seen.count("gamma_min") || seen.count("gamma_max") || seen.count("gamma_points"))) {
        throw ConfigError("gammas cannot be combined with gamma_min, gamma_max or gamma_points");
    }
    cfg.validate();
    return cfg;
}

inline RunConfig load_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

} // namespace nleig
