// nleig: command-line driver for the eigenvalue experiments.
//
// Exit status: 0 success, 2 configuration error, 3 solver error,
// 4 a verification check failed.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "nleig/commands.hpp"
#include "nleig/config.hpp"
#include "nleig/csv.hpp"
#include "nleig/error.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitAssertion = 4;

struct Options {
    std::string config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string input;
};

nleig::RunConfig load(const Options& opt)
{
    nleig::RunConfig cfg = opt.config.empty() ? nleig::parse_config("") : nleig::load_config(opt.config);
    if (opt.out) cfg.out = *opt.out;
    if (opt.seed) cfg.sim.seed = *opt.seed;
    if (opt.threads) cfg.sim.threads = *opt.threads;
    return cfg;
}

void emit(const nleig::RunConfig& cfg, const std::string& name, const std::string& text)
{
    const auto path = std::filesystem::path(cfg.out) / name;
    nleig::write_atomically(path, text);
    std::cout << "wrote " << path.string() << '\n';
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Principal eigenvalue of the killed Brownian motion with uniform redistribution"};
    app.require_subcommand(1);
    Options opt;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "key = value configuration file")->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out, "output directory (overrides the config)");
        sub->add_option("--seed", opt.seed, "random seed (overrides the config)");
        sub->add_option("--threads", opt.threads, "worker threads, 0 for all cores");
    };
    auto* eigen = app.add_subcommand("eigen", "lambda0 by the spectral solver over the gamma grid");
    auto* mgf = app.add_subcommand("mgf", "exit-time MGF by the Feynman-Kac identity and Monte Carlo");
    auto* mc = app.add_subcommand("mc", "lambda0 from simulated survival decay");
    auto* sweep = app.add_subcommand("sweep", "gamma sweep with exponent fits");
    auto* fit = app.add_subcommand("fit", "refit the exponent from a sweep CSV");
    auto* verify = app.add_subcommand("verify", "renewal, limit-constant, threshold and band checks");
    for (auto* sub : {eigen, mgf, mc, sweep, fit, verify}) add_common(sub);
    fit->add_option("--input", opt.input, "sweep CSV (default <out>/sweep.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        const auto cfg = load(opt);
        if (eigen->parsed()) emit(cfg, "eigen.csv", nleig::cmd_eigen(cfg));
        if (mgf->parsed()) emit(cfg, "mgf.csv", nleig::cmd_mgf(cfg));
        if (mc->parsed()) emit(cfg, "mc.csv", nleig::cmd_mc(cfg));
        if (sweep->parsed()) {
            const auto [rows, fits] = nleig::cmd_sweep_fit(cfg);
            emit(cfg, "sweep.csv", rows);
            emit(cfg, "fit.csv", fits);
        }
        if (fit->parsed()) {
            const std::string input =
                opt.input.empty() ? (std::filesystem::path(cfg.out) / "sweep.csv").string() : opt.input;
            emit(cfg, "fit.csv", nleig::cmd_fit(input));
        }
        if (verify->parsed()) {
            const auto rep = nleig::cmd_verify(cfg);
            std::cout << rep.text;
            emit(cfg, "verify.txt", rep.text);
            if (!rep.all_passed) return kExitAssertion;
        }
    } catch (const nleig::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const nleig::DomainError& e) {
        std::cerr << "invalid parameter: " << e.what() << '\n';
        return kExitConfig;
    } catch (const nleig::SolverError& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitSolver;
    }
    return 0;
}
