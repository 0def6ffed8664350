#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "nleig/closed_form.hpp"
#include "nleig/feynman_kac.hpp"
#include "nleig/montecarlo.hpp"
#include "nleig/spectral.hpp"

using namespace nleig;
using Catch::Approx;

namespace {

ProblemInstance inst(double alpha, double alpha_prime, double gamma, double amp = 1.0)
{
    return ProblemInstance{PotentialSpec::power_law(alpha, alpha_prime, amp), gamma};
}

SimConfig config(std::size_t n_paths, std::uint64_t seed = 20240501)
{
    SimConfig cfg;
    cfg.n_paths = n_paths;
    cfg.seed = seed;
    cfg.threads = 1;
    return cfg;
}

struct Moments {
    double mean, se;
};

template <class F>
Moments moments(const std::vector<PathRecord>& recs, F f)
{
    double s = 0.0, ss = 0.0;
    for (const auto& r : recs) {
        const double v = f(r);
        s += v;
        ss += v * v;
    }
    const double n = static_cast<double>(recs.size());
    const double m = s / n;
    return {m, std::sqrt((ss / n - m * m) / (n - 1.0))};
}

constexpr double kPi2Half = std::numbers::pi * std::numbers::pi / 2.0;

} // namespace

TEST_CASE("free exit time from the midpoint has mean 1/4", "[montecarlo]")
{
    const auto recs = simulate_paths(inst(0, 0, 0.0), Start::at(0.5), config(200000));
    const auto m = moments(recs, [](const PathRecord& r) { return r.tau; });
    CHECK(std::abs(m.mean - 0.25) <= 3.0 * m.se);
}

TEST_CASE("free exit-time Laplace transform matches the cosh formula", "[montecarlo]")
{
    const auto est = estimate_exponential_moment(inst(0, 0, 0.0), Start::at(0.5), -0.5, config(200000));
    const double exact = mgf_exit_decay({0.0, 1.0, 0.5, 0.5, ExitSide::both});
    CHECK(std::abs(est.value - exact) <= 3.0 * est.std_error);
    CHECK_FALSE(est.infinite_suspected);
}

TEST_CASE("mean number of jumps at small gamma", "[montecarlo]")
{
    // V = 1, uniform start: jumps form a geometric count with success probability
    // E_mu exp(-gamma tau) = 2 tanh(k/2)/k, k = sqrt(2 gamma); first order gamma <x(1-x)> = gamma/6
    const double exact = 0.016611374345271252;
    const double first_order = 0.1 / 6.0;
    const auto recs = simulate_paths(inst(0, 0, 0.1), Start::from_mu(), config(200000));
    const auto m = moments(recs, [](const PathRecord& r) { return static_cast<double>(r.n_jumps); });
    CHECK(std::abs(m.mean - exact) <= 3.0 * m.se);
    CHECK(std::abs(m.mean - first_order) <= 3.0 * m.se);
}

TEST_CASE("path records are consistent", "[montecarlo][property]")
{
    SimConfig cfg = config(20000);
    cfg.t_max = 0.05;
    const auto recs = simulate_paths(inst(2, 1, 300.0), Start::from_mu(), cfg);
    std::size_t capped = 0;
    for (const auto& r : recs) {
        CHECK(r.tau <= cfg.t_max);
        if (r.first_jump) {
            CHECK(*r.first_jump <= r.tau);
            CHECK(r.n_jumps >= 1);
        } else {
            CHECK(r.n_jumps == 0);
        }
        if (r.capped) {
            ++capped;
            CHECK(r.tau == cfg.t_max);
        }
    }
    CHECK(capped > 0);
}

TEST_CASE("records do not depend on the thread count", "[montecarlo][property]")
{
    SimConfig one = config(6000, 99);
    SimConfig many = one;
    many.threads = 3;
    const auto instance = inst(1, 0, 200.0);
    const auto a = simulate_paths(instance, Start::from_mu(), one);
    const auto b = simulate_paths(instance, Start::from_mu(), many);
    REQUIRE(a.size() == b.size());
    bool identical = true;
    for (std::size_t i = 0; i < a.size(); ++i) {
        identical = identical && a[i].tau == b[i].tau && a[i].first_jump == b[i].first_jump &&
                    a[i].n_jumps == b[i].n_jumps && a[i].capped == b[i].capped;
    }
    CHECK(identical);

    PathStream s1(5, 17), s2(5, 17);
    const auto r1 = simulate_path(instance, 0.3, one, s1);
    const auto r2 = simulate_path(instance, 0.3, one, s2);
    CHECK(r1.tau == r2.tau);
    CHECK(r1.n_jumps == r2.n_jumps);
}

TEST_CASE("thinned jump clock is exponential for constant V", "[montecarlo][property]")
{
    // gamma c = 1000: exits before the first jump have probability ~1/cosh(22) and
    // t_max = 0.02 is twenty mean jump times
    const double rate = 1000.0;
    SimConfig cfg = config(100000, 3);
    cfg.t_max = 0.02;
    const auto instance = inst(0, 0, rate);
    const auto recs = simulate_paths(instance, Start::at(0.5), cfg);
    std::vector<double> jumps;
    for (const auto& r : recs) {
        if (r.first_jump) jumps.push_back(*r.first_jump);
    }
    REQUIRE(jumps.size() > 99000);
    std::sort(jumps.begin(), jumps.end());
    const double n = static_cast<double>(jumps.size());
    double ks = 0.0;
    for (std::size_t i = 0; i < jumps.size(); ++i) {
        const double cdf = -std::expm1(-rate * jumps[i]);
        ks = std::max({ks, static_cast<double>(i + 1) / n - cdf, cdf - static_cast<double>(i) / n});
    }
    CHECK(ks < 1.628 / std::sqrt(n));
}

TEST_CASE("survival curves", "[montecarlo]")
{
    std::vector<double> grid;
    for (int k = 0; k <= 20; ++k) grid.push_back(0.05 * k);
    const auto curve = estimate_survival(inst(0, 0, 0.0), Start::at(0.5), grid, config(50000));
    for (std::size_t i = 1; i < curve.survival.size(); ++i) {
        CHECK(curve.survival[i] <= curve.survival[i - 1]);
    }
    CHECK(curve.survival.front() == 1.0);

    const auto mu = estimate_survival(inst(0, 0, 0.0), Start::from_mu(), grid, config(50000));
    CHECK(mu.survival[4] < curve.survival[4]);

    CHECK_THROWS_AS(estimate_survival(inst(0, 0, 0.0), Start::at(0.5), {15.0, 16.0}, config(2000)),
                    DegenerateCurveError);
    CHECK_THROWS_AS(estimate_survival(inst(0, 0, 0.0), Start::at(0.5), {0.2, 0.1}, config(2000)),
                    DomainError);
    CHECK_THROWS_AS(estimate_survival(inst(0, 0, 0.0), Start::at(0.5), {1.0, 30.0}, config(2000)),
                    DomainError);
}

TEST_CASE("survival decay rate", "[montecarlo]")
{
    const auto free_est = estimate_lambda0_mc(inst(0, 0, 0.0), config(200000));
    CHECK(std::abs(free_est.rate - kPi2Half) <= 3.0 * free_est.std_error);
    CHECK(free_est.survivors_at_t_hi >= kMinSurvivors);
    CHECK(free_est.window.t_lo == Approx(2.0 / kPi2Half).epsilon(0.05));

    const auto steep = estimate_lambda0_mc(inst(0, 0, 1e3), config(100000));
    CHECK(steep.rate > free_est.rate + 3.0 * (steep.std_error + free_est.std_error));

    SECTION("constant potential against the spectral solver")
    {
        const auto instance = inst(0, 0, 100.0);
        const auto est = estimate_lambda0_mc(instance, config(200000));
        const double ref = lambda0(instance, 1e-6);
        CHECK(std::abs(est.rate - ref) <= std::max(3.0 * est.std_error, 0.05 * ref));
    }
    SECTION("alpha = 2 against the blow-up point of the mgf")
    {
        const auto instance = inst(2, 2, 1e4);
        const auto est = estimate_lambda0_mc(instance, config(100000));
        const double ref = critical_lambda(instance, 1e-6);
        CHECK(std::abs(est.rate - ref) <= std::max(3.0 * est.std_error, 0.05 * ref));
    }
    SECTION("window errors")
    {
        CHECK_THROWS_AS(estimate_lambda0_mc(inst(0, 0, 0.0), config(5000), FitWindow{0.5, 10.0}),
                        WindowError);
        CHECK_THROWS_AS(estimate_lambda0_mc(inst(0, 0, 0.0), config(5000), FitWindow{0.5, 0.4}),
                        DomainError);
        try {
            (void)estimate_lambda0_mc(inst(0, 0, 0.0), config(5000), FitWindow{0.5, 10.0});
        } catch (const WindowError& e) {
            CHECK(std::string(e.what()).find("use t_hi <=") != std::string::npos);
        }
    }
}

TEST_CASE("halving dt leaves the free decay rate unchanged", "[montecarlo][property]")
{
    SimConfig coarse = config(1000000, 77);
    SimConfig fine = coarse;
    fine.dt = coarse.dt / 2.0;
    const auto a = estimate_lambda0_mc(inst(0, 0, 0.0), coarse);
    const auto b = estimate_lambda0_mc(inst(0, 0, 0.0), fine);
    const double joint = std::hypot(a.std_error, b.std_error);
    INFO("dt rates " << a.rate << " and " << b.rate << ", joint sigma " << joint);
    CHECK(std::abs(a.rate - b.rate) < joint);
}

TEST_CASE("exit-time mgf", "[montecarlo]")
{
    const auto instance = inst(0, 0, 10.0);
    const auto at_zero = estimate_mgf_mc(instance, 0.0, config(5000));
    CHECK(at_zero.value == 1.0);
    CHECK(at_zero.std_error == 0.0);
    CHECK_THROWS_AS(estimate_mgf_mc(instance, -1.0, config(5000)), DomainError);

    const double crit = critical_lambda(instance, 1e-6);
    const auto half = estimate_mgf_mc(instance, 0.5 * crit, config(100000));
    const double fk = mgf_via_identity(instance, 0.5 * crit, build_mesh(instance, 4095));
    CHECK_FALSE(half.infinite_suspected);
    CHECK(std::abs(half.value - fk) <= 3.0 * half.std_error);
    CHECK(half.truncation_mass >= 0.0);
    CHECK(half.truncation_mass <= 1.0);

    const auto twice = estimate_mgf_mc(instance, 2.0 * crit, config(100000));
    CHECK(twice.infinite_suspected);
    CHECK(is_infinite(twice.value));
}

TEST_CASE("renewal decomposition at the first jump", "[montecarlo]")
{
    const auto instance = inst(0, 0, 10.0);
    SECTION("lambda = 0 splits probability one exactly")
    {
        const auto rep = check_renewal_identity(instance, 0.0, 0.5, config(20000));
        CHECK(rep.lhs.value == 1.0);
        CHECK(rep.restart_mgf.value == 1.0);
        CHECK(std::abs(rep.difference) <= 1e-12);
        CHECK(rep.jump_term.value + rep.no_jump_term.value == Approx(1.0).epsilon(1e-12));
    }
    SECTION("lambda = 1 balances and matches the Feynman-Kac terms")
    {
        const auto rep = check_renewal_identity(instance, 1.0, 0.5, config(200000));
        CHECK(std::abs(rep.z) <= 3.0);
        CHECK(std::abs(rep.gauge_z) <= 3.0);
        CHECK(std::abs(rep.jump_identity_z) <= 3.0);
        // u(1/2) = 1 / cosh(3) and lambda w + 1 - u with w = (1 - u) / 9, offline closed forms
        CHECK(rep.gauge == Approx(0.2363502426842738).epsilon(1e-5));
        CHECK(rep.jump_identity == Approx(0.84849973035080689).epsilon(1e-5));
    }
    SECTION("lambda too close to the blow-up point is refused")
    {
        try {
            (void)check_renewal_identity(instance, 4.0, 0.5, config(2000));
            FAIL("expected a refusal");
        } catch (const DomainError& e) {
            CHECK(std::string(e.what()).find("critical_lambda = 6.64") != std::string::npos);
        }
    }
}

TEST_CASE("simulation settings are validated", "[montecarlo]")
{
    SimConfig cfg;
    cfg.dt = 1e-2;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg = SimConfig{};
    cfg.n_paths = 10;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg = SimConfig{};
    cfg.t_max = 0.0;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    CHECK_THROWS_AS(simulate_paths(inst(0, 0, 1.0), Start::at(1.0), SimConfig{}), DomainError);
    CHECK(effective_dt(inst(0, 0, 1e4), SimConfig{}) * 1e4 <= 0.1);
}
