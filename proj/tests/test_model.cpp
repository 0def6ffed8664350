#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "nleig/model.hpp"

using namespace nleig;
using Catch::Approx;

TEST_CASE("canonical potential evaluates as a product of powers", "[model]")
{
    const auto v = PotentialSpec::power_law(2.0, 1.0);
    CHECK(eval_potential(v, 0.5) == Approx(0.125).epsilon(1e-15));
    CHECK(eval_potential(v, 0.0) == 0.0);
    CHECK(eval_potential(v, 1.0) == 0.0);

    const auto flat = PotentialSpec::power_law(0.0, 0.0);
    for (double x : {0.0, 0.13, 0.5, 0.999, 1.0}) CHECK(eval_potential(flat, x) == 1.0);

    // only the end with a positive exponent vanishes
    const auto one_sided = PotentialSpec::power_law(1.5, 0.0, 3.0);
    CHECK(eval_potential(one_sided, 0.0) == 0.0);
    CHECK(eval_potential(one_sided, 1.0) == 3.0);
}

TEST_CASE("potential arguments are validated", "[model]")
{
    CHECK_THROWS_AS(eval_potential(PotentialSpec::power_law(1, 0), -0.1), DomainError);
    CHECK_THROWS_AS(eval_potential(PotentialSpec::power_law(1, 0), 1.5), DomainError);
    CHECK_THROWS_AS(PotentialSpec::power_law(1.0, 2.0).validate(), DomainError);
    CHECK_THROWS_AS(PotentialSpec::power_law(-1.0, 0.0).validate(), DomainError);
    CHECK_THROWS_AS(PotentialSpec::power_law(1.0, 0.0, 0.0).validate(), DomainError);
    CHECK_THROWS_AS((ProblemInstance{PotentialSpec::power_law(0, 0), -1.0}.validate()), DomainError);
}

TEST_CASE("canonical potential is mirror symmetric iff the exponents agree", "[model][property]")
{
    for (double a : {0.0, 0.5, 1.0, 2.0, 3.0}) {
        for (double ap : {0.0, 0.5, 1.0, 2.0, 3.0}) {
            if (ap > a) continue;
            const auto v = PotentialSpec::power_law(a, ap);
            bool mirrored = true;
            for (double x = 0.01; x < 0.5; x += 0.01) {
                mirrored = mirrored && std::abs(v(x) - v(1.0 - x)) <= 1e-14 * std::max(v(x), 1e-300);
            }
            CHECK(mirrored == (a == ap));
            CHECK(v.symmetric() == (a == ap));
        }
    }
}

TEST_CASE("tabulated potential interpolates linearly", "[model]")
{
    const auto v = PotentialSpec::tabulated({0.0, 0.5, 1.0}, {0.0, 2.0, 1.0}, 1.0, 0.0);
    CHECK(v(0.25) == Approx(1.0));
    CHECK(v(0.75) == Approx(1.5));
    CHECK(v(1.0) == Approx(1.0));
    CHECK_THROWS_AS(PotentialSpec::tabulated({0.0, 0.6, 0.5, 1.0}, {1, 1, 1, 1}, 0, 0).validate(),
                    DomainError);
    CHECK_THROWS_AS(PotentialSpec::tabulated({0.1, 1.0}, {1, 1}, 0, 0).validate(), DomainError);
    CHECK_THROWS_AS(PotentialSpec::tabulated({0.0, 1.0}, {1, -1}, 0, 0).validate(), DomainError);
}

TEST_CASE("scaling exponent", "[model]")
{
    CHECK(delta_exponent(0.0) == Approx(0.5));
    CHECK(delta_exponent(1.0) == Approx(2.0 / 3.0));
    CHECK(delta_exponent(2.0) == Approx(0.5));
    CHECK(delta_exponent(3.0) == Approx(0.4));
    CHECK_THROWS_AS(delta_exponent(-0.5), DomainError);
}

TEST_CASE("scaling exponent rises to its peak at 1 and decays after", "[model][property]")
{
    double prev = delta_exponent(0.0);
    for (int k = 1; k <= 100; ++k) {
        const double d = delta_exponent(0.01 * k);
        CHECK(d > prev);
        prev = d;
    }
    for (int k = 1; k <= 400; ++k) {
        const double d = delta_exponent(1.0 + 0.01 * k);
        CHECK(d < prev);
        prev = d;
    }
    // continuity across the kink
    CHECK(std::abs(delta_exponent(1.0 + 1e-9) - delta_exponent(1.0 - 1e-9)) < 1e-8);
}

TEST_CASE("scaling evaluation", "[model]")
{
    const auto s = scaling(1.0, 1e4, 2.0);
    CHECK(s.r == Approx(0.1).epsilon(1e-14));
    CHECK(s.h == Approx(0.01).epsilon(1e-14));
    CHECK(s.lambda == Approx(100.0).epsilon(1e-13));
    CHECK(s.delta == Approx(0.5));

    const double e3 = std::exp(3.0);
    const auto t = scaling(1.0, e3, 1.0);
    CHECK(t.r == Approx(std::exp(-1.0)).epsilon(1e-14));
    CHECK(t.h == Approx(std::exp(-1.0) / 3.0).epsilon(1e-14));
    CHECK(t.lambda == Approx(std::exp(2.0) / 3.0).epsilon(1e-13));

    CHECK(scaling(-2.0, 50.0, 0.5).v_theta == 3.0);
    CHECK(scaling(0.5, 50.0, 0.5).v_theta == 1.0);
    CHECK_THROWS_AS(scaling(1.0, 1.0, 0.0), DomainError);
    CHECK_THROWS_AS(scaling(1.0, 0.5, 0.0), DomainError);
}

TEST_CASE("gamma h(gamma) reproduces the predicted order of lambda0", "[model][property]")
{
    for (double a : {0.0, 0.5, 1.0, 2.0, 3.0}) {
        for (double g : {1e2, 1e5, 1e9}) {
            const auto s = scaling(1.0, g, a);
            const double corr = a == 1.0 ? 1.0 / std::log(g) : 1.0;
            CHECK(g * s.h == Approx(std::pow(g, delta_exponent(a)) * corr).epsilon(1e-12));
        }
    }
}

TEST_CASE("h never exceeds r^alpha, and is negligible against it for alpha <= 1",
          "[model][property]")
{
    for (double a : {0.0, 0.5, 1.0, 1.5, 2.0, 3.0}) {
        double first = 0.0, last = 0.0;
        for (double g = std::numbers::e; g <= 1e12; g *= 3.0) {
            const auto s = scaling(1.0, g, a);
            const double ratio = s.h / std::pow(s.r, a);
            CHECK(ratio <= 1.0 + 1e-12);
            if (first == 0.0) first = ratio;
            last = ratio;
        }
        if (a <= 1.0) CHECK(last < 0.1 * first);
    }
}

TEST_CASE("h times the integral of x^-alpha beyond r stays in a band of width r",
          "[model][property]")
{
    constexpr double c = 0.5;
    for (double a : {0.0, 0.5, 1.0, 1.5, 2.0, 3.0}) {
        double lo = INFINITY, hi = 0.0;
        for (double lg = 3.0; lg <= 12.0 + 1e-9; lg += 0.25) {
            const auto s = scaling(1.0, std::pow(10.0, lg), a);
            const double v = s.h * inverse_power_integral(a, s.r, c) / s.r;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        INFO("alpha = " << a);
        CHECK(lo > 0.0);
        CHECK(hi / lo < 10.0);
    }
}

TEST_CASE("closed-form inverse power integral", "[model]")
{
    CHECK(inverse_power_integral(1.0, 0.1, 0.5) == Approx(std::log(5.0)));
    CHECK(inverse_power_integral(0.0, 0.1, 0.5) == Approx(0.4));
    CHECK(inverse_power_integral(2.0, 0.1, 0.5) == Approx(10.0 - 2.0));
    CHECK(inverse_power_integral(0.5, 0.25, 1.0) == Approx(2.0 * (1.0 - 0.5)));
    CHECK_THROWS_AS(inverse_power_integral(1.0, 0.0, 1.0), DomainError);
}
