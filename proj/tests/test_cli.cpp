#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "nleig/commands.hpp"
#include "nleig/config.hpp"
#include "nleig/csv.hpp"

using namespace nleig;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

std::string message_of(const std::string& text)
{
    try {
        (void)parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

fs::path scratch_dir(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("nleig_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(NLEIG_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const fs::path& dir, const std::string& text)
{
    const auto p = dir / "run.cfg";
    std::ofstream(p) << text;
    return p;
}

} // namespace

TEST_CASE("config parsing", "[cli]")
{
    const auto cfg = parse_config("# comment\nalpha = 0, 1 \nalpha_prime = 0\n"
                                  "gamma_min = 1e2\ngamma_max=1e5\ngamma_points = 4\n"
                                  "methods = spectral, mc\nthreads = 2\nseed = 9\n");
    CHECK(cfg.alpha == std::vector<double>{0.0, 1.0});
    REQUIRE(cfg.potentials().size() == 2);
    CHECK(cfg.potentials()[1].alpha() == 1.0);
    CHECK(cfg.potentials()[1].alpha_prime() == 0.0);
    CHECK(cfg.gamma_grid().size() == 4);
    CHECK(cfg.gamma_grid().back() == 1e5);
    CHECK(cfg.methods.count(Method::mc) == 1);
    CHECK(cfg.methods.count(Method::fk) == 0);
    CHECK(cfg.sim.threads == 2);
    CHECK(cfg.sim.seed == 9);

    const auto defaults = parse_config("");
    CHECK(defaults.gamma_grid().size() == 13);
    CHECK(defaults.checks.size() == 4);
}

TEST_CASE("config errors name the line", "[cli]")
{
    CHECK(message_of("alpha = 1\nbogus = 3\n").find("line 2: unknown key 'bogus'") != std::string::npos);
    CHECK(message_of("tol = 1e-6\n\ntol = 1e-7\n").find("line 3: duplicate key 'tol' (first set on line 1)") !=
          std::string::npos);
    CHECK(message_of("alpha\n").find("line 1") != std::string::npos);
    CHECK(message_of("alpha =\n").find("empty value") != std::string::npos);
    CHECK(message_of("tol = abc\n").find("line 1") != std::string::npos);
    CHECK(message_of("gammas = 10, 100\ngamma_min = 5\n").find("cannot be combined") != std::string::npos);
    CHECK(message_of("methods = spectral, magic\n").find("line 1") != std::string::npos);
    CHECK_FALSE(message_of("alpha = -1\n").empty());
    CHECK_FALSE(message_of("n_paths = 10\n").empty());
    CHECK_FALSE(message_of("alpha = 0, 1\nalpha_prime = 0, 1, 2\n").empty());
    CHECK_FALSE(message_of("checks = renewal, other\n").empty());
}

TEST_CASE("csv number formatting round-trips", "[cli][property]")
{
    for (double v : {0.0, -0.0, 1.0, 0.1, 1.0 / 3.0, 4.934802200544679, 1e-300, 6.02e23,
                     std::nextafter(1.0, 2.0)}) {
        const auto s = format_real(v);
        CHECK(parse_real_field(s) == v);
        CHECK(std::signbit(parse_real_field(s)) == std::signbit(v));
    }
    CHECK(format_real(INFINITY) == "inf");
    CHECK(format_real(-INFINITY) == "-inf");
    CHECK(format_real(std::nan("")) == "nan");
    CHECK(std::isinf(parse_real_field("inf")));
    CHECK(std::isnan(parse_real_field("nan")));
    CHECK_THROWS_AS(parse_real_field("1.5x"), ConfigError);

    CsvTable t("nleig-test v1", {"a", "b"});
    t.row() << 0.5 << "x,y";
    CHECK(t.str() == "# nleig-test v1\na,b\n0.5,x;y\n");
    t.row() << 1.0;
    CHECK_THROWS_AS(t.str(), SolverError);
}

TEST_CASE("eigen command", "[cli]")
{
    const auto cfg = parse_config("gammas = 0, 100, 1e4\n");
    const auto text = cmd_eigen(cfg);
    CHECK(text.rfind("# nleig-eigen v1\ngamma,alpha,alpha_prime,lambda0,residual,n_final,error\n", 0) == 0);
    CHECK(text == cmd_eigen(cfg));

    const auto dir = scratch_dir("eigen");
    write_atomically(dir / "eigen.csv", text);
    const auto rows = read_csv((dir / "eigen.csv").string());
    REQUIRE(rows.size() == 3);
    CHECK(parse_real_field(rows[0].at("lambda0")) == Approx(4.934802200544679).epsilon(1e-6));
    CHECK(parse_real_field(rows[2].at("lambda0")) == Approx(142.4394444039986).epsilon(1e-6));
    CHECK(rows[1].at("error").empty());
}

TEST_CASE("sweep output refits to the same exponent", "[cli]")
{
    const auto cfg = parse_config("alpha = 0, 2\ngamma_min = 1e3\ngamma_max = 1e7\ngamma_points = 9\n");
    const auto [sweep_csv, fit_csv] = cmd_sweep_fit(cfg);
    const auto dir = scratch_dir("sweep");
    write_atomically(dir / "sweep.csv", sweep_csv);
    const auto refit = cmd_fit((dir / "sweep.csv").string());
    write_atomically(dir / "fit.csv", fit_csv);
    write_atomically(dir / "refit.csv", refit);
    const auto a = read_csv((dir / "fit.csv").string());
    const auto b = read_csv((dir / "refit.csv").string());
    REQUIRE(a.size() == 4);
    REQUIRE(b.size() == a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].at("method") == b[i].at("method"));
        CHECK(a[i].at("status") == "ok");
        const double da = parse_real_field(a[i].at("delta_hat"));
        const double db = parse_real_field(b[i].at("delta_hat"));
        CHECK(std::abs(da - db) <= 1e-12);
    }
    CHECK(fit_csv == refit);
}

TEST_CASE("verify refuses the limit constant when V vanishes at the boundary", "[cli]")
{
    const auto cfg = parse_config("alpha = 1\nchecks = limlim\n");
    const auto rep = cmd_verify(cfg);
    CHECK(rep.text.rfind("REFUSED limit constant", 0) == 0);
    CHECK(rep.all_passed);
}

TEST_CASE("command-line exit codes", "[cli]")
{
    const auto dir = scratch_dir("exit");
    const std::string out = " --out " + dir.string();

    const auto ok = write_config(dir, "gammas = 10, 100\n");
    CHECK(run_cli("eigen --config " + ok.string() + out) == 0);
    CHECK(fs::exists(dir / "eigen.csv"));
    CHECK_FALSE(fs::exists(dir / "eigen.csv.tmp"));
    const auto first = slurp(dir / "eigen.csv");
    CHECK(run_cli("eigen --threads 3 --config " + ok.string() + out) == 0);
    CHECK(slurp(dir / "eigen.csv") == first);

    CHECK(run_cli("") == 2);
    CHECK(run_cli("eigen --no-such-flag") == 2);
    CHECK(run_cli("eigen --config " + (dir / "missing.cfg").string()) == 2);
    const auto bad = write_config(dir, "tol = 1e-6\ntol = 1e-6\n");
    CHECK(run_cli("eigen --config " + bad.string() + out) == 2);

    const auto skipped = write_config(dir, "gammas = 1e3\nmethods = mc\nmc_gamma_limit = 10\n");
    CHECK(run_cli("sweep --config " + skipped.string() + out) == 3);

    const auto far = write_config(dir, "checks = limlim\nlimlim_gammas = 5, 10, 20\n");
    CHECK(run_cli("verify --config " + far.string() + out) == 4);
    CHECK(fs::exists(dir / "verify.txt"));
}
