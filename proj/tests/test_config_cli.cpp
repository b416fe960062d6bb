#include "grushin/config.hpp"
#include "grushin/field_io.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <sys/wait.h>

using namespace grushin;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path)
{
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string reference_text() { return slurp(GRUSHIN_REFERENCE_CONFIG); }

std::string with(std::string text, const std::string& key_line, const std::string& replacement)
{
    const std::regex re("(^|\n)" + key_line + "[^\n]*");
    REQUIRE(std::regex_search(text, re));
    return std::regex_replace(text, re, "$1" + replacement, std::regex_constants::format_first_only);
}

fs::path scratch(const std::string& name)
{
    const fs::path d = fs::temp_directory_path() / "grushin_cli_test" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

// small, fast variant of the reference run
std::string small_config(const fs::path& out)
{
    std::string t = reference_text();
    t = with(t, "n_x = ", "n_x = 32");
    t = with(t, "n_y = ", "n_y = 32");
    t = with(t, "mc_samples = ", "mc_samples = 20000");
    t = with(t, "dir = ", "dir = " + out.string());
    return t;
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(GRUSHIN_LAB_EXE) + " " + args + " >/dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

}  // namespace

TEST_CASE("reference configuration parses and round-trips")
{
    const RunConfig c = load_config(GRUSHIN_REFERENCE_CONFIG);
    CHECK(c.geometry.m == 1);
    CHECK(c.geometry.ell == 2);
    CHECK(c.geometry.gamma == 1.0);
    CHECK(c.n_x == 64);
    CHECK(c.problem.lambda1 == 1e-3);
    CHECK(c.problem.w1.delta == 7.5);
    CHECK(c.solver.ladder_n_max == 1048576);
    CHECK(c.solver.seed == 20240601u);
    const std::string r1 = render_config(c);
    const RunConfig back = parse_config(r1);
    CHECK(render_config(back) == r1);
    CHECK(back.problem.w2.omega == c.problem.w2.omega);
    CHECK(back.solver.sobolev_tol == c.solver.sobolev_tol);
    CHECK(config_grid(c).size() == 64u * 64u * 64u);

    // full precision survives the round trip
    RunConfig odd = c;
    odd.problem.lambda1 = 0.1 + 0.2;
    odd.problem.lambda2 = odd.problem.lambda1 / 3.0;
    CHECK(parse_config(render_config(odd)).problem.lambda2 == odd.problem.lambda2);
}

TEST_CASE("configuration errors name the field")
{
    const std::string ref = reference_text();
    CHECK_THROWS_WITH_AS(parse_config(ref + "\n[grid]\n"), doctest::Contains("config:"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config(with(ref, "n_x = ", "n_x = 3")), doctest::Contains("grid.n_x:"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config(with(ref, "n_y = ", "n_y = many")), doctest::Contains("grid.n_y:"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config(with(ref, "lambda2 = ", "lambda2 = 0.5")), doctest::Contains("lambda2:"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config(with(ref, "eta = ", "eta = 1.5")), doctest::Contains("eta:"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config(with(ref, "m = ", "m = 0")), doctest::Contains("m:"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config(with(ref, "moser_R = ", "moser_R = 2")), doctest::Contains("verify.moser_R:"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config(with(ref, "z0_y = ", "z0_y = 0")), doctest::Contains("z0_y"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config(with(ref, "tol = ", "tol = 1e-8\ntolerance = 3")),
                         doctest::Contains("solver.tolerance: unknown key"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(load_config("/nonexistent/grushin.ini"), doctest::Contains("cannot open"),
                         std::invalid_argument);
}

TEST_CASE("thread limit from the environment")
{
    ::unsetenv("GRUSHIN_LAB_THREADS");
    CHECK(apply_thread_limit() == 0);
    ::setenv("GRUSHIN_LAB_THREADS", "1", 1);
    CHECK(apply_thread_limit() == 1);
    ::setenv("GRUSHIN_LAB_THREADS", "0", 1);
    CHECK_THROWS_AS(apply_thread_limit(), std::invalid_argument);
    ::setenv("GRUSHIN_LAB_THREADS", "two", 1);
    CHECK_THROWS_AS(apply_thread_limit(), std::invalid_argument);
    ::unsetenv("GRUSHIN_LAB_THREADS");
}

TEST_CASE("command line: usage errors exit 2")
{
    const fs::path d = scratch("usage");
    CHECK(run_cli("") == 2);
    CHECK(run_cli("frobnicate --config x") == 2);
    CHECK(run_cli("geometry") == 2);
    CHECK(run_cli("geometry --config " + (d / "missing.ini").string()) == 2);
    write_text(d / "bad.ini", with(small_config(d), "n_x = ", "n_x = 2"));
    CHECK(run_cli("geometry --config " + (d / "bad.ini").string()) == 2);
    write_text(d / "ok.ini", small_config(d));
    CHECK(run_cli("geometry --config " + (d / "ok.ini").string() + " --seed notanumber") == 2);
}

TEST_CASE("command line: geometry report")
{
    const fs::path d = scratch("geometry");
    write_text(d / "c.ini", small_config(d / "out"));
    CHECK(run_cli("geometry --config " + (d / "c.ini").string()) == 0);
    const std::string rep = slurp((d / "out" / "geometry_report.txt").string());
    CHECK(rep.find("[checks]") != std::string::npos);
    CHECK(rep.find("[config.geometry]") != std::string::npos);
    CHECK(rep.find("overall = PASS") != std::string::npos);
    // --out overrides output.dir
    CHECK(run_cli("geometry --config " + (d / "c.ini").string() + " --out " + (d / "other").string()) == 0);
    CHECK(fs::exists(d / "other" / "geometry_report.txt"));
}

TEST_CASE("command line: verify on synthetic fields")
{
    const fs::path d = scratch("verify");
    write_text(d / "c.ini", small_config(d / "out"));
    const RunConfig c = parse_config(small_config(d / "out"));
    const Grid g = config_grid(c);
    const double N = g.geom().n_gamma();

    write_field((d / "zero.grf").string(), g, Field(g.size(), 0.0));
    CHECK(run_cli("verify --config " + (d / "c.ini").string() + " --field " + (d / "zero.grf").string()) == 1);
    const std::string rep = slurp((d / "out" / "verify_report.txt").string());
    CHECK(rep.find("positivity = FAIL") != std::string::npos);

    Field u(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) u[i] = 1.0 / (1.0 + std::pow(g.dist()[i], N - 2.0));
    write_field((d / "model.grf").string(), g, u);
    CHECK(run_cli("verify --config " + (d / "c.ini").string() + " --field " + (d / "model.grf").string()) == 0);

    // missing or incompatible dumps are usage errors
    const Grid other = build_grid(g.geom(), g.box(), 16, 16);
    write_field((d / "other.grf").string(), other, Field(other.size(), 1.0));
    CHECK(run_cli("verify --config " + (d / "c.ini").string() + " --field " + (d / "other.grf").string()) == 2);
    CHECK(run_cli("verify --config " + (d / "c.ini").string() + " --field " + (d / "none.grf").string()) == 2);
}
