#include "grushin/norms.hpp"
#include "grushin/variational.hpp"
#include "support.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

using namespace grushin;
using testsupport::random_field;
using testsupport::spec_for;

namespace {

Grid small_grid(int n = 16) { return build_grid(make_geometry(1, 2, 1.0), Box{4.0, 4.0}, n, n); }

Field smooth_positive(const Grid& g, double amp, double cx, double width)
{
    return g.sample([&](const double* x, const double* y) {
        const double t = ((x[0] - cx) * (x[0] - cx) + y[0] * y[0] + y[1] * y[1]) / (width * width);
        return amp * std::exp(-t);
    });
}

}  // namespace

TEST_CASE("reaction primitive integrates the truncated reaction")
{
    using boost::math::quadrature::gauss_kronrod;
    const double l1w1 = 0.7, l2w2g = 0.3, eta = 0.5, usub = 0.2;
    auto a = [&](double t) { return l1w1 * std::pow(std::max(t, usub), -eta) + l2w2g; };
    for (double s : {0.05, 0.2, 0.5, 3.0}) {
        double q = gauss_kronrod<double, 31>::integrate(a, 0.0, std::min(s, usub), 5, 1e-14);
        if (s > usub) q += gauss_kronrod<double, 31>::integrate(a, usub, s, 5, 1e-14);
        CHECK(reaction_primitive(l1w1, l2w2g, eta, usub, s) == doctest::Approx(q).epsilon(1e-12));
    }
    CHECK(reaction_primitive(0.0, 2.0, eta, usub, 1.5) == doctest::Approx(3.0));
}

TEST_CASE("energy gradient matches finite differences")
{
    const Grid g = small_grid(12);
    const BoundProblem P = bind_problem(g, spec_for(g.geom(), 0.05, 0.02));
    const Field u_sub = smooth_positive(g, 0.02, 0.0, 2.0);
    const Field gv = gradient_magnitude(g, smooth_positive(g, 0.3, 0.5, 1.5));
    // keep u - u_sub away from 0 so the kink of max{u, u_sub} is not crossed
    Field u = smooth_positive(g, 0.8, -0.3, 1.2);
    for (std::size_t i = 0; i < g.size(); ++i) u[i] += u_sub[i] + 0.1;
    const Field grad = energy_gradient(P, u_sub, gv, u);
    const double V = g.cell_volume();
    std::mt19937_64 rng(17);
    for (int k = 0; k < 20; ++k) {
        Field phi = random_field(g.size(), 100 + k);
        const double eps = 1e-5;
        Field up(u), um(u);
        for (std::size_t i = 0; i < g.size(); ++i) {
            up[i] += eps * phi[i];
            um[i] -= eps * phi[i];
        }
        const double fd = (energy(P, u_sub, gv, up) - energy(P, u_sub, gv, um)) / (2 * eps);
        const double an = V * dot(grad, phi);
        CHECK(std::abs(fd - an) <= 1e-4 * std::abs(an));
    }
    // J(0) = 0 and J(t u) -> -infinity along positive rays
    CHECK(energy(P, u_sub, gv, Field(g.size(), 0.0)) == 0.0);
    Field big(u);
    for (double& v : big) v *= 50.0;
    CHECK(energy(P, u_sub, gv, big) < 0.0);
}

TEST_CASE("Rayleigh quotient")
{
    const Grid g = small_grid(12);
    const SparseOperator A = assemble_operator(g);
    const Field u = smooth_positive(g, 1.0, 0.0, 1.0);
    Field v(u);
    for (double& x : v) x *= -3.7;
    CHECK(rayleigh_quotient(g, A, v) == doctest::Approx(rayleigh_quotient(g, A, u)).epsilon(1e-13));
    const double p = g.geom().two_star();
    const double want = g.cell_volume() * dot(u, A.apply(u)) / std::pow(lp_norm(g, u, p), 2.0);
    CHECK(rayleigh_quotient(g, A, u) == doctest::Approx(want).epsilon(1e-13));
}

TEST_CASE("discrete Sobolev constant is a local minimum below every probe")
{
    const Grid g = small_grid(16);
    const SparseOperator A = assemble_operator(g);
    SobolevOptions so;
    so.tol = 1e-12;
    const SobolevResult r = sobolev_constant(g, so);
    CHECK(r.converged);
    CHECK(lp_norm(g, r.minimizer, g.geom().two_star()) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(rayleigh_quotient(g, A, r.minimizer) == doctest::Approx(r.S).epsilon(1e-10));
    for (double s : r.start_values) CHECK(s >= r.S);
    // random smooth and rough probes
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> un(-2, 2), wd(0.3, 3);
    for (int k = 0; k < 200; ++k) {
        const Field f = smooth_positive(g, 1.0, un(rng), wd(rng));
        CHECK(rayleigh_quotient(g, A, f) >= r.S);
        CHECK(rayleigh_quotient(g, A, random_field(g.size(), 900 + k)) >= r.S);
    }
    // second-order check: small perturbations of the minimizer do not lower the quotient
    for (int k = 0; k < 20; ++k) {
        const Field phi = random_field(g.size(), 300 + k);
        Field w(r.minimizer);
        for (std::size_t i = 0; i < w.size(); ++i) w[i] += 1e-4 * phi[i] * max_abs(r.minimizer);
        CHECK(rayleigh_quotient(g, A, w) >= r.S * (1 - 1e-10));
    }
}

TEST_CASE("thresholds")
{
    // m = 1, l = 1, gamma = 2: N = 4; S = 4 gives S^{N/2}/N = 4 and L = 32
    const Geometry geo = make_geometry(1, 1, 2.0);
    ProblemSpec s = spec_for(geo, 0.01, 0.005);
    const Thresholds t = thresholds(geo, s, 4.0, 0.0, Calibration{});
    CHECK(t.L == doctest::Approx(32.0));
    CHECK(t.Lambda1 == doctest::Approx(0.04166116479214088).epsilon(1e-12));
    CHECK(t.hat_c == doctest::Approx(3.9289036552289476).epsilon(1e-12));
    CHECK(t.mp_level_c == doctest::Approx(3.99).epsilon(1e-12));
    CHECK(t.conditionality.find("C_hat=1") != std::string::npos);
    // calibration scales the corrections linearly
    const Thresholds t2 = thresholds(geo, s, 4.0, 0.0, Calibration{2.0, 1.0, 3.0});
    CHECK(4.0 - t2.hat_c == doctest::Approx(2.0 * (4.0 - t.hat_c)));
    CHECK(4.0 - t2.mp_level_c == doctest::Approx(0.03));
    CHECK_THROWS_AS(thresholds(geo, s, 0.0, 0.0, Calibration{}), std::invalid_argument);
    CHECK_THROWS_AS(thresholds(geo, s, 4.0, 0.0, Calibration{0.0, 1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("dual norm equals the dense A^{-1} form")
{
    const Grid g = small_grid(8);
    const SparseOperator A = assemble_operator(g);
    const Field f = random_field(g.size(), 21);
    const Eigen::VectorXd s = testsupport::dense(A).ldlt().solve(testsupport::vec(f));
    const double want = std::sqrt(g.cell_volume() * testsupport::vec(f).dot(s));
    CHECK(dual_norm(g, LaplaceInverse(g), f) == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("mountain pass on a small grid")
{
    const Grid g = small_grid(16);
    const BoundProblem P = bind_problem(g, spec_for(g.geom(), 1e-3, 1e-3));
    LadderOptions lo;
    lo.increment_tol = 1e-7;
    const Field u_sub = subsolution_ladder(P, lo).first;
    const SobolevResult sr = sobolev_constant(g);
    const double p = g.geom().two_star();
    Field u1 = sr.minimizer;
    for (double& v : u1) v *= 2.0 * std::pow(0.5 * p * sr.S, 1.0 / (p - 2.0));
    MountainPassOptions mo;
    mo.sphere_samples = 16;
    const MountainPassResult mp = mountain_pass(P, u_sub, u_sub, u1, sr.S, mo);
    CHECK(mp.J_u1 < 0.0);
    CHECK(mp.sphere_inf > 0.0);
    CHECK(mp.converged);
    CHECK(mp.gradient_norm <= mo.tol);
    CHECK(mp.level >= mp.sphere_inf);
    const Thresholds th = thresholds(g.geom(), P.spec, sr.S, 0.0, Calibration{});
    CHECK(mp.level < th.hat_c);
    // the returned point is critical: independent dual-norm evaluation
    const Field gr = energy_gradient(P, u_sub, gradient_magnitude(g, u_sub), mp.u);
    CHECK(dual_norm(g, LaplaceInverse(g), gr) <= mo.tol * energy_seminorm(g, P.A, mp.u) * (1 + 1e-9));
    CHECK_THROWS_AS(mountain_pass(P, u_sub, u_sub, u1, sr.S, MountainPassOptions{4}), std::invalid_argument);
}
