#include "grushin/analysis.hpp"
#include "grushin/linsolve.hpp"
#include "grushin/norms.hpp"
#include "grushin/sparse_operator.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

using namespace grushin;

namespace {

Point origin(const Geometry& g) { return Point{std::vector<double>(g.m, 0.0), std::vector<double>(g.ell, 0.0)}; }

// (1 + d^{N-2})^{-1}: the profile of the fundamental solution, regularized at the origin
Field model_profile(const Grid& g, double p)
{
    Field u(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) u[i] = 1.0 / (1.0 + std::pow(g.dist()[i], p));
    return u;
}

}  // namespace

TEST_CASE("Moser bound: iteration schedule and the bound on subsolutions")
{
    const Grid g = build_grid(make_geometry(1, 2, 1.0), Box{4.0, 4.0}, 16, 16);
    const SparseOperator A = assemble_operator(g);
    const double N = g.geom().n_gamma(), S = 2.0, alpha = 2.0;
    Field f = g.sample([](const double* x, const double* y) { return std::exp(-(x[0] * x[0] + y[0] * y[0] + y[1] * y[1])); });
    const Field u = solve_laplacian(g, A, f, 1e-12).first;
    const MoserBound mb = moser_bound(g, u, 0.0, max_abs(f), alpha, origin(g.geom()), 1.0, S, 10);
    REQUIRE(mb.schedule_log.size() == 10);
    const double C = std::pow(S, -0.5) * 3.0;
    CHECK(mb.C == doctest::Approx(C));
    double logK = 0.0;
    for (int j = 0; j < 10; ++j) {
        const MoserStep& st = mb.schedule_log[j];
        const double r = std::pow(N / (N - 2.0), j) * alpha / 2.0;
        CHECK(st.j == j);
        CHECK(st.r == doctest::Approx(r).epsilon(1e-14));
        CHECK(st.h == 1.0 + std::pow(2.0, -j));
        CHECK(st.factor == doctest::Approx(std::pow(4.0 * C * (1.0 + r) * std::pow(2.0, j + 1), 1.0 / r)).epsilon(1e-12));
        logK += std::log(st.factor);
    }
    CHECK(mb.K >= std::exp(logK) * (1 - 1e-12));
    CHECK(mb.pass);
    CHECK(mb.measured_sup <= mb.bound_value);

    CHECK_THROWS_AS(moser_bound(g, u, 0.0, 1.0, 1.0, origin(g.geom()), 1.0, S), std::invalid_argument);
    CHECK_THROWS_AS(moser_bound(g, u, 0.0, 1.0, 2.0, origin(g.geom()), 3.0, S), std::invalid_argument);
    Field neg(u);
    neg[std::min_element(g.dist().begin(), g.dist().end()) - g.dist().begin()] = -1.0;
    CHECK_THROWS_AS(moser_bound(g, neg, 0.0, 1.0, 2.0, origin(g.geom()), 1.0, S), std::invalid_argument);
}

TEST_CASE("decay fit recovers synthetic exponents")
{
    const Grid g = build_grid(make_geometry(1, 2, 1.0), Box{8.0, 8.0}, 48, 48);
    const double N = g.geom().n_gamma();
    for (double p : {N - 2.0, 2.0, 4.5}) {
        const DecayFit f = decay_fit(g, model_profile(g, p), 1.0, 4.0);
        CHECK(f.fitted_exponent == doctest::Approx(-p).epsilon(0.01));
        CHECK(f.r_squared > 0.999);
    }
    const DecayFit f = decay_fit(g, model_profile(g, N - 2.0), 1.0, 4.0);
    CHECK(f.C0 == doctest::Approx(1.0));
    CHECK(f.C1 == doctest::Approx(1.0));
    CHECK(f.C0 <= f.C1);
    CHECK_THROWS_AS(decay_fit(g, model_profile(g, 3.0), 1.0, 100.0), std::invalid_argument);
    CHECK_THROWS_AS(decay_fit(g, Field(g.size(), 0.0), 1.0, 4.0), std::invalid_argument);
}

TEST_CASE("barrier window")
{
    const Geometry g = make_geometry(1, 2, 1.0);  // N = 5: window (-3, -1.5)
    CHECK_NOTHROW(check_barrier_window(g, BarrierVariant::power, -2.0));
    CHECK_THROWS_WITH_AS(check_barrier_window(g, BarrierVariant::power, -3.0),
                         "q: violates 2 - n_gamma < q (q = -3, 2 - n_gamma = -3)", std::invalid_argument);
    CHECK_THROWS_WITH_AS(check_barrier_window(g, BarrierVariant::power, -1.0),
                         "q: violates q < 1 - n_gamma/2 (q = -1, 1 - n_gamma/2 = -1.5)", std::invalid_argument);
    CHECK_THROWS_WITH_AS(check_barrier_window(g, BarrierVariant::separated, -3.0),
                         "ell: violates ell > 4 (ell = 2)", std::invalid_argument);
    const Geometry h = make_geometry(1, 6, 1.0);  // window (-4, -3)
    CHECK_NOTHROW(check_barrier_window(h, BarrierVariant::separated, -3.5));
    CHECK_THROWS_WITH_AS(check_barrier_window(h, BarrierVariant::separated, -3.0),
                         "q: violates q < -ell/2 (q = -3, -ell/2 = -3)", std::invalid_argument);
    CHECK_THROWS_WITH_AS(check_barrier_window(h, BarrierVariant::separated, -4.5),
                         "q: violates 2 - ell < q (q = -4.5, 2 - ell = -4)", std::invalid_argument);
}

TEST_CASE("power barrier: sign and second-order consistency")
{
    for (double gam : {0.0, 1.0}) {
        const Geometry geo = make_geometry(1, 2, gam);
        const double N = geo.n_gamma(), q = 0.5 * ((2.0 - N) + (1.0 - 0.5 * N));
        double prev = 0.0;
        for (int n : {32, 64, 128}) {
            const Grid g = build_grid(geo, Box{2.25, 2.25}, n, n);
            const BarrierReport r = barrier_residual(g, BarrierParams{1.0, q});
            CHECK(r.sign_certificate);
            CHECK(r.C == doctest::Approx(-q * (q - 2.0 + N)));
            if (prev > 0.0) CHECK(prev / r.max_rel_error >= 3.5);
            prev = r.max_rel_error;
        }
    }
}

TEST_CASE("separated barrier in l = 5")
{
    // six dimensions only allow coarse grids; the error decreases but is not yet in the asymptotic regime
    const Geometry geo = make_geometry(1, 5, 1.0);
    BarrierParams bp;
    bp.variant = BarrierVariant::separated;
    bp.q = -2.75;
    bp.a = 0.5;
    bp.y_min = 1.0;
    double prev = INFINITY;
    for (int n : {8, 10, 12}) {
        const BarrierReport r = barrier_residual(build_grid(geo, Box{3.0, 3.0}, n, n), bp);
        CHECK(r.sign_certificate);
        CHECK(r.C == doctest::Approx(2.75 * 0.25));
        CHECK(r.max_rel_error < prev);
        prev = r.max_rel_error;
    }
}

TEST_CASE("interpolation is exact on multilinear functions")
{
    const Grid g = build_grid(make_geometry(1, 2, 1.0), Box{2.0, 3.0}, 8, 10);
    auto f = [](double x, double y1, double y2) { return 1.0 + 2 * x - y1 + 0.5 * x * y2 + 0.25 * x * y1 * y2; };
    const Field u = g.sample([&](const double* x, const double* y) { return f(x[0], y[0], y[1]); });
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> ux(-1.7, 1.7), uy(-2.6, 2.6);
    for (int k = 0; k < 100; ++k) {
        const double x = ux(rng), y[2] = {uy(rng), uy(rng)};
        CHECK(interpolate(g, u, &x, y) == doctest::Approx(f(x, y[0], y[1])).epsilon(1e-12));
    }
    const double far = 5.0, y0[2] = {0.0, 0.0};
    CHECK(interpolate(g, u, &far, y0) == 0.0);
}

TEST_CASE("rescale on the node-preserving grid")
{
    const Grid g = build_grid(make_geometry(1, 2, 1.0), Box{8.0, 8.0}, 32, 32);
    const double N = g.geom().n_gamma();
    const Field u = model_profile(g, N - 2.0);
    const auto [g2, u2] = rescale(g, u, 2.0);
    CHECK(g2.box().x_half == doctest::Approx(4.0));
    CHECK(g2.box().y_half == doctest::Approx(2.0));
    CHECK(g2.size() == g.size());
    // pulled-back nodes are the images of source nodes under the inverse dilation
    for (std::size_t i : {std::size_t(0), std::size_t(777), g.size() - 1}) {
        CHECK(g2.coord(i, 0) * 2.0 == doctest::Approx(g.coord(i, 0)));
        CHECK(g2.coord(i, 1) * 4.0 == doctest::Approx(g.coord(i, 1)));
        CHECK(u2[i] == doctest::Approx(std::pow(2.0, N - 2.0) * u[i]));
    }
    const double s = g.geom().two_lower_star() - 1.0;
    const double w0 = weak_norm(g, u, s);
    for (double R : {2.0, 4.0}) {
        const auto [gr, ur] = rescale(g, u, R);
        CHECK(std::abs(weak_norm(gr, ur, s) - w0) <= 1e-12 * w0);
        // any other exponent is not invariant
        CHECK(std::abs(weak_norm(gr, ur, 1.1 * s) - weak_norm(g, u, 1.1 * s)) > 0.02 * weak_norm(g, u, 1.1 * s));
        // ||grad_gamma u_R||_2^2 = R^{N-2} ||grad_gamma u||_2^2
        CHECK(gamma_seminorm(gr, ur) == doctest::Approx(std::pow(R, 0.5 * (N - 2.0)) * gamma_seminorm(g, u)).epsilon(1e-12));
    }
    CHECK(rescale(g, u, 1.0).second == u);
    CHECK_THROWS_AS(rescale(g, u, 0.0), std::invalid_argument);
}

TEST_CASE("rescale at the source spacing")
{
    const Grid g = build_grid(make_geometry(1, 2, 1.0), Box{8.0, 8.0}, 128, 128);
    const Field u = g.sample([](const double* x, const double* y) {
        return std::exp(-0.25 * x[0] * x[0] - (y[0] * y[0] + y[1] * y[1]) / 9.0);
    });
    const auto [g2, u2] = rescale(g, u, 2.0, RescaleGrid::same_spacing);
    CHECK(g2.h_x() == doctest::Approx(g.h_x()));
    CHECK(g2.n_x() == 64);
    CHECK(g2.n_y() == 32);
    const auto [g3, u3] = rescale(g2, u2, 0.5, RescaleGrid::same_spacing);
    REQUIRE(g3.same_as(g));
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(u3[i] - u[i]));
    CHECK(err <= 0.04 * max_abs(u));
    CHECK_THROWS_AS(rescale(g, u, 32.0, RescaleGrid::same_spacing), std::invalid_argument);
}

TEST_CASE("weak membership check")
{
    const Grid g = build_grid(make_geometry(1, 2, 1.0), Box{4.0, 4.0}, 16, 16);
    const double N = g.geom().n_gamma();
    const Field u = model_profile(g, N - 2.0);
    const WeakMembership wm = weak_membership_check(g, u);
    CHECK(wm.s == doctest::Approx(N / (N - 2.0)));
    CHECK(wm.weak_norm == doctest::Approx(weak_norm(g, u, wm.s)).epsilon(1e-14));
    CHECK_FALSE(wm.tail.empty());
    for (const auto& [h, val] : wm.tail) CHECK(val <= wm.weak_norm);
    Field neg(u);
    neg[0] = -1.0;
    CHECK_THROWS_AS(weak_membership_check(g, neg), std::invalid_argument);
}

TEST_CASE("concentration profile")
{
    const Grid g = build_grid(make_geometry(1, 2, 1.0), Box{4.0, 4.0}, 16, 16);
    const Field u = model_profile(g, 3.0);
    const ConcentrationProfile cp = concentration_profile(g, u, {0.0, 0.5, 1.0, 2.0, 3.0});
    CHECK(cp.tail_mass_crit.front() == doctest::Approx(cp.total_crit));
    CHECK(cp.tail_mass_grad.front() == doctest::Approx(cp.total_grad));
    CHECK(cp.total_grad == doctest::Approx(std::pow(gamma_seminorm(g, u), 2.0)));
    for (std::size_t k = 1; k < cp.radii.size(); ++k) {
        CHECK(cp.tail_mass_crit[k] <= cp.tail_mass_crit[k - 1]);
        CHECK(cp.tail_mass_grad[k] <= cp.tail_mass_grad[k - 1]);
    }
    CHECK_THROWS_AS(concentration_profile(g, u, {1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("Peter-Paul inequality")
{
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> ub(0, 3), ue(0.05, 5), up(1.2, 6);
    for (int k = 0; k < 500; ++k) {
        const double p0 = up(rng), p1 = 1.0 / (1.0 - 1.0 / p0);
        const auto [lhs, rhs] = peter_paul({ub(rng), ub(rng)}, {p0, p1}, ue(rng));
        CHECK(lhs <= rhs * (1 + 1e-12));
        const double a = up(rng), b = up(rng);
        if (1.0 / a + 1.0 / b > 0.95) continue;
        const double c = 1.0 / (1.0 - 1.0 / a - 1.0 / b);
        const auto [l3, r3] = peter_paul({ub(rng), ub(rng), ub(rng)}, {a, b, c}, ue(rng));
        CHECK(l3 <= r3 * (1 + 1e-12));
    }
    // equality at eps = 1, b0^{p0} = b1^{p1}
    const auto [l, r] = peter_paul({2.0, 4.0}, {2.0, 2.0}, 0.5);
    CHECK(l == 8.0);
    CHECK(r == doctest::Approx(0.5 * 2.0 + 2.0 * 8.0));
    CHECK_THROWS_AS(peter_paul({1.0, 1.0}, {2.0, 3.0}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(peter_paul({1.0}, {2.0}, 1.0), std::invalid_argument);
}
