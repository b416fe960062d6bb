#include "grushin/field_io.hpp"
#include "grushin/grid.hpp"
#include "grushin/norms.hpp"
#include "grushin/sparse_operator.hpp"

#include <Eigen/Dense>
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

using namespace grushin;

namespace {

Grid grid3(double gamma, double half, int n)
{
    return build_grid(make_geometry(1, 2, gamma), Box{half, half}, n, n);
}

Eigen::MatrixXd dense(const SparseOperator& A)
{
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(A.n, A.n);
    for (std::size_t i = 0; i < A.n; ++i)
        for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) M(i, A.col[k]) = A.val[k];
    return M;
}

// smooth bump and its exact Grushin derivatives (m = 1, l = 2)
double bump(double x, double y1, double y2) { return std::exp(-(x * x + y1 * y1 + y2 * y2)); }

double neg_lap_gamma_bump(double gamma, double x, double y1, double y2)
{
    const double b = bump(x, y1, y2);
    const double uxx = (4 * x * x - 2) * b;
    const double uyy = (4 * y1 * y1 - 2) * b + (4 * y2 * y2 - 2) * b;
    return -(uxx + std::pow(x * x, gamma) * uyy);
}

}  // namespace

TEST_CASE("cell-centered grid layout")
{
    const Grid g = build_grid(make_geometry(1, 1, 1.0), Box{1.0, 2.0}, 4, 6);
    const std::vector<double> want{-0.75, -0.25, 0.25, 0.75};
    for (int i = 0; i < 4; ++i) CHECK(g.axis_coords(0)[i] == doctest::Approx(want[i]));
    CHECK(g.size() == 24u);
    CHECK(build_grid(make_geometry(2, 3, 0.5), Box{1, 1}, 5, 4).size() == 25u * 64u);
    for (int n = 4; n <= 12; n += 2) {
        const Grid q = build_grid(make_geometry(1, 1, 1.0), Box{1.0, 1.0}, n, 4);
        for (double x : q.axis_coords(0)) CHECK(std::abs(x) >= 0.5 * q.h_x() - 1e-15);
    }
    CHECK_THROWS_WITH_AS(build_grid(make_geometry(1, 1, 1.0), Box{1, 1}, 3, 8), doctest::Contains("n_x"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(build_grid(make_geometry(1, 1, 1.0), Box{1, 1}, 8, 2), doctest::Contains("n_y"),
                         std::invalid_argument);
    // x-axes fastest
    CHECK(g.coord(1, 0) == doctest::Approx(-0.25));
    CHECK(g.coord(4, 1) == doctest::Approx(g.axis_coords(1)[1]));
}

TEST_CASE("stencil is exact on per-axis quadratics")
{
    const Grid g = grid3(0.0, 1.0, 8);
    const Field u = g.sample([](const double* x, const double*) { return x[0] * x[0]; });
    Field Au;
    apply_stencil(g, u, Au);
    const auto mask = interior_mask(g);
    for (std::size_t i = 0; i < g.size(); ++i)
        if (mask[i]) CHECK(Au[i] == doctest::Approx(-2.0).epsilon(1e-10));

    // m = l = 1, gamma = 1: Delta_gamma(x^2 y^2) = 2 y^2 + x^2 (2 x^2)
    const Grid h = build_grid(make_geometry(1, 1, 1.0), Box{1.5, 2.0}, 9, 10);
    const Field v = h.sample([](const double* x, const double* y) { return x[0] * x[0] * y[0] * y[0]; });
    const SparseOperator A = assemble_operator(h);
    const Field Av = A.apply(v);
    const auto mh = interior_mask(h);
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (!mh[i]) continue;
        const double x = h.coord(i, 0), y = h.coord(i, 1);
        CHECK(-Av[i] == doctest::Approx(2 * y * y + 2 * x * x * x * x).epsilon(1e-10));
    }
}

TEST_CASE("assembled operator: symmetric, M-matrix, positive definite")
{
    for (double gam : {0.0, 1.0, 2.0}) {
        const Grid g = build_grid(make_geometry(1, 2, gam), Box{1.0, 1.5}, 5, 4);
        const SparseOperator A = assemble_operator(g);
        CHECK(asymmetry(A) == 0.0);
        CHECK(check_m_matrix(A));
        CHECK(A.nnz() <= g.size() * (2 * g.dim() + 1));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(A));
        CHECK(es.eigenvalues().minCoeff() > 0.0);
        // matrix-free stencil agrees with the assembled matrix
        std::mt19937_64 rng(1);
        std::normal_distribution<double> nd;
        Field u(g.size());
        for (double& v : u) v = nd(rng);
        Field s;
        apply_stencil(g, u, s);
        const Field m = A.apply(u);
        for (std::size_t i = 0; i < u.size(); ++i) CHECK(s[i] == doctest::Approx(m[i]).epsilon(1e-13));
    }
    SparseOperator B = assemble_operator(grid3(1.0, 1.0, 4));
    for (std::size_t k = B.row_ptr[3]; k < B.row_ptr[4]; ++k)
        if (B.col[k] != 3) {
            B.val[k] = -B.val[k];
            break;
        }
    CHECK_FALSE(check_m_matrix(B));
}

TEST_CASE("gamma = 0 reduces to the standard Laplacian")
{
    const Grid g = build_grid(make_geometry(1, 2, 0.0), Box{1.0, 1.0}, 5, 5);
    const SparseOperator A = assemble_operator(g);
    const double h = g.h_x();
    // reference 7-point Laplacian on a 5^3 box, written independently
    const int n = 5;
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n * n * n, n * n * n);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const int r = i + n * (j + n * k);
                R(r, r) = 6.0 / (h * h);
                if (i > 0) R(r, r - 1) = -1.0 / (h * h);
                if (i < n - 1) R(r, r + 1) = -1.0 / (h * h);
                if (j > 0) R(r, r - n) = -1.0 / (h * h);
                if (j < n - 1) R(r, r + n) = -1.0 / (h * h);
                if (k > 0) R(r, r - n * n) = -1.0 / (h * h);
                if (k < n - 1) R(r, r + n * n) = -1.0 / (h * h);
            }
    CHECK((dense(A) - R).cwiseAbs().maxCoeff() <= 1e-12 * R.cwiseAbs().maxCoeff());
}

TEST_CASE("truncation error is second order")
{
    for (double gam : {0.0, 1.0}) {
        double prev = 0.0;
        for (int n : {32, 64, 128}) {
            const Grid g = grid3(gam, 3.0, n);
            const Field u = g.sample([](const double* x, const double* y) { return bump(x[0], y[0], y[1]); });
            Field Au;
            apply_stencil(g, u, Au);
            const auto mask = interior_mask(g);
            double err = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i)
                if (mask[i])
                    err = std::max(err,
                                   std::abs(Au[i] - neg_lap_gamma_bump(gam, g.coord(i, 0), g.coord(i, 1), g.coord(i, 2))));
            if (prev > 0.0) CHECK(prev / err >= 3.5);
            prev = err;
        }
    }
}

TEST_CASE("Grushin gradient")
{
    // nodes at integers: x_half = 4.5 with 9 cells
    const Grid g = build_grid(make_geometry(1, 1, 1.0), Box{4.5, 4.5}, 9, 9);
    const Field u = g.sample([](const double* x, const double* y) { return x[0] * y[0]; });
    const auto gr = grushin_gradient(g, u);
    std::size_t node = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.coord(i, 0) == 2.0 && g.coord(i, 1) == 3.0) node = i;
    CHECK(gr[0][node] == doctest::Approx(3.0));
    CHECK(gr[1][node] == doctest::Approx(4.0));

    const Field c(g.size(), 2.5);
    for (const Field& comp : grushin_gradient(g, c))
        for (double v : comp) CHECK(v == 0.0);

    // seminorm of a bump against fine midpoint quadrature of the exact gradient
    const double gam = 1.0;
    const Grid coarse = grid3(gam, 4.0, 64), fine = grid3(gam, 4.0, 128);
    const Field b = coarse.sample([](const double* x, const double* y) { return bump(x[0], y[0], y[1]); });
    double q = 0.0;
    for (std::size_t i = 0; i < fine.size(); ++i) {
        const double x = fine.coord(i, 0), y1 = fine.coord(i, 1), y2 = fine.coord(i, 2), v = bump(x, y1, y2);
        q += 4 * x * x * v * v + std::pow(x * x, gam) * 4 * (y1 * y1 + y2 * y2) * v * v;
    }
    const double oracle = std::sqrt(q * fine.cell_volume());
    CHECK(std::abs(gamma_seminorm(coarse, b) - oracle) <= 0.02 * oracle);
}

TEST_CASE("discrete integration by parts converges")
{
    // <A u, v> V against the fine quadrature of grad_gamma u . grad_gamma v for two bumps
    auto u_f = [](double x, double y1, double y2) { return bump(x, y1, y2); };
    auto v_f = [](double x, double y1, double y2) { return bump(x - 0.3, y1 + 0.2, y2); };
    const double gam = 1.0;
    const Grid fine = grid3(gam, 4.0, 160);
    double q = 0.0;
    for (std::size_t i = 0; i < fine.size(); ++i) {
        const double x = fine.coord(i, 0), y1 = fine.coord(i, 1), y2 = fine.coord(i, 2);
        const double u = u_f(x, y1, y2), v = v_f(x, y1, y2);
        const double ux = -2 * x * u, vx = -2 * (x - 0.3) * v;
        const double uy1 = -2 * y1 * u, vy1 = -2 * (y1 + 0.2) * v, uy2 = -2 * y2 * u, vy2 = -2 * y2 * v;
        q += ux * vx + std::pow(x * x, gam) * (uy1 * vy1 + uy2 * vy2);
    }
    q *= fine.cell_volume();
    double prev = 0.0;
    for (int n : {10, 20, 40}) {
        const Grid g = grid3(gam, 4.0, n);
        const Field u = g.sample([&](const double* x, const double* y) { return u_f(x[0], y[0], y[1]); });
        const Field v = g.sample([&](const double* x, const double* y) { return v_f(x[0], y[0], y[1]); });
        const double err = std::abs(g.cell_volume() * dot(assemble_operator(g).apply(u), v) - q);
        if (prev > 0.0) CHECK(prev / err >= 1.8);
        prev = err;
    }
}

TEST_CASE("Lebesgue norms")
{
    const Grid g = grid3(1.0, 1.0, 6);
    Field u(g.size(), 0.0);
    for (std::size_t i = 0; i < 17; ++i) u[3 * i] = 1.0;
    CHECK(lp_norm(g, u, 1.0) == doctest::Approx(17 * g.cell_volume()));
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd;
    Field r(g.size());
    for (double& v : r) v = nd(rng);
    CHECK(lp_norm(g, r, INFINITY) == max_abs(r));
    for (double p : {1.0, 2.0, 10.0 / 3.0, 7.5}) {
        const double c = nd(rng);
        Field s = r;
        for (double& v : s) v *= c;
        CHECK(lp_norm(g, s, p) == doctest::Approx(std::abs(c) * lp_norm(g, r, p)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(lp_norm(g, r, 0.5), std::invalid_argument);
}

TEST_CASE("weak Lebesgue norm")
{
    const Grid g = grid3(1.0, 1.0, 6);
    const double s = 5.0 / 3.0;
    Field u(g.size(), 0.0);
    for (std::size_t i = 0; i < 40; ++i) u[i * 5] = 2.0;
    CHECK(weak_norm(g, u, s) == doctest::Approx(2.0 * std::pow(40 * g.cell_volume(), 1.0 / s)));

    std::mt19937_64 rng(8);
    std::exponential_distribution<double> ex(1.0);
    const double p = 2.0, q = 6.0, r = 3.0;
    const double iota = (1.0 / r - 1.0 / q) / (1.0 / p - 1.0 / q);
    // layer-cake split at the crossover level of the two weak bounds
    const double C = std::pow(r / (r - p) + r / (q - r), 1.0 / r);
    for (int k = 0; k < 100; ++k) {
        Field f(g.size());
        for (double& v : f) v = std::pow(ex(rng), 3.0) * (k % 2 ? 1.0 : -1.0);
        CHECK(weak_norm(g, f, s) <= lp_norm(g, f, s) * (1 + 1e-12));
        const double lhs = lp_norm(g, f, r);
        const double rhs = C * std::pow(weak_norm(g, f, p), iota) * std::pow(weak_norm(g, f, q), 1.0 - iota);
        CHECK(lhs <= rhs * (1 + 1e-12));
    }
}

TEST_CASE("field dump round trip")
{
    const Grid g = build_grid(make_geometry(1, 2, 1.0), Box{8.0, 8.0}, 8, 6);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd;
    Field u(g.size());
    for (double& v : u) v = nd(rng);
    const auto dir = std::filesystem::temp_directory_path() / "grushin_io_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "u.grf").string();
    write_field(path, g, u);
    CHECK(std::filesystem::file_size(path) == 64 + 8 * g.size());
    std::ifstream in(path, std::ios::binary);
    std::string head(64, '\0');
    in.read(head.data(), 64);
    CHECK(head.rfind("GRF1 1 2 1 8 8 8 6", 0) == 0);
    CHECK(head[63] == '\n');
    const FieldDump d = read_field(path);
    CHECK(d.grid.same_as(g));
    CHECK(d.values == u);
    std::filesystem::resize_file(path, 64 + 8 * (g.size() - 1));
    CHECK_THROWS_AS(read_field(path), std::runtime_error);
    CHECK_THROWS_AS(read_field((dir / "missing.grf").string()), std::runtime_error);
}
