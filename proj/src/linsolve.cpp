#include "grushin/linsolve.hpp"

#include "grushin/norms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace grushin {

namespace {

LinearMap jacobi(const Field& diag)
{
    Field inv(diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) {
        if (!(diag[i] > 0.0)) throw std::invalid_argument("jacobi: nonpositive diagonal entry");
        inv[i] = 1.0 / diag[i];
    }
    return [inv](const Field& r, Field& z) {
        z.resize(r.size());
        for (std::size_t i = 0; i < r.size(); ++i) z[i] = inv[i] * r[i];
    };
}

Field diagonal(const SparseOperator& A)
{
    Field d(A.n);
    for (std::size_t i = 0; i < A.n; ++i) d[i] = A.diag(i);
    return d;
}

}  // namespace

std::pair<Field, LinearSolveReport> solve_spd(const SparseOperator& A, const Field& b, double tol, int max_iter)
{
    LinearSolveOptions opt;
    opt.tol = tol;
    opt.max_iter = max_iter;
    return solve_spd(A, b, opt);
}

std::pair<Field, LinearSolveReport> solve_spd(const SparseOperator& A, const Field& b, const LinearSolveOptions& opt)
{
    const LinearMap op = [&A](const Field& in, Field& out) { A.apply(in, out); };
    return solve_spd(op, diagonal(A), b, opt);
}

std::pair<Field, LinearSolveReport> solve_spd(const LinearMap& A, const Field& diag, const Field& b,
                                              const LinearSolveOptions& opt)
{
    if (!(opt.tol > 0.0)) throw std::invalid_argument("solve_spd: tol must be positive");
    const std::size_t n = b.size();
    LinearSolveReport rep;
    const double bnorm = norm2(b);
    Field x = opt.x0.empty() ? Field(n, 0.0) : opt.x0;
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        rep.converged = true;
        return {x, rep};
    }
    const LinearMap M = opt.preconditioner ? opt.preconditioner : jacobi(diag);

    Field r(n), z(n), p(n), q(n);
    A(x, q);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
    M(r, z);
    p = z;
    double rz = dot(r, z);
    double phi = 0.5 * dot(x, q) - dot(b, x);
    rep.residual_history.push_back(std::sqrt(std::max(rz, 0.0)));
    rep.energy_history.push_back(phi);

    Field best = x;
    double best_res = norm2(r) / bnorm;
    int it = 0;
    while (best_res > opt.tol && it < opt.max_iter) {
        A(p, q);
        const double pq = dot(p, q);
        if (!(pq > 0.0)) break;  // operator not positive definite on the Krylov space
        const double alpha = rz / pq;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        ++it;
        phi -= 0.5 * alpha * rz;
        const double res = norm2(r) / bnorm;
        if (res < best_res) {
            best_res = res;
            best = x;
        }
        M(r, z);
        const double rz_new = dot(r, z);
        rep.residual_history.push_back(std::sqrt(std::max(rz_new, 0.0)));
        rep.energy_history.push_back(phi);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    // true residual of the returned iterate
    A(best, q);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (b[i] - q[i]) * (b[i] - q[i]);
    rep.iterations = it;
    rep.relative_residual = std::sqrt(s) / bnorm;
    rep.converged = rep.relative_residual <= opt.tol;
    return {best, rep};
}

std::pair<Field, LinearSolveReport> solve_symmetric(const LinearMap& A, const Field& b, const LinearSolveOptions& opt,
                                                    const Field& diag_for_jacobi)
{
    const std::size_t n = b.size();
    LinearSolveReport rep;
    const double bnorm = norm2(b);
    Field x = opt.x0.empty() ? Field(n, 0.0) : opt.x0;
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        rep.converged = true;
        return {x, rep};
    }
    const LinearMap M = opt.preconditioner ? opt.preconditioner : jacobi(diag_for_jacobi);
    constexpr double eps = std::numeric_limits<double>::epsilon();

    Field Ax(n), r1(n), r2(n), y(n), v(n), w(n), w1(n), w2(n);
    int total = 0;
    double true_res = 0.0;
    for (int restart = 0; restart < 20 && total < opt.max_iter; ++restart) {
        A(x, Ax);
        for (std::size_t i = 0; i < n; ++i) r1[i] = b[i] - Ax[i];
        true_res = norm2(r1) / bnorm;
        if (true_res <= opt.tol) break;
        M(r1, y);
        double beta1 = dot(r1, y);
        if (!(beta1 > 0.0)) throw std::runtime_error("solve_symmetric: preconditioner is not positive definite");
        beta1 = std::sqrt(beta1);
        double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
        double cs = -1.0, sn = 0.0;
        std::fill(w.begin(), w.end(), 0.0);
        std::fill(w2.begin(), w2.end(), 0.0);
        r2 = r1;
        // the preconditioned residual estimate drives the inner loop; the true residual is checked after it
        const double inner_tol = 0.5 * opt.tol * bnorm / std::max(norm2(r1), 1e-300) * beta1;
        while (total < opt.max_iter) {
            ++total;
            const double s = 1.0 / beta;
            for (std::size_t i = 0; i < n; ++i) v[i] = s * y[i];
            A(v, y);
            if (oldb != 0.0)
                for (std::size_t i = 0; i < n; ++i) y[i] -= (beta / oldb) * r1[i];
            const double alfa = dot(v, y);
            for (std::size_t i = 0; i < n; ++i) y[i] -= (alfa / beta) * r2[i];
            std::swap(r1, r2);
            r2 = y;
            M(r2, y);
            oldb = beta;
            const double bb = dot(r2, y);
            if (bb < 0.0) throw std::runtime_error("solve_symmetric: preconditioner is not positive definite");
            beta = std::sqrt(bb);
            const double oldeps = epsln;
            const double delta = cs * dbar + sn * alfa;
            const double gbar = sn * dbar - cs * alfa;
            epsln = sn * beta;
            dbar = -cs * beta;
            const double gam = std::max(std::hypot(gbar, beta), eps);
            cs = gbar / gam;
            sn = beta / gam;
            const double phi = cs * phibar;
            phibar = sn * phibar;
            const double denom = 1.0 / gam;
            std::swap(w1, w2);
            std::swap(w2, w);
            for (std::size_t i = 0; i < n; ++i) {
                w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) * denom;
                x[i] += phi * w[i];
            }
            rep.residual_history.push_back(phibar);
            if (phibar <= inner_tol || beta == 0.0) break;
        }
        A(x, Ax);
        double s2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) s2 += (b[i] - Ax[i]) * (b[i] - Ax[i]);
        true_res = std::sqrt(s2) / bnorm;
        if (true_res <= opt.tol) break;
    }
    rep.iterations = total;
    rep.relative_residual = true_res;
    rep.converged = true_res <= opt.tol;
    return {x, rep};
}

std::pair<Field, LinearSolveReport> solve_laplacian(const Grid& g, const SparseOperator& A, const Field& b, double tol)
{
    LinearSolveOptions opt;
    opt.tol = tol;
    if (SeparableSolver::available(g)) {
        SeparableSolver fast(g);
        opt.preconditioner = fast.as_map();
        return solve_spd(A, b, opt);
    }
    return solve_spd(A, b, opt);
}

}  // namespace grushin
