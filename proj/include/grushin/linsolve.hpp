#pragma once

#include "grushin/grid.hpp"
#include "grushin/sparse_operator.hpp"

#include <functional>
#include <memory>
#include <utility>
#include <vector>

namespace grushin {

struct LinearSolveReport {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
    /// sqrt(r^T M^{-1} r) per iteration
    std::vector<double> residual_history;
    /// CG quadratic functional 0.5 x^T A x - b^T x per iteration; nonincreasing for SPD A
    std::vector<double> energy_history;
};

using LinearMap = std::function<void(const Field& in, Field& out)>;

struct LinearSolveOptions {
    double tol = 1e-10;
    int max_iter = 20000;
    /// Applies an SPD approximation of A^{-1}; Jacobi when empty.
    LinearMap preconditioner;
    /// Initial guess; zero when empty.
    Field x0;
};

/// Preconditioned conjugate gradients. Stops when ||A x - b||_2 <= tol ||b||_2.
std::pair<Field, LinearSolveReport> solve_spd(const SparseOperator& A, const Field& b, double tol = 1e-10,
                                              int max_iter = 20000);
std::pair<Field, LinearSolveReport> solve_spd(const SparseOperator& A, const Field& b, const LinearSolveOptions& opt);
std::pair<Field, LinearSolveReport> solve_spd(const LinearMap& A, const Field& diag, const Field& b,
                                              const LinearSolveOptions& opt);

/// Preconditioned MINRES for symmetric, possibly indefinite, systems. The preconditioner must be SPD.
std::pair<Field, LinearSolveReport> solve_symmetric(const LinearMap& A, const Field& b, const LinearSolveOptions& opt,
                                                    const Field& diag_for_jacobi);

/// Exact inverse of the assembled operator plus a constant shift, by sine transforms along
/// every axis on which the stencil is coefficient-free and tridiagonal solves along x when m = 1.
/// Available when m = 1 or gamma = 0.
class SeparableSolver {
public:
    explicit SeparableSolver(const Grid& g, double shift = 0.0);
    ~SeparableSolver();
    SeparableSolver(const SeparableSolver&) = delete;
    SeparableSolver& operator=(const SeparableSolver&) = delete;

    static bool available(const Grid& g);
    void solve(const Field& b, Field& x) const;
    LinearMap as_map() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Solves A x = b with the fastest available preconditioner for the grid.
std::pair<Field, LinearSolveReport> solve_laplacian(const Grid& g, const SparseOperator& A, const Field& b,
                                                    double tol = 1e-10);

}  // namespace grushin
