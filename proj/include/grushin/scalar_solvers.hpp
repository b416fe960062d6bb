#pragma once

#include "grushin/linsolve.hpp"
#include "grushin/problem.hpp"

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace grushin {

struct NonlinearSolveReport {
    bool converged = false;
    int outer_iterations = 0;
    std::vector<int> newton_iterations;
    std::vector<double> residual_history;
    std::vector<double> energy_history;
    /// ladder: L-infinity increments between levels; unfreezing: seminorm increments
    std::vector<double> increments;
    std::vector<long long> levels;
    double positivity_margin = 0.0;
    double final_residual = 0.0;
    long long linear_iterations = 0;
    std::vector<std::string> flags;

    bool has_flag(const std::string& f) const;
};

/// Relative discrete residual ||F||_2 / (||A u||_2 + ||N(u)||_2) of A u = N(u); 0 when both vanish.
double relative_residual(const Field& Au, const Field& N);

/// Applies A^{-1} (exact separable solve when available, tight PCG otherwise).
class LaplaceInverse {
public:
    explicit LaplaceInverse(const Grid& g);
    void apply(const Field& b, Field& x) const;
    /// SPD preconditioner for A + diag(c) with c >= 0 and for indefinite variants.
    LinearMap preconditioner() const;

private:
    const Grid* grid_;
    SparseOperator A_;
    std::shared_ptr<SeparableSolver> fast_;
};

struct RegularizedOptions {
    Field x0;
    /// extra right-hand side added to the reaction (manufactured solutions); empty means none
    Field source;
    int max_newton = 60;
};

/// -Delta_gamma u = lambda1 w1 (u_+ + 1/n)^{-eta} by damped Newton with a positivity clamp.
std::pair<Field, NonlinearSolveReport> solve_regularized(const BoundProblem& P, long long n, double tol,
                                                         const RegularizedOptions& opt = {});

struct LadderOptions {
    long long n_max = 1LL << 20;
    double tol = 1e-10;
    /// stop early once ||u_{2n} - u_n||_inf <= increment_tol ||u_{2n}||_inf (0 disables)
    double increment_tol = 0.0;
    double monotone_slack = 1e-9;
};

/// Runs solve_regularized for n = 1, 2, 4, ..., n_max with warm starts; the last iterate is the sub-solution.
std::pair<Field, NonlinearSolveReport> subsolution_ladder(const BoundProblem& P, const LadderOptions& opt);

/// lambda1^{1/(1+eta)} u_base
Field scale_subsolution(const Field& u_base, double lambda1, double eta);

/// lambda1 w1 max{u, u_sub}^{-eta} + lambda2 w2 g^{r-1} with g = |grad_gamma v|.
Field truncated_reaction(const BoundProblem& P, const Field& u_sub, const Field& grad_v_mag, const Field& u);

struct FrozenOptions {
    Field x0;
    Field source;
    int max_newton = 60;
    /// measured bound used to cap the fallback monotone iteration
    double supersolution_level = 0.0;
    bool allow_continuation = true;
    bool allow_monotone_fallback = true;
};

/// -Delta_gamma u = a(z, u) + u_+^{2*-1} with a frozen at v, iterates kept >= u_sub.
std::pair<Field, NonlinearSolveReport> solve_frozen(const BoundProblem& P, const Field& u_sub, const Field& v,
                                                    double tol, const FrozenOptions& opt = {});

/// Residual of the frozen problem and of the full problem (gradient term evaluated at u itself).
double frozen_residual(const BoundProblem& P, const Field& u_sub, const Field& v, const Field& u);
double full_residual(const BoundProblem& P, const Field& u);

/// K b0^{alpha-1} <= 1/2 and K c^{alpha-1} < 2^{-alpha}.
bool recursion_guard(double c, double K, double alpha, double b0);

struct RecursionConstants {
    double R = 0.0, H = 0.0, c = 0.0, K = 0.0, alpha = 0.0, b0 = 0.0;
    bool verdict = false;
};

/// Constants of the rescaled seminorm recursion ||z^m|| <= c + K ||z^{m-1}||^alpha built from
/// measured norms, with R the smallest scale meeting the first guard condition.
RecursionConstants recursion_constants(const BoundProblem& P, const Field& u_sub_base, double S, double L);

struct UnfreezeOptions {
    int max_outer = 50;
    double S = 0.0;  ///< measured Sobolev constant for the guard; guard skipped when 0
    double L = 0.0;  ///< seminorm ball radius; 2 S^{N/2} when 0
    Field x0;
};

std::pair<Field, NonlinearSolveReport> unfreeze_fixed_point(const BoundProblem& P, const Field& u_sub, double tol,
                                                            const UnfreezeOptions& opt = {});

}  // namespace grushin
