#pragma once

#include "grushin/problem.hpp"
#include "grushin/scalar_solvers.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace grushin {

/// Nodal primitive A(z, s) = int_0^s a(z, t) dt of the truncated reaction.
double reaction_primitive(double l1w1, double l2w2g, double eta, double usub, double s);

/// J(u) = V/2 u^T A u - V sum A(z, u) - V/2* sum u_+^{2*}; `grad_v_mag` is |grad_gamma v|.
double energy(const BoundProblem& P, const Field& u_sub, const Field& grad_v_mag, const Field& u);

/// Nodal Riesz representative A u - a(z, u) - u_+^{2*-1}; dJ(u)[phi] = V <gradient, phi>.
Field energy_gradient(const BoundProblem& P, const Field& u_sub, const Field& grad_v_mag, const Field& u);

/// V u^T A u / ||u||_{2*}^2 with the midpoint-rule norm.
double rayleigh_quotient(const Grid& g, const SparseOperator& A, const Field& u);

struct SobolevResult {
    double S = 0.0;
    Field minimizer;           ///< normalized so that ||u||_{2*} = 1
    std::vector<double> start_values;
    std::vector<int> start_iterations;
    bool converged = false;
    std::string note;
};

struct SobolevOptions {
    double tol = 1e-10;        ///< relative decrease of the quotient per sweep at which a start stops
    int max_iter = 4000;
    int starts = 3;
    std::uint64_t seed = 7;
};

/// Preconditioned (A^{-1}-metric) gradient descent on the Rayleigh quotient from seeded Gaussian starts of
/// decreasing width; each step also tries the normalized inverse iteration and keeps the lower quotient.
SobolevResult sobolev_constant(const Grid& g, const SobolevOptions& opt = {});

struct Calibration {
    double C_hat = 1.0;
    double C_tilde = 1.0;
    double C_check = 1.0;
};

struct Thresholds {
    double S = 0.0;
    double L = 0.0;
    double Lambda1 = 0.0;
    double hat_c = 0.0;
    double mp_level_c = 0.0;
    Calibration calibration;
    /// printed with every report: these depend on the calibration constants
    std::string conditionality;
};

/// L <= 0 selects the default 2 S^{N_gamma/2}.
Thresholds thresholds(const Geometry& g, const ProblemSpec& spec, double S, double L, const Calibration& cal);

struct MountainPassOptions {
    int n_path = 12;
    double tol = 1e-6;         ///< on ||J'(u)||_* / ||u||_E
    int max_iter = 400;
    int sphere_samples = 32;
    std::uint64_t seed = 11;
};

struct MountainPassResult {
    Field u;
    double level = 0.0;
    double gradient_norm = 0.0;  ///< ||J'(u)||_* / ||u||_E
    bool converged = false;
    std::vector<double> level_history;
    std::vector<double> gradient_history;
    double sphere_inf = 0.0;
    double rho = 0.0;
    double J_u1 = 0.0;
    int iterations = 0;
    std::string note;
};

/// Dual norm sqrt(V g^T A^{-1} g) of a nodal gradient.
double dual_norm(const Grid& g, const LaplaceInverse& Ainv, const Field& grad);

/// Random positive fields on the sphere ||u||_E = rho; returns the sampled minimum of J.
double sphere_infimum(const BoundProblem& P, const Field& u_sub, const Field& grad_v_mag, double rho, int samples,
                      std::uint64_t seed, const Field* extra = nullptr);

MountainPassResult mountain_pass(const BoundProblem& P, const Field& u_sub, const Field& v, const Field& u1, double S,
                                 const MountainPassOptions& opt = {});

}  // namespace grushin
