#pragma once

#include "grushin/grid.hpp"

#include <string>
#include <utility>
#include <vector>

namespace grushin {

struct MoserStep {
    int j = 0;
    double r = 0.0;      ///< k^j alpha / 2
    double h = 0.0;      ///< 1 + 2^{-j}
    double factor = 0.0; ///< [C7 (1 + r_j) 2^{j+1}]^{1/r_j}
    double phi = 0.0;    ///< measured Phi(2 r_j, h_j) of w = u + b on the unit-scaled ball
};

struct MoserBound {
    double alpha = 0.0;
    Point center;
    double R = 0.0;
    double a = 0.0, b = 0.0;
    double S = 0.0;
    double C = 0.0;          ///< S^{-1/2} max(3, 2 sqrt(max(1, R^2 a)))
    double K = 0.0;          ///< product of all step factors
    double lalpha = 0.0;     ///< ||u||_{L^alpha(B(center, 2R))}
    double bound_value = 0.0;
    double measured_sup = 0.0;
    bool pass = false;
    std::vector<MoserStep> schedule_log;
};

/// Local boundedness bound sup_{B(c,R)} u <= K [R^{-N/alpha} ||u||_{L^alpha(B(c,2R))} + |B(0,2)|^{1/alpha} R^2 b]
/// for -Delta_gamma u <= a u + b, with the iteration constants evaluated exactly for the measured S.
MoserBound moser_bound(const Grid& g, const Field& u, double a, double b, double alpha, const Point& center, double R,
                       double S, int log_steps = 12);

struct DecayFit {
    double C0 = 0.0, C1 = 0.0;
    double fitted_exponent = 0.0;  ///< -p of the envelope 1/u = A + B d^p
    double envelope_A = 0.0, envelope_B = 0.0;
    double loglog_slope = 0.0;     ///< plain least-squares slope of log u on log d
    double r_squared = 0.0;        ///< of the envelope fit, measured on log u
    double d_min = 0.0, d_max = 0.0;
    std::size_t n_nodes = 0;
    std::vector<std::pair<double, double>> samples;  ///< (log d, log u)
};

DecayFit decay_fit(const Grid& g, const Field& u, double d_min, double d_max);

enum class BarrierVariant { power, separated };

struct BarrierParams {
    double M = 1.0;
    double q = 0.0;
    BarrierVariant variant = BarrierVariant::power;
    double d_min = 1.0, d_max = 2.0;  ///< power: annulus
    double x_min = 0.25;              ///< power: keep |x| >= x_min
    double a = 0.25;                  ///< separated: |x| <= a
    double y_min = 1.0;               ///< separated: |y| >= y_min
};

struct BarrierReport {
    BarrierVariant variant = BarrierVariant::power;
    double q = 0.0;
    double C = 0.0;              ///< C_M or C_{tilde M}
    bool sign_certificate = false;
    double max_rel_error = 0.0;
    std::size_t n_nodes = 0;
    std::string note;
};

/// Throws std::invalid_argument naming the violated inequality when q is outside the admissible window.
void check_barrier_window(const Geometry& g, BarrierVariant v, double q);
BarrierReport barrier_residual(const Grid& g, const BarrierParams& p);

struct ConcentrationProfile {
    std::vector<double> radii;
    std::vector<double> tail_mass_crit;
    std::vector<double> tail_mass_grad;
    double total_crit = 0.0, total_grad = 0.0;
};

ConcentrationProfile concentration_profile(const Grid& g, const Field& u, const std::vector<double>& radii);

enum class RescaleGrid {
    same_count,    ///< n_x, n_y kept: nodes map onto source nodes, no interpolation
    same_spacing,  ///< h_x, h_y kept: fewer nodes, multilinear interpolation
};
/// u_R(xi) = R^{N_gamma - 2} u(R xi_x, R^{1+gamma} xi_y) on the pulled-back box [-x_half/R, x_half/R]^m x
/// [-y_half/R^{1+gamma}, y_half/R^{1+gamma}]^l. With same_spacing, values off the source nodes come from
/// multilinear interpolation with zero extension, and boxes below 4 cells per axis are rejected.
std::pair<Grid, Field> rescale(const Grid& g, const Field& u, double R, RescaleGrid mode = RescaleGrid::same_count);

/// Multilinear interpolation of a field at an arbitrary point; zero outside the node hull on a Dirichlet face.
double interpolate(const Grid& g, const Field& u, const double* x, const double* y);

struct WeakMembership {
    double s = 0.0;
    double weak_norm = 0.0;
    double argmax_threshold = 0.0;
    bool interior_sup = false;
    std::vector<std::pair<double, double>> tail;  ///< (h, h |{u > h}|^{1/s}), thinned for plotting
};

WeakMembership weak_membership_check(const Grid& g, const Field& u);

/// (prod b_j, eps sum_{j<k} b_j^{p_j}/p_j + eps^{1-p_k} b_k^{p_k}/p_k)
std::pair<double, double> peter_paul(const std::vector<double>& b, const std::vector<double>& p, double eps);

std::string to_string(BarrierVariant v);
BarrierVariant parse_barrier_variant(const std::string& s);

}  // namespace grushin
