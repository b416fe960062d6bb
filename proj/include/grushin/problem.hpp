#pragma once

#include "grushin/grid.hpp"
#include "grushin/sparse_operator.hpp"

#include <string>

namespace grushin {

enum class WeightFamily { power_decay, gaussian_bump, tabulated };

WeightFamily parse_weight_family(const std::string& s);
std::string to_string(WeightFamily f);

/// power_decay:   min(c1, c1 d(z)^{-delta - 2 gamma})
/// gaussian_bump: c1 exp(-(d(z - z0) / delta)^2)
/// tabulated:     node values supplied in `table` (must match the grid)
struct WeightSpec {
    WeightFamily family = WeightFamily::power_decay;
    double c1 = 1.0;
    double delta = 1.0;
    Point z0;
    double rho = 1.0;
    double omega = 0.0;
    Field table;
};

struct ProblemSpec {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double eta = 0.5;
    double r = 1.5;
    WeightSpec w1;
    WeightSpec w2;
};

/// 1/zeta + (1 - eta)/2* = 1
double zeta_exponent(const Geometry& g, double eta);
/// 1/theta + (r - 1)/2 + 1/2* = 1
double theta_exponent(const Geometry& g, double r);

/// Checks every invariant of ProblemSpec that does not need a grid; throws
/// std::invalid_argument whose message starts with the offending field name.
void validate_problem(const Geometry& g, const ProblemSpec& spec);

Field evaluate_weight(const Grid& grid, const WeightSpec& w);

/// Midpoint-rule integral of w over B(z0, rho).
double weight_mass(const Grid& grid, const Field& w, const Point& z0, double rho);

/// A problem bound to a grid: validated spec, evaluated weights, assembled operator.
struct BoundProblem {
    const Grid* grid = nullptr;
    ProblemSpec spec;
    Field w1, w2;
    SparseOperator A;
    double two_star = 0.0;
};

/// Validates, evaluates the weights and verifies the omega mass condition for w1.
/// `check_mass` = false is only meant for degenerate test specs (w1 = 0).
BoundProblem bind_problem(const Grid& grid, const ProblemSpec& spec, bool check_mass = true);

}  // namespace grushin
