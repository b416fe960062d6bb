#pragma once

#include "grushin/grid.hpp"
#include "grushin/sparse_operator.hpp"

#include <vector>

namespace grushin {

/// Components (d/dx_1 u, ..., d/dx_m u, |x|^gamma d/dy_1 u, ..., |x|^gamma d/dy_l u).
/// Centered differences inside, one-sided first-order differences at box faces.
std::vector<Field> grushin_gradient(const Grid& g, const Field& u);

/// Pointwise |grad_gamma u|.
Field gradient_magnitude(const Grid& g, const Field& u);

/// Midpoint-rule L^p norm; p = INFINITY gives max |u|.
double lp_norm(const Grid& g, const Field& u, double p);

/// || |grad_gamma u| ||_2 from grushin_gradient.
double gamma_seminorm(const Grid& g, const Field& u);

/// sqrt(V u^T A u): the seminorm induced by the assembled operator.
double energy_seminorm(const Grid& g, const SparseOperator& A, const Field& u);

/// sup over t > 0 of t |{|u| > t}|^{1/s}; attained as t increases to one of the distinct values h, giving h |{|u| >= h}|^{1/s}.
double weak_norm(const Grid& g, const Field& u, double s);

double dot(const Field& a, const Field& b);
double norm2(const Field& a);
double max_abs(const Field& a);
double min_value(const Field& a);

}  // namespace grushin
