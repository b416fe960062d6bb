#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace grushin {

/// Anisotropic structure (m, l, gamma) of the Grushin operator
/// Delta_gamma = Delta_x + |x|^{2 gamma} Delta_y on R^m x R^l.
struct Geometry {
    int m = 1;
    int ell = 1;
    double gamma = 0.0;

    double n_gamma() const { return m + (1.0 + gamma) * ell; }
    double two_star() const { return 2.0 * n_gamma() / (n_gamma() - 2.0); }
    double two_lower_star() const { return 2.0 * (n_gamma() - 1.0) / (n_gamma() - 2.0); }
    int dim() const { return m + ell; }
};

/// Validates the invariants and throws std::invalid_argument naming the field.
Geometry make_geometry(int m, int ell, double gamma);

struct Point {
    std::vector<double> x;
    std::vector<double> y;
};

double distance(const Geometry& g, std::span<const double> x, std::span<const double> y);
inline double distance(const Geometry& g, const Point& z) { return distance(g, z.x, z.y); }

/// Gauge from the squared Euclidean norms |x|^2 and |y|^2.
double distance_sq_norms(double gamma, double x2, double y2);

Point dilate(const Geometry& g, double lam, const Point& z);

struct MonteCarloEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::int64_t n_samples = 0;
};

/// Constant C of Gamma = C d^{2-N_gamma}. The surface integral over {d = 1} is taken
/// with respect to the (m+l-1)-dimensional Euclidean Hausdorff measure, sampled by
/// radial projection of uniform directions on the Euclidean unit sphere.
MonteCarloEstimate fundamental_constant(const Geometry& g, std::int64_t n_samples, std::uint64_t seed);

double fundamental_solution(const Geometry& g, double C, const Point& z);

/// Surface area of the Euclidean unit sphere S^{n-1}.
double unit_sphere_area(int n);

}  // namespace grushin
