#include "grushin/norms.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace grushin {

std::vector<Field> grushin_gradient(const Grid& g, const Field& u)
{
    check_conformable(g, u, "grushin_gradient");
    const Geometry& geo = g.geom();
    const int d = g.dim();
    std::vector<Field> out(d, Field(g.size(), 0.0));
    for (int a = 0; a < d; ++a) {
        const double h = g.axis_h(a);
        const int na = g.axis_size(a);
        const std::size_t st = g.stride(a);
        Field& c = out[a];
        for (std::size_t i = 0; i < g.size(); ++i) {
            const int k = g.index_on_axis(i, a);
            double v;
            if (k == 0) v = (u[i + st] - u[i]) / h;
            else if (k == na - 1) v = (u[i] - u[i - st]) / h;
            else v = (u[i + st] - u[i - st]) / (2.0 * h);
            if (a >= geo.m) v *= std::pow(g.x_norm2()[i], 0.5 * geo.gamma);
            c[i] = v;
        }
    }
    return out;
}

Field gradient_magnitude(const Grid& g, const Field& u)
{
    const auto comps = grushin_gradient(g, u);
    Field mag(g.size(), 0.0);
    for (const Field& c : comps)
        for (std::size_t i = 0; i < g.size(); ++i) mag[i] += c[i] * c[i];
    for (double& v : mag) v = std::sqrt(v);
    return mag;
}

double lp_norm(const Grid& g, const Field& u, double p)
{
    check_conformable(g, u, "lp_norm");
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
    if (std::isinf(p)) return max_abs(u);
    double s = 0.0;
    for (double v : u) s += std::pow(std::abs(v), p);
    return std::pow(s * g.cell_volume(), 1.0 / p);
}

double gamma_seminorm(const Grid& g, const Field& u)
{
    const auto comps = grushin_gradient(g, u);
    double s = 0.0;
    for (const Field& c : comps)
        for (double v : c) s += v * v;
    return std::sqrt(s * g.cell_volume());
}

double energy_seminorm(const Grid& g, const SparseOperator& A, const Field& u)
{
    return std::sqrt(std::max(0.0, g.cell_volume() * dot(u, A.apply(u))));
}

double weak_norm(const Grid& g, const Field& u, double s)
{
    check_conformable(g, u, "weak_norm");
    if (!(s > 0.0)) throw std::invalid_argument("weak_norm: s must be positive");
    std::vector<double> a(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) a[i] = std::abs(u[i]);
    std::sort(a.begin(), a.end(), std::greater<>());
    double best = 0.0;
    std::size_t k = 0;
    while (k < a.size()) {
        // sup over t in [a[k+1], a[k]) of t |{|u| > t}| is approached as t -> a[k], where the set is {|u| >= a[k]}
        const double h = a[k];
        while (k < a.size() && a[k] == h) ++k;
        best = std::max(best, h * std::pow(static_cast<double>(k) * g.cell_volume(), 1.0 / s));
    }
    return best;
}

double dot(const Field& a, const Field& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const Field& a) { return std::sqrt(dot(a, a)); }

double max_abs(const Field& a)
{
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

double min_value(const Field& a)
{
    double m = INFINITY;
    for (double v : a) m = std::min(m, v);
    return m;
}

}  // namespace grushin
