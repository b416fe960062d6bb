#include "grushin/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace grushin {

Geometry make_geometry(int m, int ell, double gamma)
{
    if (m < 1) throw std::invalid_argument("m: must be >= 1");
    if (ell < 1) throw std::invalid_argument("ell: must be >= 1");
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("gamma: must be finite and >= 0");
    Geometry g{m, ell, gamma};
    if (!(g.n_gamma() > 2.0))
        throw std::invalid_argument("n_gamma: m + (1+gamma)*ell must exceed 2, got " + std::to_string(g.n_gamma()));
    return g;
}

double distance_sq_norms(double gamma, double x2, double y2)
{
    const double gp = gamma + 1.0;
    const double s = std::pow(x2, gp) + gp * gp * y2;
    return std::pow(s, 0.5 / gp);
}

double distance(const Geometry& g, std::span<const double> x, std::span<const double> y)
{
    double x2 = 0.0, y2 = 0.0;
    for (double v : x) x2 += v * v;
    for (double v : y) y2 += v * v;
    return distance_sq_norms(g.gamma, x2, y2);
}

Point dilate(const Geometry& g, double lam, const Point& z)
{
    if (!(lam > 0.0)) throw std::invalid_argument("dilate: lambda must be positive");
    Point out = z;
    const double ly = std::pow(lam, 1.0 + g.gamma);
    for (double& v : out.x) v *= lam;
    for (double& v : out.y) v *= ly;
    return out;
}

double unit_sphere_area(int n)
{
    return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

namespace {

// radius t > 0 with a t^{2g+2} + b t^2 = 1
double radial_hit(double gamma, double a, double b)
{
    const double p = 2.0 * gamma + 2.0;
    double lo = 0.0, hi = 1.0;
    auto f = [&](double t) { return a * std::pow(t, p) + b * t * t - 1.0; };
    while (f(hi) < 0.0) hi *= 2.0;
    double t = hi;
    for (int it = 0; it < 200; ++it) {
        const double ft = f(t);
        if (ft > 0.0) hi = t; else lo = t;
        const double df = a * p * std::pow(t, p - 1.0) + 2.0 * b * t;
        double tn = t - ft / df;
        if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
        if (std::abs(tn - t) <= 1e-15 * t) { t = tn; break; }
        t = tn;
    }
    return t;
}

}  // namespace

MonteCarloEstimate fundamental_constant(const Geometry& g, std::int64_t n_samples, std::uint64_t seed)
{
    if (!(g.n_gamma() > 2.0)) throw std::invalid_argument("n_gamma: must exceed 2");
    if (n_samples < 2) throw std::invalid_argument("n_samples: must be >= 2");

    const int n = g.dim();
    const double gp = g.gamma + 1.0;
    constexpr std::int64_t chunk = 1 << 16;
    const std::int64_t n_chunks = (n_samples + chunk - 1) / chunk;
    std::vector<double> sums(n_chunks, 0.0), sums2(n_chunks, 0.0);

#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < n_chunks; ++c) {
        std::seed_seq ss{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                         static_cast<std::uint32_t>(c), 0x9e3779b9u};
        std::mt19937_64 rng(ss);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<double> th(n);
        const std::int64_t count = std::min(chunk, n_samples - c * chunk);
        double s = 0.0, s2 = 0.0;
        for (std::int64_t k = 0; k < count; ++k) {
            double r2 = 0.0;
            for (double& v : th) { v = normal(rng); r2 += v * v; }
            const double inv = 1.0 / std::sqrt(r2);
            double tx2 = 0.0, ty2 = 0.0;
            for (int i = 0; i < g.m; ++i) tx2 += th[i] * th[i] * inv * inv;
            for (int i = g.m; i < n; ++i) ty2 += th[i] * th[i] * inv * inv;
            const double a = std::pow(tx2, gp);
            const double b = gp * gp * ty2;
            const double t = radial_hit(g.gamma, a, b);
            // |x_p|^{2 gamma} t^{n-1} / (grad d(p) . theta), with p = t theta on {d = 1}
            const double xp2g = std::pow(t * t * tx2, g.gamma);
            const double dn = t * (xp2g * tx2 + gp * ty2);
            const double val = xp2g * std::pow(t, n - 1) / dn;
            s += val;
            s2 += val * val;
        }
        sums[c] = s;
        sums2[c] = s2;
    }
    double s = 0.0, s2 = 0.0;
    for (std::int64_t c = 0; c < n_chunks; ++c) { s += sums[c]; s2 += sums2[c]; }
    const double nn = static_cast<double>(n_samples);
    const double mean = s / nn;
    const double var = std::max(0.0, (s2 - nn * mean * mean) / (nn - 1.0));
    const double area = unit_sphere_area(n);
    const double inv_c = (g.n_gamma() - 2.0) * area * mean;
    MonteCarloEstimate out;
    out.value = 1.0 / inv_c;
    out.std_error = out.value * std::sqrt(var / nn) / mean;
    out.n_samples = n_samples;
    return out;
}

double fundamental_solution(const Geometry& g, double C, const Point& z)
{
    if (!(C > 0.0)) throw std::invalid_argument("fundamental_solution: C must be positive");
    const double d = distance(g, z);
    if (d == 0.0) throw std::invalid_argument("fundamental_solution: singular at the origin");
    return C / std::pow(d, g.n_gamma() - 2.0);
}

}  // namespace grushin
