#include "grushin/problem.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace grushin {

WeightFamily parse_weight_family(const std::string& s)
{
    if (s == "power_decay") return WeightFamily::power_decay;
    if (s == "gaussian_bump") return WeightFamily::gaussian_bump;
    if (s == "tabulated") return WeightFamily::tabulated;
    throw std::invalid_argument("family: unknown weight family '" + s + "'");
}

std::string to_string(WeightFamily f)
{
    switch (f) {
    case WeightFamily::power_decay: return "power_decay";
    case WeightFamily::gaussian_bump: return "gaussian_bump";
    case WeightFamily::tabulated: return "tabulated";
    }
    return "?";
}

double zeta_exponent(const Geometry& g, double eta)
{
    return 1.0 / (1.0 - (1.0 - eta) / g.two_star());
}

double theta_exponent(const Geometry& g, double r)
{
    return 1.0 / (1.0 - 0.5 * (r - 1.0) - 1.0 / g.two_star());
}

namespace {

void validate_weight(const Geometry& g, const WeightSpec& w, const std::string& name)
{
    if (!(w.c1 > 0.0) || !std::isfinite(w.c1)) throw std::invalid_argument(name + ".c1: must be positive");
    if (!(w.delta > 0.0) || !std::isfinite(w.delta)) throw std::invalid_argument(name + ".delta: must be positive");
    if (!(w.rho > 0.0)) throw std::invalid_argument(name + ".rho: must be positive");
    if (!(w.omega >= 0.0)) throw std::invalid_argument(name + ".omega: must be nonnegative");
    if (w.z0.x.size() != static_cast<std::size_t>(g.m) || w.z0.y.size() != static_cast<std::size_t>(g.ell))
        throw std::invalid_argument(name + ".z0: needs m + l coordinates");
    if (w.family == WeightFamily::power_decay && !(w.delta > g.n_gamma() - 2.0 * g.gamma))
        throw std::invalid_argument(name + ".delta: power_decay needs delta > n_gamma - 2 gamma for integrability");
}

}  // namespace

void validate_problem(const Geometry& g, const ProblemSpec& s)
{
    if (!(s.eta > 0.0 && s.eta < 1.0)) throw std::invalid_argument("eta: must lie in (0,1)");
    if (!(s.r > 1.0 && s.r < 2.0)) throw std::invalid_argument("r: must lie in (1,2)");
    if (!(s.lambda1 >= 0.0) || !std::isfinite(s.lambda1)) throw std::invalid_argument("lambda1: must be >= 0");
    if (!(s.lambda2 >= 0.0) || !std::isfinite(s.lambda2)) throw std::invalid_argument("lambda2: must be >= 0");
    if (s.lambda2 > s.lambda1) throw std::invalid_argument("lambda2: must not exceed lambda1");
    validate_weight(g, s.w1, "w1");
    validate_weight(g, s.w2, "w2");
    if (s.w1.family == WeightFamily::power_decay) {
        const double need = g.n_gamma() + s.eta * (g.n_gamma() - 2.0);
        if (!(s.w1.delta > need)) {
            std::ostringstream os;
            os << "w1.delta: must exceed n_gamma + eta (n_gamma - 2) = " << need;
            throw std::invalid_argument(os.str());
        }
    }
    if (!(zeta_exponent(g, s.eta) > 1.0)) throw std::invalid_argument("eta: zeta exponent must exceed 1");
    if (!(theta_exponent(g, s.r) > 1.0)) throw std::invalid_argument("r: theta exponent must exceed 1");
}

Field evaluate_weight(const Grid& grid, const WeightSpec& w)
{
    const Geometry& g = grid.geom();
    Field out(grid.size());
    switch (w.family) {
    case WeightFamily::power_decay:
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double d = grid.dist()[i];
            out[i] = d <= 1.0 ? w.c1 : w.c1 * std::pow(d, -w.delta - 2.0 * g.gamma);
        }
        break;
    case WeightFamily::gaussian_bump:
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double t = distance_from(grid, i, w.z0) / w.delta;
            out[i] = w.c1 * std::exp(-t * t);
        }
        break;
    case WeightFamily::tabulated:
        check_conformable(grid, w.table, "tabulated weight");
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (!(w.table[i] >= 0.0) || !std::isfinite(w.table[i]))
                throw std::invalid_argument("table: weight values must be finite and nonnegative");
            out[i] = w.table[i];
        }
        break;
    }
    return out;
}

double weight_mass(const Grid& grid, const Field& w, const Point& z0, double rho)
{
    double s = 0.0;
    for (std::size_t i : ball_nodes(grid, z0, rho)) s += w[i];
    return s * grid.cell_volume();
}

BoundProblem bind_problem(const Grid& grid, const ProblemSpec& spec, bool check_mass)
{
    validate_problem(grid.geom(), spec);
    BoundProblem p;
    p.grid = &grid;
    p.spec = spec;
    p.w1 = evaluate_weight(grid, spec.w1);
    p.w2 = evaluate_weight(grid, spec.w2);
    p.A = assemble_operator(grid);
    p.two_star = grid.geom().two_star();
    if (check_mass) {
        const double mass = weight_mass(grid, p.w1, spec.w1.z0, spec.w1.rho);
        if (!(mass >= spec.w1.omega)) {
            std::ostringstream os;
            os << "w1.omega: integral of w1 over B(z0, rho) is " << mass << " < omega = " << spec.w1.omega;
            throw std::invalid_argument(os.str());
        }
    }
    return p;
}

}  // namespace grushin
