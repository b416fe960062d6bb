#include "grushin/variational.hpp"

#include "grushin/norms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace grushin {

double reaction_primitive(double l1w1, double l2w2g, double eta, double usub, double s)
{
    double a = l2w2g * s;
    if (l1w1 == 0.0) return a;
    if (s <= usub) return a + l1w1 * std::pow(usub, -eta) * s;
    const double q = 1.0 - eta;
    return a + l1w1 * (std::pow(usub, q) + (std::pow(s, q) - std::pow(usub, q)) / q);
}

namespace {

// lambda1 w1 and lambda2 w2 |grad v|^{r-1} per node
void reaction_coefficients(const BoundProblem& P, const Field& grad_v_mag, Field& c1, Field& c2)
{
    const std::size_t n = P.w1.size();
    c1.assign(n, 0.0);
    c2.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        c1[i] = P.spec.lambda1 * P.w1[i];
        if (P.spec.lambda2 > 0.0) c2[i] = P.spec.lambda2 * P.w2[i] * std::pow(grad_v_mag[i], P.spec.r - 1.0);
    }
}

// Nodal sum of A(z, u) + u_+^p / p, computed in parallel into a buffer and summed in order.
double potential_sum(const BoundProblem& P, const Field& c1, const Field& c2, const Field& u_sub, const Field& u,
                     Field& buf)
{
    const std::size_t n = u.size();
    const double eta = P.spec.eta, p = P.two_star;
    buf.resize(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(n); ++k) {
        const std::size_t i = static_cast<std::size_t>(k);
        double t = reaction_primitive(c1[i], c2[i], eta, u_sub[i], u[i]);
        if (u[i] > 0.0) t += std::pow(u[i], p) / p;
        buf[i] = t;
    }
    double s = 0.0;
    for (double v : buf) s += v;
    return s;
}

void gradient_into(const BoundProblem& P, const Field& c1, const Field& c2, const Field& u_sub, const Field& u,
                   const Field& Au, Field& g)
{
    const std::size_t n = u.size();
    const double eta = P.spec.eta, p = P.two_star;
    g.resize(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(n); ++k) {
        const std::size_t i = static_cast<std::size_t>(k);
        double a = c2[i];
        if (c1[i] != 0.0) a += c1[i] * std::pow(std::max(u[i], u_sub[i]), -eta);
        if (u[i] > 0.0) a += std::pow(u[i], p - 1.0);
        g[i] = Au[i] - a;
    }
}

}  // namespace

double energy(const BoundProblem& P, const Field& u_sub, const Field& grad_v_mag, const Field& u)
{
    const Grid& g = *P.grid;
    check_conformable(g, u, "energy(u)");
    check_conformable(g, u_sub, "energy(u_sub)");
    check_conformable(g, grad_v_mag, "energy(grad_v)");
    Field c1, c2, buf;
    reaction_coefficients(P, grad_v_mag, c1, c2);
    const double V = g.cell_volume();
    return 0.5 * V * dot(u, P.A.apply(u)) - V * potential_sum(P, c1, c2, u_sub, u, buf);
}

Field energy_gradient(const BoundProblem& P, const Field& u_sub, const Field& grad_v_mag, const Field& u)
{
    const Grid& g = *P.grid;
    check_conformable(g, u, "energy_gradient(u)");
    check_conformable(g, u_sub, "energy_gradient(u_sub)");
    check_conformable(g, grad_v_mag, "energy_gradient(grad_v)");
    Field c1, c2, out;
    reaction_coefficients(P, grad_v_mag, c1, c2);
    gradient_into(P, c1, c2, u_sub, u, P.A.apply(u), out);
    return out;
}

double rayleigh_quotient(const Grid& g, const SparseOperator& A, const Field& u)
{
    const double n = lp_norm(g, u, g.geom().two_star());
    if (n == 0.0) throw std::invalid_argument("u: Rayleigh quotient of the zero field");
    return g.cell_volume() * dot(u, A.apply(u)) / (n * n);
}


SobolevResult sobolev_constant(const Grid& g, const SobolevOptions& opt)
{
    if (opt.starts < 1) throw std::invalid_argument("starts: must be >= 1");
    const SparseOperator A = assemble_operator(g);
    LaplaceInverse Ainv(g);
    const double p = g.geom().two_star(), V = g.cell_volume();
    const std::size_t n = g.size();
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    SobolevResult res;
    res.S = INFINITY;
    res.converged = true;
    const double rad = g.box_radius();

    for (int s = 0; s < opt.starts; ++s) {
        // the first start is box-scale and centered between nodes; the others shrink toward a couple of
        // cells and sit on the node next to the origin, where the discrete minimizer concentrates
        const double wmax = 0.4 * rad, wmin = std::min(wmax, 2.0 * std::max(g.h_x(), g.h_y()));
        const double frac = opt.starts > 1 ? static_cast<double>(s) / (opt.starts - 1) : 0.0;
        const double width = wmax * std::pow(wmin / wmax, frac) * (0.9 + 0.2 * unif(rng));
        Point c0{std::vector<double>(g.geom().m, 0.0), std::vector<double>(g.geom().ell, 0.0)};
        if (s > 0) {
            for (double& y : c0.y) y = -0.5 * g.h_y();
            if (g.geom().gamma == 0.0)
                for (double& x : c0.x) x = -0.5 * g.h_x();
        }
        Field u(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double t = distance_from(g, i, c0) / width;
            u[i] = std::exp(-t * t) * (1.0 + 0.05 * (unif(rng) - 0.5));
        }
        auto normalize = [&](Field& x) {
            const double nn = lp_norm(g, x, p);
            for (double& v : x) v /= nn;
        };
        normalize(u);
        Field Au = A.apply(u), w(n), z(n), cand(n), fixed(n);
        double R = V * dot(u, Au);
        double tau = 0.5;
        int it = 0;
        bool ok = false;
        for (; it < opt.max_iter; ++it) {
            // with ||u||_p = 1 the gradient direction is u - R A^{-1}(|u|^{p-2} u)
            for (std::size_t i = 0; i < n; ++i) w[i] = std::pow(std::abs(u[i]), p - 2.0) * u[i];
            Ainv.apply(w, z);
            for (std::size_t i = 0; i < n; ++i) z[i] = u[i] - R * z[i];
            const double slope = V * dot(z, A.apply(z));
            if (slope <= 1e-24 * R) { ok = true; break; }
            // tau = 1 is the normalized inverse iteration u <- A^{-1}(|u|^{p-2} u), fast near a minimizer
            for (std::size_t i = 0; i < n; ++i) fixed[i] = u[i] - z[i];
            normalize(fixed);
            const double Rf = V * dot(fixed, A.apply(fixed));
            bool accepted = false;
            double Rn = R;
            while (tau > 1e-8) {
                for (std::size_t i = 0; i < n; ++i) cand[i] = u[i] - tau * z[i];
                normalize(cand);
                Rn = V * dot(cand, A.apply(cand));
                if (Rn <= R - 1e-4 * tau * slope) { accepted = true; break; }
                tau *= 0.5;
            }
            if (Rf < R && (!accepted || Rf < Rn)) {
                cand.swap(fixed);
                Rn = Rf;
                accepted = true;
            }
            if (!accepted) {
                ok = (R - Rn) <= opt.tol * R;
                break;
            }
            const double drop = R - Rn;
            u.swap(cand);
            R = Rn;
            tau = std::min(2.0 * tau, 4.0);
            if (drop <= opt.tol * R && slope <= opt.tol * R) { ok = true; break; }
        }
        res.start_values.push_back(R);
        res.start_iterations.push_back(it);
        if (!ok) res.converged = false;
        if (R < res.S) {
            res.S = R;
            res.minimizer = u;
        }
    }
    // signs: keep the positive representative
    if (std::accumulate(res.minimizer.begin(), res.minimizer.end(), 0.0) < 0.0)
        for (double& v : res.minimizer) v = -v;
    if (!res.converged) res.note = "stagnation: at least one start stopped without meeting the descent tolerance";
    return res;
}

Thresholds thresholds(const Geometry& g, const ProblemSpec& spec, double S, double L, const Calibration& cal)
{
    if (!(S > 0.0)) throw std::invalid_argument("S: must be positive");
    if (!(cal.C_hat > 0.0 && cal.C_tilde > 0.0 && cal.C_check > 0.0))
        throw std::invalid_argument("calibration: constants must be positive");
    const double N = g.n_gamma(), eta = spec.eta, r = spec.r;
    Thresholds t;
    t.S = S;
    t.L = L > 0.0 ? L : 2.0 * std::pow(S, 0.5 * N);
    t.calibration = cal;
    const double SN2 = std::pow(S, 0.5 * N);
    t.Lambda1 = std::pow(SN2 / (cal.C_tilde * N * (std::pow(S, 0.25 * N) + 1.0) * (1.0 + std::pow(t.L, r - 1.0))),
                         1.0 + eta);
    const double lmax = std::max(spec.lambda1, spec.lambda2);
    t.hat_c = SN2 / N - cal.C_hat * std::pow(lmax, 2.0 / (1.0 + eta)) * (std::pow(t.L, 2.0 * (r - 1.0)) + 1.0);
    t.mp_level_c = SN2 / N - spec.lambda1 * cal.C_check;
    std::ostringstream os;
    os << "Lambda1, hat_c and mp_level_c are conditional on the calibration constants C_hat=" << cal.C_hat
       << ", C_tilde=" << cal.C_tilde << ", C_check=" << cal.C_check
       << "; these are configuration defaults, not proven values, and S is the measured discrete constant";
    t.conditionality = os.str();
    return t;
}

double dual_norm(const Grid& g, const LaplaceInverse& Ainv, const Field& grad)
{
    Field s;
    Ainv.apply(grad, s);
    return std::sqrt(std::max(0.0, g.cell_volume() * dot(grad, s)));
}

namespace {

// J and its gradient along a fixed problem, with scratch space.
class EnergyEval {
public:
    EnergyEval(const BoundProblem& P, const Field& u_sub, const Field& grad_v_mag) : P_(P), u_sub_(u_sub)
    {
        reaction_coefficients(P, grad_v_mag, c1_, c2_);
        V_ = P.grid->cell_volume();
    }

    double value(const Field& u)
    {
        P_.A.apply(u, Au_);
        return 0.5 * V_ * dot(u, Au_) - V_ * potential_sum(P_, c1_, c2_, u_sub_, u, buf_);
    }

    // value at a + s d given A a, A d and the three quadratic coefficients
    double on_line(const Field& a, const Field& d, double aa, double ad, double dd, double s)
    {
        x_.resize(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) x_[i] = a[i] + s * d[i];
        return 0.5 * V_ * (aa + 2.0 * s * ad + s * s * dd) - V_ * potential_sum(P_, c1_, c2_, u_sub_, x_, buf_);
    }

    void gradient(const Field& u, Field& g)
    {
        P_.A.apply(u, Au_);
        gradient_into(P_, c1_, c2_, u_sub_, u, Au_, g);
    }

private:
    const BoundProblem& P_;
    const Field& u_sub_;
    Field c1_, c2_, Au_, buf_, x_;
    double V_ = 0.0;
};

struct SegmentMax {
    double s = 0.0;
    double value = -INFINITY;
};

// Maximizes J on the segment [a, b]: coarse scan followed by golden-section refinement.
SegmentMax maximize_segment(EnergyEval& E, const SparseOperator& A, const Field& a, const Field& b)
{
    Field d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = b[i] - a[i];
    const Field Aa = A.apply(a), Ad = A.apply(d);
    const double aa = dot(a, Aa), ad = dot(a, Ad), dd = dot(d, Ad);
    auto f = [&](double s) { return E.on_line(a, d, aa, ad, dd, s); };
    const int n_scan = 16;
    std::vector<double> vals(n_scan + 1);
    int best = 0;
    for (int k = 0; k <= n_scan; ++k) {
        vals[k] = f(static_cast<double>(k) / n_scan);
        if (vals[k] > vals[best]) best = k;
    }
    double lo = std::max(0, best - 1) / static_cast<double>(n_scan);
    double hi = std::min(n_scan, best + 1) / static_cast<double>(n_scan);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    while (hi - lo > 1e-7) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = f(x1);
        }
    }
    SegmentMax m;
    m.s = 0.5 * (lo + hi);
    m.value = f(m.s);
    if (vals[best] > m.value) {
        m.s = static_cast<double>(best) / n_scan;
        m.value = vals[best];
    }
    return m;
}

Field point_on(const Field& a, const Field& b, double s)
{
    Field x(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) x[i] = a[i] + s * (b[i] - a[i]);
    return x;
}

Field smooth_random_field(const Grid& g, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double rad = g.box_radius();
    Field u(g.size(), 0.0);
    const int bumps = 1 + static_cast<int>(3 * unif(rng));
    for (int b = 0; b < bumps; ++b) {
        Point c;
        for (int k = 0; k < g.geom().m; ++k) c.x.push_back((unif(rng) - 0.5) * 0.5 * g.box().x_half);
        for (int k = 0; k < g.geom().ell; ++k) c.y.push_back((unif(rng) - 0.5) * 0.5 * g.box().y_half);
        const double w = rad * (0.1 + 0.3 * unif(rng));
        const double amp = 0.2 + unif(rng);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double t = distance_from(g, i, c) / w;
            u[i] += amp * std::exp(-t * t);
        }
    }
    return u;
}

}  // namespace

double sphere_infimum(const BoundProblem& P, const Field& u_sub, const Field& grad_v_mag, double rho, int samples,
                      std::uint64_t seed, const Field* extra)
{
    const Grid& g = *P.grid;
    std::mt19937_64 rng(seed);
    EnergyEval E(P, u_sub, grad_v_mag);
    double inf = INFINITY;
    Field best;
    auto probe = [&](Field u) {
        const double e = energy_seminorm(g, P.A, u);
        for (double& v : u) v *= rho / e;
        const double j = E.value(u);
        if (j < inf) {
            inf = j;
            best.swap(u);
        }
    };
    for (int k = 0; k < samples; ++k) probe(smooth_random_field(g, rng));
    if (extra) probe(*extra);
    if (best.empty()) return inf;

    // a sample only bounds the infimum from above; descend on the sphere from the best one.
    // On ||u||_E = rho, J = rho^2/2 - Phi(u) and the A-metric ascent direction of Phi is A^{-1}(A u - J'(u)).
    LaplaceInverse Ainv(g);
    Field grad, phi(g.size()), step, cand(g.size());
    double tau = 1.0;
    for (int it = 0; it < 200; ++it) {
        E.gradient(best, grad);
        const Field Au = P.A.apply(best);
        for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = Au[i] - grad[i];
        Ainv.apply(phi, step);
        bool accepted = false;
        double jn = inf;
        while (tau > 1e-6) {
            // tau -> infinity is the pure inverse iteration; blend toward it
            for (std::size_t i = 0; i < cand.size(); ++i) cand[i] = best[i] + tau * step[i];
            const double e = energy_seminorm(g, P.A, cand);
            for (double& v : cand) v *= rho / e;
            jn = E.value(cand);
            if (jn < inf) {
                accepted = true;
                break;
            }
            tau *= 0.5;
        }
        if (!accepted) break;
        const double drop = inf - jn;
        inf = jn;
        best.swap(cand);
        tau = std::min(4.0 * tau, 1e6);
        if (drop <= 1e-13 * std::abs(inf)) break;
    }
    return inf;
}

MountainPassResult mountain_pass(const BoundProblem& P, const Field& u_sub, const Field& v, const Field& u1, double S,
                                 const MountainPassOptions& opt)
{
    const Grid& g = *P.grid;
    if (opt.n_path < 8) throw std::invalid_argument("n_path: must be >= 8");
    if (!(S > 0.0)) throw std::invalid_argument("S: must be positive");
    check_conformable(g, u1, "mountain_pass(u1)");
    check_conformable(g, u_sub, "mountain_pass(u_sub)");
    check_conformable(g, v, "mountain_pass(v)");
    const Field gvm = gradient_magnitude(g, v);
    const double N = g.geom().n_gamma(), V = g.cell_volume();
    MountainPassResult res;
    res.rho = std::pow(S, 0.25 * N);
    EnergyEval E(P, u_sub, gvm);
    res.J_u1 = E.value(u1);
    Field u1_on_sphere = u1;
    res.sphere_inf = sphere_infimum(P, u_sub, gvm, res.rho, opt.sphere_samples, opt.seed, &u1_on_sphere);
    if (!(res.J_u1 < 0.0 && res.sphere_inf > 0.0)) {
        std::ostringstream os;
        os << "mountain pass geometry not met: J(u1)=" << res.J_u1 << ", sampled inf on the rho-sphere=" << res.sphere_inf;
        res.note = os.str();
        return res;
    }
    LaplaceInverse Ainv(g);

    // straight path with a node at the peak
    const Field zero(g.size(), 0.0);
    const SegmentMax m0 = maximize_segment(E, P.A, zero, u1);
    const int n = opt.n_path;
    const int k_peak = std::clamp(static_cast<int>(std::lround(m0.s * (n - 1))), 1, n - 2);
    std::vector<Field> path(n);
    for (int k = 0; k < n; ++k) {
        const double s = k <= k_peak ? m0.s * k / k_peak : m0.s + (1.0 - m0.s) * (k - k_peak) / (n - 1 - k_peak);
        path[k] = point_on(zero, u1, s);
    }
    std::vector<SegmentMax> seg(n - 1);
    for (int j = 0; j < n - 1; ++j) seg[j] = maximize_segment(E, P.A, path[j], path[j + 1]);

    auto global_peak = [&]() {
        int j = 0;
        for (int i = 1; i < n - 1; ++i)
            if (seg[i].value > seg[j].value) j = i;
        return j;
    };
    int j = global_peak();
    double level = seg[j].value;
    Field peak = point_on(path[j], path[j + 1], seg[j].s), grad, s;
    double tau = 1.0;
    res.level_history.push_back(level);
    int it = 0;
    for (; it < opt.max_iter; ++it) {
        E.gradient(peak, grad);
        Ainv.apply(grad, s);
        const double g2 = V * dot(grad, s);
        const double unorm = energy_seminorm(g, P.A, peak);
        const double gn = std::sqrt(std::max(g2, 0.0)) / unorm;
        res.gradient_history.push_back(gn);
        if (gn <= opt.tol) {
            res.converged = true;
            break;
        }
        int k = seg[j].s <= 0.5 ? j : j + 1;
        k = std::clamp(k, 1, n - 2);
        bool accepted = false;
        while (tau > 1e-10) {
            Field q(peak.size());
            for (std::size_t i = 0; i < q.size(); ++i) q[i] = peak[i] - tau * s[i];
            const SegmentMax left = maximize_segment(E, P.A, path[k - 1], q);
            const SegmentMax right = maximize_segment(E, P.A, q, path[k + 1]);
            double others = -INFINITY;
            for (int i = 0; i < n - 1; ++i)
                if (i != k - 1 && i != k) others = std::max(others, seg[i].value);
            const double cand = std::max({others, left.value, right.value});
            if (cand <= level - 1e-4 * tau * g2) {
                path[k] = std::move(q);
                seg[k - 1] = left;
                seg[k] = right;
                level = cand;
                accepted = true;
                break;
            }
            tau *= 0.5;
        }
        if (!accepted) {
            res.note = "deformation stalled above tolerance (path too coarse or Palais-Smale failure)";
            break;
        }
        tau = std::min(1.0, 2.0 * tau);
        j = global_peak();
        peak = point_on(path[j], path[j + 1], seg[j].s);
        res.level_history.push_back(level);
    }
    res.iterations = it;
    res.u = peak;
    res.level = E.value(peak);
    E.gradient(peak, grad);
    res.gradient_norm = dual_norm(g, Ainv, grad) / energy_seminorm(g, P.A, peak);
    if (res.converged && !(res.level > 0.0)) {
        res.converged = false;
        res.note = "critical point found at a nonpositive level";
    }
    if (!res.converged && res.note.empty()) res.note = "max_iter reached above tolerance";
    return res;
}

}  // namespace grushin
