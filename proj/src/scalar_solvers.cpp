#include "grushin/scalar_solvers.hpp"

#include "grushin/norms.hpp"
#include "grushin/variational.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace grushin {

bool NonlinearSolveReport::has_flag(const std::string& f) const
{
    return std::find(flags.begin(), flags.end(), f) != flags.end();
}

double relative_residual(const Field& Au, const Field& N)
{
    double f2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (std::size_t i = 0; i < Au.size(); ++i) {
        const double f = Au[i] - N[i];
        f2 += f * f;
        a2 += Au[i] * Au[i];
        n2 += N[i] * N[i];
    }
    const double den = std::sqrt(a2) + std::sqrt(n2);
    return den == 0.0 ? 0.0 : std::sqrt(f2) / den;
}

LaplaceInverse::LaplaceInverse(const Grid& g) : grid_(&g), A_(assemble_operator(g))
{
    if (SeparableSolver::available(g)) fast_ = std::make_shared<SeparableSolver>(g);
}

void LaplaceInverse::apply(const Field& b, Field& x) const
{
    if (fast_) {
        fast_->solve(b, x);
        return;
    }
    auto [sol, rep] = solve_spd(A_, b, 1e-13, 100000);
    x = std::move(sol);
}

LinearMap LaplaceInverse::preconditioner() const
{
    if (fast_) {
        auto f = fast_;
        return [f](const Field& in, Field& out) { f->solve(in, out); };
    }
    Field inv(A_.n);
    for (std::size_t i = 0; i < A_.n; ++i) inv[i] = 1.0 / A_.diag(i);
    return [inv](const Field& in, Field& out) {
        out.resize(in.size());
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = inv[i] * in[i];
    };
}

namespace {

double forcing(double rel, double tol)
{
    return std::clamp(std::max(0.25 * tol / std::max(rel, 1e-300), 1e-2 * rel), 1e-13, 1e-2);
}

struct LinearStep {
    Field delta;
    int iterations = 0;
    bool ok = false;
};

// Solves (A + diag(c)) delta = -F.
LinearStep newton_direction(const BoundProblem& P, const LinearMap& precond, const Field& c, const Field& F,
                            double lin_tol)
{
    const std::size_t n = F.size();
    Field rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = -F[i];
    const LinearMap J = [&](const Field& in, Field& out) {
        P.A.apply(in, out);
        for (std::size_t i = 0; i < n; ++i) out[i] += c[i] * in[i];
    };
    Field dg(n);
    for (std::size_t i = 0; i < n; ++i) dg[i] = P.A.diag(i) + c[i];
    LinearSolveOptions o;
    o.tol = lin_tol;
    o.max_iter = 5000;
    o.preconditioner = precond;
    const bool spd = std::all_of(c.begin(), c.end(), [](double v) { return v >= 0.0; });
    LinearStep st;
    if (spd) {
        auto [d, rep] = solve_spd(J, dg, rhs, o);
        st.delta = std::move(d);
        st.iterations = rep.iterations;
        st.ok = rep.converged || rep.relative_residual < 0.5;
    } else {
        for (double& v : dg) v = std::max(v, 1e-300);
        auto [d, rep] = solve_symmetric(J, rhs, o, dg);
        st.delta = std::move(d);
        st.iterations = rep.iterations;
        st.ok = rep.converged || rep.relative_residual < 0.5;
    }
    return st;
}

void regularized_terms(const BoundProblem& P, double eps, const Field& src, const Field& u, Field& N, Field& dN)
{
    const double l1 = P.spec.lambda1, eta = P.spec.eta;
    const std::size_t n = u.size();
    N.resize(n);
    dN.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double up = std::max(u[i], 0.0);
        const double base = up + eps;
        const double t = l1 * P.w1[i] * std::pow(base, -eta);
        N[i] = src.empty() ? t : t + src[i];
        dN[i] = u[i] > 0.0 ? eta * t / base : 0.0;  // minus the derivative of N
    }
}

}  // namespace

std::pair<Field, NonlinearSolveReport> solve_regularized(const BoundProblem& P, long long n, double tol,
                                                         const RegularizedOptions& opt)
{
    if (n < 1) throw std::invalid_argument("n: must be >= 1");
    const Grid& g = *P.grid;
    if (!opt.source.empty()) check_conformable(g, opt.source, "solve_regularized(source)");
    const double eps = 1.0 / static_cast<double>(n);
    NonlinearSolveReport rep;
    const std::size_t N = g.size();

    Field N0, dN0;
    regularized_terms(P, eps, opt.source, Field(N, 0.0), N0, dN0);
    const double eps0 = 1e-12 * max_abs(N0);
    Field u = opt.x0.empty() ? Field(N, 0.0) : opt.x0;
    check_conformable(g, u, "solve_regularized");
    bool clamped = false;
    for (double& v : u)
        if (v < eps0) { v = eps0; clamped = true; }

    LaplaceInverse Ainv(g);
    const LinearMap precond = Ainv.preconditioner();
    Field Au, Nu, dN, F(N);
    auto eval = [&](const Field& x, Field& ax, Field& nx, Field& dnx, Field& fx) {
        P.A.apply(x, ax);
        regularized_terms(P, eps, opt.source, x, nx, dnx);
        for (std::size_t i = 0; i < N; ++i) fx[i] = ax[i] - nx[i];
        return relative_residual(ax, nx);
    };
    double rel = eval(u, Au, Nu, dN, F);
    double fnorm = norm2(F);
    rep.residual_history.push_back(rel);
    int it = 0;
    while (rel > tol && it < opt.max_newton) {
        const LinearStep st = newton_direction(P, precond, dN, F, forcing(rel, tol));
        rep.linear_iterations += st.iterations;
        if (!st.ok) {
            rep.flags.push_back("linear_solver_failed");
            break;
        }
        double t = 1.0;
        bool accepted = false;
        Field ut(N), Aut, Nut, dNt, Ft(N);
        while (t > 1e-6) {
            bool clamp_now = false;
            for (std::size_t i = 0; i < N; ++i) {
                ut[i] = u[i] + t * st.delta[i];
                if (ut[i] < eps0) { ut[i] = eps0; clamp_now = true; }
            }
            const double rt = eval(ut, Aut, Nut, dNt, Ft);
            const double ft = norm2(Ft);
            if (ft <= (1.0 - 1e-4 * t) * fnorm || rt <= tol) {
                u.swap(ut);
                Au.swap(Aut);
                Nu.swap(Nut);
                dN.swap(dNt);
                F.swap(Ft);
                rel = rt;
                fnorm = ft;
                clamped = clamped || clamp_now;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        ++it;
        rep.residual_history.push_back(rel);
        if (!accepted) {
            rep.flags.push_back("line_search_failed");
            break;
        }
    }
    rep.newton_iterations.push_back(it);
    rep.final_residual = rel;
    rep.converged = rel <= tol;
    rep.positivity_margin = min_value(u);
    if (clamped) rep.flags.push_back("positivity_clamp_engaged");
    if (rep.converged) {
        bool active = false;
        for (double v : u) if (v <= eps0) active = true;
        if (active) rep.flags.push_back("positivity_clamp_active_at_convergence");
    } else {
        rep.flags.push_back("newton_diverged");
    }
    return {u, rep};
}

std::pair<Field, NonlinearSolveReport> subsolution_ladder(const BoundProblem& P, const LadderOptions& opt)
{
    if (opt.n_max < 1) throw std::invalid_argument("n_max: must be >= 1");
    if (!(P.spec.lambda1 > 0.0)) throw std::invalid_argument("lambda1: ladder needs lambda1 > 0");
    NonlinearSolveReport rep;
    Field u;
    for (long long n = 1; n <= opt.n_max; n *= 2) {
        RegularizedOptions ro;
        ro.x0 = u;
        auto [un, r] = solve_regularized(P, n, opt.tol, ro);
        rep.newton_iterations.push_back(r.newton_iterations.empty() ? 0 : r.newton_iterations.front());
        rep.residual_history.push_back(r.final_residual);
        rep.linear_iterations += r.linear_iterations;
        rep.levels.push_back(n);
        for (const auto& f : r.flags)
            if (!rep.has_flag(f)) rep.flags.push_back(f);
        if (!r.converged) {
            rep.flags.push_back("level_not_converged_n=" + std::to_string(n));
            rep.converged = false;
            rep.positivity_margin = min_value(un);
            return {un, rep};
        }
        if (!u.empty()) {
            double inc = 0.0, worst = INFINITY;
            for (std::size_t i = 0; i < un.size(); ++i) {
                inc = std::max(inc, std::abs(un[i] - u[i]));
                worst = std::min(worst, un[i] - u[i]);
            }
            rep.increments.push_back(inc);
            if (worst < -opt.monotone_slack) {
                std::ostringstream os;
                os << "non_monotone_ladder: u_" << n << " - u_" << n / 2 << " reaches " << worst
                   << " (grid too coarse or tolerance too loose)";
                rep.flags.push_back(os.str());
                rep.converged = false;
                rep.positivity_margin = min_value(un);
                return {un, rep};
            }
            u = std::move(un);
            ++rep.outer_iterations;
            if (opt.increment_tol > 0.0 && inc <= opt.increment_tol * max_abs(u)) break;
        } else {
            u = std::move(un);
            ++rep.outer_iterations;
        }
        if (n > opt.n_max / 2) break;
    }
    rep.converged = true;
    rep.positivity_margin = min_value(u);
    rep.final_residual = rep.residual_history.back();
    return {u, rep};
}

Field scale_subsolution(const Field& u_base, double lambda1, double eta)
{
    if (!(lambda1 >= 0.0)) throw std::invalid_argument("lambda1: must be >= 0");
    const double f = std::pow(lambda1, 1.0 / (1.0 + eta));
    Field out(u_base);
    for (double& v : out) v *= f;
    return out;
}

Field truncated_reaction(const BoundProblem& P, const Field& u_sub, const Field& grad_v_mag, const Field& u)
{
    const Grid& g = *P.grid;
    check_conformable(g, u_sub, "truncated_reaction(u_sub)");
    check_conformable(g, grad_v_mag, "truncated_reaction(grad_v)");
    check_conformable(g, u, "truncated_reaction(u)");
    const double l1 = P.spec.lambda1, l2 = P.spec.lambda2, eta = P.spec.eta, r = P.spec.r;
    Field a(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        double t = 0.0;
        if (l1 > 0.0) t += l1 * P.w1[i] * std::pow(std::max(u[i], u_sub[i]), -eta);
        if (l2 > 0.0) t += l2 * P.w2[i] * std::pow(grad_v_mag[i], r - 1.0);
        a[i] = t;
    }
    return a;
}

namespace {

struct FrozenTerms {
    Field N, c;  // reaction and Jacobian shift -dN/du
};

void frozen_terms(const BoundProblem& P, double scale, const Field& u_sub, const Field& conv, const Field& u,
                  FrozenTerms& t)
{
    const double l1 = scale * P.spec.lambda1, eta = P.spec.eta, p = P.two_star;
    const std::size_t n = u.size();
    t.N.resize(n);
    t.c.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double N = scale * conv[i], c = 0.0;
        if (l1 > 0.0) {
            const double s = std::max(u[i], u_sub[i]);
            const double a1 = l1 * P.w1[i] * std::pow(s, -eta);
            N += a1;
            if (u[i] > u_sub[i]) c += eta * a1 / s;
        }
        if (u[i] > 0.0) {
            const double up = std::pow(u[i], p - 2.0);
            N += up * u[i];
            c -= (p - 1.0) * up;
        }
        t.N[i] = N;
        t.c[i] = c;
    }
}

Field convective(const BoundProblem& P, const Field& grad_v_mag)
{
    Field conv(grad_v_mag.size(), 0.0);
    if (P.spec.lambda2 > 0.0)
        for (std::size_t i = 0; i < conv.size(); ++i)
            conv[i] = P.spec.lambda2 * P.w2[i] * std::pow(grad_v_mag[i], P.spec.r - 1.0);
    return conv;
}

struct NewtonOutcome {
    Field u;
    double rel = 0.0;
    int iterations = 0;
    long long linear = 0;
    bool converged = false;
    std::vector<double> history;
};

NewtonOutcome frozen_newton(const BoundProblem& P, double scale, const Field& u_sub, const Field& conv, Field u,
                            double tol, int max_newton, const LinearMap& precond)
{
    const std::size_t n = u.size();
    for (std::size_t i = 0; i < n; ++i) u[i] = std::max(u[i], u_sub[i]);
    NewtonOutcome out;
    FrozenTerms T, Tt;
    Field Au, F(n), Aut, Ft(n), ut(n);
    auto eval = [&](const Field& x, Field& ax, FrozenTerms& tt, Field& fx) {
        P.A.apply(x, ax);
        frozen_terms(P, scale, u_sub, conv, x, tt);
        for (std::size_t i = 0; i < n; ++i) fx[i] = ax[i] - tt.N[i];
        return relative_residual(ax, tt.N);
    };
    double rel = eval(u, Au, T, F);
    double fnorm = norm2(F);
    out.history.push_back(rel);
    int it = 0;
    while (rel > tol && it < max_newton) {
        const LinearStep st = newton_direction(P, precond, T.c, F, forcing(rel, tol));
        out.linear += st.iterations;
        if (!st.ok) break;
        double t = 1.0;
        bool accepted = false;
        while (t > 1e-6) {
            for (std::size_t i = 0; i < n; ++i) ut[i] = std::max(u[i] + t * st.delta[i], u_sub[i]);
            const double rt = eval(ut, Aut, Tt, Ft);
            const double ft = norm2(Ft);
            if (std::isfinite(ft) && (ft <= (1.0 - 1e-4 * t) * fnorm || rt <= tol)) {
                u.swap(ut);
                Au.swap(Aut);
                std::swap(T, Tt);
                F.swap(Ft);
                rel = rt;
                fnorm = ft;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        ++it;
        out.history.push_back(rel);
        if (!accepted) break;
    }
    out.u = std::move(u);
    out.rel = rel;
    out.iterations = it;
    out.converged = rel <= tol;
    return out;
}

}  // namespace

double frozen_residual(const BoundProblem& P, const Field& u_sub, const Field& v, const Field& u)
{
    const Field conv = convective(P, gradient_magnitude(*P.grid, v));
    FrozenTerms T;
    frozen_terms(P, 1.0, u_sub, conv, u, T);
    return relative_residual(P.A.apply(u), T.N);
}

double full_residual(const BoundProblem& P, const Field& u)
{
    const Field conv = convective(P, gradient_magnitude(*P.grid, u));
    const double l1 = P.spec.lambda1, eta = P.spec.eta, p = P.two_star;
    Field N(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        double t = conv[i];
        if (l1 > 0.0) t += u[i] > 0.0 ? l1 * P.w1[i] * std::pow(u[i], -eta) : INFINITY;
        if (u[i] > 0.0) t += std::pow(u[i], p - 1.0);
        N[i] = t;
    }
    return relative_residual(P.A.apply(u), N);
}

std::pair<Field, NonlinearSolveReport> solve_frozen(const BoundProblem& P, const Field& u_sub, const Field& v,
                                                    double tol, const FrozenOptions& opt)
{
    const Grid& g = *P.grid;
    check_conformable(g, u_sub, "solve_frozen(u_sub)");
    check_conformable(g, v, "solve_frozen(v)");
    if (P.spec.lambda1 > 0.0 && !(min_value(u_sub) > 0.0))
        throw std::invalid_argument("u_sub: must be positive at every node");
    NonlinearSolveReport rep;
    Field conv = convective(P, gradient_magnitude(g, v));
    if (!opt.source.empty()) {
        check_conformable(g, opt.source, "solve_frozen(source)");
        for (std::size_t i = 0; i < conv.size(); ++i) conv[i] += opt.source[i];
    }
    Field x0 = opt.x0.empty() ? u_sub : opt.x0;
    check_conformable(g, x0, "solve_frozen(x0)");

    LaplaceInverse Ainv(g);
    const LinearMap precond = Ainv.preconditioner();
    NewtonOutcome o = frozen_newton(P, 1.0, u_sub, conv, x0, tol, opt.max_newton, precond);
    rep.newton_iterations.push_back(o.iterations);
    rep.residual_history = o.history;
    rep.linear_iterations += o.linear;

    if (!o.converged && opt.allow_continuation) {
        rep.flags.push_back("continuation_engaged");
        Field u = x0;
        for (double s : {0.25, 0.5, 0.75, 1.0}) {
            o = frozen_newton(P, s, u_sub, conv, u, tol, opt.max_newton, precond);
            rep.newton_iterations.push_back(o.iterations);
            rep.linear_iterations += o.linear;
            rep.residual_history.insert(rep.residual_history.end(), o.history.begin(), o.history.end());
            if (!o.converged) break;
            u = o.u;
        }
    }
    if (!o.converged && opt.allow_monotone_fallback) {
        rep.flags.push_back("monotone_fallback_engaged");
        // (A + c) u_{k+1} = N(u_k) + c u_k, increasing from u_sub while below the cap
        const double l1 = P.spec.lambda1, eta = P.spec.eta;
        Field c(g.size(), 0.0);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (l1 > 0.0) c[i] = eta * l1 * P.w1[i] * std::pow(u_sub[i], -eta - 1.0);
        const double cap = opt.supersolution_level > 0.0 ? opt.supersolution_level : INFINITY;
        Field u = u_sub, Au;
        FrozenTerms T;
        double rel = INFINITY;
        int k = 0;
        for (; k < 2000; ++k) {
            P.A.apply(u, Au);
            frozen_terms(P, 1.0, u_sub, conv, u, T);
            rel = relative_residual(Au, T.N);
            rep.residual_history.push_back(rel);
            if (rel <= tol) break;
            Field rhs(g.size()), dg(g.size());
            for (std::size_t i = 0; i < g.size(); ++i) {
                rhs[i] = T.N[i] + c[i] * u[i];
                dg[i] = P.A.diag(i) + c[i];
            }
            LinearSolveOptions lo;
            lo.tol = std::max(1e-13, 0.1 * tol);
            lo.preconditioner = precond;
            lo.x0 = u;
            const LinearMap J = [&](const Field& in, Field& out) {
                P.A.apply(in, out);
                for (std::size_t i = 0; i < in.size(); ++i) out[i] += c[i] * in[i];
            };
            auto [un, lr] = solve_spd(J, dg, rhs, lo);
            rep.linear_iterations += lr.iterations;
            u = std::move(un);
            if (max_abs(u) > cap) {
                rep.flags.push_back("monotone_iteration_exceeded_supersolution_cap");
                break;
            }
        }
        rep.newton_iterations.push_back(k);
        o.u = u;
        o.rel = rel;
        o.converged = rel <= tol;
    }

    rep.final_residual = o.rel;
    rep.converged = o.converged;
    rep.positivity_margin = min_value(o.u);
    rep.energy_history.push_back(energy(P, u_sub, gradient_magnitude(g, v), o.u));
    if (!rep.converged) rep.flags.push_back("not_converged");
    return {o.u, rep};
}

bool recursion_guard(double c, double K, double alpha, double b0)
{
    if (!(K > 1.0)) throw std::invalid_argument("K: recursion guard needs K > 1");
    if (!(alpha > 1.0)) throw std::invalid_argument("alpha: recursion guard needs alpha > 1");
    if (c < 0.0 || b0 < 0.0) throw std::invalid_argument("c, b0: must be nonnegative");
    return K * std::pow(b0, alpha - 1.0) <= 0.5 && K * std::pow(c, alpha - 1.0) < std::pow(2.0, -alpha);
}

RecursionConstants recursion_constants(const BoundProblem& P, const Field& u_sub_base, double S, double L)
{
    const Grid& g = *P.grid;
    const double N = g.geom().n_gamma(), p = P.two_star, eta = P.spec.eta, r = P.spec.r;
    RecursionConstants k;
    Field w1u(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) w1u[i] = P.w1[i] * std::pow(u_sub_base[i], -eta);
    const double n1 = lp_norm(g, w1u, p / (p - 1.0));
    const double n2 = lp_norm(g, P.w2, theta_exponent(g.geom(), r));
    k.H = std::pow(S, -0.5) * (n1 + n2 * std::pow(L, r - 1.0));
    k.R = L * std::pow(2.0 * std::pow(S, -0.5 * p), 1.0 / (p - 2.0)) * (1.0 + 1e-9);
    k.R = std::max(k.R, std::sqrt(1.0001 * std::pow(S, 0.5 * p)));
    k.K = k.R * k.R * std::pow(S, -0.5 * p);
    k.alpha = p - 1.0;
    k.c = k.H * std::pow(P.spec.lambda1, 1.0 / (1.0 + eta)) * std::pow(k.R, 1.0 - 0.5 * N);
    k.b0 = std::pow(k.R, -0.5 * N) * L;
    k.verdict = recursion_guard(k.c, k.K, k.alpha, k.b0);
    return k;
}

std::pair<Field, NonlinearSolveReport> unfreeze_fixed_point(const BoundProblem& P, const Field& u_sub, double tol,
                                                            const UnfreezeOptions& opt)
{
    const Grid& g = *P.grid;
    NonlinearSolveReport rep;
    if (opt.S > 0.0 && P.spec.lambda1 > 0.0) {
        const double L = opt.L > 0.0 ? opt.L : 2.0 * std::pow(opt.S, 0.5 * g.geom().n_gamma());
        const Field base = scale_subsolution(u_sub, 1.0 / P.spec.lambda1, P.spec.eta);
        const RecursionConstants k = recursion_constants(P, base, opt.S, L);
        std::ostringstream os;
        os << "recursion_guard=" << (k.verdict ? "true" : "false") << " (c=" << k.c << ", K=" << k.K
           << ", alpha=" << k.alpha << ", b0=" << k.b0 << ", R=" << k.R << ")";
        rep.flags.push_back(os.str());
    }
    const double inner = 0.25 * tol;
    FrozenOptions fo;
    fo.x0 = opt.x0.empty() ? u_sub : opt.x0;
    auto [u, r0] = solve_frozen(P, u_sub, u_sub, inner, fo);
    rep.newton_iterations.push_back(r0.newton_iterations.front());
    rep.linear_iterations += r0.linear_iterations;
    rep.residual_history.push_back(full_residual(P, u));
    rep.energy_history.push_back(r0.energy_history.back());
    if (!r0.converged) {
        rep.flags.push_back("initial_frozen_solve_failed");
        for (const auto& f : r0.flags) rep.flags.push_back(f);
        rep.positivity_margin = min_value(u);
        return {u, rep};
    }
    for (int k = 1; k <= opt.max_outer; ++k) {
        fo.x0 = u;
        auto [un, rk] = solve_frozen(P, u_sub, u, inner, fo);
        rep.newton_iterations.push_back(rk.newton_iterations.front());
        rep.linear_iterations += rk.linear_iterations;
        if (!rk.converged) {
            rep.flags.push_back("frozen_solve_failed_at_outer=" + std::to_string(k));
            u = std::move(un);
            break;
        }
        Field diff(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) diff[i] = un[i] - u[i];
        const double base = gamma_seminorm(g, u);
        const double inc = base > 0.0 ? gamma_seminorm(g, diff) / base : gamma_seminorm(g, diff);
        rep.increments.push_back(inc);
        u = std::move(un);
        rep.outer_iterations = k;
        const double full = full_residual(P, u);
        rep.residual_history.push_back(full);
        rep.energy_history.push_back(rk.energy_history.back());
        if (inc <= tol && full <= 2.0 * tol) {
            rep.converged = true;
            break;
        }
    }
    rep.final_residual = rep.residual_history.back();
    rep.positivity_margin = min_value(u);
    if (!rep.converged) rep.flags.push_back("no_contraction_within_max_outer");
    return {u, rep};
}

}  // namespace grushin
