#include "grushin/analysis.hpp"

#include "grushin/norms.hpp"
#include "grushin/sparse_operator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace grushin {

std::string to_string(BarrierVariant v)
{
    return v == BarrierVariant::power ? "power" : "separated";
}

BarrierVariant parse_barrier_variant(const std::string& s)
{
    if (s == "power") return BarrierVariant::power;
    if (s == "separated") return BarrierVariant::separated;
    throw std::invalid_argument("variant: unknown barrier variant '" + s + "'");
}

MoserBound moser_bound(const Grid& g, const Field& u, double a, double b, double alpha, const Point& center, double R,
                       double S, int log_steps)
{
    check_conformable(g, u, "moser_bound");
    if (!(alpha > 1.0)) throw std::invalid_argument("alpha: must exceed 1");
    if (!(a >= 0.0) || !(b >= 0.0)) throw std::invalid_argument("a, b: must be nonnegative");
    if (!(R > 0.0)) throw std::invalid_argument("R: must be positive");
    if (!(S > 0.0)) throw std::invalid_argument("S: must be positive");
    if (ball_room(g, center) < 2.0 * R) throw std::invalid_argument("R: ball B(center, 2R) is not contained in the box");
    const std::vector<std::size_t> big = ball_nodes(g, center, 2.0 * R);
    for (std::size_t i : big)
        if (u[i] < 0.0) throw std::invalid_argument("u: must be nonnegative on B(center, 2R)");
    if (big.empty()) throw std::invalid_argument("R: ball B(center, 2R) contains no nodes");

    const double N = g.geom().n_gamma(), kbar = N / (N - 2.0), V = g.cell_volume();
    MoserBound mb;
    mb.alpha = alpha;
    mb.center = center;
    mb.R = R;
    mb.a = a;
    mb.b = b;
    mb.S = S;
    // constants of the unit-scale problem -Delta u <= (R^2 a) u + R^2 b
    const double as = R * R * a, bs = R * R * b;
    mb.C = std::pow(S, -0.5) * std::max(3.0, 2.0 * std::sqrt(std::max(1.0, as)));
    const double C7 = 4.0 * mb.C;
    double logK = 0.0, r = 0.5 * alpha;
    for (int j = 0; j < 4000; ++j) {
        const double term = std::log(C7 * (1.0 + r) * std::pow(2.0, j + 1)) / r;
        logK += term;
        if (std::abs(term) < 1e-17 * std::abs(logK)) break;
        r *= kbar;
    }
    mb.K = std::exp(logK);

    double s = 0.0;
    for (std::size_t i : big) s += std::pow(u[i], alpha);
    mb.lalpha = std::pow(s * V, 1.0 / alpha);
    const double ball2 = static_cast<double>(big.size()) * V * std::pow(R, -N);
    mb.bound_value = mb.K * (std::pow(R, -N / alpha) * mb.lalpha + std::pow(ball2, 1.0 / alpha) * bs);
    mb.measured_sup = 0.0;
    for (std::size_t i : ball_nodes(g, center, R)) mb.measured_sup = std::max(mb.measured_sup, u[i]);
    mb.pass = mb.measured_sup <= mb.bound_value;

    r = 0.5 * alpha;
    std::vector<double> dist(big.size());
    for (std::size_t k = 0; k < big.size(); ++k) dist[k] = distance_from(g, big[k], center);
    for (int j = 0; j < log_steps; ++j) {
        MoserStep st;
        st.j = j;
        st.r = r;
        st.h = 1.0 + std::ldexp(1.0, -j);
        st.factor = std::exp(std::log(C7 * (1.0 + r) * std::pow(2.0, j + 1)) / r);
        double wmax = 0.0;
        for (std::size_t k = 0; k < big.size(); ++k)
            if (dist[k] < st.h * R) wmax = std::max(wmax, u[big[k]] + bs);
        double acc = 0.0;
        if (wmax > 0.0)
            for (std::size_t k = 0; k < big.size(); ++k)
                if (dist[k] < st.h * R) acc += std::pow((u[big[k]] + bs) / wmax, 2.0 * r);
        st.phi = wmax * std::pow(acc * V * std::pow(R, -N), 1.0 / (2.0 * r));
        mb.schedule_log.push_back(st);
        r *= kbar;
    }
    return mb;
}

namespace {

struct EnvelopeFit {
    double A = 0.0, B = 0.0, sse = INFINITY;
};

EnvelopeFit fit_envelope(const std::vector<double>& d, const std::vector<double>& u, double p)
{
    // 1/u = A + B d^p, weighted by u^2 so the residual is relative
    double sw = 0, st = 0, stt = 0, sy = 0, sty = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double w = u[i] * u[i], t = std::pow(d[i], p), y = 1.0 / u[i];
        sw += w;
        st += w * t;
        stt += w * t * t;
        sy += w * y;
        sty += w * t * y;
    }
    EnvelopeFit f;
    const double det = sw * stt - st * st;
    if (det > 0.0) {
        f.A = (stt * sy - st * sty) / det;
        f.B = (sw * sty - st * sy) / det;
    }
    if (!(det > 0.0) || f.A < 0.0) {
        f.A = 0.0;
        f.B = sty / stt;
    }
    if (!(f.B > 0.0)) return {0.0, 0.0, INFINITY};
    double sse = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double e = std::log(u[i]) + std::log(f.A + f.B * std::pow(d[i], p));
        sse += e * e;
    }
    f.sse = sse;
    return f;
}

}  // namespace

DecayFit decay_fit(const Grid& g, const Field& u, double d_min, double d_max)
{
    check_conformable(g, u, "decay_fit");
    if (!(d_min > 0.0 && d_max > d_min)) throw std::invalid_argument("annulus: need 0 < d_min < d_max");
    if (d_max > g.box_radius() * (1.0 + 1e-12))
        throw std::invalid_argument("annulus: d_max exceeds the box radius");
    std::vector<double> dd, uu;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double d = g.dist()[i];
        if (d < d_min || d > d_max) continue;
        if (!(u[i] > 0.0)) throw std::invalid_argument("u: must be positive on the annulus");
        dd.push_back(d);
        uu.push_back(u[i]);
    }
    if (dd.size() < 32) throw std::invalid_argument("annulus: fewer than 32 nodes");
    const double N = g.geom().n_gamma();
    DecayFit f;
    f.d_min = d_min;
    f.d_max = d_max;
    f.n_nodes = dd.size();

    const std::size_t n = dd.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += std::log(dd[i]);
        my += std::log(uu[i]);
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = std::log(dd[i]) - mx, y = std::log(uu[i]) - my;
        sxy += x * y;
        sxx += x * x;
        syy += y * y;
    }
    f.loglog_slope = sxx > 0.0 ? sxy / sxx : 0.0;

    // exponent search: coarse scan, then golden section around the best scan point
    const double p_lo = 0.05, p_hi = 4.0 * N;
    const int n_scan = 400;
    int best = 0;
    double best_sse = INFINITY;
    for (int k = 0; k <= n_scan; ++k) {
        const double p = p_lo + (p_hi - p_lo) * k / n_scan;
        const double e = fit_envelope(dd, uu, p).sse;
        if (e < best_sse) {
            best_sse = e;
            best = k;
        }
    }
    const double step = (p_hi - p_lo) / n_scan;
    double lo = p_lo + step * std::max(0, best - 1), hi = p_lo + step * std::min(n_scan, best + 1);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = fit_envelope(dd, uu, x1).sse, f2 = fit_envelope(dd, uu, x2).sse;
    while (hi - lo > 1e-10) {
        if (f1 > f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = fit_envelope(dd, uu, x2).sse;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = fit_envelope(dd, uu, x1).sse;
        }
    }
    const double p = 0.5 * (lo + hi);
    const EnvelopeFit ef = fit_envelope(dd, uu, p);
    f.fitted_exponent = -p;
    f.envelope_A = ef.A;
    f.envelope_B = ef.B;
    f.r_squared = syy > 0.0 ? std::clamp(1.0 - ef.sse / syy, 0.0, 1.0) : 1.0;

    f.C0 = INFINITY;
    f.C1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = uu[i] * (1.0 + std::pow(dd[i], N - 2.0));
        f.C0 = std::min(f.C0, e);
        f.C1 = std::max(f.C1, e);
        f.samples.emplace_back(std::log(dd[i]), std::log(uu[i]));
    }
    return f;
}

void check_barrier_window(const Geometry& g, BarrierVariant v, double q)
{
    std::ostringstream os;
    if (v == BarrierVariant::power) {
        const double N = g.n_gamma();
        if (!(q > 2.0 - N)) os << "q: violates 2 - n_gamma < q (q = " << q << ", 2 - n_gamma = " << 2.0 - N << ")";
        else if (!(q < 1.0 - 0.5 * N))
            os << "q: violates q < 1 - n_gamma/2 (q = " << q << ", 1 - n_gamma/2 = " << 1.0 - 0.5 * N << ")";
    } else {
        const double l = g.ell;
        if (!(g.ell > 4)) os << "ell: violates ell > 4 (ell = " << g.ell << ")";
        else if (!(q > 2.0 - l)) os << "q: violates 2 - ell < q (q = " << q << ", 2 - ell = " << 2.0 - l << ")";
        else if (!(q < -0.5 * l)) os << "q: violates q < -ell/2 (q = " << q << ", -ell/2 = " << -0.5 * l << ")";
    }
    if (!os.str().empty()) throw std::invalid_argument(os.str());
}

BarrierReport barrier_residual(const Grid& g, const BarrierParams& p)
{
    const Geometry& geo = g.geom();
    check_barrier_window(geo, p.variant, p.q);
    if (!(p.M > 0.0)) throw std::invalid_argument("M: must be positive");
    const double N = geo.n_gamma(), gam = geo.gamma, q = p.q, M = p.M;
    BarrierReport rep;
    rep.variant = p.variant;
    rep.q = q;
    Field psi(g.size()), exact(g.size());
    if (p.variant == BarrierVariant::power) {
        rep.C = -M * q * (q - 2.0 + N);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double d = g.dist()[i];
            psi[i] = M * std::pow(d, q);
            exact[i] = rep.C * std::pow(d, q - 2.0 - 2.0 * gam) * std::pow(g.x_norm2()[i], gam);
        }
    } else {
        const double l = geo.ell, m = geo.m;
        rep.C = -M * q * (q - 2.0 + l);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double x2 = g.x_norm2()[i], y2 = g.y_norm2()[i];
            const double f = std::exp(-x2), yq = std::pow(y2, 0.5 * q);
            psi[i] = M * f * yq;
            exact[i] = M * (2.0 * m - 4.0 * x2) * f * yq + rep.C * std::pow(x2, gam) * f * yq / y2;
        }
        rep.note = "the separated barrier needs ell > 4; this restriction is conjectured to be technical";
    }
    rep.sign_certificate = rep.C > 0.0;
    Field disc;
    apply_stencil(g, psi, disc);
    const std::vector<char> inner = interior_mask(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!inner[i]) continue;
        const double x = std::sqrt(g.x_norm2()[i]), y = std::sqrt(g.y_norm2()[i]);
        bool in;
        if (p.variant == BarrierVariant::power) {
            const double d = g.dist()[i];
            in = d >= p.d_min && d <= p.d_max && x >= p.x_min;
        } else {
            in = x <= p.a && y >= p.y_min;
        }
        if (!in) continue;
        ++rep.n_nodes;
        rep.max_rel_error = std::max(rep.max_rel_error, std::abs(disc[i] - exact[i]) / std::abs(exact[i]));
    }
    if (rep.n_nodes == 0) throw std::invalid_argument("region: no interior nodes in the comparison region");
    return rep;
}

ConcentrationProfile concentration_profile(const Grid& g, const Field& u, const std::vector<double>& radii)
{
    check_conformable(g, u, "concentration_profile");
    for (std::size_t k = 1; k < radii.size(); ++k)
        if (!(radii[k] > radii[k - 1])) throw std::invalid_argument("radii: must be strictly increasing");
    const double p = g.geom().two_star(), V = g.cell_volume();
    const Field gm = gradient_magnitude(g, u);
    ConcentrationProfile cp;
    cp.radii = radii;
    std::vector<double> crit(g.size()), grad(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        crit[i] = std::pow(std::abs(u[i]), p) * V;
        grad[i] = gm[i] * gm[i] * V;
        cp.total_crit += crit[i];
        cp.total_grad += grad[i];
    }
    for (double R : radii) {
        double tc = 0.0, tg = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (g.dist()[i] >= R) {
                tc += crit[i];
                tg += grad[i];
            }
        cp.tail_mass_crit.push_back(tc);
        cp.tail_mass_grad.push_back(tg);
    }
    return cp;
}

double interpolate(const Grid& g, const Field& u, const double* x, const double* y)
{
    const int d = g.dim(), m = g.geom().m;
    std::vector<int> i0(d);
    std::vector<double> t(d);
    for (int a = 0; a < d; ++a) {
        const double c = a < m ? x[a] : y[a - m];
        const double half = a < m ? g.box().x_half : g.box().y_half;
        const double f = (c + half) / g.axis_h(a) - 0.5;
        const double fl = std::floor(f);
        if (fl < -1.0 || fl > g.axis_size(a) - 1.0) return 0.0;
        i0[a] = static_cast<int>(fl);
        t[a] = f - fl;
    }
    double s = 0.0;
    for (int corner = 0; corner < (1 << d); ++corner) {
        double w = 1.0;
        std::size_t idx = 0;
        bool ghost = false;
        for (int a = 0; a < d; ++a) {
            const int up = (corner >> a) & 1;
            const int k = i0[a] + up;
            w *= up ? t[a] : 1.0 - t[a];
            if (k < 0 || k >= g.axis_size(a)) ghost = true;
            else idx += static_cast<std::size_t>(k) * g.stride(a);
        }
        if (!ghost && w != 0.0) s += w * u[idx];
    }
    return s;
}

std::pair<Grid, Field> rescale(const Grid& g, const Field& u, double R, RescaleGrid mode)
{
    check_conformable(g, u, "rescale");
    if (!(R > 0.0) || !std::isfinite(R)) throw std::invalid_argument("R: must be positive");
    if (R == 1.0) return {g, u};
    const Geometry& geo = g.geom();
    const double sy = std::pow(R, 1.0 + geo.gamma);
    Box b{g.box().x_half / R, g.box().y_half / sy};
    if (!(b.x_half > 0.0 && b.y_half > 0.0 && std::isfinite(b.x_half) && std::isfinite(b.y_half)))
        throw std::invalid_argument("R: pulled-back box is not representable");
    const double scale = std::pow(R, geo.n_gamma() - 2.0);
    if (mode == RescaleGrid::same_count) {
        Grid out(geo, b, g.n_x(), g.n_y());
        Field v(u);
        for (double& x : v) x *= scale;
        return {std::move(out), std::move(v)};
    }
    const long nx = std::lround(2.0 * b.x_half / g.h_x()), ny = std::lround(2.0 * b.y_half / g.h_y());
    if (nx < 4 || ny < 4)
        throw std::invalid_argument("R: pulled-back box has fewer than 4 cells on some axis at the source spacing");
    if (nx > 1L << 20 || ny > 1L << 20) throw std::invalid_argument("R: pulled-back grid too large");
    Grid out(geo, b, static_cast<int>(nx), static_cast<int>(ny));
    Field v(out.size());
    std::vector<double> x(geo.m), y(geo.ell);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.node(i, x.data(), y.data());
        for (double& c : x) c *= R;
        for (double& c : y) c *= sy;
        v[i] = scale * interpolate(g, u, x.data(), y.data());
    }
    return {std::move(out), std::move(v)};
}

WeakMembership weak_membership_check(const Grid& g, const Field& u)
{
    check_conformable(g, u, "weak_membership_check");
    for (double v : u)
        if (v < 0.0) throw std::invalid_argument("u: must be nonnegative");
    WeakMembership wm;
    const double V = g.cell_volume();
    wm.s = g.geom().two_lower_star() - 1.0;
    Field v(u);
    std::sort(v.begin(), v.end(), std::greater<double>());
    std::vector<std::pair<double, double>> tail;
    std::size_t k = 0;
    std::size_t best = 0;
    while (k < v.size()) {
        const double h = v[k];
        while (k < v.size() && v[k] == h) ++k;
        // left limit at h: the first k nodes are those with u >= h
        const double val = h * std::pow(static_cast<double>(k) * V, 1.0 / wm.s);
        tail.emplace_back(h, val);
        if (val > tail[best].second) best = tail.size() - 1;
    }
    wm.weak_norm = tail[best].second;
    wm.argmax_threshold = tail[best].first;
    std::size_t last_pos = tail.size();
    while (last_pos > 0 && !(tail[last_pos - 1].first > 0.0)) --last_pos;
    wm.interior_sup = best > 0 && best + 1 < last_pos;
    const std::size_t stride = std::max<std::size_t>(1, tail.size() / 200);
    for (std::size_t i = 0; i < tail.size(); i += stride) wm.tail.push_back(tail[i]);
    return wm;
}

std::pair<double, double> peter_paul(const std::vector<double>& b, const std::vector<double>& p, double eps)
{
    if (b.size() != p.size() || b.size() < 2) throw std::invalid_argument("b, p: need matching lengths >= 2");
    if (!(eps > 0.0)) throw std::invalid_argument("eps: must be positive");
    double inv = 0.0, lhs = 1.0, rhs = 0.0;
    const std::size_t k = b.size() - 1;
    for (std::size_t j = 0; j <= k; ++j) {
        if (!(p[j] > 1.0)) throw std::invalid_argument("p: exponents must exceed 1");
        if (b[j] < 0.0) throw std::invalid_argument("b: must be nonnegative");
        inv += 1.0 / p[j];
        lhs *= b[j];
        if (j < k) rhs += eps * std::pow(b[j], p[j]) / p[j];
    }
    if (std::abs(inv - 1.0) > 1e-12) throw std::invalid_argument("p: reciprocals must sum to 1");
    rhs += std::pow(eps, 1.0 - p[k]) * std::pow(b[k], p[k]) / p[k];
    return {lhs, rhs};
}

}  // namespace grushin
