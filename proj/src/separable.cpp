#include "grushin/linsolve.hpp"

#include <fftw3.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace grushin {

struct SeparableSolver::Impl {
    std::size_t n = 0;
    int m = 1;
    int n_x = 0;
    bool transform_x = false;
    double* buf = nullptr;
    std::vector<fftw_plan> plans;
    double scale = 1.0;
    // per flat index in transformed space: eigenvalue of the transformed axes
    std::vector<double> mode_y;   // sum of y eigenvalues, indexed by y multi-index (flat / n_x^m)
    std::vector<double> mode_x;   // sum of x eigenvalues when x axes are transformed
    std::vector<double> wx;       // |x_i|^{2 gamma} for the m = 1 tridiagonal path
    double ihx2 = 0.0, shift = 0.0;

    ~Impl()
    {
        for (fftw_plan p : plans) fftw_destroy_plan(p);
        if (buf) fftw_free(buf);
    }
};

bool SeparableSolver::available(const Grid& g)
{
    return g.geom().m == 1 || g.geom().gamma == 0.0;
}

namespace {

std::vector<double> dst_eigen(int n, double h)
{
    std::vector<double> ev(n);
    for (int k = 0; k < n; ++k) ev[k] = (2.0 - 2.0 * std::cos(std::numbers::pi * (k + 1) / (n + 1))) / (h * h);
    return ev;
}

}  // namespace

SeparableSolver::SeparableSolver(const Grid& g, double shift) : impl_(std::make_unique<Impl>())
{
    if (!available(g)) throw std::invalid_argument("SeparableSolver: needs m = 1 or gamma = 0");
    Impl& s = *impl_;
    const Geometry& geo = g.geom();
    s.n = g.size();
    s.m = geo.m;
    s.n_x = g.n_x();
    s.shift = shift;
    s.ihx2 = 1.0 / (g.h_x() * g.h_x());
    s.transform_x = geo.m > 1;
    s.buf = static_cast<double*>(fftw_malloc(sizeof(double) * s.n));

    const int first = s.transform_x ? 0 : geo.m;
    for (int a = first; a < g.dim(); ++a) {
        const int na = g.axis_size(a);
        const std::size_t st = g.stride(a);
        fftw_iodim dim{na, static_cast<int>(st), static_cast<int>(st)};
        fftw_iodim many[2] = {{static_cast<int>(st), 1, 1},
                              {static_cast<int>(s.n / (st * na)), static_cast<int>(st * na), static_cast<int>(st * na)}};
        fftw_r2r_kind kind = FFTW_RODFT00;
        fftw_plan p = fftw_plan_guru_r2r(1, &dim, 2, many, s.buf, s.buf, &kind, FFTW_ESTIMATE);
        if (!p) throw std::runtime_error("SeparableSolver: FFTW planning failed");
        s.plans.push_back(p);
        s.scale /= 2.0 * (na + 1);
    }

    const std::vector<double> evy = dst_eigen(g.n_y(), g.h_y());
    std::size_t inner = 1;
    for (int a = 0; a < geo.m; ++a) inner *= g.n_x();
    const std::size_t ny_total = s.n / inner;
    s.mode_y.assign(ny_total, 0.0);
    for (std::size_t k = 0; k < ny_total; ++k) {
        std::size_t r = k;
        for (int a = 0; a < geo.ell; ++a) {
            s.mode_y[k] += evy[r % g.n_y()];
            r /= g.n_y();
        }
    }
    if (s.transform_x) {
        const std::vector<double> evx = dst_eigen(g.n_x(), g.h_x());
        s.mode_x.assign(inner, 0.0);
        for (std::size_t k = 0; k < inner; ++k) {
            std::size_t r = k;
            for (int a = 0; a < geo.m; ++a) {
                s.mode_x[k] += evx[r % g.n_x()];
                r /= g.n_x();
            }
        }
    } else {
        s.wx.resize(g.n_x());
        for (int i = 0; i < g.n_x(); ++i) {
            const double x = g.axis_coords(0)[i];
            s.wx[i] = std::pow(x * x, geo.gamma);
        }
    }
}

SeparableSolver::~SeparableSolver() = default;

void SeparableSolver::solve(const Field& b, Field& x) const
{
    const Impl& s = *impl_;
    if (b.size() != s.n) throw std::invalid_argument("SeparableSolver: dimension mismatch");
    std::copy(b.begin(), b.end(), s.buf);
    for (fftw_plan p : s.plans) fftw_execute_r2r(p, s.buf, s.buf);

    if (s.transform_x) {
        const std::size_t inner = s.mode_x.size();
        for (std::size_t k = 0; k < s.mode_y.size(); ++k)
            for (std::size_t i = 0; i < inner; ++i) s.buf[k * inner + i] /= s.mode_x[i] + s.mode_y[k] + s.shift;
    } else {
        const int nx = s.n_x;
        std::vector<double> c(nx), d(nx);
        for (std::size_t k = 0; k < s.mode_y.size(); ++k) {
            double* f = s.buf + k * nx;
            const double mu = s.mode_y[k];
            // Thomas algorithm for tridiag(-1/hx^2, 2/hx^2 + mu |x|^{2g} + shift, -1/hx^2)
            const double off = -s.ihx2;
            double diag0 = 2.0 * s.ihx2 + mu * s.wx[0] + s.shift;
            c[0] = off / diag0;
            d[0] = f[0] / diag0;
            for (int i = 1; i < nx; ++i) {
                const double di = 2.0 * s.ihx2 + mu * s.wx[i] + s.shift - off * c[i - 1];
                c[i] = off / di;
                d[i] = (f[i] - off * d[i - 1]) / di;
            }
            f[nx - 1] = d[nx - 1];
            for (int i = nx - 2; i >= 0; --i) f[i] = d[i] - c[i] * f[i + 1];
        }
    }

    for (fftw_plan p : s.plans) fftw_execute_r2r(p, s.buf, s.buf);
    x.resize(s.n);
    for (std::size_t i = 0; i < s.n; ++i) x[i] = s.buf[i] * s.scale;
}

LinearMap SeparableSolver::as_map() const
{
    return [this](const Field& in, Field& out) { solve(in, out); };
}

}  // namespace grushin
