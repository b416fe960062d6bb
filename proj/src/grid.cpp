#include "grushin/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace grushin {

Grid::Grid(const Geometry& geom, const Box& box, int n_x, int n_y)
    : geom_(geom), box_(box), n_x_(n_x), n_y_(n_y)
{
    if (n_x < 4) throw std::invalid_argument("n_x: resolution must be >= 4");
    if (n_y < 4) throw std::invalid_argument("n_y: resolution must be >= 4");
    if (!(box.x_half > 0.0) || !std::isfinite(box.x_half)) throw std::invalid_argument("x_half: must be positive and finite");
    if (!(box.y_half > 0.0) || !std::isfinite(box.y_half)) throw std::invalid_argument("y_half: must be positive and finite");

    h_x_ = 2.0 * box.x_half / n_x;
    h_y_ = 2.0 * box.y_half / n_y;
    xs_.resize(n_x);
    ys_.resize(n_y);
    for (int i = 0; i < n_x; ++i) xs_[i] = -box.x_half + (i + 0.5) * h_x_;
    for (int i = 0; i < n_y; ++i) ys_[i] = -box.y_half + (i + 0.5) * h_y_;
    cell_volume_ = std::pow(h_x_, geom.m) * std::pow(h_y_, geom.ell);

    const int d = geom.dim();
    strides_.resize(d);
    std::size_t s = 1;
    for (int a = 0; a < d; ++a) {
        strides_[a] = s;
        s *= static_cast<std::size_t>(axis_size(a));
    }
    size_ = s;

    x2_.assign(size_, 0.0);
    y2_.assign(size_, 0.0);
    d_.assign(size_, 0.0);
    for (std::size_t i = 0; i < size_; ++i) {
        double x2 = 0.0, y2 = 0.0;
        for (int a = 0; a < geom.m; ++a) { const double c = coord(i, a); x2 += c * c; }
        for (int a = geom.m; a < d; ++a) { const double c = coord(i, a); y2 += c * c; }
        x2_[i] = x2;
        y2_[i] = y2;
        d_[i] = distance_sq_norms(geom.gamma, x2, y2);
    }
}

void Grid::node(std::size_t idx, double* x, double* y) const
{
    for (int a = 0; a < geom_.m; ++a) x[a] = coord(idx, a);
    for (int a = 0; a < geom_.ell; ++a) y[a] = coord(idx, geom_.m + a);
}

Point Grid::point(std::size_t idx) const
{
    Point p{std::vector<double>(geom_.m), std::vector<double>(geom_.ell)};
    node(idx, p.x.data(), p.y.data());
    return p;
}

double Grid::box_radius() const
{
    const double gp = geom_.gamma + 1.0;
    // d along an x-axis is |x|; along a y-axis it is ((gamma+1)|y|)^{1/(gamma+1)}
    return std::min(box_.x_half, std::pow(gp * box_.y_half, 1.0 / gp));
}

Field Grid::sample(const std::function<double(const double*, const double*)>& f) const
{
    Field u(size_);
    std::vector<double> x(geom_.m), y(geom_.ell);
    for (std::size_t i = 0; i < size_; ++i) {
        node(i, x.data(), y.data());
        u[i] = f(x.data(), y.data());
    }
    return u;
}

bool Grid::same_as(const Grid& o) const
{
    return geom_.m == o.geom_.m && geom_.ell == o.geom_.ell && geom_.gamma == o.geom_.gamma &&
           box_.x_half == o.box_.x_half && box_.y_half == o.box_.y_half && n_x_ == o.n_x_ && n_y_ == o.n_y_;
}

Grid build_grid(const Geometry& geom, const Box& box, int n_x, int n_y)
{
    return Grid(geom, box, n_x, n_y);
}

double distance_from(const Grid& g, std::size_t idx, const Point& center)
{
    const Geometry& geo = g.geom();
    double x2 = 0.0, y2 = 0.0;
    for (int a = 0; a < geo.m; ++a) { const double c = g.coord(idx, a) - center.x[a]; x2 += c * c; }
    for (int a = 0; a < geo.ell; ++a) { const double c = g.coord(idx, geo.m + a) - center.y[a]; y2 += c * c; }
    return distance_sq_norms(geo.gamma, x2, y2);
}

std::vector<std::size_t> ball_nodes(const Grid& g, const Point& center, double rho)
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (distance_from(g, i, center) < rho) out.push_back(i);
    return out;
}

double ball_room(const Grid& g, const Point& center)
{
    const Geometry& geo = g.geom();
    const double gp = geo.gamma + 1.0;
    double room = INFINITY;
    for (double c : center.x) room = std::min(room, g.box().x_half - std::abs(c));
    for (double c : center.y) {
        const double gap = g.box().y_half - std::abs(c);
        room = std::min(room, gap > 0.0 ? std::pow(gp * gap, 1.0 / gp) : 0.0);
    }
    return std::max(room, 0.0);
}

void check_conformable(const Grid& g, const Field& u, const char* what)
{
    if (u.size() != g.size())
        throw std::invalid_argument(std::string(what) + ": field has " + std::to_string(u.size()) +
                                    " values, grid has " + std::to_string(g.size()) + " nodes");
}

}  // namespace grushin
