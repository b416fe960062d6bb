#pragma once

#include "grushin/geometry.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace grushin {

using Field = std::vector<double>;

struct Box {
    double x_half = 1.0;
    double y_half = 1.0;
};

/// Cell-centered tensor grid on [-x_half, x_half]^m x [-y_half, y_half]^l.
/// Node i on an axis sits at -half + (i + 1/2) h. Flat index: x-axes fastest,
/// then y-axes, each axis in increasing coordinate order.
class Grid {
public:
    Grid() = default;
    Grid(const Geometry& geom, const Box& box, int n_x, int n_y);

    const Geometry& geom() const { return geom_; }
    const Box& box() const { return box_; }
    int n_x() const { return n_x_; }
    int n_y() const { return n_y_; }
    double h_x() const { return h_x_; }
    double h_y() const { return h_y_; }
    std::size_t size() const { return size_; }
    int dim() const { return geom_.dim(); }
    double cell_volume() const { return cell_volume_; }

    int axis_size(int a) const { return a < geom_.m ? n_x_ : n_y_; }
    double axis_h(int a) const { return a < geom_.m ? h_x_ : h_y_; }
    std::size_t stride(int a) const { return strides_[a]; }
    const std::vector<double>& axis_coords(int a) const { return a < geom_.m ? xs_ : ys_; }

    /// Per-axis index of node idx along axis a.
    int index_on_axis(std::size_t idx, int a) const { return static_cast<int>((idx / strides_[a]) % axis_size(a)); }
    double coord(std::size_t idx, int a) const { return axis_coords(a)[index_on_axis(idx, a)]; }
    void node(std::size_t idx, double* x, double* y) const;
    Point point(std::size_t idx) const;

    /// |x|^2, |y|^2 and d(z) for every node (origin-centered).
    const std::vector<double>& x_norm2() const { return x2_; }
    const std::vector<double>& y_norm2() const { return y2_; }
    const std::vector<double>& dist() const { return d_; }

    /// Largest rho such that the d-ball B(0, rho) fits inside the box.
    double box_radius() const;

    Field sample(const std::function<double(const double* x, const double* y)>& f) const;

    bool same_as(const Grid& o) const;

private:
    Geometry geom_;
    Box box_;
    int n_x_ = 0, n_y_ = 0;
    double h_x_ = 0.0, h_y_ = 0.0, cell_volume_ = 0.0;
    std::size_t size_ = 0;
    std::vector<std::size_t> strides_;
    std::vector<double> xs_, ys_, x2_, y2_, d_;
};

Grid build_grid(const Geometry& geom, const Box& box, int n_x, int n_y);

/// Distance of node idx from a center point, d(z - c).
double distance_from(const Grid& g, std::size_t idx, const Point& center);

/// Nodes with d(z - center) < rho.
std::vector<std::size_t> ball_nodes(const Grid& g, const Point& center, double rho);

/// Largest rho with B(center, rho) inside the box.
double ball_room(const Grid& g, const Point& center);

void check_conformable(const Grid& g, const Field& u, const char* what);

}  // namespace grushin
