#include "grushin/sparse_operator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace grushin {

double SparseOperator::diag(std::size_t i) const
{
    return entry(i, i);
}

double SparseOperator::entry(std::size_t i, std::size_t j) const
{
    const auto b = col.begin() + row_ptr[i], e = col.begin() + row_ptr[i + 1];
    const auto it = std::lower_bound(b, e, j);
    if (it != e && *it == j) return val[it - col.begin()];
    return 0.0;
}

void SparseOperator::apply(const Field& u, Field& out) const
{
    if (u.size() != n) throw std::invalid_argument("apply: dimension mismatch");
    out.resize(n);
    const std::ptrdiff_t nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < nn; ++i) {
        double s = 0.0;
        for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += val[k] * u[col[k]];
        out[i] = s;
    }
}

Field SparseOperator::apply(const Field& u) const
{
    Field out;
    apply(u, out);
    return out;
}

SparseOperator assemble_operator(const Grid& g)
{
    const Geometry& geo = g.geom();
    const int d = g.dim();
    const double ihx2 = 1.0 / (g.h_x() * g.h_x());
    const double ihy2 = 1.0 / (g.h_y() * g.h_y());
    SparseOperator A;
    A.n = g.size();
    A.row_ptr.assign(A.n + 1, 0);
    A.col.reserve(A.n * (2 * d + 1));
    A.val.reserve(A.n * (2 * d + 1));

    std::vector<std::pair<std::size_t, double>> row;
    for (std::size_t i = 0; i < A.n; ++i) {
        const double wy = std::pow(g.x_norm2()[i], geo.gamma) * ihy2;
        row.clear();
        double diag = 0.0;
        for (int a = 0; a < d; ++a) {
            const double c = a < geo.m ? ihx2 : wy;
            diag += 2.0 * c;
            const int k = g.index_on_axis(i, a);
            if (k > 0) row.emplace_back(i - g.stride(a), -c);
            if (k + 1 < g.axis_size(a)) row.emplace_back(i + g.stride(a), -c);
        }
        row.emplace_back(i, diag);
        std::sort(row.begin(), row.end());
        for (const auto& [j, v] : row) {
            A.col.push_back(j);
            A.val.push_back(v);
        }
        A.row_ptr[i + 1] = A.col.size();
    }
    return A;
}

SparseOperator transpose(const SparseOperator& A)
{
    SparseOperator T;
    T.n = A.n;
    T.row_ptr.assign(A.n + 1, 0);
    for (std::size_t k = 0; k < A.nnz(); ++k) T.row_ptr[A.col[k] + 1]++;
    for (std::size_t i = 0; i < A.n; ++i) T.row_ptr[i + 1] += T.row_ptr[i];
    T.col.resize(A.nnz());
    T.val.resize(A.nnz());
    std::vector<std::size_t> pos(T.row_ptr.begin(), T.row_ptr.end() - 1);
    for (std::size_t i = 0; i < A.n; ++i)
        for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
            const std::size_t p = pos[A.col[k]]++;
            T.col[p] = i;
            T.val[p] = A.val[k];
        }
    return T;
}

double asymmetry(const SparseOperator& A)
{
    double worst = 0.0;
    for (std::size_t i = 0; i < A.n; ++i)
        for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
            worst = std::max(worst, std::abs(A.val[k] - A.entry(A.col[k], i)));
    return worst;
}

bool check_m_matrix(const SparseOperator& A)
{
    std::vector<char> strict(A.n, 0);
    std::deque<std::size_t> queue;
    for (std::size_t i = 0; i < A.n; ++i) {
        double diag = 0.0, off = 0.0;
        for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
            if (A.col[k] == i) {
                diag = A.val[k];
            } else {
                if (A.val[k] > 0.0) return false;
                off += -A.val[k];
            }
        }
        if (!(diag > 0.0)) return false;
        const double tol = 1e-12 * diag;
        if (diag < off - tol) return false;
        if (diag > off + tol) {
            strict[i] = 1;
            queue.push_back(i);
        }
    }
    // every row must reach a strictly dominant row through nonzero off-diagonals
    std::vector<char> reached = strict;
    const SparseOperator T = transpose(A);
    while (!queue.empty()) {
        const std::size_t j = queue.front();
        queue.pop_front();
        for (std::size_t k = T.row_ptr[j]; k < T.row_ptr[j + 1]; ++k) {
            const std::size_t i = T.col[k];
            if (!reached[i] && T.val[k] != 0.0) {
                reached[i] = 1;
                queue.push_back(i);
            }
        }
    }
    return std::all_of(reached.begin(), reached.end(), [](char c) { return c != 0; });
}

void apply_stencil(const Grid& g, const Field& u, Field& out)
{
    check_conformable(g, u, "apply_stencil");
    const Geometry& geo = g.geom();
    const int d = g.dim();
    const double ihx2 = 1.0 / (g.h_x() * g.h_x());
    const double ihy2 = 1.0 / (g.h_y() * g.h_y());
    out.assign(g.size(), 0.0);
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(g.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        const double wy = std::pow(g.x_norm2()[i], geo.gamma) * ihy2;
        double s = 0.0;
        for (int a = 0; a < d; ++a) {
            const double c = a < geo.m ? ihx2 : wy;
            const int k = g.index_on_axis(i, a);
            const double lo = k > 0 ? u[i - g.stride(a)] : 0.0;
            const double hi = k + 1 < g.axis_size(a) ? u[i + g.stride(a)] : 0.0;
            s += c * (2.0 * u[i] - lo - hi);
        }
        out[i] = s;
    }
}

std::vector<char> interior_mask(const Grid& g)
{
    std::vector<char> mask(g.size(), 1);
    for (std::size_t i = 0; i < g.size(); ++i)
        for (int a = 0; a < g.dim(); ++a) {
            const int k = g.index_on_axis(i, a);
            if (k == 0 || k + 1 == g.axis_size(a)) { mask[i] = 0; break; }
        }
    return mask;
}

}  // namespace grushin
