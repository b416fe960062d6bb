#pragma once

#include "grushin/grid.hpp"

#include <cstddef>
#include <vector>

namespace grushin {

/// Compressed sparse rows, columns sorted within each row.
struct SparseOperator {
    std::size_t n = 0;
    std::vector<std::size_t> row_ptr;
    std::vector<std::size_t> col;
    std::vector<double> val;

    std::size_t nnz() const { return val.size(); }
    double diag(std::size_t i) const;
    void apply(const Field& u, Field& out) const;
    Field apply(const Field& u) const;
    double entry(std::size_t i, std::size_t j) const;
};

/// Discrete -Delta_gamma: 2(m+l)+1 point stencil, y-differences weighted by |x_node|^{2 gamma},
/// zero Dirichlet values one spacing beyond the outermost nodes.
SparseOperator assemble_operator(const Grid& g);

SparseOperator transpose(const SparseOperator& A);

/// Largest |A_ij - A_ji|.
double asymmetry(const SparseOperator& A);

/// Nonpositive off-diagonals, positive diagonal, weak row dominance everywhere and every row
/// linked through the sparsity graph to a strictly dominant row (the boundary-adjacent rows).
bool check_m_matrix(const SparseOperator& A);

/// Applies the stencil of assemble_operator to a field without forming the matrix.
void apply_stencil(const Grid& g, const Field& u, Field& out);

/// Nodes whose full stencil lies inside the box.
std::vector<char> interior_mask(const Grid& g);

}  // namespace grushin
