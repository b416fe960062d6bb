#pragma once

#include "grushin/grid.hpp"
#include "grushin/problem.hpp"
#include "grushin/sparse_operator.hpp"

#include <Eigen/Dense>

#include <random>

namespace testsupport {

inline Eigen::MatrixXd dense(const grushin::SparseOperator& A)
{
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(A.n, A.n);
    for (std::size_t i = 0; i < A.n; ++i)
        for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) M(i, A.col[k]) = A.val[k];
    return M;
}

inline Eigen::VectorXd vec(const grushin::Field& u)
{
    return Eigen::Map<const Eigen::VectorXd>(u.data(), u.size());
}

inline grushin::Field random_field(std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    grushin::Field u(n);
    for (double& v : u) v = nd(rng);
    return u;
}

/// Reference-like problem: power-decay weights with delta = N + eta (N - 2) + 1.
inline grushin::ProblemSpec spec_for(const grushin::Geometry& g, double lambda1, double lambda2, double omega = 0.1)
{
    grushin::ProblemSpec s;
    s.lambda1 = lambda1;
    s.lambda2 = lambda2;
    s.eta = 0.5;
    s.r = 1.5;
    const double N = g.n_gamma();
    for (grushin::WeightSpec* w : {&s.w1, &s.w2}) {
        w->family = grushin::WeightFamily::power_decay;
        w->c1 = 1.0;
        w->delta = N + s.eta * (N - 2.0) + 1.0;
        w->z0 = grushin::Point{std::vector<double>(g.m, 0.0), std::vector<double>(g.ell, 0.0)};
        w->rho = 1.0;
        w->omega = omega;
    }
    return s;
}

}  // namespace testsupport
