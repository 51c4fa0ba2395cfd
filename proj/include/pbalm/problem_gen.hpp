#pragma once

#include "pbalm/problem.hpp"

#include <cstdint>
#include <stdexcept>

namespace pbalm {

/// b = B z_star with z_star k-sparse, nonzeros equal to +10.
struct BasisPursuitInstance {
    Matrix B;
    Vector b;
    Vector z_star;
    std::uint64_t seed = 0;
};

/// Nonconvex reformulation over x = (x1, x2) in R^{2n}:
///     minimize ||x||^2  subject to  [B, -B] (x o x) = b
/// `x_feasible` maps the minimum-norm solution z_ls of Bz = b to
/// x1 = sqrt(z_ls^+), x2 = sqrt(z_ls^-).
struct BasisPursuit {
    BasisPursuitInstance instance;
    Problem problem;
    Vector x_feasible;
};

class RankDeficient : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

BasisPursuit gen_basis_pursuit(Eigen::Index p, Eigen::Index n, Eigen::Index k, std::uint64_t seed);

/// Recovered z = x1 o x1 - x2 o x2.
Vector basis_pursuit_signal(const Vector& x);

/// Strictly convex equality-constrained QP
///     minimize 1/2 x'Qx + q'x  subject to  Ax = b
/// with optimum from the KKT system.
struct ConvexQp {
    Matrix Q;
    Vector q;
    Matrix A;
    Vector b;
    Problem problem;
    Vector x_star;
    Vector lambda_star;
    Vector x_feasible;   ///< minimum-norm solution of Ax = b
    double f_star = 0;   ///< f1(x_star)
    double f_inf = 0;    ///< unconstrained minimum of f1, a lower bound on f
};

ConvexQp gen_random_convex_qp(Eigen::Index n, Eigen::Index m_eq, std::uint64_t seed);

/// Equality QP from explicit data; solves the KKT system.
ConvexQp make_equality_qp(Matrix Q, Vector q, Matrix A, Vector b, const std::string& name);

} // namespace pbalm
