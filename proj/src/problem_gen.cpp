#include "pbalm/problem_gen.hpp"
#include "pbalm/rng.hpp"

#include <memory>
#include <numeric>
#include <string>
#include <vector>

namespace pbalm {

BasisPursuit gen_basis_pursuit(Eigen::Index p, Eigen::Index n, Eigen::Index k, std::uint64_t seed)
{
    if (!(p > 0 && p < n)) throw std::invalid_argument("basis pursuit needs 0 < p < n");
    if (!(k > 0 && k <= n)) throw std::invalid_argument("basis pursuit needs 0 < k <= n");

    Rng rng(seed);
    BasisPursuit out;
    BasisPursuitInstance& inst = out.instance;
    inst.seed = seed;
    inst.B.resize(p, n);
    // Row-major fill order keeps the instance independent of Eigen's storage order.
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < n; ++j) inst.B(i, j) = rng.normal();

    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    rng.shuffle(idx);
    inst.z_star = Vector::Zero(n);
    for (Eigen::Index i = 0; i < k; ++i) inst.z_star(idx[static_cast<std::size_t>(i)]) = 10.0;
    inst.b = inst.B * inst.z_star;

    // Minimum-norm solution z_ls = B' (B B')^{-1} b.
    const Eigen::LLT<Matrix> gram((inst.B * inst.B.transpose()).eval());
    if (gram.info() != Eigen::Success) throw RankDeficient("B B' is not positive definite; resample the seed");
    const Vector z_ls = inst.B.transpose() * gram.solve(inst.b);
    if ((inst.B * z_ls - inst.b).lpNorm<Eigen::Infinity>() > 1e-8 * (1.0 + inst.b.lpNorm<Eigen::Infinity>()))
        throw RankDeficient("least-squares system is inconsistent; resample the seed");

    out.x_feasible.resize(2 * n);
    out.x_feasible.head(n) = z_ls.cwiseMax(0.0).cwiseSqrt();
    out.x_feasible.tail(n) = (-z_ls).cwiseMax(0.0).cwiseSqrt();

    auto B = std::make_shared<const Matrix>(inst.B);
    auto b = std::make_shared<const Vector>(inst.b);
    Problem& prob = out.problem;
    prob.name = "basis_pursuit_p" + std::to_string(p) + "_n" + std::to_string(n) + "_k" + std::to_string(k);
    prob.n = 2 * n;
    prob.p = p;
    prob.m = 0;
    prob.f1 = [](const Vector& x) { return x.squaredNorm(); };
    prob.grad_f1 = [](const Vector& x) { return (2.0 * x).eval(); };
    prob.h = [B, b, n](const Vector& x) {
        const Vector z = x.head(n).cwiseAbs2() - x.tail(n).cwiseAbs2();
        return (*B * z - *b).eval();
    };
    // J_h(x)' y = 2 diag(x) [B, -B]' y
    prob.jac_h_transpose_apply = [B, n](const Vector& x, const Vector& y) {
        const Vector By = B->transpose() * y;
        Vector out(2 * n);
        out.head(n) = 2.0 * x.head(n).cwiseProduct(By);
        out.tail(n) = -2.0 * x.tail(n).cwiseProduct(By);
        return out;
    };
    prob.fill_defaults();
    return out;
}

Vector basis_pursuit_signal(const Vector& x)
{
    const Eigen::Index n = x.size() / 2;
    return x.head(n).cwiseAbs2() - x.tail(n).cwiseAbs2();
}

ConvexQp make_equality_qp(Matrix Q, Vector q, Matrix A, Vector b, const std::string& name)
{
    const Eigen::Index n = Q.rows();
    const Eigen::Index m = A.rows();
    ConvexQp out;

    Matrix K = Matrix::Zero(n + m, n + m);
    K.topLeftCorner(n, n) = Q;
    K.topRightCorner(n, m) = A.transpose();
    K.bottomLeftCorner(m, n) = A;
    Vector rhs(n + m);
    rhs << -q, b;
    const Eigen::FullPivLU<Matrix> lu(K);
    if (!lu.isInvertible()) throw RankDeficient("singular KKT system; resample the seed");
    const Vector sol = lu.solve(rhs);
    out.x_star = sol.head(n);
    out.lambda_star = sol.tail(m);
    if (m > 0) {
        const Eigen::LLT<Matrix> gram((A * A.transpose()).eval());
        out.x_feasible = A.transpose() * gram.solve(b);
    } else {
        out.x_feasible = Vector::Zero(n);
    }
    out.f_star = 0.5 * out.x_star.dot(Q * out.x_star) + q.dot(out.x_star);
    const Vector x_free = Q.ldlt().solve(-q);
    out.f_inf = 0.5 * x_free.dot(Q * x_free) + q.dot(x_free);

    auto Qp = std::make_shared<const Matrix>(Q);
    auto qp = std::make_shared<const Vector>(q);
    auto Ap = std::make_shared<const Matrix>(A);
    auto bp = std::make_shared<const Vector>(b);
    Problem& prob = out.problem;
    prob.name = name;
    prob.n = n;
    prob.p = m;
    prob.m = 0;
    prob.f1 = [Qp, qp](const Vector& x) { return 0.5 * x.dot(*Qp * x) + qp->dot(x); };
    prob.grad_f1 = [Qp, qp](const Vector& x) { return (*Qp * x + *qp).eval(); };
    prob.h = [Ap, bp](const Vector& x) { return (*Ap * x - *bp).eval(); };
    prob.jac_h_transpose_apply = [Ap](const Vector&, const Vector& y) { return (Ap->transpose() * y).eval(); };
    prob.fill_defaults();

    out.Q = std::move(Q);
    out.q = std::move(q);
    out.A = std::move(A);
    out.b = std::move(b);
    return out;
}

ConvexQp gen_random_convex_qp(Eigen::Index n, Eigen::Index m_eq, std::uint64_t seed)
{
    if (!(n > 0 && m_eq >= 0 && m_eq < n)) throw std::invalid_argument("random QP needs 0 <= m_eq < n");
    Rng rng(seed);
    auto gaussian = [&](Eigen::Index rows, Eigen::Index cols) {
        Matrix M(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = rng.normal();
        return M;
    };
    const Matrix R = gaussian(n, n);
    Matrix Q = R.transpose() * R / static_cast<double>(n) + Matrix::Identity(n, n);
    Q = 0.5 * (Q + Q.transpose()).eval();
    Vector q = gaussian(n, 1);
    Matrix A = gaussian(m_eq, n);
    Vector b = gaussian(m_eq, 1);
    return make_equality_qp(std::move(Q), std::move(q), std::move(A), std::move(b),
                            "random_qp_n" + std::to_string(n) + "_m" + std::to_string(m_eq) + "_s" +
                                std::to_string(seed));
}

} // namespace pbalm
