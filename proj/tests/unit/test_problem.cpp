#include "pbalm/problem.hpp"
#include "pbalm/problem_gen.hpp"
#include "pbalm/qps.hpp"
#include "../support.hpp"

#include <doctest.h>

using namespace pbalm;
using pbalm::testing::random_vector;

namespace {

Problem squared_norm_problem(Eigen::Index n)
{
    Problem p;
    p.n = n;
    p.f1 = [](const Vector& x) { return x.squaredNorm(); };
    p.grad_f1 = [](const Vector& x) { return (2.0 * x).eval(); };
    p.fill_defaults();
    return p;
}

double fd_gradient_error(const Problem& p, const Vector& x)
{
    const double h = 1e-6 * (1.0 + inf_norm(x));
    Vector fd(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Vector xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        fd(i) = (p.f1(xp) - p.f1(xm)) / (2 * h);
    }
    const Vector g = p.grad_f1(x);
    return (fd - g).norm() / std::max(1.0, g.norm());
}

// y'(c(x + e d) - c(x - e d)) / 2e against d'(J'y)
double fd_jacobian_error(const std::function<Vector(const Vector&)>& c,
                         const std::function<Vector(const Vector&, const Vector&)>& jt, const Vector& x,
                         const Vector& y, const Vector& d)
{
    const double e = 1e-6 * (1.0 + inf_norm(x));
    const double fd = y.dot(c(x + e * d) - c(x - e * d)) / (2 * e);
    const double an = d.dot(jt(x, y));
    return std::abs(fd - an) / std::max(1.0, std::abs(an));
}

} // namespace

TEST_CASE("infinity norm of an empty vector is zero")
{
    CHECK(inf_norm(Vector()) == 0.0);
    CHECK(inf_norm(Vector((Vector(3) << 1, -4, 2).finished())) == 4.0);
}

TEST_CASE("scalar weights broadcast, mismatched lengths throw")
{
    const Vector w = Vector::Constant(1, 2.5);
    CHECK(expand_weights(w, 3) == Vector::Constant(3, 2.5));
    CHECK_THROWS_AS(expand_weights(Vector(Vector::Ones(2)), 3), DimensionMismatch);
}

TEST_CASE("eval_objective")
{
    SUBCASE("smooth only")
    {
        const Problem p = squared_norm_problem(2);
        CHECK(eval_objective(p, Vector((Vector(2) << 1, 2).finished())) == 5.0);
    }
    SUBCASE("outside the box is +inf")
    {
        Problem p = squared_norm_problem(2);
        set_box<double>(p, Vector::Zero(2), Vector::Ones(2));
        CHECK(eval_objective(p, Vector((Vector(2) << 2, 0).finished())) == infinity<double>());
    }
    SUBCASE("quadratic with constant inside the box")
    {
        // 1/2 x'(2I)x + 3 at (1,1)
        Problem p;
        p.n = 2;
        p.f1 = [](const Vector& x) { return x.squaredNorm() + 3.0; };
        p.grad_f1 = [](const Vector& x) { return (2.0 * x).eval(); };
        set_box<double>(p, Vector::Zero(2), Vector::Constant(2, 2.0));
        p.fill_defaults();
        CHECK(eval_objective(p, Vector(Vector::Ones(2))) == 5.0);
    }
    SUBCASE("wrong dimension")
    {
        const Problem p = squared_norm_problem(2);
        CHECK_THROWS_AS(eval_objective(p, Vector(Vector::Ones(3))), DimensionMismatch);
    }
}

TEST_CASE("check_feasible")
{
    Problem p;
    p.n = 1;
    p.p = 1;
    p.m = 2;
    double hval = 0, g1 = -1, g2 = -2;
    p.f1 = [](const Vector&) { return 0.0; };
    p.grad_f1 = [](const Vector& x) { return Vector::Zero(x.size()).eval(); };
    p.h = [&](const Vector&) { return Vector::Constant(1, hval); };
    p.g = [&](const Vector&) { return Vector((Vector(2) << g1, g2).finished()); };
    p.fill_defaults();
    const Vector x = Vector::Zero(1);
    CHECK(check_feasible(p, x, 0.0));
    hval = 1e-3;
    CHECK_FALSE(check_feasible(p, x, 1e-5));
    hval = 0;
    g1 = 1e-6;
    CHECK(check_feasible(p, x, 1e-5));
    set_box<double>(p, Vector::Constant(1, 1.0), Vector::Constant(1, 2.0));
    CHECK_FALSE(check_feasible(p, x, 1e-5));
}

TEST_CASE("prox_box")
{
    const Vector lo = Vector::Zero(3), up = Vector::Ones(3);
    CHECK(prox_box(Vector((Vector(3) << -1, 0.5, 3).finished()), lo, up) ==
          Vector((Vector(3) << 0, 0.5, 1).finished()));
    const Vector inside = (Vector(3) << 0.1, 0.2, 0.9).finished();
    CHECK(prox_box(inside, lo, up) == inside);
    const Vector free_lo = Vector::Constant(3, -infinity<double>());
    const Vector free_up = Vector::Constant(3, infinity<double>());
    const Vector far = (Vector(3) << -1e10, 7, 1e12).finished();
    CHECK(prox_box(far, free_lo, free_up) == far);
    CHECK_THROWS_AS(prox_box(inside, up, lo), CrossedBounds);
    Problem p = squared_norm_problem(3);
    CHECK_THROWS_AS(set_box<double>(p, up, lo), CrossedBounds);
}

TEST_CASE("prox_box is non-expansive and idempotent")
{
    Rng rng(11);
    const Vector lo = (Vector(4) << -1, 0, -infinity<double>(), 2).finished();
    const Vector up = (Vector(4) << 1, infinity<double>(), 0.5, 2).finished();
    for (int t = 0; t < 200; ++t) {
        const Vector x = random_vector(rng, 4, 3.0);
        const Vector y = random_vector(rng, 4, 3.0);
        const Vector px = prox_box(x, lo, up), py = prox_box(y, lo, up);
        CHECK((px - py).norm() <= (x - y).norm() + 1e-15);
        CHECK(prox_box(px, lo, up) == px);
    }
}

TEST_CASE("gradients and Jacobian actions of bundled problems match finite differences")
{
    Rng rng(5);
    SUBCASE("random convex QP")
    {
        const ConvexQp qp = gen_random_convex_qp(12, 4, 3);
        for (int t = 0; t < 20; ++t) {
            const Vector x = random_vector(rng, 12);
            CHECK(fd_gradient_error(qp.problem, x) <= 1e-5);
            CHECK(fd_jacobian_error(qp.problem.h, qp.problem.jac_h_transpose_apply, x, random_vector(rng, 4),
                                    random_vector(rng, 12)) <= 1e-4);
        }
    }
    SUBCASE("basis pursuit")
    {
        const BasisPursuit bp = gen_basis_pursuit(6, 10, 2, 4);
        for (int t = 0; t < 20; ++t) {
            const Vector x = random_vector(rng, 20);
            CHECK(fd_gradient_error(bp.problem, x) <= 1e-5);
            CHECK(fd_jacobian_error(bp.problem.h, bp.problem.jac_h_transpose_apply, x, random_vector(rng, 6),
                                    random_vector(rng, 20)) <= 1e-4);
        }
    }
    SUBCASE("QPS fixture with inequality rows")
    {
        const QpProblem qp = qp_to_problem(parse_qps_file(pbalm::testing::fixture("tiny_box.qps")));
        for (int t = 0; t < 20; ++t) {
            const Vector x = random_vector(rng, 3);
            CHECK(fd_gradient_error(qp.problem, x) <= 1e-5);
            CHECK(fd_jacobian_error(qp.problem.g, qp.problem.jac_g_transpose_apply, x,
                                    random_vector(rng, qp.problem.m), random_vector(rng, 3)) <= 1e-4);
        }
    }
}
