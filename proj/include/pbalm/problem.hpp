#pragma once

#include "pbalm/types.hpp"

#include <functional>
#include <string>

namespace pbalm {

/// Constrained problem
///
///     minimize    f1(x) + f2(x)
///     subject to  h(x) = 0,  g(x) <= 0
///
/// with f1, h, g smooth and f2 proper, closed, convex with a cheap prox.
/// Jacobians are only ever applied transposed (adjoint action), so large sparse
/// problems need no materialization.
///
/// Every map must be pure: the benchmark harness may evaluate distinct problems
/// on several threads at once.
template <typename Scalar>
struct ProblemSpec {
    using Vec = VectorX<Scalar>;

    Eigen::Index n = 0;
    Eigen::Index p = 0;
    Eigen::Index m = 0;

    std::function<Scalar(const Vec&)> f1;
    std::function<Vec(const Vec&)> grad_f1;
    std::function<Vec(const Vec&)> h;
    /// J_h(x)^T y
    std::function<Vec(const Vec&, const Vec&)> jac_h_transpose_apply;
    std::function<Vec(const Vec&)> g;
    /// J_g(x)^T y
    std::function<Vec(const Vec&, const Vec&)> jac_g_transpose_apply;
    /// May return +inf outside dom f2.
    std::function<Scalar(const Vec&)> f2_value;
    /// prox_{step * f2}(x)
    std::function<Vec(const Vec&, Scalar)> prox_f2;

    std::string name;

    /// Installs no-op constraint maps for p == 0 and/or m == 0, and a zero f2,
    /// for whichever members are left empty.
    void fill_defaults()
    {
        const auto nn = n;
        if (!h) {
            h = [](const Vec&) { return Vec(0); };
            jac_h_transpose_apply = [nn](const Vec&, const Vec&) { return Vec::Zero(nn).eval(); };
        }
        if (!g) {
            g = [](const Vec&) { return Vec(0); };
            jac_g_transpose_apply = [nn](const Vec&, const Vec&) { return Vec::Zero(nn).eval(); };
        }
        if (!f2_value) {
            f2_value = [](const Vec&) { return Scalar(0); };
            prox_f2 = [](const Vec& x, Scalar) { return x; };
        }
    }
};

using Problem = ProblemSpec<double>;

/// f1(x) + f2(x); +inf outside dom f2.
template <typename Scalar>
Scalar eval_objective(const ProblemSpec<Scalar>& prob, const VectorX<Scalar>& x)
{
    require_size("eval_objective: x", prob.n, x.size());
    const Scalar r = prob.f2_value(x);
    if (r == infinity<Scalar>()) return r;
    return prob.f1(x) + r;
}

template <typename Scalar>
bool check_feasible(const ProblemSpec<Scalar>& prob, const VectorX<Scalar>& x, Scalar tol)
{
    if (x.size() != prob.n) return false;
    if (!(prob.f2_value(x) < infinity<Scalar>())) return false;
    if (inf_norm(prob.h(x)) > tol) return false;
    const VectorX<Scalar> gx = prob.g(x);
    return gx.size() == 0 || gx.maxCoeff() <= tol;
}

class CrossedBounds : public std::invalid_argument {
public:
    explicit CrossedBounds(Eigen::Index i)
        : std::invalid_argument("crossed bounds at component " + std::to_string(i)) {}
};

/// Projection onto [lower, upper]; the prox of the box indicator for any step.
/// Entries of the bounds may be -inf / +inf.
template <typename Scalar>
VectorX<Scalar> prox_box(const VectorX<Scalar>& x, const VectorX<Scalar>& lower,
                         const VectorX<Scalar>& upper)
{
    require_size("prox_box: lower", x.size(), lower.size());
    require_size("prox_box: upper", x.size(), upper.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (lower(i) > upper(i)) throw CrossedBounds(i);
    return x.cwiseMax(lower).cwiseMin(upper);
}

template <typename Scalar>
Scalar box_indicator(const VectorX<Scalar>& x, const VectorX<Scalar>& lower,
                     const VectorX<Scalar>& upper)
{
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (!(x(i) >= lower(i) && x(i) <= upper(i))) return infinity<Scalar>();
    return Scalar(0);
}

/// Sets f2 to the indicator of [lower, upper] with the clamp as prox.
template <typename Scalar>
void set_box(ProblemSpec<Scalar>& prob, VectorX<Scalar> lower, VectorX<Scalar> upper)
{
    require_size("set_box: lower", prob.n, lower.size());
    require_size("set_box: upper", prob.n, upper.size());
    for (Eigen::Index i = 0; i < lower.size(); ++i)
        if (lower(i) > upper(i)) throw CrossedBounds(i);
    prob.f2_value = [lower, upper](const VectorX<Scalar>& x) { return box_indicator(x, lower, upper); };
    prob.prox_f2 = [lower, upper](const VectorX<Scalar>& x, Scalar) {
        return x.cwiseMax(lower).cwiseMin(upper).eval();
    };
}

} // namespace pbalm
