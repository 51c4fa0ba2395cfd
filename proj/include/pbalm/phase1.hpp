#pragma once

#include "pbalm/outer_solver.hpp"

#include <stdexcept>

namespace pbalm {

/// Lifted feasibility problem over (x, s):
///
///     minimize    1/2 ||h(x)||^2 + s^2
///     subject to  g(x) - s <= 0
///
/// with f2 acting on x only and s free.
template <typename Scalar>
struct Phase1Spec {
    ProblemSpec<Scalar> lifted;
    Eigen::Index slack_index = 0;
};

class Phase1Failed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <typename Scalar>
Phase1Spec<Scalar> build_phase1(const ProblemSpec<Scalar>& base)
{
    using Vec = VectorX<Scalar>;
    const Eigen::Index n = base.n;
    Phase1Spec<Scalar> out;
    out.slack_index = n;
    ProblemSpec<Scalar>& L = out.lifted;
    L.n = n + 1;
    L.p = 0;
    L.m = base.m;
    L.name = base.name + ":phase1";

    L.f1 = [base, n](const Vec& z) {
        const Scalar s = z(n);
        return Scalar(0.5) * base.h(z.head(n)).squaredNorm() + s * s;
    };
    L.grad_f1 = [base, n](const Vec& z) {
        const Vec x = z.head(n);
        Vec grad(n + 1);
        grad.head(n) = base.jac_h_transpose_apply(x, base.h(x));
        grad(n) = Scalar(2) * z(n);
        return grad;
    };
    L.h = [](const Vec&) { return Vec(0); };
    L.jac_h_transpose_apply = [n](const Vec&, const Vec&) { return Vec::Zero(n + 1).eval(); };
    L.g = [base, n](const Vec& z) { return (base.g(z.head(n)).array() - z(n)).matrix().eval(); };
    L.jac_g_transpose_apply = [base, n](const Vec& z, const Vec& y) {
        Vec out(n + 1);
        out.head(n) = base.jac_g_transpose_apply(z.head(n), y);
        out(n) = -y.sum();
        return out;
    };
    L.f2_value = [base, n](const Vec& z) { return base.f2_value(z.head(n)); };
    L.prox_f2 = [base, n](const Vec& z, Scalar step) {
        Vec out(n + 1);
        out.head(n) = base.prox_f2(z.head(n), step);
        out(n) = z(n);
        return out;
    };
    return out;
}

/// Solver settings for the lifted problem. Its optimal value is zero whenever
/// the base problem is feasible, so subproblems are driven well below `tol`
/// with a geometric tolerance schedule instead of the slow default one.
inline OuterConfig phase1_config(double tol, OuterConfig cfg = OuterConfig::pbalm(4.0))
{
    cfg.require_feasible_start = false;
    cfg.tau.kind = TauSchedule::Kind::Geometric;
    cfg.tau.scale = 0.1;
    cfg.tau.rate = 0.1;
    cfg.tau.floor = 1e-3 * tol;
    if (cfg.max_outer > 60) cfg.max_outer = 60;
    return cfg;
}

/// Returns a point with ||h(x)||_inf <= tol, max g(x) <= tol and x in dom f2,
/// or throws Phase1Failed.
template <typename Scalar>
VectorX<Scalar> find_feasible(const ProblemSpec<Scalar>& base, const VectorX<Scalar>& x_start,
                              Scalar tol, const OuterConfig& cfg)
{
    using Vec = VectorX<Scalar>;
    require_size("find_feasible: x_start", base.n, x_start.size());
    if (check_feasible(base, x_start, tol)) return x_start;

    const Vec x_in = base.prox_f2(x_start, Scalar(1));
    if (check_feasible(base, x_in, tol)) return x_in;

    const Phase1Spec<Scalar> spec = build_phase1(base);
    const VectorX<Scalar> gx = base.g(x_in);
    Vec z0(base.n + 1);
    z0.head(base.n) = x_in;
    z0(base.n) = std::max(Scalar(0), gx.size() ? gx.maxCoeff() : Scalar(0));

    OuterConfig lifted_cfg = cfg;
    lifted_cfg.require_feasible_start = false;
    RunHooks<Scalar> hooks;
    hooks.stop_predicate = [&](const Vec& z) { return check_feasible(base, Vec(z.head(base.n)), tol); };

    const SolveResult<Scalar> res = run(spec.lifted, z0, lifted_cfg, hooks);
    Vec x = res.x.head(base.n);
    if (res.status == SolveStatus::PredicateMet || check_feasible(base, x, tol)) return x;
    throw Phase1Failed("phase I stalled at ||h||_inf = " + std::to_string(static_cast<double>(inf_norm(base.h(x)))) +
                       "; the problem may have no feasible point");
}

template <typename Scalar>
VectorX<Scalar> find_feasible(const ProblemSpec<Scalar>& base, const VectorX<Scalar>& x_start, Scalar tol)
{
    return find_feasible(base, x_start, tol, phase1_config(static_cast<double>(tol)));
}

} // namespace pbalm
