#pragma once
// Shared helpers for the unit and acceptance tests: small hand-built problems
// and an observer that re-derives the per-iteration identities and invariants.

#include "pbalm/outer_solver.hpp"
#include "pbalm/problem_gen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace pbalm::testing {

inline std::string fixture(const std::string& rel)
{
    return std::string(PBALM_FIXTURE_DIR) + "/" + rel;
}

/// 0.5 * sum c_i (x_i - t_i)^2 over lower <= x <= upper; optimum is the clamp of t.
inline Problem separable_box_qp(const Vector& c, const Vector& t, const Vector& lower, const Vector& upper,
                                const std::string& name)
{
    Problem p;
    p.name = name;
    p.n = c.size();
    p.f1 = [c, t](const Vector& x) { return 0.5 * (c.array() * (x - t).array().square()).sum(); };
    p.grad_f1 = [c, t](const Vector& x) { return c.cwiseProduct(x - t).eval(); };
    set_box<double>(p, lower, upper);
    p.fill_defaults();
    return p;
}

/// Convex problem with both constraint kinds:
///   min 1/2||x - t||^2  s.t.  sum(x) = s,  x_0 - x_1 <= d
inline Problem mixed_convex(const Vector& t, double s, double d)
{
    Problem p;
    p.name = "mixed_convex";
    p.n = t.size();
    p.p = 1;
    p.m = 1;
    const Eigen::Index n = t.size();
    p.f1 = [t](const Vector& x) { return 0.5 * (x - t).squaredNorm(); };
    p.grad_f1 = [t](const Vector& x) { return (x - t).eval(); };
    p.h = [s](const Vector& x) { return Vector::Constant(1, x.sum() - s); };
    p.jac_h_transpose_apply = [n](const Vector&, const Vector& y) { return Vector::Constant(n, y(0)); };
    p.g = [d](const Vector& x) { return Vector::Constant(1, x(0) - x(1) - d); };
    p.jac_g_transpose_apply = [n](const Vector&, const Vector& y) {
        Vector out = Vector::Zero(n);
        out(0) = y(0);
        out(1) = -y(0);
        return out;
    };
    p.fill_defaults();
    return p;
}

/// Worst values seen by InvariantChecker over a run.
struct InvariantReport {
    int iterations = 0;
    bool all_inner_converged = true;
    double dual_identity_rel = 0;   // identity on multiplier steps vs residuals
    double grad_identity_rel = 0;   // Lagrangian gradient vs subproblem gradient
    double al_bound_excess = -std::numeric_limits<double>::infinity(); // slack / (1 + |f(x0)|)
    double multiplier_excess = -std::numeric_limits<double>::infinity(); // (lhs - rhs) / (1 + c1)
    bool mu_nonnegative = true;
    bool penalties_monotone = true;
    bool growth_floor = true;       // increases reach hat * phi(k+1)
    bool lemma_a = true;
};

/// Run observer checking, at every outer iteration:
///  - (lambda+ - lambda)/rho = h(x+), (mu+ - mu)/nu = -E+, in squared norms;
///  - grad L(x+, lambda+, mu+) = grad of the subproblem objective minus the prox term;
///  - the value bound on the subproblem objective (proximal and bounded variants);
///  - the multiplier control inequality with constant f(x0) - f_lb (+ 1/(2 delta));
///  - mu >= 0, monotone penalties, growth floor on increases;
///  - ||E||_inf <= eps  =>  ||[g]_+||_inf <= eps and mu+_i = 0 where g_i < -eps.
struct InvariantChecker {
    const Problem* prob = nullptr;
    OuterConfig cfg;
    Vector x0;
    double f_x0 = 0;
    double f_lb = 0;
    InvariantReport rep;

    InvariantChecker(const Problem& p, const OuterConfig& c, const Vector& start, double lower_bound)
        : prob(&p), cfg(c.normalized()), x0(start), f_x0(eval_objective(p, start)), f_lb(lower_bound)
    {}

    RunHooks<double> hooks()
    {
        RunHooks<double> h;
        h.observer = [this](const OuterStep<double>& s) { observe(s); };
        return h;
    }

    void observe(const OuterStep<double>& s)
    {
        const Problem& P = *prob;
        ++rep.iterations;
        rep.all_inner_converged = rep.all_inner_converged && s.inner.converged;

        const Vector r = expand_weights(s.pen_prev.rho, P.p);
        const Vector w = expand_weights(s.pen_prev.nu, P.m);

        // Multiplier steps. Rounding in lambda+ - lambda scales with the size
        // of the multipliers themselves, so the error is measured against the
        // magnitude of all operands.
        {
            const Vector dl = ((s.mult_next.lambda - s.mult_prev.lambda).array() / r.array()).matrix();
            const Vector dm = ((s.mult_next.mu - s.mult_prev.mu).array() / w.array()).matrix();
            const double lhs = dl.squaredNorm() + dm.squaredNorm();
            const double rhs = s.h_next.squaredNorm() + s.E_next.squaredNorm();
            const double operands =
                ((s.mult_prev.lambda.cwiseAbs() + s.mult_next.lambda.cwiseAbs()).array() / r.array())
                    .matrix().squaredNorm() +
                ((s.mult_prev.mu.cwiseAbs() + s.mult_next.mu.cwiseAbs()).array() / w.array())
                    .matrix().squaredNorm() +
                rhs;
            if (operands > 0)
                rep.dual_identity_rel = std::max(rep.dual_identity_rel, std::abs(lhs - rhs) / operands);
        }

        const bool proximal = cfg.variant == Variant::PBALM;
        {
            const Vector gL = grad_lagrangian(P, s.x_next, s.mult_next);
            const Vector gsub = proximal ? grad_pal(P, s.x_next, s.mult_prev, s.pen_prev, s.x_ref)
                                         : grad_al(P, s.x_next, s.mult_prev, s.pen_prev.rho, s.pen_prev.nu);
            const Vector prox_term =
                proximal ? Vector((s.x_next - s.x_ref) / s.pen_prev.gamma) : Vector::Zero(P.n);
            const double scale = std::max({gL.cwiseAbs().maxCoeff(), gsub.cwiseAbs().maxCoeff(),
                                           prox_term.cwiseAbs().maxCoeff(), 1e-300});
            rep.grad_identity_rel =
                std::max(rep.grad_identity_rel, inf_norm((gL - (gsub - prox_term)).eval()) / scale);
        }

        if (cfg.variant != Variant::ALM) {
            rep.al_bound_excess =
                std::max(rep.al_bound_excess, s.record.al_bound_slack / (1.0 + std::abs(f_x0)));

            const Vector r1 = expand_weights(s.pen_next.rho, P.p);
            const Vector w1 = expand_weights(s.pen_next.nu, P.m);
            auto weighted = [](const Vector& v, const Vector& pen) {
                return 0.5 * (v.array().square() / pen.array()).sum();
            };
            const double c1 = f_x0 - f_lb + (proximal ? 0.5 / cfg.delta : 0.0);
            const double lhs = weighted(s.mult_next.lambda, r1) + weighted(s.mult_next.mu, w1);
            double rhs = weighted(s.mult_prev.lambda, r) + weighted(s.mult_prev.mu, w) + c1;
            if (proximal) rhs -= (s.x_next - s.x_ref).squaredNorm() / (2.0 * s.pen_prev.gamma);
            rep.multiplier_excess = std::max(rep.multiplier_excess, (lhs - rhs) / (1.0 + std::abs(c1)));
        }

        if (s.mult_next.mu.size() && s.mult_next.mu.minCoeff() < 0) rep.mu_nonnegative = false;

        const double grow = cfg.phi(s.k + 1);
        auto check_pen = [&](const Vector& before, const Vector& after, double hat) {
            for (Eigen::Index i = 0; i < after.size(); ++i) {
                if (after(i) < before(i)) rep.penalties_monotone = false;
                if (after(i) != before(i) && after(i) < hat * grow) rep.growth_floor = false;
            }
        };
        check_pen(s.pen_prev.rho, s.pen_next.rho, cfg.rho_hat);
        check_pen(s.pen_prev.nu, s.pen_next.nu, cfg.nu_hat);

        const double eps = inf_norm(s.E_next);
        if (inf_norm(positive_part(s.g_next).eval()) > eps) rep.lemma_a = false;
        for (Eigen::Index i = 0; i < s.g_next.size(); ++i)
            if (s.g_next(i) < -eps && s.mult_next.mu(i) != 0) rep.lemma_a = false;
    }
};

/// Completed-square form of the proximal augmented Lagrangian (no f2).
inline double completed_square_pal(const Problem& P, const Vector& x, const Multipliers<double>& mult,
                                   const PenaltyState<double>& pen, const Vector& v, double* magnitude)
{
    const Vector r = expand_weights(pen.rho, P.p);
    const Vector w = expand_weights(pen.nu, P.m);
    const Vector hx = P.h(x);
    const Vector gx = P.g(x);
    const double f1 = P.f1(x);
    const double t_eq = 0.5 * ((r.cwiseProduct(hx) + mult.lambda).array().square() / r.array()).sum();
    const double t_in =
        0.5 * (positive_part((w.cwiseProduct(gx) + mult.mu).eval()).array().square() / w.array()).sum();
    const double t_l = 0.5 * (mult.lambda.array().square() / r.array()).sum();
    const double t_m = 0.5 * (mult.mu.array().square() / w.array()).sum();
    const double t_p = (x - v).squaredNorm() / (2.0 * pen.gamma);
    if (magnitude) *magnitude = std::abs(f1) + t_eq + t_in + t_l + t_m + t_p;
    return f1 + t_eq + t_in - t_l - t_m + t_p;
}

inline Vector random_vector(Rng& rng, Eigen::Index n, double scale = 1.0)
{
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * rng.normal();
    return v;
}

} // namespace pbalm::testing
