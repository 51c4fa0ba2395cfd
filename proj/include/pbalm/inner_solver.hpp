#pragma once

#include "pbalm/lbfgs.hpp"
#include "pbalm/types.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>

namespace pbalm {

struct InnerConfig {
    int memory = 20;
    int max_iters = 2000;
    double tol = 1e-6;
    /// Initial forward-backward step; empty selects a Lipschitz probe at x0.
    std::optional<double> step_init;
    double sufficient_decrease = 1e-4;

    void validate() const
    {
        if (memory < 1) throw std::invalid_argument("inner memory must be >= 1");
        if (max_iters < 1) throw std::invalid_argument("inner max_iters must be >= 1");
        if (!(tol > 0)) throw std::invalid_argument("inner tol must be > 0");
        if (step_init && !(*step_init > 0)) throw std::invalid_argument("inner step must be > 0");
        if (!(sufficient_decrease > 0 && sufficient_decrease < 1))
            throw std::invalid_argument("sufficient_decrease must lie in (0, 1)");
    }
};

template <typename Scalar>
struct InnerResult {
    VectorX<Scalar> x;
    Scalar residual = 0; ///< natural residual recomputed at x
    int iterations = 0;
    long grad_evals = 0;
    bool converged = false;
};

class NonFiniteValue : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Minimizes smooth(x) + f2(x) from a warm start until
/// ||x - prox(x - grad smooth(x), 1)||_inf <= cfg.tol.
///
/// Forward-backward iterations accelerated by L-BFGS directions on the
/// fixed-point residual, with a line search on the forward-backward envelope
/// (PANOC). The returned point is always a forward-backward point, hence in
/// dom f2, and its cost never exceeds the envelope at x0 (which is itself
/// bounded by the cost at x0 when x0 lies in dom f2).
///
/// `nonsmooth_value` evaluates f2 on prox outputs; leave empty for indicators.
template <typename Scalar, typename ValueFn, typename GradFn, typename ProxFn>
InnerResult<Scalar> solve_subproblem(const ValueFn& smooth_value, const GradFn& smooth_grad,
                                     const ProxFn& prox, const VectorX<Scalar>& x0,
                                     const InnerConfig& cfg,
                                     const std::function<Scalar(const VectorX<Scalar>&)>& nonsmooth_value = {})
{
    using Vec = VectorX<Scalar>;
    cfg.validate();
    const Scalar tol = static_cast<Scalar>(cfg.tol);

    InnerResult<Scalar> out;
    auto grad = [&](const Vec& x) {
        ++out.grad_evals;
        Vec gx = smooth_grad(x);
        if (!gx.allFinite()) throw NonFiniteValue("non-finite gradient in subproblem");
        return gx;
    };
    auto value = [&](const Vec& x) {
        const Scalar v = smooth_value(x);
        if (!std::isfinite(v)) throw NonFiniteValue("non-finite value in subproblem");
        return v;
    };
    auto f2 = [&](const Vec& x) { return nonsmooth_value ? nonsmooth_value(x) : Scalar(0); };
    auto unit_residual = [&](const Vec& x, const Vec& gx) {
        return inf_norm((x - prox(x - gx, Scalar(1))).eval());
    };

    Vec g0 = grad(x0);
    const Scalar r0 = unit_residual(x0, g0);
    if (r0 <= tol) {
        out.x = x0;
        out.residual = r0;
        out.converged = true;
        return out;
    }

    Scalar lip;
    if (cfg.step_init) {
        lip = Scalar(0.95) / static_cast<Scalar>(*cfg.step_init);
    } else {
        const Vec h = (x0.cwiseAbs() * Scalar(1e-6)).cwiseMax(Scalar(1e-6));
        lip = (grad(x0 + h) - g0).norm() / h.norm();
        if (!std::isfinite(lip) || lip < Scalar(1e-8)) lip = Scalar(1e-8);
    }
    Scalar step = Scalar(0.95) / lip;

    struct Point {
        Vec x, grad, xhat, p;
        Scalar psi = 0, psi_hat = 0, fbe = 0;
    };

    // Forward-backward step at pt.x with the current step; false when the
    // quadratic upper bound with constant `lip` fails between x and xhat.
    auto forward_backward = [&](Point& pt) {
        pt.xhat = prox((pt.x - step * pt.grad).eval(), step);
        pt.p = pt.xhat - pt.x;
        pt.psi_hat = value(pt.xhat);
        const Scalar model = pt.psi + pt.grad.dot(pt.p);
        const Scalar margin = Scalar(10) * std::numeric_limits<Scalar>::epsilon() * std::abs(pt.psi);
        pt.fbe = model + pt.p.squaredNorm() / (Scalar(2) * step) + f2(pt.xhat);
        const Scalar excess = pt.psi_hat - (model + Scalar(0.5) * lip * pt.p.squaredNorm() + margin);
        if (excess <= 0) return true;
        // Tiny violations are usually cancellation error in psi, which can
        // swamp the quadratic term close to a solution. Decide those with the
        // gradient form of the same bound instead.
        const Scalar noise = Scalar(1000) * std::numeric_limits<Scalar>::epsilon() * (Scalar(1) + std::abs(pt.psi));
        if (excess > noise) return false;
        return (grad(pt.xhat) - pt.grad).dot(pt.p) <= lip * pt.p.squaredNorm();
    };
    auto settle = [&](Point& pt) {
        for (int halvings = 0; !forward_backward(pt); ++halvings) {
            if (halvings > 200) throw NonFiniteValue("step size underflow in subproblem");
            step /= 2;
            lip *= 2;
        }
    };

    Lbfgs<Scalar> lbfgs(x0.size(), cfg.memory);
    Point cur;
    cur.x = x0;
    cur.psi = value(x0);
    cur.grad = std::move(g0);
    settle(cur);

    Scalar check_scale = 1;
    auto finish = [&](const Vec& x, bool known_converged, Scalar known_residual) {
        out.x = x;
        if (known_converged) {
            out.residual = known_residual;
        } else {
            out.residual = unit_residual(x, grad(x));
        }
        out.converged = out.residual <= tol;
        return out;
    };

    for (out.iterations = 0; out.iterations < cfg.max_iters; ++out.iterations) {
        const Scalar estimate = inf_norm(cur.p) * std::max(Scalar(1), Scalar(1) / step);
        if (estimate <= tol * check_scale) {
            const Scalar r = unit_residual(cur.xhat, grad(cur.xhat));
            if (r <= tol) return finish(cur.xhat, true, r);
            check_scale /= 2;
        }

        Vec q = lbfgs.apply(cur.p);
        if (!q.allFinite()) {
            lbfgs.reset();
            q = cur.p;
        }
        const Scalar sigma = static_cast<Scalar>(cfg.sufficient_decrease) * (Scalar(1) - step * lip) /
                             (Scalar(2) * step);
        const Scalar decrease = sigma * cur.p.squaredNorm();

        Point next;
        bool restarted = false;
        for (Scalar tau = 1;; tau /= 2) {
            if (tau < Scalar(1.0 / 1024)) tau = 0;
            next.x = tau == 0 ? cur.xhat : (cur.x + (Scalar(1) - tau) * cur.p + tau * q).eval();
            next.psi = value(next.x);
            next.grad = grad(next.x);
            if (!forward_backward(next)) {
                // Local Lipschitz estimate too small: shrink the step and restart
                // from the last verified forward-backward point, which keeps the
                // envelope values monotone.
                step /= 2;
                lip *= 2;
                lbfgs.reset();
                Point fresh;
                fresh.x = cur.xhat;
                fresh.psi = cur.psi_hat;
                fresh.grad = grad(fresh.x);
                settle(fresh);
                cur = std::move(fresh);
                restarted = true;
                break;
            }
            // Near a solution of an ill-conditioned subproblem the required
            // decrease drops below the rounding noise in the envelope; without
            // the margin every quasi-Newton step is rejected.
            const Scalar noise = Scalar(10) * std::numeric_limits<Scalar>::epsilon() * std::abs(cur.fbe);
            if (tau == 0 || next.fbe <= cur.fbe - decrease + noise) break;
        }
        if (restarted) continue;

        lbfgs.update((next.x - cur.x).eval(), (cur.p - next.p).eval());
        cur = std::move(next);
    }
    return finish(cur.xhat, false, 0);
}

} // namespace pbalm
