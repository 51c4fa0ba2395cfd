#pragma once

#include "pbalm/problem.hpp"

namespace pbalm {

template <typename Scalar>
struct Multipliers {
    VectorX<Scalar> lambda; ///< equality multipliers, unrestricted in sign
    VectorX<Scalar> mu;     ///< inequality multipliers, mu >= 0
};

/// Penalty parameters. `rho` and `nu` hold either a single entry (scalar
/// penalty, broadcast over all constraints) or one entry per constraint.
template <typename Scalar>
struct PenaltyState {
    VectorX<Scalar> rho;
    VectorX<Scalar> nu;
    Scalar gamma = Scalar(1);

    static PenaltyState scalar(Scalar rho0, Scalar nu0, Scalar gamma0)
    {
        PenaltyState s;
        s.rho = VectorX<Scalar>::Constant(1, rho0);
        s.nu = VectorX<Scalar>::Constant(1, nu0);
        s.gamma = gamma0;
        return s;
    }
};

class NonPositivePenalty : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

template <typename Scalar>
struct KktReport {
    Scalar stationarity = 0; ///< ||x - prox_f2(x - grad_x L(x, lambda, mu))||_inf
    Scalar eq_infeas = 0;    ///< ||h(x)||_inf
    Scalar ineq_infeas = 0;  ///< ||max(0, g(x))||_inf
    bool complementarity_ok = true;
    Scalar epsilon = 0;

    bool is_eps_kkt() const
    {
        return stationarity <= epsilon && eq_infeas <= epsilon && ineq_infeas <= epsilon &&
               complementarity_ok;
    }
};

namespace detail {

template <typename Scalar>
void check_penalties(const VectorX<Scalar>& rho, const VectorX<Scalar>& nu)
{
    if ((rho.size() > 0 && !(rho.minCoeff() > 0)) || (nu.size() > 0 && !(nu.minCoeff() > 0)))
        throw NonPositivePenalty("penalty parameters must be strictly positive");
}

template <typename Scalar>
void check_multipliers(const ProblemSpec<Scalar>& prob, const VectorX<Scalar>& x,
                       const Multipliers<Scalar>& mult)
{
    require_size("x", prob.n, x.size());
    require_size("lambda", prob.p, mult.lambda.size());
    require_size("mu", prob.m, mult.mu.size());
}

} // namespace detail

/// f1(x) + <lambda, h(x)> + <mu, g(x)>
template <typename Scalar>
Scalar eval_lagrangian(const ProblemSpec<Scalar>& prob, const VectorX<Scalar>& x,
                       const Multipliers<Scalar>& mult)
{
    detail::check_multipliers(prob, x, mult);
    return prob.f1(x) + mult.lambda.dot(prob.h(x)) + mult.mu.dot(prob.g(x));
}

template <typename Scalar>
VectorX<Scalar> grad_lagrangian(const ProblemSpec<Scalar>& prob, const VectorX<Scalar>& x,
                                const Multipliers<Scalar>& mult)
{
    detail::check_multipliers(prob, x, mult);
    return prob.grad_f1(x) + prob.jac_h_transpose_apply(x, mult.lambda) +
           prob.jac_g_transpose_apply(x, mult.mu);
}

/// Augmented Lagrangian without proximal term:
///   f1 + <lambda,h> + (rho/2)||h||^2 + (1/2nu)(||[nu g + mu]_+||^2 - ||mu||^2)
/// with componentwise weights when the penalties are vectors. f2 is excluded.
template <typename Scalar>
Scalar eval_al(const ProblemSpec<Scalar>& prob, const VectorX<Scalar>& x,
               const Multipliers<Scalar>& mult, const VectorX<Scalar>& rho,
               const VectorX<Scalar>& nu)
{
    detail::check_multipliers(prob, x, mult);
    detail::check_penalties(rho, nu);
    const VectorX<Scalar> r = expand_weights(rho, prob.p);
    const VectorX<Scalar> w = expand_weights(nu, prob.m);
    const VectorX<Scalar> hx = prob.h(x);
    const VectorX<Scalar> gx = prob.g(x);

    Scalar value = prob.f1(x) + mult.lambda.dot(hx) +
                   Scalar(0.5) * (r.array() * hx.array().square()).sum();
    const VectorX<Scalar> shifted = positive_part((w.array() * gx.array() + mult.mu.array()).matrix());
    value += ((shifted.array().square() - mult.mu.array().square()) / (Scalar(2) * w.array())).sum();
    return value;
}

/// Proximal augmented Lagrangian: eval_al + (1/2gamma)||x - v||^2.
template <typename Scalar>
Scalar eval_pal(const ProblemSpec<Scalar>& prob, const VectorX<Scalar>& x,
                const Multipliers<Scalar>& mult, const PenaltyState<Scalar>& pen,
                const VectorX<Scalar>& v)
{
    if (!(pen.gamma > 0)) throw NonPositivePenalty("gamma must be strictly positive");
    require_size("prox center", prob.n, v.size());
    return eval_al(prob, x, mult, pen.rho, pen.nu) + (x - v).squaredNorm() / (Scalar(2) * pen.gamma);
}

template <typename Scalar>
VectorX<Scalar> grad_al(const ProblemSpec<Scalar>& prob, const VectorX<Scalar>& x,
                        const Multipliers<Scalar>& mult, const VectorX<Scalar>& rho,
                        const VectorX<Scalar>& nu)
{
    detail::check_multipliers(prob, x, mult);
    detail::check_penalties(rho, nu);
    const VectorX<Scalar> r = expand_weights(rho, prob.p);
    const VectorX<Scalar> w = expand_weights(nu, prob.m);
    const VectorX<Scalar> hx = prob.h(x);
    const VectorX<Scalar> gx = prob.g(x);
    const VectorX<Scalar> eq_weight = mult.lambda + r.cwiseProduct(hx);
    const VectorX<Scalar> ineq_weight = positive_part((w.cwiseProduct(gx) + mult.mu).eval());
    return prob.grad_f1(x) + prob.jac_h_transpose_apply(x, eq_weight) +
           prob.jac_g_transpose_apply(x, ineq_weight);
}

template <typename Scalar>
VectorX<Scalar> grad_pal(const ProblemSpec<Scalar>& prob, const VectorX<Scalar>& x,
                         const Multipliers<Scalar>& mult, const PenaltyState<Scalar>& pen,
                         const VectorX<Scalar>& v)
{
    if (!(pen.gamma > 0)) throw NonPositivePenalty("gamma must be strictly positive");
    require_size("prox center", prob.n, v.size());
    return grad_al(prob, x, mult, pen.rho, pen.nu) + (x - v) / pen.gamma;
}

/// Complementarity surrogate E = min(-g(x), mu_prev / nu_prev), componentwise.
template <typename Scalar>
VectorX<Scalar> compute_E(const VectorX<Scalar>& g_x, const VectorX<Scalar>& mu_prev,
                          const VectorX<Scalar>& nu_prev)
{
    require_size("compute_E: mu", g_x.size(), mu_prev.size());
    const VectorX<Scalar> w = expand_weights(nu_prev, g_x.size());
    return (-g_x).cwiseMin((mu_prev.array() / w.array()).matrix());
}

/// ||x - prox_f2(x - grad)||_inf, unit prox step.
template <typename Scalar>
Scalar natural_residual(const ProblemSpec<Scalar>& prob, const VectorX<Scalar>& x,
                        const VectorX<Scalar>& grad)
{
    return inf_norm((x - prob.prox_f2(x - grad, Scalar(1))).eval());
}

template <typename Scalar>
KktReport<Scalar> kkt_report(const ProblemSpec<Scalar>& prob, const VectorX<Scalar>& x,
                             const Multipliers<Scalar>& mult, Scalar epsilon)
{
    KktReport<Scalar> rep;
    rep.epsilon = epsilon;
    rep.stationarity = natural_residual(prob, x, grad_lagrangian(prob, x, mult));
    rep.eq_infeas = inf_norm(prob.h(x));
    const VectorX<Scalar> gx = prob.g(x);
    rep.ineq_infeas = inf_norm(positive_part(gx).eval());
    for (Eigen::Index i = 0; i < gx.size(); ++i) {
        if (mult.mu(i) < 0 || (gx(i) < -epsilon && mult.mu(i) != 0)) {
            rep.complementarity_ok = false;
            break;
        }
    }
    return rep;
}

} // namespace pbalm
