#pragma once

#include "pbalm/aug_lagrangian.hpp"
#include "pbalm/inner_solver.hpp"
#include "pbalm/rng.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pbalm {

enum class Variant { PBALM, BALM, ALM };

inline const char* to_string(Variant v)
{
    switch (v) {
    case Variant::PBALM: return "pbalm";
    case Variant::BALM: return "balm";
    case Variant::ALM: return "alm";
    }
    return "?";
}

/// Growth function for the penalty and proximal schedules, evaluated at the
/// index of the iterate being produced: phi(k + 1) after outer iteration k.
/// power(alpha) is j -> j^alpha.
struct GrowthFn {
    enum class Kind { Power, Constant, Zero };
    Kind kind = Kind::Power;
    double value = 4.0; ///< alpha for Power, the constant for Constant

    static GrowthFn power(double alpha)
    {
        if (!(alpha > 1)) throw std::invalid_argument("power growth needs alpha > 1");
        return {Kind::Power, alpha};
    }
    static GrowthFn constant(double c)
    {
        if (!(c >= 0)) throw std::invalid_argument("constant growth needs a value >= 0");
        return {Kind::Constant, c};
    }
    static GrowthFn zero() { return {Kind::Zero, 0.0}; }

    double operator()(int j) const
    {
        switch (kind) {
        case Kind::Power: return std::pow(static_cast<double>(j), value);
        case Kind::Constant: return value;
        case Kind::Zero: return 0.0;
        }
        return 0.0;
    }
};

/// Inner tolerance per outer iteration:
///   Power:     max(floor, scale / (k+1)^rate)
///   Geometric: max(floor, scale * rate^k)
struct TauSchedule {
    enum class Kind { Power, Geometric };
    Kind kind = Kind::Power;
    double scale = 0.1;
    double rate = 1.1;
    double floor = 0.0;

    double operator()(int k) const
    {
        const double t = kind == Kind::Power ? scale / std::pow(static_cast<double>(k + 1), rate)
                                             : scale * std::pow(rate, static_cast<double>(k));
        return std::max(floor, t);
    }
};

enum class MultiplierInit { Zeros, Gaussian };
enum class PenaltyMode { Scalar, PerConstraint };

struct OuterConfig {
    Variant variant = Variant::PBALM;
    double beta = 0.5;
    double xi1 = 1.0;
    double xi2 = 1.0;
    double delta = 1.0;
    double rho0 = 1e-3;
    double nu0 = 1e-3;
    double gamma0 = 0.1;
    double rho_hat = 1e-3;
    double nu_hat = 1e-3;
    double gamma_hat = 0.1;
    GrowthFn phi = GrowthFn::power(4.0);
    TauSchedule tau;
    double stop_tol = 1e-5;
    int max_outer = 500;
    InnerConfig inner;
    bool require_feasible_start = true;
    double feas_tol = 1e-8;
    MultiplierInit multiplier_init = MultiplierInit::Gaussian;
    std::uint64_t seed = 0;
    PenaltyMode penalty_mode = PenaltyMode::Scalar;

    /// P-BALM-alpha: xi1 = xi2 = 1, phi(j) = j^alpha.
    static OuterConfig pbalm(double alpha)
    {
        OuterConfig c;
        c.variant = Variant::PBALM;
        c.phi = GrowthFn::power(alpha);
        return c;
    }
    static OuterConfig balm(double alpha)
    {
        OuterConfig c = pbalm(alpha);
        c.variant = Variant::BALM;
        return c;
    }
    /// Classical ALM-xi: geometric penalty growth, no feasible start, no reference check.
    static OuterConfig alm(double xi)
    {
        if (!(xi > 1)) throw std::invalid_argument("ALM needs xi > 1");
        OuterConfig c;
        c.variant = Variant::ALM;
        c.xi1 = c.xi2 = xi;
        c.phi = GrowthFn::zero();
        c.require_feasible_start = false;
        return c;
    }

    /// Applies the variant's forced settings.
    OuterConfig normalized() const
    {
        OuterConfig c = *this;
        if (c.variant == Variant::ALM) {
            c.phi = GrowthFn::zero();
            c.require_feasible_start = false;
        }
        return c;
    }

    void validate() const
    {
        if (!(beta > 0 && beta < 1)) throw std::invalid_argument("beta must lie in (0, 1)");
        if (!(xi1 >= 1 && xi2 >= 1)) throw std::invalid_argument("xi1, xi2 must be >= 1");
        if (!(delta > 0)) throw std::invalid_argument("delta must be > 0");
        if (!(rho0 > 0 && nu0 > 0 && gamma0 > 0))
            throw std::invalid_argument("initial penalties must be > 0");
        if (!(rho_hat > 0 && nu_hat > 0 && gamma_hat > 0))
            throw std::invalid_argument("penalty scales must be > 0");
        if (!(stop_tol > 0)) throw std::invalid_argument("stop_tol must be > 0");
        if (max_outer < 0) throw std::invalid_argument("max_outer must be >= 0");
        if (variant == Variant::ALM && phi.kind != GrowthFn::Kind::Zero)
            throw std::invalid_argument("ALM uses phi = 0");
        inner.validate();
    }
};

template <typename Scalar>
struct IterateState {
    int k = 0;
    VectorX<Scalar> x;
    Multipliers<Scalar> mult;
    PenaltyState<Scalar> pen;
    VectorX<Scalar> h_x;
    VectorX<Scalar> g_x;
    VectorX<Scalar> E;
};

/// One row per outer iteration k; describes the produced iterate x^{k+1} and
/// the parameters (rho, nu, gamma) that will be used at iteration k+1.
struct IterationRecord {
    int k = 0;
    double f1_value = 0;
    double f2_value = 0;
    double eq_infeas = 0;
    double ineq_infeas = 0;
    double E_norm = 0;
    double stationarity = 0;
    double rho_max = 0;
    double nu_max = 0;
    double gamma = 0;
    double tau = 0;
    int inner_iters = 0;
    long inner_grad_evals = 0; ///< cumulative
    bool inner_converged = true;
    bool reference_reset = false;
    double al_bound_slack = 0;
};

enum class SolveStatus { EpsKkt, MaxOuterReached, InnerFailure, PredicateMet };

inline const char* to_string(SolveStatus s)
{
    switch (s) {
    case SolveStatus::EpsKkt: return "EpsKkt";
    case SolveStatus::MaxOuterReached: return "MaxOuterReached";
    case SolveStatus::InnerFailure: return "InnerFailure";
    case SolveStatus::PredicateMet: return "PredicateMet";
    }
    return "?";
}

template <typename Scalar>
struct SolveResult {
    VectorX<Scalar> x;
    Multipliers<Scalar> mult;
    PenaltyState<Scalar> pen;
    SolveStatus status = SolveStatus::MaxOuterReached;
    KktReport<Scalar> kkt;
    std::vector<IterationRecord> trace;
    int outer_iterations = 0;
    long grad_evals = 0;
};

class InfeasibleStart : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Everything an outer iteration touched, handed to RunHooks::observer.
template <typename Scalar>
struct OuterStep {
    int k;
    const VectorX<Scalar>& x_prev;
    const VectorX<Scalar>& x_ref;
    const VectorX<Scalar>& x_next;
    const Multipliers<Scalar>& mult_prev;
    const Multipliers<Scalar>& mult_next;
    const PenaltyState<Scalar>& pen_prev;
    const PenaltyState<Scalar>& pen_next;
    const VectorX<Scalar>& h_prev;
    const VectorX<Scalar>& h_next;
    const VectorX<Scalar>& g_next;
    const VectorX<Scalar>& E_prev;
    const VectorX<Scalar>& E_next;
    const InnerResult<Scalar>& inner;
    const IterationRecord& record;
};

template <typename Scalar>
struct RunHooks {
    std::function<void(const OuterStep<Scalar>&)> observer;
    /// When set, replaces the h/E stopping rule: the run stops with
    /// PredicateMet as soon as it returns true on a produced iterate.
    std::function<bool(const VectorX<Scalar>&)> stop_predicate;
};

template <typename Scalar>
struct ReferenceChoice {
    VectorX<Scalar> x;
    bool reset = false;
};

/// Step 1: keep x^k as reference point when the augmented Lagrangian at x^k
/// is bounded by the value at the feasible start, otherwise fall back to x0.
/// `f_x0` is f(x0) = f1(x0) + f2(x0).
template <typename Scalar>
ReferenceChoice<Scalar> select_reference(const ProblemSpec<Scalar>& prob,
                                         const IterateState<Scalar>& state,
                                         const VectorX<Scalar>& x0, Scalar f_x0, Variant variant)
{
    if (variant == Variant::ALM) return {state.x, false};
    const Scalar f2_xk = prob.f2_value(state.x);
    // The prox term vanishes at its own center, so L_{rho,nu,gamma}(x^k; x^k) = L_{rho,nu}(x^k).
    const Scalar lhs = eval_al(prob, state.x, state.mult, state.pen.rho, state.pen.nu) + f2_xk;
    Scalar rhs = f_x0;
    if (variant == Variant::PBALM) rhs += (x0 - state.x).squaredNorm() / (Scalar(2) * state.pen.gamma);
    if (lhs <= rhs) return {state.x, false};
    return {x0, true};
}

template <typename Scalar>
ReferenceChoice<Scalar> select_reference(const ProblemSpec<Scalar>& prob,
                                         const IterateState<Scalar>& state,
                                         const VectorX<Scalar>& x0, Variant variant)
{
    return select_reference(prob, state, x0, eval_objective(prob, x0), variant);
}

template <typename Scalar>
Multipliers<Scalar> update_lambda(const Multipliers<Scalar>& mult, const VectorX<Scalar>& rho,
                                  const VectorX<Scalar>& h_x)
{
    Multipliers<Scalar> out = mult;
    out.lambda = mult.lambda + expand_weights(rho, h_x.size()).cwiseProduct(h_x);
    return out;
}

template <typename Scalar>
Multipliers<Scalar> update_mu(const Multipliers<Scalar>& mult, const VectorX<Scalar>& nu,
                              const VectorX<Scalar>& g_x)
{
    Multipliers<Scalar> out = mult;
    out.mu = positive_part((mult.mu + expand_weights(nu, g_x.size()).cwiseProduct(g_x)).eval());
    return out;
}

/// Keeps `current` when the violation decreased by the factor beta, otherwise
/// returns max(xi * current, hat * phi(k + 1)).
template <typename Scalar>
Scalar penalty_rule(Scalar current, Scalar new_inf, Scalar old_inf, double beta, double xi,
                    double hat, const GrowthFn& phi, int k)
{
    if (new_inf <= static_cast<Scalar>(beta) * old_inf) return current;
    return std::max(static_cast<Scalar>(xi) * current, static_cast<Scalar>(hat * phi(k + 1)));
}

template <typename Scalar>
Scalar update_rho(Scalar rho, Scalar h_new_inf, Scalar h_old_inf, const OuterConfig& cfg, int k)
{
    return penalty_rule(rho, h_new_inf, h_old_inf, cfg.beta, cfg.xi1, cfg.rho_hat, cfg.phi, k);
}

template <typename Scalar>
Scalar update_nu(Scalar nu, Scalar E_new_inf, Scalar E_old_inf, const OuterConfig& cfg, int k)
{
    return penalty_rule(nu, E_new_inf, E_old_inf, cfg.beta, cfg.xi2, cfg.nu_hat, cfg.phi, k);
}

/// gamma_{k+1} = max(delta ||x0 - x^{k+1}||^2, gamma_hat * phi(k + 1))
template <typename Scalar>
Scalar update_gamma(const VectorX<Scalar>& x0, const VectorX<Scalar>& x_new, const OuterConfig& cfg,
                    int k)
{
    return std::max(static_cast<Scalar>(cfg.delta) * (x0 - x_new).squaredNorm(),
                    static_cast<Scalar>(cfg.gamma_hat * cfg.phi(k + 1)));
}

namespace detail {

/// Scalar penalties (length 1) are updated from the max-norms of the whole
/// residual; per-constraint penalties each follow their own component.
template <typename Scalar>
VectorX<Scalar> update_penalty_vector(const VectorX<Scalar>& pen, const VectorX<Scalar>& r_new,
                                      const VectorX<Scalar>& r_old, double beta, double xi,
                                      double hat, const GrowthFn& phi, int k)
{
    if (pen.size() == 1 && r_new.size() != 1) {
        return VectorX<Scalar>::Constant(
            1, penalty_rule(pen(0), inf_norm(r_new), inf_norm(r_old), beta, xi, hat, phi, k));
    }
    VectorX<Scalar> out(pen.size());
    for (Eigen::Index i = 0; i < pen.size(); ++i)
        out(i) = penalty_rule(pen(i), std::abs(r_new(i)), std::abs(r_old(i)), beta, xi, hat, phi, k);
    return out;
}

template <typename Scalar>
Scalar max_entry(const VectorX<Scalar>& v)
{
    return v.size() == 0 ? Scalar(0) : v.maxCoeff();
}

} // namespace detail

/// Initial multipliers: zeros, or a seeded standard Gaussian with mu taken in
/// absolute value so that mu >= 0.
template <typename Scalar>
Multipliers<Scalar> initial_multipliers(const ProblemSpec<Scalar>& prob, const OuterConfig& cfg)
{
    Multipliers<Scalar> mult;
    mult.lambda = VectorX<Scalar>::Zero(prob.p);
    mult.mu = VectorX<Scalar>::Zero(prob.m);
    if (cfg.multiplier_init == MultiplierInit::Gaussian) {
        Rng rng(cfg.seed);
        for (Eigen::Index i = 0; i < prob.p; ++i) mult.lambda(i) = static_cast<Scalar>(rng.normal());
        for (Eigen::Index i = 0; i < prob.m; ++i) mult.mu(i) = static_cast<Scalar>(std::abs(rng.normal()));
    }
    return mult;
}

/// Runs P-BALM, BALM or ALM-xi from x0.
template <typename Scalar>
SolveResult<Scalar> run(const ProblemSpec<Scalar>& prob, const VectorX<Scalar>& x0,
                        const OuterConfig& config, const RunHooks<Scalar>& hooks = {})
{
    using Vec = VectorX<Scalar>;
    const OuterConfig cfg = config.normalized();
    cfg.validate();
    require_size("run: x0", prob.n, x0.size());
    if (cfg.require_feasible_start && !check_feasible(prob, x0, static_cast<Scalar>(cfg.feas_tol)))
        throw InfeasibleStart("initial point is not feasible (required by " +
                              std::string(to_string(cfg.variant)) + "); run phase I first");

    const bool proximal = cfg.variant == Variant::PBALM;
    const Scalar stop_tol = static_cast<Scalar>(cfg.stop_tol);

    IterateState<Scalar> st;
    st.x = x0;
    st.mult = initial_multipliers(prob, cfg);
    if (cfg.penalty_mode == PenaltyMode::PerConstraint) {
        st.pen.rho = Vec::Constant(prob.p, static_cast<Scalar>(cfg.rho0));
        st.pen.nu = Vec::Constant(prob.m, static_cast<Scalar>(cfg.nu0));
        st.pen.gamma = static_cast<Scalar>(cfg.gamma0);
    } else {
        st.pen = PenaltyState<Scalar>::scalar(static_cast<Scalar>(cfg.rho0), static_cast<Scalar>(cfg.nu0),
                                              static_cast<Scalar>(cfg.gamma0));
    }
    st.h_x = prob.h(x0);
    st.g_x = prob.g(x0);
    // E^0 := min(-g(x0), mu^0 / nu_0)
    st.E = compute_E(st.g_x, st.mult.mu, st.pen.nu);

    const Scalar f_x0 = eval_objective(prob, x0);

    SolveResult<Scalar> result;
    bool last_inner_converged = true;
    Scalar last_tau = static_cast<Scalar>(cfg.tau(0));
    bool polishing = false;

    for (int k = 0;; ++k) {
        st.k = k;
        if (hooks.stop_predicate) {
            if (k > 0 && hooks.stop_predicate(st.x)) {
                result.status = SolveStatus::PredicateMet;
                break;
            }
        } else if (std::max(inf_norm(st.h_x), inf_norm(st.E)) <= stop_tol) {
            // The h/E rule alone says nothing about stationarity (think of a
            // problem without constraints). Stop only once the natural residual
            // is also below stop_tol; until then the inner tolerance is capped
            // at stop_tol so the remaining iterations can actually get there.
            if (natural_residual(prob, st.x, grad_lagrangian(prob, st.x, st.mult)) <= stop_tol) {
                result.status = SolveStatus::EpsKkt;
                break;
            }
            // A feasible x0 passes the h/E test trivially; that is no reason
            // to abandon the tau schedule.
            polishing = k > 0;
        }
        if (k >= cfg.max_outer) {
            result.status = last_inner_converged ? SolveStatus::MaxOuterReached : SolveStatus::InnerFailure;
            break;
        }

        // Step 1: reference point, used both as warm start and prox center.
        const ReferenceChoice<Scalar> ref = select_reference(prob, st, x0, f_x0, cfg.variant);

        // Step 2: inexact subproblem solve.
        Scalar tau_k = static_cast<Scalar>(cfg.tau(k));
        if (polishing) tau_k = std::min(tau_k, stop_tol);
        InnerConfig icfg = cfg.inner;
        icfg.tol = static_cast<double>(tau_k);
        const auto& mult = st.mult;
        const auto& pen = st.pen;
        const Vec& center = ref.x;
        auto value = [&](const Vec& z) {
            return proximal ? eval_pal(prob, z, mult, pen, center) : eval_al(prob, z, mult, pen.rho, pen.nu);
        };
        auto gradient = [&](const Vec& z) {
            return proximal ? grad_pal(prob, z, mult, pen, center) : grad_al(prob, z, mult, pen.rho, pen.nu);
        };
        InnerResult<Scalar> inner;
        try {
            inner = solve_subproblem<Scalar>(value, gradient, prob.prox_f2, ref.x, icfg, prob.f2_value);
        } catch (const NonFiniteValue&) {
            result.status = SolveStatus::InnerFailure;
            break;
        }
        last_inner_converged = inner.converged;
        last_tau = tau_k;
        result.grad_evals += inner.grad_evals;

        IterateState<Scalar> next;
        next.k = k + 1;
        next.x = inner.x;
        // Steps 3-4.
        next.mult.lambda = update_lambda(st.mult, st.pen.rho, prob.h(next.x)).lambda;
        next.h_x = prob.h(next.x);
        next.g_x = prob.g(next.x);
        next.mult.mu = update_mu(st.mult, st.pen.nu, next.g_x).mu;
        next.E = compute_E(next.g_x, st.mult.mu, st.pen.nu);
        // Steps 5-7.
        next.pen.rho = detail::update_penalty_vector(st.pen.rho, next.h_x, st.h_x, cfg.beta, cfg.xi1,
                                                     cfg.rho_hat, cfg.phi, k);
        next.pen.nu = detail::update_penalty_vector(st.pen.nu, next.E, st.E, cfg.beta, cfg.xi2,
                                                    cfg.nu_hat, cfg.phi, k);
        next.pen.gamma = proximal ? update_gamma(x0, next.x, cfg, k) : st.pen.gamma;

        IterationRecord rec;
        rec.k = k;
        rec.f1_value = static_cast<double>(prob.f1(next.x));
        const Scalar f2_next = prob.f2_value(next.x);
        rec.f2_value = static_cast<double>(f2_next);
        rec.eq_infeas = static_cast<double>(inf_norm(next.h_x));
        rec.ineq_infeas = static_cast<double>(inf_norm(positive_part(next.g_x).eval()));
        rec.E_norm = static_cast<double>(inf_norm(next.E));
        rec.stationarity =
            static_cast<double>(natural_residual(prob, next.x, grad_lagrangian(prob, next.x, next.mult)));
        rec.rho_max = static_cast<double>(detail::max_entry(next.pen.rho));
        rec.nu_max = static_cast<double>(detail::max_entry(next.pen.nu));
        rec.gamma = static_cast<double>(next.pen.gamma);
        rec.tau = static_cast<double>(tau_k);
        rec.inner_iters = inner.iterations;
        rec.inner_grad_evals = result.grad_evals;
        rec.inner_converged = inner.converged;
        rec.reference_reset = ref.reset;
        {
            Scalar lhs = (proximal ? eval_pal(prob, next.x, st.mult, st.pen, ref.x)
                                   : eval_al(prob, next.x, st.mult, st.pen.rho, st.pen.nu)) + f2_next;
            Scalar rhs = f_x0;
            if (proximal) rhs += (x0 - ref.x).squaredNorm() / (Scalar(2) * st.pen.gamma);
            rec.al_bound_slack = static_cast<double>(lhs - rhs);
        }
        result.trace.push_back(rec);

        if (hooks.observer) {
            hooks.observer(OuterStep<Scalar>{k, st.x, ref.x, next.x, st.mult, next.mult, st.pen, next.pen,
                                             st.h_x, next.h_x, next.g_x, st.E, next.E, inner,
                                             result.trace.back()});
        }
        st = std::move(next);
    }

    result.x = st.x;
    result.mult = st.mult;
    result.pen = st.pen;
    result.outer_iterations = st.k;
    result.kkt = kkt_report(prob, st.x, st.mult, st.k > 0 ? std::max(stop_tol, last_tau) : stop_tol);
    return result;
}

} // namespace pbalm
