#include "pbalm/trace_io.hpp"

#include <array>
#include <cstdio>
#include <sstream>

namespace pbalm {

namespace {

const std::vector<std::string> kColumns = {
    "k",           "f1",           "f2",        "eq_infeas",       "ineq_infeas",
    "total_infeas", "E_norm",      "stationarity", "rho_max",      "nu_max",
    "gamma",       "tau",          "inner_iters", "grad_evals",    "inner_converged",
    "reference_reset", "al_bound_slack",
};

std::vector<double> row_values(const IterationRecord& r, const std::optional<Suboptimality>& subopt)
{
    std::vector<double> v = {
        static_cast<double>(r.k),
        r.f1_value,
        r.f2_value,
        r.eq_infeas,
        r.ineq_infeas,
        r.eq_infeas + r.ineq_infeas,
        r.E_norm,
        r.stationarity,
        r.rho_max,
        r.nu_max,
        r.gamma,
        r.tau,
        static_cast<double>(r.inner_iters),
        static_cast<double>(r.inner_grad_evals),
        r.inner_converged ? 1.0 : 0.0,
        r.reference_reset ? 1.0 : 0.0,
        r.al_bound_slack,
    };
    if (subopt) v.push_back((*subopt)(r.f1_value));
    return v;
}

} // namespace

std::vector<std::string> trace_columns(bool with_suboptimality)
{
    std::vector<std::string> cols = kColumns;
    if (with_suboptimality) cols.emplace_back("suboptimality");
    return cols;
}

std::string format_number(double v)
{
    std::array<char, 64> buf{};
    std::snprintf(buf.data(), buf.size(), "%.17g", v);
    return buf.data();
}

void write_trace_csv(std::ostream& out, const std::vector<IterationRecord>& trace,
                     const std::optional<Suboptimality>& subopt)
{
    const auto cols = trace_columns(subopt.has_value());
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const auto& r : trace) {
        const auto vals = row_values(r, subopt);
        for (std::size_t i = 0; i < vals.size(); ++i) out << (i ? "," : "") << format_number(vals[i]);
        out << '\n';
    }
}

nlohmann::json trace_rows_json(const std::vector<IterationRecord>& trace,
                               const std::optional<Suboptimality>& subopt)
{
    const auto cols = trace_columns(subopt.has_value());
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : trace) {
        const auto vals = row_values(r, subopt);
        nlohmann::json row = nlohmann::json::object();
        for (std::size_t i = 0; i < cols.size(); ++i) row[cols[i]] = vals[i];
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string csv_from_json_rows(const nlohmann::json& rows)
{
    const bool with_subopt = !rows.empty() && rows.front().contains("suboptimality");
    const auto cols = trace_columns(with_subopt);
    std::ostringstream out;
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < cols.size(); ++i)
            out << (i ? "," : "") << format_number(row.at(cols[i]).get<double>());
        out << '\n';
    }
    return out.str();
}

nlohmann::json config_to_json(const OuterConfig& cfg)
{
    nlohmann::json j;
    j["variant"] = to_string(cfg.variant);
    j["beta"] = cfg.beta;
    j["xi1"] = cfg.xi1;
    j["xi2"] = cfg.xi2;
    j["delta"] = cfg.delta;
    j["rho0"] = cfg.rho0;
    j["nu0"] = cfg.nu0;
    j["gamma0"] = cfg.gamma0;
    j["rho_hat"] = cfg.rho_hat;
    j["nu_hat"] = cfg.nu_hat;
    j["gamma_hat"] = cfg.gamma_hat;
    switch (cfg.phi.kind) {
    case GrowthFn::Kind::Power: j["phi"] = {{"kind", "power"}, {"alpha", cfg.phi.value}}; break;
    case GrowthFn::Kind::Constant: j["phi"] = {{"kind", "constant"}, {"value", cfg.phi.value}}; break;
    case GrowthFn::Kind::Zero: j["phi"] = {{"kind", "zero"}}; break;
    }
    j["tau"] = {{"kind", cfg.tau.kind == TauSchedule::Kind::Power ? "power" : "geometric"},
                {"scale", cfg.tau.scale},
                {"rate", cfg.tau.rate},
                {"floor", cfg.tau.floor}};
    j["stop_tol"] = cfg.stop_tol;
    j["max_outer"] = cfg.max_outer;
    j["inner"] = {{"memory", cfg.inner.memory},
                  {"max_iters", cfg.inner.max_iters},
                  {"sufficient_decrease", cfg.inner.sufficient_decrease}};
    j["require_feasible_start"] = cfg.require_feasible_start;
    j["multiplier_init"] = cfg.multiplier_init == MultiplierInit::Gaussian ? "gaussian" : "zeros";
    j["seed"] = cfg.seed;
    j["penalty_mode"] = cfg.penalty_mode == PenaltyMode::Scalar ? "scalar" : "per_constraint";
    j["grad_evals_counts"] = "gradient evaluations of the subproblem objective (each applies J_h' and J_g' once)";
    return j;
}

} // namespace pbalm
