// Command-line harness: pick a problem and one or more variants, solve, write traces.

#include "pbalm/outer_solver.hpp"
#include "pbalm/phase1.hpp"
#include "pbalm/problem_gen.hpp"
#include "pbalm/qps.hpp"
#include "pbalm/trace_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

namespace {

using namespace pbalm;

struct LoadedProblem {
    Problem problem;
    Vector x0;
    std::string source;        // "qps", "basis-pursuit", "builtin"
    std::optional<double> f1_star;
};

struct Options {
    std::string qps_path;
    std::string bp_spec;
    std::string builtin;
    std::vector<std::string> variants{"pbalm"};
    std::optional<double> alpha;
    std::optional<double> xi;
    std::optional<double> delta;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format = "csv";
    bool phase1 = false;
    bool eq_as_h = false;
    int max_outer = 500;
    double stop_tol = 1e-5;
    std::optional<double> fstar;
    int jobs = 1;
};

std::map<std::string, long> parse_kv(const std::string& spec)
{
    std::map<std::string, long> kv;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("expected key=value, got '" + item + "'");
        kv[item.substr(0, eq)] = std::stol(item.substr(eq + 1));
    }
    return kv;
}

// Builtins are small problems with known solutions, handy for smoke tests.
LoadedProblem load_builtin(const std::string& name, std::uint64_t seed)
{
    LoadedProblem lp;
    lp.source = "builtin";
    if (name == "hand_qp") {
        Matrix A(1, 2);
        A << 1, 1;
        ConvexQp qp = make_equality_qp(Matrix::Identity(2, 2), Vector::Zero(2), A, Vector::Constant(1, 2.0), name);
        lp.problem = qp.problem;
        lp.x0 = qp.x_feasible;
        lp.f1_star = qp.f_star;
    } else if (name == "random_qp") {
        ConvexQp qp = gen_random_convex_qp(20, 8, seed);
        lp.problem = qp.problem;
        lp.x0 = qp.x_feasible;
        lp.f1_star = qp.f_star;
    } else if (name == "box1d") {
        // (x - 2)^2 on [0, 1]
        Problem p;
        p.name = name;
        p.n = 1;
        p.f1 = [](const Vector& x) { return (x(0) - 2.0) * (x(0) - 2.0); };
        p.grad_f1 = [](const Vector& x) { return Vector::Constant(1, 2.0 * (x(0) - 2.0)); };
        set_box<double>(p, Vector::Zero(1), Vector::Ones(1));
        p.fill_defaults();
        lp.problem = p;
        lp.x0 = Vector::Zero(1);
        lp.f1_star = 1.0;
    } else {
        throw std::invalid_argument("unknown builtin '" + name + "' (hand_qp, random_qp, box1d)");
    }
    return lp;
}

LoadedProblem load_problem(const Options& o, std::uint64_t seed)
{
    if (!o.qps_path.empty()) {
        const QpData data = parse_qps_file(o.qps_path);
        QpProblemOptions qo;
        qo.eq_as_h = o.eq_as_h;
        QpProblem qp = qp_to_problem(data, qo);
        LoadedProblem lp;
        lp.source = "qps";
        lp.problem = qp.problem;
        // Origin projected onto the bounds; feasibility is checked by the solver.
        lp.x0 = lp.problem.prox_f2(Vector::Zero(qp.problem.n), 1.0);
        return lp;
    }
    if (!o.bp_spec.empty()) {
        const auto kv = parse_kv(o.bp_spec);
        for (const char* key : {"p", "n", "k"})
            if (!kv.count(key)) throw std::invalid_argument(std::string("--basis-pursuit is missing ") + key);
        BasisPursuit bp = gen_basis_pursuit(kv.at("p"), kv.at("n"), kv.at("k"), seed);
        LoadedProblem lp;
        lp.source = "basis-pursuit";
        lp.problem = bp.problem;
        lp.x0 = bp.x_feasible;
        return lp;
    }
    return load_builtin(o.builtin, seed);
}

OuterConfig make_config(const Options& o, const std::string& variant, const LoadedProblem& lp, std::uint64_t seed)
{
    OuterConfig cfg;
    if (variant == "pbalm") {
        cfg = OuterConfig::pbalm(o.alpha.value_or(4.0));
    } else if (variant == "balm") {
        cfg = OuterConfig::balm(o.alpha.value_or(4.0));
    } else if (variant == "alm") {
        cfg = OuterConfig::alm(o.xi.value_or(10.0));
    } else {
        throw std::invalid_argument("unknown variant '" + variant + "' (pbalm, balm, alm)");
    }
    cfg.delta = o.delta.value_or(lp.source == "basis-pursuit" ? 1e-6 : 1.0);
    cfg.seed = seed;
    cfg.max_outer = o.max_outer;
    cfg.stop_tol = o.stop_tol;
    return cfg;
}

std::string output_path(const std::string& out, const std::string& variant, bool several)
{
    if (out.empty() || !several) return out;
    const std::filesystem::path p(out);
    return (p.parent_path() / (p.stem().string() + "-" + variant + p.extension().string())).string();
}

struct RunOutcome {
    int exit_code = 1;
    std::string summary;
};

RunOutcome run_one(const Options& o, const std::string& variant, std::uint64_t seed, bool several)
{
    RunOutcome out;
    LoadedProblem lp = load_problem(o, seed);
    OuterConfig cfg = make_config(o, variant, lp, seed);

    Vector x0 = lp.x0;
    if (o.phase1 && cfg.require_feasible_start && !check_feasible(lp.problem, x0, cfg.feas_tol)) {
        const double tol = 1e-6;
        x0 = find_feasible(lp.problem, x0, tol);
        cfg.feas_tol = tol;
    }

    const auto t0 = std::chrono::steady_clock::now();
    const SolveResult<double> res = run(lp.problem, x0, cfg);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const std::optional<double> f1_star = o.fstar ? o.fstar : lp.f1_star;
    std::optional<Suboptimality> subopt;
    if (f1_star) {
        const double f1_x0 = lp.problem.f1(x0);
        if (f1_x0 != *f1_star) subopt = Suboptimality{*f1_star, f1_x0};
    }

    const double f1_final = lp.problem.f1(res.x);
    nlohmann::json summary = {
        {"problem", lp.problem.name},
        {"variant", variant},
        {"status", to_string(res.status)},
        {"outer_iterations", res.outer_iterations},
        {"grad_evals", res.grad_evals},
        {"f1", f1_final},
        {"eq_infeas", static_cast<double>(res.kkt.eq_infeas)},
        {"ineq_infeas", static_cast<double>(res.kkt.ineq_infeas)},
        {"stationarity", static_cast<double>(res.kkt.stationarity)},
        {"wall_time_s", wall},
    };

    const std::string path = output_path(o.out, variant, several);
    if (!path.empty()) {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + path);
        if (o.format == "json") {
            nlohmann::json cj = config_to_json(cfg);
            cj["problem"] = lp.problem.name;
            cj["source"] = lp.source;
            nlohmann::json doc = {{"config", cj}, {"rows", trace_rows_json(res.trace, subopt)}, {"summary", summary}};
            f << doc.dump(2) << '\n';
        } else {
            write_trace_csv(f, res.trace, subopt);
        }
        if (!f) throw std::runtime_error("error writing " + path);
    }

    std::ostringstream line;
    line << lp.problem.name << " " << variant << " status=" << to_string(res.status)
         << " outer=" << res.outer_iterations << " grad_evals=" << res.grad_evals
         << " f1=" << format_number(f1_final) << " eq_infeas=" << res.kkt.eq_infeas
         << " ineq_infeas=" << res.kkt.ineq_infeas << " stationarity=" << res.kkt.stationarity
         << " wall=" << wall << "s";
    out.summary = line.str();
    out.exit_code = res.status == SolveStatus::EpsKkt ? 0 : 2;
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    Options o;
    CLI::App app{"Proximal augmented Lagrangian solver harness"};
    auto* src = app.add_option_group("source");
    src->add_option("--qps", o.qps_path, "QPS file")->check(CLI::ExistingFile);
    src->add_option("--basis-pursuit", o.bp_spec, "basis pursuit instance, e.g. p=200,n=512,k=10");
    src->add_option("--builtin", o.builtin, "builtin problem: hand_qp, random_qp, box1d");
    src->require_option(1);
    app.add_option("--variant", o.variants, "pbalm, balm, alm (repeatable or comma separated)")->delimiter(',');
    app.add_option("--alpha", o.alpha, "growth exponent for pbalm/balm (default 4)");
    app.add_option("--xi", o.xi, "penalty factor for alm (default 10)");
    app.add_option("--delta", o.delta, "proximal growth factor (default 1 for QPs, 1e-6 for basis pursuit)");
    app.add_option("--seed", o.seed, "instance and multiplier seed (fallback: PBALM_SEED, then 0)");
    app.add_option("--out", o.out, "trace output path");
    app.add_option("--format", o.format, "trace format")->check(CLI::IsMember({"csv", "json"}));
    app.add_flag("--phase1", o.phase1, "solve a phase I problem when the start is infeasible");
    app.add_flag("--eq-as-h", o.eq_as_h, "QPS equality rows become equality constraints");
    app.add_option("--max-outer", o.max_outer, "outer iteration limit")->check(CLI::NonNegativeNumber);
    app.add_option("--stop-tol", o.stop_tol, "stopping tolerance")->check(CLI::PositiveNumber);
    app.add_option("--fstar", o.fstar, "optimal f1 for the suboptimality column");
    app.add_option("--jobs", o.jobs, "parallel runs")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    std::uint64_t seed = 0;
    if (o.seed) {
        seed = *o.seed;
    } else if (const char* env = std::getenv("PBALM_SEED")) {
        try {
            seed = std::stoull(env);
        } catch (const std::exception&) {
            std::cerr << "error: PBALM_SEED is not an unsigned integer\n";
            return 1;
        }
    }

    const bool several = o.variants.size() > 1;
    std::vector<RunOutcome> outcomes(o.variants.size());
    std::atomic<std::size_t> next{0};
    std::mutex io;
    auto worker = [&] {
        for (std::size_t i = next++; i < o.variants.size(); i = next++) {
            try {
                outcomes[i] = run_one(o, o.variants[i], seed, several);
            } catch (const InfeasibleStart& e) {
                outcomes[i] = {1, std::string("InfeasibleStart: ") + e.what() + " (use --phase1)"};
            } catch (const QpsError& e) {
                outcomes[i] = {1, std::string("QpsError: ") + e.what()};
            } catch (const std::exception& e) {
                outcomes[i] = {1, std::string("error: ") + e.what()};
            }
            std::lock_guard lock(io);
            (outcomes[i].exit_code == 1 ? std::cerr : std::cout) << outcomes[i].summary << '\n';
        }
    };
    const int nthreads = std::max(1, std::min<int>(o.jobs, static_cast<int>(o.variants.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    int rc = 0;
    for (const auto& r : outcomes) {
        if (r.exit_code == 1) return 1;
        rc = std::max(rc, r.exit_code);
    }
    return rc;
}
