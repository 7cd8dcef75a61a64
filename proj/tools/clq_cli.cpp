// clq: command-line front end for the constrained stochastic LQ solver.
//
// Exit codes: 0 ok, 1 invalid input, 2 no convergence / divergence,
// 3 I/O or parse error.

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "clq/errors.hpp"
#include "clq/io.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kInvalid = 1, kNoConvergence = 2, kIoError = 3 };

struct Options {
    std::string input;
    std::string out = ".";
    double tol = 1e-9;
    double eps = 1e-8;
    int max_iter = 10000;
    std::size_t paths = 0;  // 0: command default
    int steps = -1;         // -1: command default
    std::uint64_t seed = 1;
    int initial_state = 0;  // 0: file value / state 1
    std::optional<double> k_max;
    std::vector<double> targets;
};

int exit_for(clq::ErrorCode code) {
    using clq::ErrorCode;
    switch (code) {
    case ErrorCode::Parse:
    case ErrorCode::Io: return kIoError;
    case ErrorCode::NotConverged:
    case ErrorCode::UnboundedBelow: return kNoConvergence;
    default: return kInvalid;
    }
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    // rounding noise such as -1e-17 should not print as "-0.0000"
    if (buf[0] == '-' && std::strspn(buf + 1, "0.") == std::strlen(buf + 1)) return buf + 1;
    return buf;
}

std::string vec_str(const clq::Vec& v, int digits = 4) {
    std::string s = "(";
    for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fixed(v(i), digits);
    return s + ")";
}

clq::SolverConfig solver_config(const Options& o) {
    clq::SolverConfig cfg;
    cfg.tol = o.tol;
    cfg.max_iter = o.max_iter;
    return cfg;
}

fs::path out_dir(const Options& o) {
    fs::path dir(o.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw clq::Error(clq::ErrorCode::Io, "cannot create output directory " + dir.string());
    return dir;
}

// Loads and validates a problem; prints violations and returns false when invalid.
bool load_valid(const Options& o, clq::ProblemSpec& spec) {
    spec = clq::io::load_problem(o.input);
    const auto report = clq::validate(spec);
    if (!report.ok()) {
        std::cerr << "invalid problem:\n" << report.summary();
        return false;
    }
    return true;
}

std::size_t initial_state(const Options& o, std::size_t from_file = 0) {
    return o.initial_state > 0 ? static_cast<std::size_t>(o.initial_state - 1) : from_file;
}

int cmd_validate(const Options& o) {
    const auto spec = clq::io::load_problem(o.input);
    const auto report = clq::validate(spec);
    auto doc = clq::io::to_json(report);
    clq::io::write_json(out_dir(o) / "validation.json", doc);
    if (!report.ok()) {
        std::cerr << report.summary();
        return kInvalid;
    }
    std::cout << "valid\n";
    return kOk;
}

void print_finite(const clq::RiccatiSolution& sol) {
    for (int t = 0; t <= sol.horizon; ++t) {
        const auto ts = static_cast<std::size_t>(t);
        for (std::size_t j = 0; j < sol.num_states; ++j) {
            std::cout << "t=" << t;
            if (sol.markov) std::cout << " state=" << j + 1;
            std::cout << "  Ghat=" << fixed(sol.Ghat[ts][j], 4) << "  Gbar=" << fixed(sol.Gbar[ts][j], 4);
            if (t < sol.horizon) {
                std::cout << "  Khat=" << vec_str(sol.Khat[ts][j]) << "  Kbar=" << vec_str(sol.Kbar[ts][j]);
            }
            std::cout << "\n";
        }
    }
}

int cmd_solve_finite(const Options& o) {
    clq::ProblemSpec spec;
    if (!load_valid(o, spec)) return kInvalid;
    if (spec.infinite()) {
        std::cerr << "problem has an infinite horizon; use solve-infinite\n";
        return kInvalid;
    }
    const auto sol = clq::solve_finite(spec, solver_config(o));
    clq::io::write_json(out_dir(o) / "solution.json", clq::io::to_json(sol));
    print_finite(sol);
    if (!sol.converged) {
        std::cerr << "some stage problems did not reach the tolerance (max KKT residual "
                  << clq::io::format_double(sol.max_kkt_residual) << ")\n";
        return kNoConvergence;
    }
    return kOk;
}

clq::FixedPoint run_infinite(const Options& o, const clq::ProblemSpec& spec) {
    clq::FixedPointOptions fo;
    fo.eps = o.eps;
    fo.max_iter = o.max_iter;
    return clq::solve_infinite(spec, solver_config(o), fo);
}

int cmd_solve_infinite(const Options& o) {
    clq::ProblemSpec spec;
    if (!load_valid(o, spec)) return kInvalid;
    if (!spec.infinite()) {
        std::cerr << "problem has a finite horizon; use solve-finite\n";
        return kInvalid;
    }
    const auto fp = run_infinite(o, spec);
    const auto dir = out_dir(o);
    clq::io::write_json(dir / "solution.json", clq::io::to_json(fp));
    clq::io::write_iterates_csv(dir / "iterates.csv", fp);
    const auto iters = fp.iterates.size() - 1;
    if (fp.converged) {
        std::cout << "converged after " << iters << " iterations\n"
                  << "Ghat*=" << fixed(fp.Ghat_star, 4) << "  Gbar*=" << fixed(fp.Gbar_star, 4) << "\n"
                  << "Khat*=" << vec_str(fp.Khat_star) << "  Kbar*=" << vec_str(fp.Kbar_star) << "\n";
        return kOk;
    }
    std::cerr << (fp.diverged ? "diverged" : "did not converge") << " after " << iters
              << " iterations (Ghat=" << clq::io::format_double(fp.Ghat_star)
              << ", Gbar=" << clq::io::format_double(fp.Gbar_star) << ")\n";
    return kNoConvergence;
}

int cmd_check_threshold(const Options& o) {
    const auto spec = clq::io::load_problem(o.input);
    const auto report = clq::validate_model(spec.model);
    if (!report.ok()) {
        std::cerr << "invalid model:\n" << report.summary();
        return kInvalid;
    }
    const auto r = clq::check_threshold(spec, o.k_max);
    clq::io::write_json(out_dir(o) / "solution.json", clq::io::to_json(r));
    if (r.classical_threshold) std::cout << "classical threshold: " << fixed(*r.classical_threshold, 4) << "\n";
    std::cout << "E[A^2]=" << fixed(r.EA2, 4) << "  eta=" << fixed(r.eta, 4) << "  K_max="
              << (r.K_max ? fixed(*r.K_max, 4) : std::string("unbounded")) << "\n"
              << "sufficient condition E[A^2] + eta*K_max = " << fixed(r.sufficient_lhs, 4)
              << (r.sufficient_holds ? " < 1: a stationary solution exists\n" : " >= 1: inconclusive\n");
    return kOk;
}

int cmd_simulate(const Options& o) {
    clq::ProblemSpec spec;
    if (!load_valid(o, spec)) return kInvalid;
    clq::Policy policy;
    clq::SimulationOptions so;
    so.seed = o.seed;
    so.paths = o.paths ? o.paths : 100;
    so.initial_state = initial_state(o);
    if (spec.infinite()) {
        const auto fp = run_infinite(o, spec);
        if (!fp.converged) {
            std::cerr << "no stationary policy: fixed-point iteration did not converge\n";
            return kNoConvergence;
        }
        policy = clq::Policy::from(fp);
        so.steps = o.steps >= 0 ? o.steps : 30;
    } else {
        const auto sol = clq::solve_finite(spec, solver_config(o));
        policy = clq::Policy::from(sol);
        so.steps = o.steps >= 0 ? o.steps : spec.horizon;
    }
    const auto sim = clq::simulate(spec, policy, so);
    const auto dir = out_dir(o);
    clq::io::write_trajectories_csv(dir / "trajectories.csv", sim);
    clq::io::write_stats_csv(dir / "stats.csv", sim);
    std::cout << "simulated " << sim.paths << " paths over " << sim.steps << " steps\n"
              << "E[x_0^2]=" << clq::io::format_double(sim.mean_x2.front())
              << "  E[x_T^2]=" << clq::io::format_double(sim.mean_x2.back()) << " (stderr "
              << clq::io::format_double(sim.stderr_x2.back()) << ")\n";
    return kOk;
}

bool load_market(const Options& o, clq::MarketSpec& market) {
    market = clq::io::load_market(o.input);
    market.initial_state = initial_state(o, market.initial_state);
    const auto report = clq::validate(clq::embedded_problem(market));
    if (!report.ok()) {
        std::cerr << "invalid market:\n" << report.summary();
        return false;
    }
    return true;
}

int cmd_mv_calibrate(const Options& o) {
    clq::MarketSpec market;
    if (!load_market(o, market)) return kInvalid;
    const auto cal = clq::calibrate(market, solver_config(o));
    clq::io::write_json(out_dir(o) / "solution.json", clq::io::to_json(cal));
    std::cout << "lambda*=" << fixed(cal.lambda_star, 4) << "  threshold wealth at t=0: "
              << fixed(cal.threshold.front(), 2) << "\n";
    const auto& sol = cal.riccati;
    for (std::size_t j = 0; j < sol.num_states; ++j) {
        std::cout << "t=0";
        if (sol.markov) std::cout << " state=" << j + 1;
        std::cout << "  Khat=" << vec_str(sol.Khat[0][j]) << "  Kbar=" << vec_str(sol.Kbar[0][j]) << "\n";
    }
    if (!sol.converged) return kNoConvergence;
    return kOk;
}

int cmd_mv_frontier(const Options& o) {
    clq::MarketSpec market;
    if (!load_market(o, market)) return kInvalid;
    const auto cal = clq::calibrate(market, solver_config(o));
    auto targets = o.targets;
    if (targets.empty()) {
        // excess targets evenly spaced up to twice the file's target excess
        const double base = cal.gamma.front() * market.x0;
        const double span = 2.0 * (market.xd - base);
        for (int i = 1; i <= 20; ++i) targets.push_back(base + span * i / 20.0);
    }
    clq::FrontierOptions fo;
    fo.paths = o.paths ? o.paths : 100000;
    fo.seed = o.seed;
    const auto pts = clq::frontier(market, cal, targets, fo);
    clq::io::write_frontier_csv(out_dir(o) / "frontier.csv", pts);
    for (const auto& p : pts) {
        std::cout << "x_d=" << fixed(p.xd, 4) << "  lambda*=" << fixed(p.lambda_star, 4) << "  E[x_T]="
                  << fixed(p.mean_xT, 4) << "  Var[x_T]=" << fixed(p.var_xT, 4) << "\n";
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Constrained stochastic LQ control with multiplicative noise"};
    app.require_subcommand(1);
    Options o;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("input", o.input, "problem or market file (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "output directory")->capture_default_str();
        sub->add_option("--tol", o.tol, "solver tolerance on the projected gradient")->capture_default_str();
        sub->add_option("--max-iter", o.max_iter, "solver / fixed-point iteration limit")->capture_default_str();
    };
    auto* validate = app.add_subcommand("validate", "check a problem file against the model assumptions");
    add_common(validate);
    auto* finite = app.add_subcommand("solve-finite", "backward recursion for a finite horizon");
    add_common(finite);
    auto* infinite = app.add_subcommand("solve-infinite", "fixed-point iteration for the stationary policy");
    add_common(infinite);
    infinite->add_option("--eps", o.eps, "fixed-point stopping tolerance")->capture_default_str();
    auto* threshold = app.add_subcommand("check-threshold", "classical and sufficient existence conditions");
    add_common(threshold);
    threshold->add_option("--kmax", o.k_max, "bound on |K| when the gain set cannot be enumerated");
    auto* sim = app.add_subcommand("simulate", "closed-loop Monte Carlo under the optimal policy");
    add_common(sim);
    sim->add_option("--eps", o.eps, "fixed-point stopping tolerance")->capture_default_str();
    sim->add_option("--paths", o.paths, "number of sample paths (default 100)");
    sim->add_option("--steps", o.steps, "number of steps (default: horizon, or 30 if infinite)");
    sim->add_option("--seed", o.seed, "random seed")->capture_default_str();
    sim->add_option("--initial-state", o.initial_state, "Markov state before t = 0 (1-based, default 1)");
    auto* mvc = app.add_subcommand("mv-calibrate", "mean-variance policy for a market file");
    add_common(mvc);
    mvc->add_option("--initial-state", o.initial_state, "current Markov state (1-based)");
    auto* mvf = app.add_subcommand("mv-frontier", "efficient frontier by simulation");
    add_common(mvf);
    mvf->add_option("--initial-state", o.initial_state, "current Markov state (1-based)");
    mvf->add_option("--paths", o.paths, "sample paths per target (default 100000)");
    mvf->add_option("--seed", o.seed, "random seed")->capture_default_str();
    mvf->add_option("--targets", o.targets, "target wealth levels")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kIoError;
    }

    try {
        if (*validate) return cmd_validate(o);
        if (*finite) return cmd_solve_finite(o);
        if (*infinite) return cmd_solve_infinite(o);
        if (*threshold) return cmd_check_threshold(o);
        if (*sim) return cmd_simulate(o);
        if (*mvc) return cmd_mv_calibrate(o);
        if (*mvf) return cmd_mv_frontier(o);
    } catch (const clq::Error& e) {
        std::cerr << "error (" << clq::to_string(e.code()) << "): " << e.what() << "\n";
        return exit_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIoError;
    }
    return kOk;
}
