#include "clq/policy_sim.hpp"

#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <random>
#include <string>
#include <thread>

#include "clq/errors.hpp"

namespace clq {
namespace {

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// 53-bit uniform on [0, 1), independent of the standard library's distributions.
double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// Cumulative conditional weights per (stage, state), plus the scenario values.
struct Sampler {
    std::vector<std::vector<std::vector<double>>> cumulative;  // [stage][state][k]
    std::vector<std::vector<WeightedScenario>> scenarios;      // [stage][k]
    bool markov = false;

    Sampler(const ProblemSpec& spec, int stages) {
        markov = is_markov(spec.model);
        for (int t = 0; t < stages; ++t) {
            const auto& model = spec.model_at(t);
            const auto m = num_states(model);
            std::vector<std::vector<double>> per_state;
            for (std::size_t j = 0; j < m; ++j) {
                const auto cond = conditional(model, j);
                std::vector<double> c;
                double acc = 0.0;
                for (const auto& s : cond) c.push_back(acc += s.weight);
                per_state.push_back(std::move(c));
                if (j == 0) scenarios.push_back(cond);
            }
            cumulative.push_back(std::move(per_state));
        }
    }

    std::size_t draw(int t, std::size_t state, double u) const {
        const auto& c = cumulative[static_cast<std::size_t>(t)][markov ? state : 0];
        const double target = u * c.back();
        for (std::size_t k = 0; k < c.size(); ++k) {
            if (target < c[k]) return k;
        }
        return c.size() - 1;
    }

    const WeightedScenario& at(int t, std::size_t k) const { return scenarios[static_cast<std::size_t>(t)][k]; }
};

double stage_cost(const CostSpec& c, const Vec& u, double x) {
    return u.dot(c.R * u) + 2.0 * x * c.S.dot(u) + c.q * x * x;
}

double violation(const ConstraintSpec& c, const Vec& u, double x) {
    if (c.H.rows() == 0) return 0.0;
    return (c.H * u - c.d * std::abs(x)).maxCoeff();
}

double value_fn(double x, double gh, double gb) { return x * x * (x >= 0.0 ? gh : gb); }

} // namespace

Policy Policy::from(const RiccatiSolution& sol) {
    Policy p;
    p.Khat = sol.Khat;
    p.Kbar = sol.Kbar;
    return p;
}

Policy Policy::from(const FixedPoint& fp) {
    Policy p;
    p.stationary = true;
    p.Khat = {{fp.Khat_star}};
    p.Kbar = {{fp.Kbar_star}};
    return p;
}

Vec control(const Policy& policy, int t, std::size_t state, double x) {
    if (policy.Khat.empty()) throw Error(ErrorCode::OutOfRange, "empty policy");
    if (t < 0 || (!policy.stationary && static_cast<std::size_t>(t) >= policy.Khat.size())) {
        throw Error(ErrorCode::OutOfRange, "stage " + std::to_string(t) + " outside the policy horizon");
    }
    const auto& hat = policy.Khat[policy.stationary ? 0 : static_cast<std::size_t>(t)];
    const auto& bar = policy.Kbar[policy.stationary ? 0 : static_cast<std::size_t>(t)];
    const auto j = hat.size() == 1 ? 0 : state;
    if (j >= hat.size()) {
        throw Error(ErrorCode::OutOfRange, "state " + std::to_string(state + 1) + " out of range");
    }
    if (x >= 0.0) return hat[j] * x;
    return -bar[j] * x;
}

Controller as_controller(const Policy& policy) {
    return [&policy](int t, std::size_t state, double x) { return control(policy, t, state, x); };
}

std::uint64_t path_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

unsigned worker_count(std::size_t work) {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("CLQ_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(work, 1)));
}

SimulationResult simulate(const ProblemSpec& spec, const Controller& controller, const SimulationOptions& opt) {
    if (opt.steps < 0) throw Error(ErrorCode::OutOfRange, "negative step count");
    if (!spec.infinite() && opt.steps > spec.horizon) {
        throw Error(ErrorCode::OutOfRange, "cannot simulate " + std::to_string(opt.steps) + " steps of a " +
                                               std::to_string(spec.horizon) + "-stage problem");
    }
    const bool markov = is_markov(spec.model);
    if (markov && opt.initial_state >= num_states(spec.model)) {
        throw Error(ErrorCode::OutOfRange, "initial state " + std::to_string(opt.initial_state + 1) + " out of range");
    }
    const int steps = opt.steps;
    const Sampler sampler(spec, spec.infinite() ? std::min(steps, 1) : steps);
    const auto stage = [&](int t) { return spec.infinite() ? 0 : t; };
    const bool terminal = !spec.infinite() && steps == spec.horizon;

    SimulationResult res;
    res.seed = opt.seed;
    res.steps = steps;
    res.paths = opt.paths;
    res.terminal.assign(opt.paths, 0.0);
    res.cost.assign(opt.paths, 0.0);
    res.penalty.assign(opt.paths, 0.0);
    if (opt.record_paths) {
        res.x.assign(opt.paths, {});
        res.u.assign(opt.paths, {});
        res.scenario.assign(opt.paths, {});
    }
    // x_t^2 per path, reduced afterwards in path order
    std::vector<double> x2(opt.paths * static_cast<std::size_t>(steps + 1), 0.0);
    std::vector<double> worst(opt.paths, -std::numeric_limits<double>::infinity());

    const auto run_path = [&](std::size_t p) {
        std::mt19937_64 gen(path_seed(opt.seed, p));
        double x = spec.x0;
        std::size_t state = opt.initial_state;
        double cost = 0.0;
        double pen = 0.0;
        double* row = &x2[p * static_cast<std::size_t>(steps + 1)];
        if (opt.record_paths) {
            res.x[p].reserve(static_cast<std::size_t>(steps + 1));
            res.x[p].push_back(x);
        }
        row[0] = x * x;
        for (int t = 0; t < steps; ++t) {
            const Vec u = controller(t, state, x);
            const auto& c = spec.cost_at(stage(t));
            worst[p] = std::max(worst[p], violation(spec.constraint_at(stage(t)), u, x));
            cost += stage_cost(c, u, x);
            pen += u.dot(c.R * u);
            const auto k = sampler.draw(stage(t), state, uniform01(gen));
            const auto& s = sampler.at(stage(t), k);
            x = s.a * x + s.b.dot(u);
            state = k;
            row[t + 1] = x * x;
            if (opt.record_paths) {
                res.x[p].push_back(x);
                res.u[p].push_back(u);
                res.scenario[p].push_back(k);
            }
        }
        if (terminal) cost += spec.q_terminal * x * x;
        res.terminal[p] = x;
        res.cost[p] = cost;
        res.penalty[p] = pen;
    };

    const unsigned workers = worker_count(opt.paths);
    if (workers <= 1) {
        for (std::size_t p = 0; p < opt.paths; ++p) run_path(p);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t p = w; p < opt.paths; p += workers) run_path(p);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (const auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    res.mean_x2.assign(static_cast<std::size_t>(steps + 1), 0.0);
    res.stderr_x2.assign(static_cast<std::size_t>(steps + 1), 0.0);
    const auto N = static_cast<double>(opt.paths);
    for (int t = 0; t <= steps; ++t) {
        double sum = 0.0;
        for (std::size_t p = 0; p < opt.paths; ++p) sum += x2[p * static_cast<std::size_t>(steps + 1) + static_cast<std::size_t>(t)];
        const double mean = opt.paths ? sum / N : 0.0;
        double ss = 0.0;
        for (std::size_t p = 0; p < opt.paths; ++p) {
            const double dv = x2[p * static_cast<std::size_t>(steps + 1) + static_cast<std::size_t>(t)] - mean;
            ss += dv * dv;
        }
        res.mean_x2[static_cast<std::size_t>(t)] = mean;
        res.stderr_x2[static_cast<std::size_t>(t)] = opt.paths > 1 ? std::sqrt(ss / (N - 1.0) / N) : 0.0;
    }
    res.max_violation = 0.0;
    for (double v : worst) res.max_violation = std::max(res.max_violation, v);
    return res;
}

SimulationResult simulate(const ProblemSpec& spec, const Policy& policy, const SimulationOptions& opt) {
    return simulate(spec, as_controller(policy), opt);
}

void for_each_path(const ProblemSpec& spec, const Controller& controller, double x0, int depth,
                   std::size_t initial_state, const std::function<void(const TreePath&)>& visit) {
    if (depth < 0) throw Error(ErrorCode::OutOfRange, "negative tree depth");
    if (!spec.infinite() && depth > spec.horizon) throw Error(ErrorCode::OutOfRange, "tree deeper than the horizon");
    const double leaves = std::pow(static_cast<double>(num_scenarios(spec.model)), depth);
    if (leaves > 1e7) throw Error(ErrorCode::DimensionTooLarge, "scenario tree has more than 10^7 leaves");
    const auto stage = [&](int t) { return spec.infinite() ? 0 : t; };

    TreePath path;
    path.x.push_back(x0);
    const auto recurse = [&](auto&& self, int t, std::size_t state) -> void {
        if (t == depth) {
            visit(path);
            return;
        }
        const double x = path.x.back();
        const Vec u = controller(t, state, x);
        const double prob = path.probability;
        for (const auto& s : conditional(spec.model_at(stage(t)), state)) {
            if (s.weight == 0.0) continue;
            path.probability = prob * s.weight;
            path.x.push_back(s.a * x + s.b.dot(u));
            path.u.push_back(u);
            path.scenario.push_back(s.index);
            self(self, t + 1, s.index);
            path.x.pop_back();
            path.u.pop_back();
            path.scenario.pop_back();
        }
        path.probability = prob;
    };
    recurse(recurse, 0, initial_state);
}

StabilityCertificate stability_certificate(const ProblemSpec& spec, const FixedPoint& fp, const SimulationOptions& opt) {
    if (!fp.converged) throw Error(ErrorCode::NotConverged, "stability certificate needs a converged fixed point");
    const auto& C = spec.cost_at(0);
    const auto& Kh = fp.Khat_star;
    const auto& Kb = fp.Kbar_star;
    StabilityCertificate cert;
    cert.Jhat = Kh.dot(C.R * Kh) + 2.0 * C.S.dot(Kh) + C.q;
    cert.Jbar = Kb.dot(C.R * Kb) - 2.0 * C.S.dot(Kb) + C.q;

    const double gh = fp.Ghat_star;
    const double gb = fp.Gbar_star;
    const Policy policy = Policy::from(fp);
    const auto ctrl = as_controller(policy);
    const auto one_step = [&](double x0) {
        double ev = 0.0;
        for_each_path(spec, ctrl, x0, 1, 0, [&](const TreePath& p) { ev += p.probability * value_fn(p.x[1], gh, gb); });
        return ev - value_fn(x0, gh, gb);
    };
    cert.exact_decrement_pos = one_step(1.0);
    cert.exact_decrement_neg = one_step(-1.0);
    cert.exact_residual = std::max(std::abs(cert.exact_decrement_pos + cert.Jhat),
                                   std::abs(cert.exact_decrement_neg + cert.Jbar));

    auto sim_opt = opt;
    sim_opt.record_paths = true;
    const auto sim = simulate(spec, policy, sim_opt);
    cert.monte_carlo_ok = true;
    for (int t = 0; t < sim.steps; ++t) {
        const auto ts = static_cast<std::size_t>(t);
        double sum = 0.0;
        double sum2 = 0.0;
        for (std::size_t p = 0; p < sim.paths; ++p) {
            const double x = sim.x[p][ts];
            const double xn = sim.x[p][ts + 1];
            const double v = value_fn(xn, gh, gb) - value_fn(x, gh, gb) + x * x * (x >= 0.0 ? cert.Jhat : cert.Jbar);
            sum += v;
            sum2 += v * v;
        }
        const auto N = static_cast<double>(sim.paths);
        const double mean = sum / N;
        const double var = sim.paths > 1 ? std::max(0.0, (sum2 - N * mean * mean) / (N - 1.0)) : 0.0;
        const double se = std::sqrt(var / N);
        cert.monte_carlo.push_back({t, mean, se});
        if (std::abs(mean) > 4.0 * se + 1e-9) cert.monte_carlo_ok = false;
    }
    return cert;
}

} // namespace clq
