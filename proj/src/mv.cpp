#include "clq/mv.hpp"

#include <cmath>
#include <sstream>

#include "clq/errors.hpp"

namespace clq {
namespace {

StochasticModel with_riskfree(const StochasticModel& excess, double r) {
    if (const auto* iid = std::get_if<ScenarioSet>(&excess)) {
        ScenarioSet out = *iid;
        for (auto& s : out.scenarios) s.a = r;
        return out;
    }
    MarkovModel out = std::get<MarkovModel>(excess);
    for (auto& s : out.states) s.a = r;
    return out;
}

std::vector<double> thresholds(const std::vector<double>& gamma, double xd, double lambda) {
    std::vector<double> w;
    w.reserve(gamma.size());
    for (double g : gamma) w.push_back((xd - lambda) / g);
    return w;
}

void check_target(const MvCalibration& cal, double xd) {
    const double floor = cal.gamma.front() * cal.x0;
    if (!(xd > floor)) {
        std::ostringstream os;
        os.precision(17);
        os << "target wealth " << xd << " must exceed the risk-free outcome gamma_0 x_0 = " << floor;
        throw Error(ErrorCode::TargetBelowRiskfree, os.str());
    }
}

} // namespace

const Mat& MarketSpec::R_at(int t) const {
    if (R.size() == 1) return R.front();
    if (t < 0 || static_cast<std::size_t>(t) >= R.size()) {
        throw Error(ErrorCode::OutOfRange, "no penalty matrix for stage " + std::to_string(t));
    }
    return R[static_cast<std::size_t>(t)];
}

std::vector<double> discount_factors(const MarketSpec& market) {
    const auto T = market.riskfree.size();
    std::vector<double> gamma(T + 1, 1.0);
    for (std::size_t t = T; t-- > 0;) gamma[t] = gamma[t + 1] * market.riskfree[t];
    return gamma;
}

ProblemSpec embedded_problem(const MarketSpec& market) {
    const int T = market.horizon();
    if (T < 1) throw Error(ErrorCode::InvalidModel, "market needs at least one period");
    if (market.R.size() != 1 && market.R.size() != static_cast<std::size_t>(T)) {
        throw Error(ErrorCode::DimensionMismatch, "need one shared penalty matrix or one per period");
    }
    for (double r : market.riskfree) {
        if (!(r > 0.0)) throw Error(ErrorCode::InvalidModel, "risk-free returns must be positive");
    }
    const auto n = control_dim(market.excess);
    ProblemSpec spec;
    spec.model = with_riskfree(market.excess, market.riskfree.front());
    for (int t = 0; t < T; ++t) {
        spec.stage_models.push_back(with_riskfree(market.excess, market.riskfree[static_cast<std::size_t>(t)]));
        spec.costs.push_back({market.R_at(t), Vec::Zero(n), 0.0});
    }
    spec.q_terminal = 1.0;
    spec.constraints = {ConstraintSpec::nonnegative(n)};
    spec.horizon = T;
    spec.x0 = market.x0;
    return spec;
}

MvCalibration calibrate(const MarketSpec& market, const SolverConfig& cfg) {
    MvCalibration cal;
    cal.x0 = market.x0;
    cal.initial_state = is_markov(market.excess) ? market.initial_state : 0;
    if (cal.initial_state >= num_states(market.excess)) {
        throw Error(ErrorCode::OutOfRange, "initial state " + std::to_string(market.initial_state + 1) + " out of range");
    }
    cal.gamma = discount_factors(market);
    check_target(cal, market.xd);
    cal.riccati = solve_finite(embedded_problem(market), cfg);
    const double g0 = cal.gamma.front();
    if (!(cal.Gbar0() < g0 * g0)) {
        throw Error(ErrorCode::InvalidModel, "Gbar_0 is not below gamma_0^2; the market admits no finite-variance target");
    }
    return recalibrate(cal, market.xd);
}

MvCalibration recalibrate(const MvCalibration& cal, double xd) {
    check_target(cal, xd);
    const double g0 = cal.gamma.front();
    const double gb = cal.Gbar0();
    MvCalibration out = cal;
    out.xd = xd;
    out.lambda_star = gb * (xd - g0 * cal.x0) / (gb - g0 * g0);
    out.threshold = thresholds(out.gamma, xd, out.lambda_star);
    return out;
}

MvCalibration with_lambda(const MvCalibration& cal, double lambda) {
    MvCalibration out = cal;
    out.lambda_star = lambda;
    out.threshold = thresholds(out.gamma, out.xd, lambda);
    return out;
}

Vec mv_policy(const MvCalibration& cal, int t, std::size_t state, double x) {
    const auto& sol = cal.riccati;
    if (t < 0 || t >= sol.horizon) {
        throw Error(ErrorCode::OutOfRange, "stage " + std::to_string(t) + " outside the horizon");
    }
    const auto ts = static_cast<std::size_t>(t);
    const auto j = sol.markov ? state : 0;
    if (j >= sol.num_states) throw Error(ErrorCode::OutOfRange, "state " + std::to_string(state + 1) + " out of range");
    const double w = x - cal.threshold[ts];
    if (w >= 0.0) return w * sol.Khat[ts][j];
    return -w * sol.Kbar[ts][j];
}

Controller mv_controller(const MvCalibration& cal) {
    return [&cal](int t, std::size_t state, double x) { return mv_policy(cal, t, state, x); };
}

double dual_value(const MvCalibration& cal, double lambda) {
    const double g0 = cal.gamma.front();
    const double shift = g0 * cal.x0 - cal.xd + lambda;  // gamma_0 * (x_0 - threshold_0)
    const double G = shift >= 0.0 ? cal.Ghat0() : cal.Gbar0();
    return (shift * shift * G - g0 * g0 * lambda * lambda) / (g0 * g0);
}

double analytic_variance(const MvCalibration& cal, double penalty) {
    const double g0 = cal.gamma.front();
    const double gb = cal.Gbar0();
    const double e = cal.xd - cal.x0 * g0;
    return gb * e * e / (g0 * g0 - gb) - penalty;
}

TerminalMoments exact_terminal_moments(const MarketSpec& market, const MvCalibration& cal) {
    const auto spec = embedded_problem(market);
    TerminalMoments m;
    const auto T = spec.horizon;
    for_each_path(spec, mv_controller(cal), market.x0, T, cal.initial_state, [&](const TreePath& p) {
        const double xT = p.x.back();
        double pen = 0.0;
        for (int t = 0; t < T; ++t) {
            const auto& u = p.u[static_cast<std::size_t>(t)];
            pen += u.dot(market.R_at(t) * u);
        }
        m.mean += p.probability * xT;
        m.second += p.probability * xT * xT;
        m.penalty += p.probability * pen;
    });
    return m;
}

SimulationResult simulate_market(const MarketSpec& market, const MvCalibration& cal, std::size_t paths,
                                 std::uint64_t seed, bool record_paths) {
    const auto spec = embedded_problem(market);
    SimulationOptions opt;
    opt.paths = paths;
    opt.steps = spec.horizon;
    opt.seed = seed;
    opt.initial_state = cal.initial_state;
    opt.record_paths = record_paths;
    return simulate(spec, mv_controller(cal), opt);
}

std::vector<FrontierPoint> frontier(const MarketSpec& market, const MvCalibration& cal,
                                    const std::vector<double>& targets, const FrontierOptions& opt) {
    std::vector<FrontierPoint> out;
    out.reserve(targets.size());
    for (double xd : targets) {
        const auto c = recalibrate(cal, xd);
        // same seed for every target: common random numbers
        const auto sim = simulate_market(market, c, opt.paths, opt.seed);
        const auto N = static_cast<double>(sim.paths);
        const auto mean_se = [N](const std::vector<double>& v) {
            double s = 0.0;
            for (double e : v) s += e;
            const double mean = s / N;
            double ss = 0.0;
            for (double e : v) ss += (e - mean) * (e - mean);
            return std::pair{mean, N > 1.0 ? std::sqrt(ss / (N - 1.0) / N) : 0.0};
        };
        const auto [mx, mx_se] = mean_se(sim.terminal);
        const auto [pen, pen_se] = mean_se(sim.penalty);
        FrontierPoint fp;
        fp.xd = xd;
        fp.lambda_star = c.lambda_star;
        fp.mean_xT = mx;
        fp.mean_stderr = mx_se;
        fp.penalty = pen;
        fp.penalty_stderr = pen_se;
        fp.var_xT = analytic_variance(c, pen);
        out.push_back(fp);
    }
    return out;
}

} // namespace clq
