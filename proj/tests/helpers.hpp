#pragma once

#include <random>
#include <string>

#include "clq/io.hpp"

namespace clq::test {

inline ProblemSpec fixture(const std::string& name) {
    return io::load_problem(std::string(CLQ_FIXTURE_DIR) + "/" + name + ".json");
}

inline MarketSpec market_fixture(const std::string& name) {
    return io::load_market(std::string(CLQ_FIXTURE_DIR) + "/" + name + ".json");
}

inline Vec vec(std::initializer_list<double> v) {
    Vec out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

inline double uniform(std::mt19937_64& gen, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(gen);
}

// Random i.i.d. model with `m` equiprobable-ish scenarios and control dimension n.
inline ScenarioSet random_model(std::mt19937_64& gen, Eigen::Index n, int m, double scale = 1.0) {
    ScenarioSet set;
    double total = 0.0;
    for (int k = 0; k < m; ++k) {
        Scenario s;
        s.a = uniform(gen, -1.2, 1.2);
        s.b = scale * Vec::NullaryExpr(n, [&] { return uniform(gen, -1.0, 1.0); });
        s.p = uniform(gen, 0.2, 1.0);
        total += s.p;
        set.scenarios.push_back(s);
    }
    for (auto& s : set.scenarios) s.p /= total;
    return set;
}

// Random cost with R positive definite and C = [[R, S], [S', q]] PSD.
inline CostSpec random_cost(std::mt19937_64& gen, Eigen::Index n, double scale = 1.0) {
    const Mat L = Mat::NullaryExpr(n, n, [&] { return uniform(gen, -1.0, 1.0); });
    CostSpec c;
    c.R = scale * (L * L.transpose() + 0.2 * Mat::Identity(n, n));
    c.S = scale * 0.2 * Vec::NullaryExpr(n, [&] { return uniform(gen, -1.0, 1.0); });
    c.q = c.S.dot(c.R.ldlt().solve(c.S)) / scale + uniform(gen, 0.0, 1.0) * scale;
    return c;
}

inline ObjectiveContext random_context(std::mt19937_64& gen, Eigen::Index n, int m) {
    const auto model = random_model(gen, n, m);
    const auto cost = random_cost(gen, n);
    return ObjectiveContext::make(model, 0, cost, ValuePair{uniform(gen, 0.0, 3.0), uniform(gen, 0.0, 3.0)});
}

} // namespace clq::test

namespace clq::test {

// Box-constrained stage problem with bounds on the 1e-3 grid and Hessian
// eigenvalues in roughly [0.6, 2], so a 1e-3 grid search is accurate to
// better than 1e-6 in value. Boxes are kept small enough to enumerate.
struct BoxInstance {
    ObjectiveContext ctx;
    ConstraintSpec constraint;
};

inline BoxInstance random_box_instance(std::mt19937_64& gen, Eigen::Index n) {
    auto model = random_model(gen, n, 4, 0.25);
    const Mat Qr = Eigen::HouseholderQR<Mat>(Mat::NullaryExpr(n, n, [&] { return uniform(gen, -1.0, 1.0); }))
                       .householderQ();
    const Vec eig = Vec::NullaryExpr(n, [&] { return uniform(gen, 0.3, 0.8); });
    CostSpec cost;
    cost.R = Qr * eig.asDiagonal() * Qr.transpose();
    cost.S = 0.3 * Vec::NullaryExpr(n, [&] { return uniform(gen, -1.0, 1.0); });
    cost.q = 1.0;
    auto ctx = ObjectiveContext::make(model, 0, cost, ValuePair{uniform(gen, 0.0, 1.0), uniform(gen, 0.0, 1.0)});
    const double max_width = n == 1 ? 2.0 : (n == 2 ? 0.8 : 0.15);
    Vec lo(n), hi(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = std::round(uniform(gen, 0.05, max_width) * 1000.0) / 1000.0;
        // centre near the unconstrained optimum of the quadratic part so both
        // interior and boundary optima occur
        const double c = -cost.S(i) / cost.R(i, i) + uniform(gen, -w, w);
        lo(i) = std::round((c - w / 2) * 1000.0) / 1000.0;
        hi(i) = lo(i) + w;
    }
    return {std::move(ctx), ConstraintSpec::box(lo, hi)};
}

// Two risky assets, three excess-return scenarios, T periods, x_d 0.1 above risk-free growth.
inline MarketSpec random_market(std::mt19937_64& gen, int T, bool markov) {
    MarketSpec m;
    for (int t = 0; t < T; ++t) m.riskfree.push_back(uniform(gen, 1.0, 1.05));
    const int K = 3;
    std::vector<Vec> bs;
    for (int k = 0; k < K; ++k) bs.push_back(Vec::NullaryExpr(2, [&] { return uniform(gen, -0.15, 0.25); }));
    if (markov) {
        MarkovModel mk;
        mk.transition = Mat(K, K);
        for (int j = 0; j < K; ++j) {
            double total = 0.0;
            for (int k = 0; k < K; ++k) total += mk.transition(j, k) = uniform(gen, 0.2, 1.0);
            mk.transition.row(j) /= total;
        }
        for (const auto& b : bs) mk.states.push_back({0.0, b});
        m.excess = mk;
        m.initial_state = 1;
    } else {
        ScenarioSet set;
        for (const auto& b : bs) set.scenarios.push_back({0.0, b, 1.0 / K});
        m.excess = set;
    }
    m.R = {1e-3 * Mat::Identity(2, 2)};
    m.x0 = 1.0;
    m.xd = 1.0;
    for (double r : m.riskfree) m.xd *= r;
    m.xd += 0.1;
    return m;
}

} // namespace clq::test
