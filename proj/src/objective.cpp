#include "clq/objective.hpp"

#include <string>

#include "clq/errors.hpp"

namespace clq {

ObjectiveContext::ObjectiveContext(std::vector<ScenarioTerm> terms, CostSpec cost)
    : terms_(std::move(terms)), cost_(std::move(cost)) {
    const auto n = cost_.R.rows();
    if (cost_.R.cols() != n || cost_.S.size() != n) {
        throw Error(ErrorCode::DimensionMismatch, "cost block has inconsistent dimensions");
    }
    for (const auto& t : terms_) {
        if (t.b.size() != n) {
            throw Error(ErrorCode::DimensionMismatch, "scenario b has length " + std::to_string(t.b.size()) +
                                                          ", cost expects " + std::to_string(n));
        }
        if (t.y < 0.0 || t.z < 0.0) {
            throw Error(ErrorCode::InvalidModel, "continuation values must be nonnegative");
        }
    }
}

ObjectiveContext ObjectiveContext::make(const StochasticModel& model, std::size_t state, const CostSpec& cost,
                                        ValuePair values) {
    std::vector<ScenarioTerm> terms;
    for (auto& s : conditional(model, state)) {
        terms.push_back({s.a, std::move(s.b), s.weight, values.y, values.z});
    }
    return {std::move(terms), cost};
}

ObjectiveContext ObjectiveContext::make(const StochasticModel& model, std::size_t state, const CostSpec& cost,
                                        std::span<const double> y, std::span<const double> z) {
    const auto n_s = num_scenarios(model);
    if (y.size() != n_s || z.size() != n_s) {
        throw Error(ErrorCode::DimensionMismatch, "need one continuation pair per scenario");
    }
    std::vector<ScenarioTerm> terms;
    for (auto& s : conditional(model, state)) {
        terms.push_back({s.a, std::move(s.b), s.weight, y[s.index], z[s.index]});
    }
    return {std::move(terms), cost};
}

void ObjectiveContext::check_dim(const Vec& v) const {
    if (v.size() != dim()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "argument has length " + std::to_string(v.size()) + ", expected " + std::to_string(dim()));
    }
}

double ObjectiveContext::eval_g(const Vec& u, double x) const {
    check_dim(u);
    double v = u.dot(cost_.R * u) + 2.0 * x * cost_.S.dot(u) + cost_.q * x * x;
    for (const auto& t : terms_) {
        const double next = t.a * x + t.b.dot(u);
        v += t.weight * next * next * (next >= 0.0 ? t.y : t.z);
    }
    return v;
}

double ObjectiveContext::eval_ghat(const Vec& K) const {
    check_dim(K);
    double v = K.dot(cost_.R * K) + 2.0 * cost_.S.dot(K) + cost_.q;
    for (const auto& t : terms_) {
        const double e = t.a + t.b.dot(K);
        v += t.weight * e * e * (e >= 0.0 ? t.y : t.z);
    }
    return v;
}

double ObjectiveContext::eval_gbar(const Vec& K) const {
    check_dim(K);
    double v = K.dot(cost_.R * K) - 2.0 * cost_.S.dot(K) + cost_.q;
    for (const auto& t : terms_) {
        // x < 0 and u = -K x give x_next = x (a - b K): nonnegative iff a - b K <= 0
        const double e = t.a - t.b.dot(K);
        v += t.weight * e * e * (e <= 0.0 ? t.y : t.z);
    }
    return v;
}

double ObjectiveContext::eval(Branch branch, const Vec& K) const {
    return branch == Branch::Hat ? eval_ghat(K) : eval_gbar(K);
}

Vec ObjectiveContext::grad_ghat(const Vec& K) const {
    check_dim(K);
    Vec g = 2.0 * (cost_.R * K + cost_.S);
    for (const auto& t : terms_) {
        const double e = t.a + t.b.dot(K);
        g += (2.0 * t.weight * e * (e >= 0.0 ? t.y : t.z)) * t.b;
    }
    return g;
}

Vec ObjectiveContext::grad_gbar(const Vec& K) const {
    check_dim(K);
    Vec g = 2.0 * (cost_.R * K - cost_.S);
    for (const auto& t : terms_) {
        const double e = t.a - t.b.dot(K);
        g -= (2.0 * t.weight * e * (e <= 0.0 ? t.y : t.z)) * t.b;
    }
    return g;
}

Vec ObjectiveContext::grad(Branch branch, const Vec& K) const {
    return branch == Branch::Hat ? grad_ghat(K) : grad_gbar(K);
}

Mat ObjectiveContext::hessian(Branch branch, const Vec& K) const {
    check_dim(K);
    Mat h = 2.0 * cost_.R;
    for (const auto& t : terms_) {
        double c = 0.0;
        if (branch == Branch::Hat) {
            c = t.a + t.b.dot(K) >= 0.0 ? t.y : t.z;
        } else {
            c = t.a - t.b.dot(K) <= 0.0 ? t.y : t.z;
        }
        h += (2.0 * t.weight * c) * t.b * t.b.transpose();
    }
    return h;
}

} // namespace clq
