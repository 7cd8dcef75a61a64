#include "clq/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>

#include "clq/errors.hpp"

namespace clq::io {
namespace {

[[noreturn]] void parse_error(const std::string& msg) { throw Error(ErrorCode::Parse, msg); }

const json& require(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) parse_error(where + ": missing key \"" + key + "\"");
    return obj.at(key);
}

double number(const json& v, const std::string& where) {
    if (!v.is_number()) parse_error(where + ": expected a number");
    return v.get<double>();
}

// Accepts a number (length-1 vector) or an array of numbers.
Vec vector(const json& v, const std::string& where) {
    if (v.is_number()) return Vec::Constant(1, v.get<double>());
    if (!v.is_array()) parse_error(where + ": expected an array of numbers");
    Vec out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = number(v[i], where);
    return out;
}

// Accepts a number (1x1), or an array of equal-length rows.
Mat matrix(const json& v, const std::string& where) {
    if (v.is_number()) return Mat::Constant(1, 1, v.get<double>());
    if (!v.is_array()) parse_error(where + ": expected an array of rows");
    if (v.empty()) return Mat(0, 0);
    const auto cols = v.front().is_array() ? v.front().size() : 0;
    Mat out(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_array() || v[i].size() != cols) parse_error(where + ": rows must be arrays of equal length");
        for (std::size_t j = 0; j < cols; ++j) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = number(v[i][j], where);
        }
    }
    return out;
}

json from_vec(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

StochasticModel parse_model(const json& doc) {
    if (!doc.is_object()) parse_error("model: expected an object");
    if (doc.contains("iid")) {
        const auto& sc = require(doc.at("iid"), "scenarios", "model.iid");
        if (!sc.is_array()) parse_error("model.iid.scenarios: expected an array");
        ScenarioSet set;
        for (std::size_t i = 0; i < sc.size(); ++i) {
            const auto where = "model.iid.scenarios[" + std::to_string(i + 1) + "]";
            const auto& s = sc[i];
            set.scenarios.push_back({s.contains("a") ? number(s.at("a"), where + ".a") : 0.0,
                                     vector(require(s, "b", where), where + ".b"),
                                     number(require(s, "p", where), where + ".p")});
        }
        return set;
    }
    if (doc.contains("markov")) {
        const auto& mk = doc.at("markov");
        const auto& st = require(mk, "states", "model.markov");
        if (!st.is_array()) parse_error("model.markov.states: expected an array");
        MarkovModel model;
        for (std::size_t i = 0; i < st.size(); ++i) {
            const auto where = "model.markov.states[" + std::to_string(i + 1) + "]";
            const auto& s = st[i];
            model.states.push_back({s.contains("a") ? number(s.at("a"), where + ".a") : 0.0,
                                    vector(require(s, "b", where), where + ".b")});
        }
        model.transition = matrix(require(mk, "transition", "model.markov"), "model.markov.transition");
        return model;
    }
    parse_error("model: expected key \"iid\" or \"markov\"");
}

CostSpec parse_cost(const json& c, Eigen::Index n, const std::string& where) {
    CostSpec cost;
    cost.R = matrix(require(c, "R", where), where + ".R");
    cost.S = c.contains("S") ? vector(c.at("S"), where + ".S") : Vec::Zero(n);
    cost.q = c.contains("q") ? number(c.at("q"), where + ".q") : 0.0;
    return cost;
}

// Costs as one object or a per-stage array; q_T from a top-level "qT" or
// from any stage entry carrying one.
void parse_costs(const json& doc, ProblemSpec& spec) {
    const auto n = spec.dim();
    const auto& c = require(doc, "costs", "problem");
    std::optional<double> qT;
    if (c.is_array()) {
        for (std::size_t t = 0; t < c.size(); ++t) {
            const auto where = "costs[" + std::to_string(t) + "]";
            spec.costs.push_back(parse_cost(c[t], n, where));
            if (c[t].contains("qT")) qT = number(c[t].at("qT"), where + ".qT");
        }
    } else {
        spec.costs.push_back(parse_cost(c, n, "costs"));
        if (c.contains("qT")) qT = number(c.at("qT"), "costs.qT");
    }
    if (doc.contains("qT")) qT = number(doc.at("qT"), "qT");
    spec.q_terminal = qT.value_or(0.0);
}

ConstraintSpec parse_constraint(const json& c, Eigen::Index n, const std::string& where) {
    if (c.contains("box")) {
        const auto& b = c.at("box");
        return ConstraintSpec::box(vector(require(b, "lower", where + ".box"), where + ".box.lower"),
                                   vector(require(b, "upper", where + ".box"), where + ".box.upper"));
    }
    if (c.contains("nonneg")) {
        if (!c.at("nonneg").is_boolean()) parse_error(where + ".nonneg: expected true or false");
        return c.at("nonneg").get<bool>() ? ConstraintSpec::nonnegative(n) : ConstraintSpec::unconstrained(n);
    }
    if (c.contains("H") || c.contains("d")) {
        return {matrix(require(c, "H", where), where + ".H"), vector(require(c, "d", where), where + ".d")};
    }
    if (c.is_object() && c.empty()) return ConstraintSpec::unconstrained(n);
    parse_error(where + ": expected \"H\"/\"d\", \"box\" or \"nonneg\"");
}

void parse_constraints(const json& doc, ProblemSpec& spec) {
    const auto n = spec.dim();
    if (!doc.contains("constraint")) {
        spec.constraints = {ConstraintSpec::unconstrained(n)};
        return;
    }
    const auto& c = doc.at("constraint");
    if (c.is_array()) {
        for (std::size_t t = 0; t < c.size(); ++t) {
            spec.constraints.push_back(parse_constraint(c[t], n, "constraint[" + std::to_string(t) + "]"));
        }
    } else {
        spec.constraints.push_back(parse_constraint(c, n, "constraint"));
    }
}

std::size_t parse_state(const json& doc, const StochasticModel& model) {
    if (!doc.contains("initial_state")) return 0;
    const auto& v = doc.at("initial_state");
    if (!v.is_number_integer() || v.get<long long>() < 1) parse_error("initial_state: expected an integer >= 1");
    const auto s = static_cast<std::size_t>(v.get<long long>());
    if (s > num_states(model)) parse_error("initial_state " + std::to_string(s) + " exceeds the number of states");
    return s - 1;
}

template <typename Fn>
auto guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, e.what());
    }
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double from_nullable(const json& v) {
    return v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>();
}

} // namespace

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const json& doc) {
    auto out = open_out(path);
    out << doc.dump(2) << "\n";
    finish(out, path);
}

ProblemSpec parse_problem(const json& doc) {
    return guarded([&] {
        if (!doc.is_object()) parse_error("problem: expected an object");
        ProblemSpec spec;
        spec.model = parse_model(require(doc, "model", "problem"));
        parse_costs(doc, spec);
        parse_constraints(doc, spec);
        const auto& h = require(doc, "horizon", "problem");
        if (h.is_string() && h.get<std::string>() == "infinite") {
            spec.horizon = kInfiniteHorizon;
        } else if (h.is_number_integer() && h.get<long long>() >= 1) {
            spec.horizon = static_cast<int>(h.get<long long>());
        } else {
            parse_error("horizon: expected a positive integer or \"infinite\"");
        }
        spec.x0 = doc.contains("x0") ? number(doc.at("x0"), "x0") : 1.0;
        return spec;
    });
}

ProblemSpec load_problem(const std::filesystem::path& path) {
    try {
        return parse_problem(read_json(path));
    } catch (const Error& e) {
        throw e.annotated(path.string() + ": ");
    }
}

MarketSpec parse_market(const json& doc) {
    return guarded([&] {
        if (!doc.is_object()) parse_error("market: expected an object");
        MarketSpec m;
        m.excess = parse_model(require(doc, "model", "market"));
        const auto n = control_dim(m.excess);
        const auto& rf = require(doc, "riskfree", "market");
        if (rf.is_array()) {
            for (std::size_t t = 0; t < rf.size(); ++t) m.riskfree.push_back(number(rf[t], "riskfree"));
            if (doc.contains("horizon") &&
                (!doc.at("horizon").is_number_integer() || doc.at("horizon").get<std::size_t>() != rf.size())) {
                parse_error("horizon does not match the length of riskfree");
            }
        } else {
            const auto& h = require(doc, "horizon", "market");
            if (!h.is_number_integer() || h.get<long long>() < 1) parse_error("horizon: expected a positive integer");
            m.riskfree.assign(static_cast<std::size_t>(h.get<long long>()), number(rf, "riskfree"));
        }
        if (doc.contains("costs")) {
            const auto& c = doc.at("costs");
            if (c.is_array()) {
                for (std::size_t t = 0; t < c.size(); ++t) {
                    m.R.push_back(matrix(require(c[t], "R", "costs"), "costs[" + std::to_string(t) + "].R"));
                }
            } else {
                m.R.push_back(matrix(require(c, "R", "costs"), "costs.R"));
            }
        } else if (doc.contains("R")) {
            m.R.push_back(matrix(doc.at("R"), "R"));
        } else {
            m.R.push_back(Mat::Zero(n, n));
        }
        m.x0 = number(require(doc, "x0", "market"), "x0");
        m.xd = number(require(doc, "xd", "market"), "xd");
        m.initial_state = parse_state(doc, m.excess);
        return m;
    });
}

MarketSpec load_market(const std::filesystem::path& path) {
    try {
        return parse_market(read_json(path));
    } catch (const Error& e) {
        throw e.annotated(path.string() + ": ");
    }
}

json to_json(const RiccatiSolution& sol) {
    json doc;
    doc["type"] = "finite";
    doc["horizon"] = sol.horizon;
    doc["markov"] = sol.markov;
    doc["num_states"] = sol.num_states;
    doc["converged"] = sol.converged;
    doc["max_kkt_residual"] = sol.max_kkt_residual;
    doc["Ghat"] = sol.Ghat;
    doc["Gbar"] = sol.Gbar;
    for (const char* key : {"Khat", "Kbar"}) {
        const auto& K = std::string(key) == "Khat" ? sol.Khat : sol.Kbar;
        json stages = json::array();
        for (const auto& st : K) {
            json row = json::array();
            for (const auto& k : st) row.push_back(from_vec(k));
            stages.push_back(row);
        }
        doc[key] = stages;
    }
    return doc;
}

RiccatiSolution riccati_from_json(const json& doc) {
    return guarded([&] {
        RiccatiSolution sol;
        sol.horizon = doc.at("horizon").get<int>();
        sol.markov = doc.at("markov").get<bool>();
        sol.num_states = doc.at("num_states").get<std::size_t>();
        sol.converged = doc.at("converged").get<bool>();
        sol.max_kkt_residual = doc.at("max_kkt_residual").get<double>();
        sol.Ghat = doc.at("Ghat").get<std::vector<std::vector<double>>>();
        sol.Gbar = doc.at("Gbar").get<std::vector<std::vector<double>>>();
        for (const char* key : {"Khat", "Kbar"}) {
            auto& K = std::string(key) == "Khat" ? sol.Khat : sol.Kbar;
            for (const auto& st : doc.at(key)) {
                std::vector<Vec> row;
                for (const auto& k : st) row.push_back(vector(k, key));
                K.push_back(std::move(row));
            }
        }
        return sol;
    });
}

json to_json(const FixedPoint& fp) {
    json doc;
    doc["type"] = "infinite";
    doc["converged"] = fp.converged;
    doc["diverged"] = fp.diverged;
    doc["iterations"] = fp.iterates.empty() ? 0 : fp.iterates.size() - 1;
    doc["Ghat_star"] = nullable(fp.Ghat_star);
    doc["Gbar_star"] = nullable(fp.Gbar_star);
    doc["Khat_star"] = from_vec(fp.Khat_star);
    doc["Kbar_star"] = from_vec(fp.Kbar_star);
    json it = json::array();
    for (const auto& [h, b] : fp.iterates) it.push_back({nullable(h), nullable(b)});
    doc["iterates"] = it;
    return doc;
}

FixedPoint fixed_point_from_json(const json& doc) {
    return guarded([&] {
        FixedPoint fp;
        fp.converged = doc.at("converged").get<bool>();
        fp.diverged = doc.at("diverged").get<bool>();
        fp.Ghat_star = from_nullable(doc.at("Ghat_star"));
        fp.Gbar_star = from_nullable(doc.at("Gbar_star"));
        fp.Khat_star = vector(doc.at("Khat_star"), "Khat_star");
        fp.Kbar_star = vector(doc.at("Kbar_star"), "Kbar_star");
        for (const auto& p : doc.at("iterates")) fp.iterates.emplace_back(from_nullable(p.at(0)), from_nullable(p.at(1)));
        return fp;
    });
}

json to_json(const MvCalibration& cal) {
    json doc;
    doc["type"] = "mv";
    doc["lambda_star"] = cal.lambda_star;
    doc["x0"] = cal.x0;
    doc["xd"] = cal.xd;
    doc["initial_state"] = cal.initial_state + 1;
    doc["gamma"] = cal.gamma;
    doc["threshold"] = cal.threshold;
    doc["riccati"] = to_json(cal.riccati);
    return doc;
}

MvCalibration mv_from_json(const json& doc) {
    return guarded([&] {
        MvCalibration cal;
        cal.lambda_star = doc.at("lambda_star").get<double>();
        cal.x0 = doc.at("x0").get<double>();
        cal.xd = doc.at("xd").get<double>();
        cal.initial_state = doc.at("initial_state").get<std::size_t>() - 1;
        cal.gamma = doc.at("gamma").get<std::vector<double>>();
        cal.threshold = doc.at("threshold").get<std::vector<double>>();
        cal.riccati = riccati_from_json(doc.at("riccati"));
        return cal;
    });
}

json to_json(const ThresholdReport& r) {
    json doc;
    doc["type"] = "threshold";
    doc["classical_threshold"] = r.classical_threshold ? json(*r.classical_threshold) : json(nullptr);
    doc["EA2"] = r.EA2;
    doc["eta"] = r.eta;
    doc["K_max"] = r.K_max ? json(*r.K_max) : json(nullptr);
    doc["kset_bounded"] = r.kset_bounded;
    doc["sufficient_lhs"] = nullable(r.sufficient_lhs);
    doc["sufficient_holds"] = r.sufficient_holds;
    return doc;
}

json to_json(const ValidationReport& r) {
    json doc;
    doc["valid"] = r.ok();
    json v = json::array();
    for (const auto& e : r.violations) v.push_back({{"what", e.what}, {"detail", e.detail}, {"value", nullable(e.value)}});
    doc["violations"] = v;
    doc["kset_bounded"] = r.kset_bounded;
    return doc;
}

void write_iterates_csv(const std::filesystem::path& path, const FixedPoint& fp) {
    auto out = open_out(path);
    out << "i,Ghat,Gbar\n";
    for (std::size_t i = 0; i < fp.iterates.size(); ++i) {
        out << i << ',' << format_double(fp.iterates[i].first) << ',' << format_double(fp.iterates[i].second) << '\n';
    }
    finish(out, path);
}

void write_trajectories_csv(const std::filesystem::path& path, const SimulationResult& sim) {
    auto out = open_out(path);
    Eigen::Index n = 0;
    for (const auto& p : sim.u) {
        if (!p.empty()) {
            n = p.front().size();
            break;
        }
    }
    out << "path,t,x";
    for (Eigen::Index j = 0; j < n; ++j) out << ",u_" << j + 1;
    out << ",scenario\n";
    for (std::size_t p = 0; p < sim.x.size(); ++p) {
        for (std::size_t t = 0; t < sim.x[p].size(); ++t) {
            out << p << ',' << t << ',' << format_double(sim.x[p][t]);
            const bool has_u = t < sim.u[p].size();
            for (Eigen::Index j = 0; j < n; ++j) out << ',' << (has_u ? format_double(sim.u[p][t](j)) : "");
            out << ',';
            if (has_u) out << sim.scenario[p][t] + 1;
            out << '\n';
        }
    }
    finish(out, path);
}

void write_stats_csv(const std::filesystem::path& path, const SimulationResult& sim) {
    auto out = open_out(path);
    out << "t,mean_x2,stderr\n";
    for (std::size_t t = 0; t < sim.mean_x2.size(); ++t) {
        out << t << ',' << format_double(sim.mean_x2[t]) << ',' << format_double(sim.stderr_x2[t]) << '\n';
    }
    finish(out, path);
}

void write_frontier_csv(const std::filesystem::path& path, const std::vector<FrontierPoint>& points) {
    auto out = open_out(path);
    out << "x_d,lambda_star,mean_xT,var_xT,penalty,stderr\n";
    for (const auto& p : points) {
        out << format_double(p.xd) << ',' << format_double(p.lambda_star) << ',' << format_double(p.mean_xT) << ','
            << format_double(p.var_xT) << ',' << format_double(p.penalty) << ',' << format_double(p.penalty_stderr)
            << '\n';
    }
    finish(out, path);
}

} // namespace clq::io
