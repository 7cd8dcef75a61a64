#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "clq/mv.hpp"

namespace clq::io {

using json = nlohmann::json;

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& doc);

/// Problem documents. Markov states are numbered from 1 in files.
ProblemSpec parse_problem(const json& doc);
ProblemSpec load_problem(const std::filesystem::path& path);

/// Market documents: the problem schema plus riskfree, xd, initial_state.
MarketSpec parse_market(const json& doc);
MarketSpec load_market(const std::filesystem::path& path);

json to_json(const RiccatiSolution& sol);
RiccatiSolution riccati_from_json(const json& doc);

json to_json(const FixedPoint& fp);
FixedPoint fixed_point_from_json(const json& doc);

json to_json(const MvCalibration& cal);
MvCalibration mv_from_json(const json& doc);

json to_json(const ThresholdReport& r);
json to_json(const ValidationReport& r);

/// i, Ghat, Gbar
void write_iterates_csv(const std::filesystem::path& path, const FixedPoint& fp);
/// path, t, x, u_1..u_n, scenario (scenario numbered from 1; empty on the last row)
void write_trajectories_csv(const std::filesystem::path& path, const SimulationResult& sim);
/// t, mean_x2, stderr
void write_stats_csv(const std::filesystem::path& path, const SimulationResult& sim);
/// x_d, lambda_star, mean_xT, var_xT, penalty, stderr
void write_frontier_csv(const std::filesystem::path& path, const std::vector<FrontierPoint>& points);

} // namespace clq::io
