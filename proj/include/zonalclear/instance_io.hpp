#pragma once

#include "zonalclear/market.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace zc {

/// Instance schema:
/// {"zones":[string], "demand":[number],
///  "players":[{"id":string,"zone":int,"m":number,"a":number,"Q":number}],
///  "polytope":{"M":[[number]],"b":[number]}}
MarketInstance instance_from_json(const nlohmann::json& j);
nlohmann::json instance_to_json(const MarketInstance& inst);

MarketInstance read_instance(const std::filesystem::path& path);
void write_instance(const MarketInstance& inst, const std::filesystem::path& path);

/// Either a single JSON array of instances, or a directory of per-step
/// JSON files read in lexicographic filename order.
std::vector<MarketInstance> read_instance_series(const std::filesystem::path& path);

nlohmann::json outcome_to_json(const MarketInstance& inst, const ClearingOutcome& out);

}  // namespace zc
