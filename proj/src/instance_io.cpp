#include "zonalclear/instance_io.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace zc {

using nlohmann::json;

namespace {

Vector to_vector(const json& arr) {
  Vector v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) v(static_cast<Eigen::Index>(i)) = arr.at(i).get<double>();
  return v;
}

json from_vector(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

}  // namespace

MarketInstance instance_from_json(const json& j) {
  MarketInstance inst;
  inst.zones = j.at("zones").get<std::vector<std::string>>();
  inst.demand = to_vector(j.at("demand"));
  for (const auto& pj : j.at("players")) {
    PlayerOrder p;
    p.id = pj.at("id").get<std::string>();
    const auto zone = pj.at("zone").get<long long>();
    if (zone < 0) throw std::invalid_argument("player " + p.id + ": negative zone index");
    p.zone = static_cast<std::size_t>(zone);
    p.m = pj.at("m").get<double>();
    p.a = pj.at("a").get<double>();
    p.Q = pj.at("Q").get<double>();
    inst.players.push_back(std::move(p));
  }
  const auto& pj = j.at("polytope");
  const auto& rows = pj.at("M");
  inst.polytope.b = to_vector(pj.at("b"));
  inst.polytope.M = Matrix::Zero(static_cast<Eigen::Index>(rows.size()),
                                 static_cast<Eigen::Index>(inst.zones.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != inst.zones.size())
      throw std::invalid_argument("polytope row " + std::to_string(r) + " has wrong length");
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      inst.polytope.M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c].get<double>();
  }
  return inst;
}

json instance_to_json(const MarketInstance& inst) {
  json j;
  j["zones"] = inst.zones;
  j["demand"] = from_vector(inst.demand);
  j["players"] = json::array();
  for (const auto& p : inst.players)
    j["players"].push_back({{"id", p.id}, {"zone", p.zone}, {"m", p.m}, {"a", p.a}, {"Q", p.Q}});
  json rows = json::array();
  for (Eigen::Index r = 0; r < inst.polytope.M.rows(); ++r)
    rows.push_back(from_vector(inst.polytope.M.row(r).transpose()));
  j["polytope"] = {{"M", rows}, {"b", from_vector(inst.polytope.b)}};
  return j;
}

MarketInstance read_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return instance_from_json(json::parse(in));
}

void write_instance(const MarketInstance& inst, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << instance_to_json(inst).dump(2) << '\n';
}

std::vector<MarketInstance> read_instance_series(const std::filesystem::path& path) {
  std::vector<MarketInstance> out;
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(path))
      if (entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) out.push_back(read_instance(f));
    return out;
  }
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  const json j = json::parse(in);
  if (!j.is_array()) throw std::invalid_argument("series file must hold a JSON array of instances");
  for (const auto& e : j) out.push_back(instance_from_json(e));
  return out;
}

json outcome_to_json(const MarketInstance& inst, const ClearingOutcome& out) {
  json j;
  j["x"] = from_vector(out.x);
  j["y"] = from_vector(out.y);
  j["v"] = from_vector(out.v);
  j["total_cost"] = out.total_cost;
  j["objective"] = out.objective;
  json zones = json::array();
  for (std::size_t z = 0; z < out.sets.size(); ++z) {
    json zj;
    zj["zone"] = z < inst.zones.size() ? inst.zones[z] : std::to_string(z);
    zj["inactive"] = out.sets[z].inactive;
    zj["marginal"] = out.sets[z].marginal;
    zj["full"] = out.sets[z].full;
    zj["empty"] = z < out.empty_zone.size() ? static_cast<bool>(out.empty_zone[z]) : false;
    zones.push_back(zj);
  }
  j["zones"] = zones;
  j["diagnostics"] = {{"algorithm", out.diag.algorithm},
                      {"iterations", out.diag.iterations},
                      {"solve_ms", out.diag.solve_ms},
                      {"indicator", out.diag.indicator},
                      {"status", to_string(out.diag.status)}};
  return j;
}

}  // namespace zc
