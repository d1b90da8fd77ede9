#include "zonalclear/clearing.hpp"

#include "zonalclear/swm.hpp"

#include <stdexcept>

namespace zc {

const char* to_string(Mechanism m) { return m == Mechanism::swm ? "swm" : "cm"; }

const char* to_string(CmAlgorithm a) {
  switch (a) {
    case CmAlgorithm::ieqlp: return "ieqlp";
    case CmAlgorithm::ieqp: return "ieqp";
    case CmAlgorithm::bbtree: return "bbtree";
    case CmAlgorithm::ibcqp: return "ibcqp";
  }
  return "?";
}

Mechanism mechanism_from_string(const std::string& s) {
  if (s == "swm") return Mechanism::swm;
  if (s == "cm") return Mechanism::cm;
  throw std::invalid_argument("unknown mechanism '" + s + "'");
}

CmAlgorithm algorithm_from_string(const std::string& s) {
  for (CmAlgorithm a : {CmAlgorithm::ieqlp, CmAlgorithm::ieqp, CmAlgorithm::bbtree, CmAlgorithm::ibcqp})
    if (s == to_string(a)) return a;
  throw std::invalid_argument("unknown algorithm '" + s + "'");
}

ClearingOutcome clear(const MarketInstance& inst, const ClearOptions& opts) {
  if (opts.mechanism == Mechanism::swm) return clear_swm(inst, opts.settings);
  if (opts.algorithm == CmAlgorithm::ibcqp) return run_ibcqp(inst, opts.ibcqp, opts.settings);
  const ActiveEstimate est = estimate_active_set(inst, opts.settings);
  switch (opts.algorithm) {
    case CmAlgorithm::ieqlp: return run_ieqlp(inst, est, opts.ieqlp, opts.settings);
    case CmAlgorithm::ieqp: return run_ieqp_wr(inst, est, opts.ieqp, opts.settings);
    case CmAlgorithm::bbtree: return run_bbtree(inst, est, opts.bbtree, opts.settings).outcome;
    case CmAlgorithm::ibcqp: break;
  }
  throw std::logic_error("clear: unreachable");
}

}  // namespace zc
