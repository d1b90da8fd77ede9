#pragma once

#include "zonalclear/bbtree.hpp"
#include "zonalclear/ibcqp.hpp"
#include "zonalclear/ieqlp.hpp"
#include "zonalclear/ieqp.hpp"

#include <string>

namespace zc {

enum class Mechanism { swm, cm };
enum class CmAlgorithm { ieqlp, ieqp, bbtree, ibcqp };

const char* to_string(Mechanism m);
const char* to_string(CmAlgorithm a);
/// Throws std::invalid_argument on an unknown name.
Mechanism mechanism_from_string(const std::string& s);
CmAlgorithm algorithm_from_string(const std::string& s);

struct ClearOptions {
  Mechanism mechanism = Mechanism::cm;
  CmAlgorithm algorithm = CmAlgorithm::ibcqp;
  IeqlpSettings ieqlp;
  IeqpSettings ieqp;
  BBTreeSettings bbtree;
  IbcqpSettings ibcqp;
  Settings settings;
};

/// Clears with the chosen mechanism. CM algorithms other than ib-CQP work
/// on the SWM-based active-set estimate.
ClearingOutcome clear(const MarketInstance& inst, const ClearOptions& opts = {});

}  // namespace zc
