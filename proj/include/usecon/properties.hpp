#pragma once

#include <vector>

#include "usecon/explorer.hpp"
#include "usecon/model.hpp"

namespace usecon {

struct PropertyPack {
  std::vector<StatePredicate> invariants;
  std::vector<EdgeMonitor> monitors;
  std::vector<LeadsToGoal> liveness;
};

/// Forbidden single-step status changes for the given model.
std::vector<EdgeMonitor> safety_monitors_for(ModelKind model);

std::vector<LeadsToGoal> liveness_goals_for(ModelKind model, Fairness fairness = Fairness::weak);

/// TypeCorrectness and KeyUniqueness. The predicates refer to `config`, which
/// must outlive them.
std::vector<StatePredicate> standard_invariants(const SystemConfig& config);

PropertyPack property_pack(const SystemConfig& config, Fairness fairness = Fairness::weak);

}  // namespace usecon
