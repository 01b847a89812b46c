#include "usecon/properties.hpp"

namespace usecon {

namespace {

EdgeMonitor monitor(UseStatus former, StatusSet forbidden) {
  return EdgeMonitor{std::string(to_string(former)) + "->" + forbidden.to_string(), former, forbidden};
}

LeadsToGoal goal(StatusSet source, StatusSet target, Fairness fairness) {
  return LeadsToGoal{source.to_string() + "~>" + target.to_string(), source, target, fairness};
}

}  // namespace

std::vector<EdgeMonitor> safety_monitors_for(ModelKind model) {
  using S = UseStatus;
  if (model == ModelKind::pre)
    return {monitor(S::completed, StatusSet::all_except(S::completed)),
            monitor(S::activated, {S::requested, S::denied}),
            monitor(S::denied, StatusSet::all_except(S::denied))};
  return {monitor(S::completed, StatusSet::all_except(S::completed)),
          monitor(S::activated, {S::requested}),
          monitor(S::stopped, StatusSet::all_except(S::stopped))};
}

std::vector<LeadsToGoal> liveness_goals_for(ModelKind model, Fairness fairness) {
  using S = UseStatus;
  if (model == ModelKind::pre)
    return {goal({S::requested}, {S::activated, S::denied}, fairness),
            goal({S::requested}, {S::completed, S::denied}, fairness),
            goal({S::activated}, {S::completed}, fairness)};
  return {goal({S::requested}, {S::activated}, fairness),
          goal({S::requested}, {S::completed, S::stopped}, fairness),
          goal({S::activated}, {S::completed, S::stopped}, fairness)};
}

std::vector<StatePredicate> standard_invariants(const SystemConfig& config) {
  const SystemConfig* c = &config;
  return {StatePredicate{"TypeCorrectness", [c](const World& w) { return type_correctness(w, *c); }},
          StatePredicate{"KeyUniqueness", [](const World& w) { return key_uniqueness(w); }}};
}

PropertyPack property_pack(const SystemConfig& config, Fairness fairness) {
  return PropertyPack{standard_invariants(config), safety_monitors_for(config.model()),
                      liveness_goals_for(config.model(), fairness)};
}

}  // namespace usecon
