#include <doctest.h>

#include <algorithm>

#include "usecon/properties.hpp"
#include "support.hpp"

using namespace usecon;
using namespace usecon::testing;

namespace {

const EdgeMonitor& monitor_from(const std::vector<EdgeMonitor>& ms, UseStatus former) {
  auto it = std::find_if(ms.begin(), ms.end(), [&](const EdgeMonitor& m) { return m.former == former; });
  REQUIRE(it != ms.end());
  return *it;
}

bool has_goal(const std::vector<LeadsToGoal>& goals, StatusSet p, StatusSet q) {
  return std::any_of(goals.begin(), goals.end(), [&](const LeadsToGoal& g) { return g.source == p && g.target == q; });
}

}  // namespace

TEST_CASE("pre safety monitors") {
  auto ms = safety_monitors_for(ModelKind::pre);
  CHECK(ms.size() == 3);
  CHECK(monitor_from(ms, UseStatus::activated).forbidden == StatusSet{UseStatus::requested, UseStatus::denied});
  CHECK(monitor_from(ms, UseStatus::completed).forbidden == StatusSet::all_except(UseStatus::completed));
  CHECK(monitor_from(ms, UseStatus::denied).forbidden == StatusSet::all_except(UseStatus::denied));
  CHECK(monitor_from(ms, UseStatus::completed).name == "completed->requested|activated|denied|stopped");
}

TEST_CASE("ongoing safety monitors") {
  auto ms = safety_monitors_for(ModelKind::ongoing);
  CHECK(ms.size() == 3);
  CHECK(monitor_from(ms, UseStatus::activated).forbidden == StatusSet{UseStatus::requested});
  CHECK(monitor_from(ms, UseStatus::completed).forbidden.size() == 4);
  CHECK(monitor_from(ms, UseStatus::stopped).forbidden == StatusSet::all_except(UseStatus::stopped));
  CHECK_FALSE(monitor_from(ms, UseStatus::activated).forbidden.contains(UseStatus::activated));
}

TEST_CASE("monitors plus the allowed edges cover every status pair of the listed formers") {
  struct Allowed {
    ModelKind model;
    UseStatus former;
    StatusSet allowed;
  };
  for (const Allowed& a : {Allowed{ModelKind::pre, UseStatus::activated, {UseStatus::completed}},
                           Allowed{ModelKind::ongoing, UseStatus::activated,
                                   {UseStatus::activated, UseStatus::stopped, UseStatus::completed}},
                           Allowed{ModelKind::pre, UseStatus::completed, {UseStatus::completed}},
                           Allowed{ModelKind::pre, UseStatus::denied, {UseStatus::denied}},
                           Allowed{ModelKind::ongoing, UseStatus::stopped, {UseStatus::stopped}}}) {
    const auto& m = monitor_from(safety_monitors_for(a.model), a.former);
    for (int i = 0; i < kStatusCount; ++i) {
      auto s = static_cast<UseStatus>(i);
      // Statuses the model never uses, and the pre model's activated self-pair, are in neither list.
      UseStatus foreign = a.model == ModelKind::pre ? UseStatus::stopped : UseStatus::denied;
      if (s == foreign) continue;
      if (a.model == ModelKind::pre && a.former == UseStatus::activated && s == UseStatus::activated) continue;
      CHECK(m.forbidden.contains(s) != a.allowed.contains(s));
    }
  }
}

TEST_CASE("liveness goals") {
  auto pre = liveness_goals_for(ModelKind::pre);
  CHECK(pre.size() == 3);
  CHECK(has_goal(pre, {UseStatus::requested}, {UseStatus::activated, UseStatus::denied}));
  CHECK(has_goal(pre, {UseStatus::requested}, {UseStatus::completed, UseStatus::denied}));
  CHECK(has_goal(pre, {UseStatus::activated}, {UseStatus::completed}));

  auto ongoing = liveness_goals_for(ModelKind::ongoing, Fairness::none);
  CHECK(ongoing.size() == 3);
  CHECK(has_goal(ongoing, {UseStatus::requested}, {UseStatus::activated}));
  CHECK(has_goal(ongoing, {UseStatus::requested}, {UseStatus::completed, UseStatus::stopped}));
  CHECK(has_goal(ongoing, {UseStatus::activated}, {UseStatus::completed, UseStatus::stopped}));
  for (const auto& g : ongoing) CHECK(g.fairness == Fairness::none);

  for (auto model : {ModelKind::pre, ModelKind::ongoing})
    for (const auto& g : liveness_goals_for(model)) CHECK_FALSE(g.target.contains(UseStatus::requested));
}

TEST_CASE("standard invariants") {
  SystemSpec spec = uniform_system(ModelKind::ongoing, 1, 1, 2);
  spec.domains["att"] = {0, 1};
  auto cfg = build_system(std::move(spec));
  auto inv = standard_invariants(cfg);
  REQUIRE(inv.size() == 2);
  CHECK(inv[0].name == "TypeCorrectness");
  CHECK(inv[1].name == "KeyUniqueness");
  CHECK_FALSE(inv[0].holds(world_of({Use{key(1), UseStatus::requested, {{"att", 5}}}})));
  CHECK(inv[0].holds(world_of({Use{key(1), UseStatus::requested, {{"att", 1}}}})));

  for (int n = 1; n <= 3; ++n) {
    auto c = uniform(ModelKind::pre, n, "activated-lt-1");
    auto ex = explore_graph(c, {});
    for (StateId id = 0; id < ex.graph->size(); ++id) CHECK(standard_invariants(c)[1].holds(ex.graph->world(id)));
  }
}

TEST_CASE("full packs pass on the standard models") {
  for (auto model : {ModelKind::pre, ModelKind::ongoing})
    for (const char* policy : {"true", "false", "activated-lt-2"})
      for (int n = 1; n <= 4; ++n) {
        CAPTURE(std::string(policy));
        CAPTURE(n);
        auto cfg = uniform(model, n, policy);
        auto pack = property_pack(cfg);
        auto ex = explore(cfg, Checks{true, pack.invariants, pack.monitors, pack.liveness}, ExploreOptions{2});
        CHECK(ex.result.violations.empty());
      }
}
