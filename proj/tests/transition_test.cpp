#include <doctest.h>

#include <deque>
#include <map>
#include <random>
#include <set>

#include "support.hpp"

using namespace usecon;
using namespace usecon::testing;

namespace {

// Steps needed to bring a use from absent to its status.
int stage(const World& w, const UseKey& k) {
  const Use* u = w.find(k);
  if (!u) return 0;
  switch (u->st) {
    case UseStatus::requested: return 1;
    case UseStatus::activated:
    case UseStatus::denied: return 2;
    default: return 3;
  }
}

int stage_sum(const World& w, const SystemConfig& cfg) {
  int total = 0;
  for (const auto& k : cfg.candidates()) total += stage(w, k);
  return total;
}

// Every reachable world of a small config, by plain BFS over successors().
std::vector<World> reachable(const SystemConfig& cfg) {
  std::vector<World> out;
  std::set<StateKey> seen;
  std::deque<World> queue{initial_world()};
  seen.insert(canonical_encode(queue.front(), cfg));
  while (!queue.empty()) {
    World w = queue.front();
    queue.pop_front();
    out.push_back(w);
    for (auto& s : successors(w, cfg))
      if (seen.insert(canonical_encode(s.post, cfg)).second) queue.push_back(s.post);
  }
  return out;
}

}  // namespace

TEST_CASE("Request creates a requested use") {
  auto cfg = uniform(ModelKind::pre, 1);
  Step s = step_request(initial_world(), key(1), cfg);
  CHECK(s.label == ActionLabel{ActionKind::request, key(1), std::nullopt});
  REQUIRE(s.post.uses.size() == 1);
  CHECK(s.post.uses[0] == use(1, UseStatus::requested));
  CHECK(s.post.tick == 1);
  CHECK_FALSE(s.stutter);
}

TEST_CASE("Request sets declared attributes to their initial value") {
  SystemSpec spec = uniform_system(ModelKind::pre, 1, 1, 1);
  spec.domains["att"] = {2, 0, 1};
  auto cfg = build_system(std::move(spec));
  Step s = step_request(initial_world(), key(1), cfg);
  CHECK(s.post.uses[0].attrs.at("att") == AttributeValue(2));
}

TEST_CASE("Request is guarded by key absence") {
  auto cfg = uniform(ModelKind::pre, 2);
  for (auto st : {UseStatus::requested, UseStatus::activated, UseStatus::denied, UseStatus::completed}) {
    World w = world_of({use(1, st)});
    CHECK_THROWS_AS(step_request(w, key(1), cfg), AlreadyRequested);
  }
}

TEST_CASE("two candidates give two Requests from Init") {
  auto cfg = uniform(ModelKind::pre, 2);
  auto steps = successors(initial_world(), cfg);
  REQUIRE(steps.size() == 2);
  CHECK(steps[0].label.kind == ActionKind::request);
  CHECK(steps[0].label.key == key(1));
  CHECK(steps[1].label.key == key(2));
}

TEST_CASE("preEvaluate follows the policy") {
  World w = world_of({use(1, UseStatus::requested)});
  Step permit = step_pre_evaluate(w, key(1), uniform(ModelKind::pre, 1, "true"));
  CHECK(permit.post.find(key(1))->st == UseStatus::activated);
  CHECK(permit.label.outcome == Outcome::permitted);
  Step deny = step_pre_evaluate(w, key(1), uniform(ModelKind::pre, 1, "false"));
  CHECK(deny.post.find(key(1))->st == UseStatus::denied);
  CHECK(deny.label.outcome == Outcome::denied);
}

TEST_CASE("preEvaluate with a usage count limit") {
  auto cfg = uniform(ModelKind::pre, 2, "(< (aggregate count uses (= (attr x st) \"activated\")) 1)");
  World w = world_of({use(1, UseStatus::activated), use(2, UseStatus::requested)});
  Step s = step_pre_evaluate(w, key(2), cfg);
  CHECK(s.post.find(key(2))->st == UseStatus::denied);
  CHECK(s.post.find(key(1))->st == UseStatus::activated);
  World alone = world_of({use(2, UseStatus::requested)});
  CHECK(step_pre_evaluate(alone, key(2), cfg).post.find(key(2))->st == UseStatus::activated);
}

TEST_CASE("empty selection denies with a diagnostic") {
  SystemSpec spec = uniform_system(ModelKind::pre, 1, 1, 1);
  spec.subjects[0].attrs["tier"] = 1;
  spec.policy = parse_policy("(= (choose (> (attr x tier) 5)) @s1)");
  auto cfg = build_system(std::move(spec));
  Step s = step_pre_evaluate(world_of({use(1, UseStatus::requested)}), key(1), cfg);
  CHECK(s.post.find(key(1))->st == UseStatus::denied);
  REQUIRE(s.diagnostic.has_value());
  CHECK(s.diagnostic->code == EvalError::Code::select_empty);
}

TEST_CASE("Activate only in the ongoing model and only from requested") {
  World w = world_of({use(1, UseStatus::requested)});
  auto ongoing = uniform(ModelKind::ongoing, 1, "false");
  Step s = step_activate(w, key(1), ongoing);
  CHECK(s.post.find(key(1))->st == UseStatus::activated);
  CHECK_THROWS_AS(step_activate(w, key(1), uniform(ModelKind::pre, 1)), NotEnabled);
  CHECK_THROWS_AS(step_activate(world_of({use(1, UseStatus::activated)}), key(1), ongoing), NotEnabled);
  for (const auto& step : successors(w, uniform(ModelKind::pre, 1))) CHECK(step.label.kind != ActionKind::activate);
}

TEST_CASE("onEvaluate keeps or stops the use") {
  World w = world_of({use(1, UseStatus::activated)}, 5);
  Step keep = step_on_evaluate(w, key(1), uniform(ModelKind::ongoing, 1, "true"));
  CHECK(keep.stutter);
  CHECK(keep.post == w);
  CHECK(keep.label.outcome == Outcome::unchanged);
  Step stop = step_on_evaluate(w, key(1), uniform(ModelKind::ongoing, 1, "false"));
  CHECK(stop.post.find(key(1))->st == UseStatus::stopped);
  CHECK(stop.label.outcome == Outcome::stopped);
  CHECK(stop.post.tick == 6);
  CHECK_THROWS_AS(step_on_evaluate(w, key(1), uniform(ModelKind::pre, 1)), NotEnabled);
}

TEST_CASE("onEvaluate surfaces out-of-domain updates") {
  SystemSpec spec = uniform_system(ModelKind::ongoing, 1, 1, 1);
  spec.domains["att"] = {0, 1, 2};
  spec.updates[UpdateProc::on] = UpdateSpec{UseStatus::activated, {{"att", parse_term("(+ (attr use att) 1)")}}};
  auto cfg = build_system(std::move(spec));
  World w = world_of({Use{key(1), UseStatus::activated, {{"att", 2}}}});
  CHECK_THROWS_AS(step_on_evaluate(w, key(1), cfg), DomainViolation);
  Step raw = step_unchecked(w, ActionKind::on_evaluate, key(1), cfg);
  REQUIRE(raw.domain_violation.has_value());
  CHECK(raw.domain_violation->first == "att");
  CHECK(raw.post.find(key(1))->attrs.at("att") == AttributeValue(3));

  World ok = world_of({Use{key(1), UseStatus::activated, {{"att", 1}}}});
  Step bumped = step_on_evaluate(ok, key(1), cfg);
  CHECK_FALSE(bumped.stutter);
  CHECK(bumped.post.find(key(1))->attrs.at("att") == AttributeValue(2));
}

TEST_CASE("Complete") {
  auto cfg = uniform(ModelKind::pre, 3);
  CHECK(step_complete(world_of({use(1, UseStatus::activated)}), key(1), cfg).post.find(key(1))->st ==
        UseStatus::completed);
  CHECK_THROWS_AS(step_complete(world_of({use(1, UseStatus::requested)}), key(1), cfg), NotEnabled);
  CHECK_THROWS_AS(step_complete(initial_world(), key(1), cfg), NotEnabled);

  World three = world_of({use(1, UseStatus::activated), use(2, UseStatus::activated), use(3, UseStatus::activated)});
  int completes = 0;
  for (const auto& s : successors(three, cfg)) completes += s.label.kind == ActionKind::complete;
  CHECK(completes == 3);
}

TEST_CASE("finished worlds have no successors") {
  auto cfg = uniform(ModelKind::pre, 2);
  CHECK(successors(world_of({use(1, UseStatus::completed), use(2, UseStatus::denied)}), cfg).empty());
  auto ongoing = uniform(ModelKind::ongoing, 2);
  CHECK(successors(world_of({use(1, UseStatus::stopped), use(2, UseStatus::completed)}), ongoing).empty());
}

TEST_CASE("one activated ongoing use: self-loop then Complete") {
  auto cfg = uniform(ModelKind::ongoing, 1);
  World w = world_of({use(1, UseStatus::activated)});
  auto steps = successors(w, cfg);
  REQUIRE(steps.size() == 2);
  CHECK(steps[0].label == ActionLabel{ActionKind::on_evaluate, key(1), Outcome::unchanged});
  CHECK(steps[0].post == w);
  CHECK(steps[1].label == ActionLabel{ActionKind::complete, key(1), std::nullopt});
}

TEST_CASE("successor order is canonical and repeatable") {
  auto cfg = uniform(ModelKind::ongoing, 3);
  World w = world_of({use(3, UseStatus::activated), use(1, UseStatus::requested)});
  auto steps = successors(w, cfg);
  std::vector<std::string> labels;
  for (const auto& s : steps) labels.push_back(s.label.to_string());
  CHECK(labels == std::vector<std::string>{"Request:s1,a1,o2", "Activate:s1,a1,o1", "onEvaluate:s1,a1,o3:unchanged",
                                           "Complete:s1,a1,o3"});
  CHECK(successors(w, cfg).size() == steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) CHECK(successors(w, cfg)[i].post == steps[i].post);
}

TEST_CASE("labels print and parse") {
  for (const char* text : {"Request:s1,a1,o1", "preEvaluate:s1,a1,o2:denied", "onEvaluate:s,a,o:unchanged"}) {
    auto l = ActionLabel::parse(text);
    REQUIRE(l.has_value());
    CHECK(l->to_string() == text);
  }
  CHECK_FALSE(ActionLabel::parse("jump:s1,a1,o1").has_value());
  CHECK_FALSE(ActionLabel::parse("Request:s1,a1").has_value());
}

TEST_CASE("steps respect guards, frame, status order and grading") {
  const std::map<UseStatus, std::set<UseStatus>> pre_edges = {
      {UseStatus::requested, {UseStatus::activated, UseStatus::denied}},
      {UseStatus::activated, {UseStatus::completed}}};
  const std::map<UseStatus, std::set<UseStatus>> ongoing_edges = {
      {UseStatus::requested, {UseStatus::activated}},
      {UseStatus::activated, {UseStatus::activated, UseStatus::stopped, UseStatus::completed}}};

  for (auto model : {ModelKind::pre, ModelKind::ongoing})
    for (const char* policy : {"true", "false", "activated-lt-1", "completed-lt-2", "id-parity"}) {
      CAPTURE(std::string(to_string(model)));
      CAPTURE(std::string(policy));
      auto cfg = uniform(model, 3, policy);
      const auto& edges = model == ModelKind::pre ? pre_edges : ongoing_edges;
      for (const World& w : reachable(cfg)) {
        CHECK(key_uniqueness(w));
        CHECK(type_correctness(w, cfg));
        for (const Step& s : successors(w, cfg)) {
          const Use* before = w.find(s.label.key);
          const Use* after = s.post.find(s.label.key);
          REQUIRE(after != nullptr);
          if (s.label.kind == ActionKind::request) {
            CHECK(before == nullptr);
          } else {
            REQUIRE(before != nullptr);
            UseStatus needed = (s.label.kind == ActionKind::pre_evaluate || s.label.kind == ActionKind::activate)
                                   ? UseStatus::requested
                                   : UseStatus::activated;
            CHECK(before->st == needed);
            CHECK(edges.at(before->st).count(after->st) == 1);
          }
          // Frame: every other use is untouched.
          std::size_t changed = 0;
          for (const auto& k : cfg.candidates()) {
            const Use* a = w.find(k);
            const Use* b = s.post.find(k);
            if ((a == nullptr) != (b == nullptr) || (a && *a != *b)) ++changed;
          }
          CHECK(changed <= 1);
          if (s.stutter) {
            CHECK(s.post == w);
          } else {
            CHECK(stage_sum(s.post, cfg) == stage_sum(w, cfg) + 1);
          }
        }
      }
    }
}

TEST_CASE("enabled kinds per status") {
  CHECK(enabled_kinds(UseStatus::requested, ModelKind::pre) == std::vector<ActionKind>{ActionKind::pre_evaluate});
  CHECK(enabled_kinds(UseStatus::activated, ModelKind::pre) == std::vector<ActionKind>{ActionKind::complete});
  CHECK(enabled_kinds(UseStatus::requested, ModelKind::ongoing) == std::vector<ActionKind>{ActionKind::activate});
  CHECK(enabled_kinds(UseStatus::activated, ModelKind::ongoing) ==
        std::vector<ActionKind>{ActionKind::on_evaluate, ActionKind::complete});
  CHECK(enabled_kinds(UseStatus::denied, ModelKind::pre).empty());
  CHECK(enabled_kinds(UseStatus::stopped, ModelKind::ongoing).empty());
}
