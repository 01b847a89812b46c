#include <doctest.h>

#include <sstream>

#include "usecon/properties.hpp"
#include "usecon/report.hpp"
#include "support.hpp"

using namespace usecon;
using namespace usecon::testing;

namespace {

RunReport sample_report() {
  auto cfg = uniform(ModelKind::ongoing, 1);
  auto ex = explore(cfg, Checks{true, standard_invariants(cfg), safety_monitors_for(cfg.model()),
                                liveness_goals_for(cfg.model(), Fairness::none)});
  ex.result.diagnostics.push_back("choose matched no entity");
  ConfigEcho echo{"ongoing", 1, 1, 1, 1, "true", "", {"deadlock", "liveness"}, "none", 3, 1000, false};
  return make_report(echo, ex.result, *CheckSelection::parse("deadlock,liveness"), Statistics{4, 5, 4});
}

}  // namespace

TEST_CASE("check selections") {
  auto all = CheckSelection::parse("all");
  REQUIRE(all);
  CHECK(all->names() == std::vector<std::string>{"deadlock", "typecorrectness", "safety", "liveness"});
  auto some = CheckSelection::parse("safety,deadlock");
  REQUIRE(some);
  CHECK(some->names() == std::vector<std::string>{"deadlock", "safety"});
  CHECK_FALSE(CheckSelection::parse("speed").has_value());
  CHECK_FALSE(CheckSelection::parse("").has_value());
}

TEST_CASE("statistics triples") {
  CHECK(Statistics::parse("7,33,16") == Statistics{7, 33, 16});
  CHECK_FALSE(Statistics::parse("7,33").has_value());
  CHECK_FALSE(Statistics::parse("a,b,c").has_value());
}

TEST_CASE("reports round-trip through JSON") {
  RunReport r = sample_report();
  REQUIRE_FALSE(r.result.violations.empty());
  CHECK(r.result.violations[0].witness.cycle_start.has_value());
  RunReport back = parse_report(emit_json(r));
  CHECK(back == r);
  CHECK(emit_json(back) == emit_json(r));
  CHECK_THROWS(parse_report("{\"config\": 3}"));
  CHECK_THROWS(parse_report("not json"));
}

TEST_CASE("verdicts, comparison and exit code") {
  RunReport r = sample_report();
  REQUIRE(r.verdicts.size() == 2);
  CHECK(r.verdicts[0] == CheckVerdict{"deadlock", true});
  CHECK(r.verdicts[1] == CheckVerdict{"liveness", false});
  REQUIRE(r.comparison);
  CHECK(r.comparison->diameter);
  CHECK(r.comparison->states_found);
  CHECK(r.comparison->distinct_states);
  CHECK(r.exit_code() == 1);

  r.result.violations.clear();
  CHECK(r.exit_code() == 0);
  r.result.deadlocks.push_back(Deadlock{StateKey{}, "{}", DeadlockClass::unexpected});
  CHECK(r.exit_code() == 1);
  r.result.deadlocks.pop_back();
  r.result.partial = true;
  CHECK(r.exit_code() == 1);
}

TEST_CASE("text report shows the lasso") {
  RunReport r = sample_report();
  std::ostringstream out;
  print_text(r, out);
  auto text = out.str();
  CHECK(text.find("diameter         4") != std::string::npos);
  CHECK(text.find("onEvaluate:s1,a1,o1:unchanged") != std::string::npos);
  CHECK(text.find("check liveness") != std::string::npos);
}

TEST_CASE("published table") {
  const auto& rows = published_rows();
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].model == ModelKind::pre);
  CHECK(rows[0].stats == Statistics{6, 21, 12});
  CHECK(rows[1].stats == Statistics{23, 277969, 16832});
  CHECK(rows[2].stats == Statistics{31, 45533665, 560128});
  CHECK(rows[3].model == ModelKind::ongoing);
  CHECK(rows[3].stats == Statistics{7, 33, 16});
  CHECK(rows[4].stats == Statistics{25, 367873, 23808});
  CHECK(rows[5].stats == Statistics{37, 79112449, 1224704});
}

TEST_CASE("table rows are measured and compared") {
  auto rows = reproduce_table2({ModelKind::pre, ModelKind::ongoing}, {2, 8}, "true", ExploreOptions{2});
  REQUIRE(rows.size() == 4);
  const auto& pre2 = rows[0];
  REQUIRE(pre2.measured);
  CHECK(*pre2.measured == Statistics{7, 25, 16});
  CHECK_FALSE(pre2.matches_diameter());
  const auto& on2 = rows[2];
  CHECK(on2.published.uses == 2);
  CHECK(on2.matches_diameter());
  CHECK(on2.matches_found());
  CHECK(on2.matches_distinct());
  const auto& on8 = rows[3];
  CHECK(on8.matches_diameter());
  CHECK_FALSE(on8.matches_found());
  CHECK_FALSE(on8.matches_distinct());
  CHECK(on8.measured->distinct_states == 65536);
}

TEST_CASE("policy sweep ranking") {
  CHECK(sweep_policies(ModelKind::pre, 2, {}, Statistics{6, 21, 12}, {}).empty());

  auto own_cfg = uniform(ModelKind::pre, 2, "activated-lt-1");
  auto own = explore_graph(own_cfg, {});
  Statistics target{own.result.diameter, own.result.states_found, own.result.distinct_states};
  auto ranked = sweep_policies(ModelKind::pre, 2, builtin_policy_names(2), target, {});
  REQUIRE(ranked.size() == builtin_policy_names(2).size());
  CHECK(ranked[0].policy == "activated-lt-1");
  CHECK(ranked[0].distance == 0);
  for (std::size_t i = 1; i < ranked.size(); ++i) CHECK(ranked[i - 1].distance <= ranked[i].distance);

  // Equal distances keep candidate order.
  auto ties = sweep_policies(ModelKind::pre, 2, {"completed-lt-2", "true"}, Statistics{7, 25, 16}, {});
  REQUIRE(ties.size() == 2);
  CHECK(ties[0].policy == "completed-lt-2");
  CHECK(ties[0].distance == 0);
  CHECK(ties[1].distance == 0);
}

TEST_CASE("built-in policies") {
  for (int objects : {0, 3})
    for (const auto& name : builtin_policy_names(3)) {
      CAPTURE(objects);
      CAPTURE(name);
      SystemSpec spec = uniform_system(ModelKind::pre, 1, 1, objects);
      CHECK(apply_builtin_policy(spec, name));
      CHECK_NOTHROW(build_system(std::move(spec)));
    }
  SystemSpec spec = uniform_system(ModelKind::pre, 1, 1, 3);
  CHECK_FALSE(apply_builtin_policy(spec, "activated-lt-x"));
  CHECK_FALSE(apply_builtin_policy(spec, "maybe"));
  CHECK(builtin_policy_names(2) == std::vector<std::string>{"true", "false", "id-parity", "activated-lt-1",
                                                            "activated-lt-2", "completed-lt-1", "completed-lt-2"});
}

TEST_CASE("system descriptions") {
  auto spec = read_description(std::string(USECON_TEST_DATA) + "/swimming_club.sys");
  CHECK(spec.subjects.size() == 4);
  CHECK(spec.subjects[0].attrs.at("guardian") == AttributeValue::identity("f1"));
  CHECK(spec.subjects[2].attrs.at("membership") == AttributeValue::token("premium"));
  CHECK(spec.objects[0].attrs.at("capacity") == AttributeValue(2));
  CHECK(spec.domains.at("allowedtime").size() == 9);
  CHECK(spec.model == ModelKind::pre);
  REQUIRE(spec.updates.count(UpdateProc::pre));
  CHECK(spec.updates.at(UpdateProc::pre).target == UseStatus::activated);
  auto cfg = build_system(std::move(spec));
  CHECK(cfg.tick_dependent());
  CHECK(cfg.candidates().size() == 4);

  auto tokens = parse_description("[entities]\nsubject s1\naction a1\nobject o1\n[domains]\nlevel = {low, \"high\"}\n");
  CHECK(tokens.domains.at("level") == Domain{AttributeValue::token("low"), AttributeValue::token("high")});

  auto line_of = [](const char* text) -> std::size_t {
    try {
      parse_description(text);
    } catch (const DescriptionError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of("[entities]\nsubject s1\nrobot r1\n") == 3);
  CHECK(line_of("[colors]\n") == 1);
  CHECK(line_of("subject s1\n") == 1);
  CHECK(line_of("[domains]\natt = {3..1}\n") == 2);
  CHECK(line_of("[model]\nhybrid\n") == 2);
  CHECK(line_of("[updates]\nfooUpdate: st=activated\n") == 2);
  CHECK(line_of("[updates]\npreUpdate: st=paused\n") == 2);
  CHECK(line_of("\n\n[policy]\n(and true\n") == 4);
  CHECK_THROWS_AS(read_description("/nonexistent/system.sys"), Error);
}
