#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "usecon/description.hpp"
#include "usecon/policy.hpp"
#include "usecon/properties.hpp"
#include "usecon/report.hpp"

namespace usecon {

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

struct CommonArgs {
  int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::uint64_t memory_limit = 50'000'000;
  bool fingerprints = false;
  std::string output = "text";

  void attach(CLI::App& app) {
    app.add_option("--workers", workers, "Exploration threads")->check(CLI::PositiveNumber);
    app.add_option("--memory-limit", memory_limit, "Maximum number of distinct states")->check(CLI::PositiveNumber);
    app.add_flag("--fingerprints", fingerprints, "Deduplicate by 64-bit fingerprints (approximate)");
    app.add_option("--output", output, "Report format")->check(CLI::IsMember({"text", "json"}));
  }

  ExploreOptions explore_options() const { return ExploreOptions{workers, memory_limit, fingerprints}; }
};

struct CheckArgs {
  std::string model = "pre";
  int uses = 0;
  int subjects = 0;
  int actions = 0;
  int objects = 0;
  std::string policy = "true";
  std::string system;
  std::string checks = "all";
  std::string fairness = "weak";
  std::string emit_graph;
  std::string expect;
  CommonArgs common;

  CLI::Option* model_opt = nullptr;
  CLI::Option* policy_opt = nullptr;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

ModelKind model_of(const std::string& text) {
  auto m = parse_model(text);
  if (!m) throw UsageError("unknown model '" + text + "'");
  return *m;
}

void install_policy(SystemSpec& spec, const std::string& text) {
  if (!text.empty() && text.front() == '@') {
    std::ifstream in(text.substr(1));
    if (!in) throw UsageError("cannot read policy file " + text.substr(1));
    std::ostringstream body;
    body << in.rdbuf();
    spec.policy = parse_policy(body.str());
    return;
  }
  if (!text.empty() && text.front() == '(') {
    spec.policy = parse_policy(text);
    return;
  }
  if (!apply_builtin_policy(spec, text)) throw UsageError("unknown policy '" + text + "'");
}

SystemSpec spec_from(const CheckArgs& args) {
  SystemSpec spec;
  if (!args.system.empty()) {
    if (args.uses || args.subjects || args.actions || args.objects)
      throw UsageError("--system cannot be combined with --uses/--subjects/--actions/--objects");
    spec = read_description(args.system);
    if (args.model_opt->count()) spec.model = model_of(args.model);
    if (args.policy_opt->count()) install_policy(spec, args.policy);
    return spec;
  }
  if (!args.uses && !args.subjects && !args.actions && !args.objects)
    throw UsageError("give --uses N, --subjects/--actions/--objects, or --system FILE");
  int objects = args.objects ? args.objects : (args.uses ? args.uses : 1);
  spec = uniform_system(model_of(args.model), args.subjects ? args.subjects : 1, args.actions ? args.actions : 1,
                        objects);
  install_policy(spec, args.policy);
  return spec;
}

int run_check(const CheckArgs& args, std::ostream& out, std::ostream& err) {
  auto selection = CheckSelection::parse(args.checks);
  if (!selection) throw UsageError("unknown --checks value '" + args.checks + "'");
  auto fairness = parse_fairness(args.fairness);
  std::optional<Statistics> expected;
  if (!args.expect.empty()) {
    expected = Statistics::parse(args.expect);
    if (!expected) throw UsageError("--expect takes DIAMETER,FOUND,DISTINCT");
  }

  SystemConfig config = [&] {
    try {
      return build_system(spec_from(args));
    } catch (const UsageError&) {
      throw;
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }();

  Checks checks;
  checks.deadlock = selection->deadlock;
  if (selection->type_correctness) checks.invariants = standard_invariants(config);
  if (selection->safety) checks.monitors = safety_monitors_for(config.model());
  if (selection->liveness) checks.liveness = liveness_goals_for(config.model(), *fairness);

  const ExploreOptions options = args.common.explore_options();
  Exploration ex = explore(config, checks, options);

  if (!args.emit_graph.empty()) {
    std::ofstream graph_out(args.emit_graph);
    if (!graph_out) {
      err << "error: cannot write " << args.emit_graph << '\n';
      return 2;
    }
    write_edge_list(*ex.graph, graph_out);
  }

  ConfigEcho echo;
  echo.model = std::string(to_string(config.model()));
  echo.subjects = config.subjects().size();
  echo.actions = config.actions().size();
  echo.objects = config.objects().size();
  echo.uses = config.candidates().size();
  echo.policy = config.policy() ? to_string(*config.policy()) : "true";
  echo.system = args.system;
  echo.checks = selection->names();
  echo.fairness = std::string(to_string(*fairness));
  echo.workers = options.workers;
  echo.memory_limit = options.memory_limit;
  echo.fingerprints = options.fingerprints;

  RunReport report = make_report(std::move(echo), std::move(ex.result), *selection, expected);
  if (args.common.output == "json")
    out << emit_json(report);
  else
    print_text(report, out);
  return report.exit_code();
}

std::string cell(std::optional<std::uint64_t> got, std::uint64_t want, bool ok) {
  std::ostringstream s;
  if (got)
    s << *got << " / " << want << (ok ? " ok" : " MISMATCH");
  else
    s << "- / " << want << " MISMATCH";
  return s.str();
}

int run_table2(const std::string& policy, const std::string& models_text, const std::string& uses_text,
               const CommonArgs& common, std::ostream& out) {
  std::vector<ModelKind> models;
  for (const auto& m : split_list(models_text)) models.push_back(model_of(m));
  std::vector<int> uses;
  for (const auto& u : split_list(uses_text)) {
    try {
      uses.push_back(std::stoi(u));
    } catch (const std::exception&) {
      throw UsageError("bad --uses-list entry '" + u + "'");
    }
  }
  SystemSpec probe;
  if (!apply_builtin_policy(probe, policy)) throw UsageError("unknown built-in policy '" + policy + "'");

  auto rows = reproduce_table2(models, uses, policy, common.explore_options());

  // Rows that must reproduce exactly under the always-permit policy.
  bool hard_ok = true;
  for (const auto& r : rows) {
    if (policy != "true" || r.published.model != ModelKind::ongoing) continue;
    if (!r.matches_diameter() || r.partial) hard_ok = false;
    if (r.published.uses == 2 && !(r.matches_found() && r.matches_distinct())) hard_ok = false;
  }

  if (common.output == "json") {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& r : rows) {
      nlohmann::json row = {{"model", to_string(r.published.model)},
                            {"uses", r.published.uses},
                            {"published",
                             {{"diameter", r.published.stats.diameter},
                              {"states_found", r.published.stats.states_found},
                              {"distinct_states", r.published.stats.distinct_states}}},
                            {"measured", nullptr},
                            {"match",
                             {{"diameter", r.matches_diameter()},
                              {"states_found", r.matches_found()},
                              {"distinct_states", r.matches_distinct()}}},
                            {"partial", r.partial},
                            {"seconds", r.seconds},
                            {"error", r.error}};
      if (r.measured)
        row["measured"] = {{"diameter", r.measured->diameter},
                           {"states_found", r.measured->states_found},
                           {"distinct_states", r.measured->distinct_states}};
      doc.push_back(std::move(row));
    }
    out << nlohmann::json{{"policy", policy}, {"rows", doc}}.dump(2) << '\n';
    return hard_ok ? 0 : 1;
  }

  out << "policy " << policy << "   (measured / published)\n";
  out << std::left << std::setw(9) << "model" << std::setw(6) << "uses" << std::setw(22) << "diameter"
      << std::setw(32) << "states found" << std::setw(28) << "distinct states"
      << "seconds\n";
  for (const auto& r : rows) {
    const auto& p = r.published.stats;
    std::optional<std::uint64_t> d, f, s;
    if (r.measured) {
      d = r.measured->diameter;
      f = r.measured->states_found;
      s = r.measured->distinct_states;
    }
    out << std::setw(9) << to_string(r.published.model) << std::setw(6) << r.published.uses << std::setw(22)
        << cell(d, p.diameter, r.matches_diameter()) << std::setw(32)
        << cell(f, p.states_found, r.matches_found()) << std::setw(28)
        << cell(s, p.distinct_states, r.matches_distinct()) << std::fixed << std::setprecision(2) << r.seconds;
    out.unsetf(std::ios::fixed);
    if (r.partial) out << "  PARTIAL (memory limit)";
    if (!r.error.empty()) out << "  error: " << r.error;
    out << '\n';
  }
  out << std::right;
  return hard_ok ? 0 : 1;
}

int run_sweep(const std::string& model, int uses, const std::string& target_text, const std::string* candidates_text,
              const CommonArgs& common, std::ostream& out) {
  auto target = Statistics::parse(target_text);
  if (!target) throw UsageError("--target takes DIAMETER,FOUND,DISTINCT");
  std::vector<std::string> candidates = candidates_text ? split_list(*candidates_text) : builtin_policy_names(uses);
  for (const auto& c : candidates) {
    SystemSpec probe;
    if (!apply_builtin_policy(probe, c)) throw UsageError("unknown built-in policy '" + c + "'");
  }
  auto ranked = sweep_policies(model_of(model), uses, candidates, *target, common.explore_options());

  if (common.output == "json") {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& e : ranked) {
      nlohmann::json row = {{"policy", e.policy}, {"stats", nullptr}, {"distance", e.distance},
                            {"exact", e.stats && !e.partial && e.distance == 0}, {"partial", e.partial},
                            {"error", e.error}};
      if (e.stats)
        row["stats"] = {{"diameter", e.stats->diameter},
                        {"states_found", e.stats->states_found},
                        {"distinct_states", e.stats->distinct_states}};
      doc.push_back(std::move(row));
    }
    out << nlohmann::json{{"model", model},
                          {"uses", uses},
                          {"target",
                           {{"diameter", target->diameter},
                            {"states_found", target->states_found},
                            {"distinct_states", target->distinct_states}}},
                          {"ranking", doc}}
               .dump(2)
        << '\n';
    return 0;
  }

  out << "target " << target->diameter << ',' << target->states_found << ',' << target->distinct_states << "  ("
      << model << ", " << uses << " uses)\n";
  std::size_t rank = 0;
  for (const auto& e : ranked) {
    out << std::setw(3) << ++rank << "  " << std::left << std::setw(16) << e.policy << std::right;
    if (e.stats)
      out << e.stats->diameter << ',' << e.stats->states_found << ',' << e.stats->distinct_states << "  distance "
          << e.distance;
    if (e.stats && !e.partial && e.distance == 0) out << "  EXACT";
    if (e.partial) out << "  PARTIAL";
    if (!e.error.empty()) out << "  error: " << e.error;
    out << '\n';
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Explicit-state checker for UseCON usage control systems", "usecon"};
  app.require_subcommand(1);

  CheckArgs check;
  CLI::App* check_cmd = app.add_subcommand("check", "Explore one system and run its checks");
  check.model_opt = check_cmd->add_option("--model", check.model, "pre or ongoing")
                        ->check(CLI::IsMember({"pre", "ongoing"}));
  check_cmd->add_option("--uses", check.uses, "1 subject, 1 action and N objects")->check(CLI::NonNegativeNumber);
  check_cmd->add_option("--subjects", check.subjects)->check(CLI::PositiveNumber);
  check_cmd->add_option("--actions", check.actions)->check(CLI::PositiveNumber);
  check_cmd->add_option("--objects", check.objects)->check(CLI::PositiveNumber);
  check.policy_opt =
      check_cmd->add_option("--policy", check.policy, "true, false, a built-in name, @file or an inline rule");
  check_cmd->add_option("--system", check.system, "System description file");
  check_cmd->add_option("--checks", check.checks, "deadlock,typecorrectness,safety,liveness or all");
  check_cmd->add_option("--fairness", check.fairness, "Fairness for liveness goals")
      ->check(CLI::IsMember({"weak", "none"}));
  check_cmd->add_option("--emit-graph", check.emit_graph, "Write the explored edges to this file");
  check_cmd->add_option("--expect", check.expect, "Expected DIAMETER,FOUND,DISTINCT");
  check.common.attach(*check_cmd);

  std::string t2_policy = "true";
  std::string t2_models = "pre,ongoing";
  std::string t2_uses = "2,8,12";
  CommonArgs t2_common;
  CLI::App* table_cmd = app.add_subcommand("table2", "Compare against the published performance table");
  table_cmd->add_option("--policy", t2_policy, "Built-in policy");
  table_cmd->add_option("--models", t2_models, "Comma-separated models");
  table_cmd->add_option("--uses-list", t2_uses, "Comma-separated use counts");
  t2_common.attach(*table_cmd);

  std::string sw_model = "pre";
  int sw_uses = 2;
  std::string sw_target;
  std::string sw_candidates;
  CommonArgs sw_common;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Rank built-in policies by distance to target statistics");
  sweep_cmd->add_option("--model", sw_model)->check(CLI::IsMember({"pre", "ongoing"}));
  sweep_cmd->add_option("--uses", sw_uses)->check(CLI::NonNegativeNumber);
  sweep_cmd->add_option("--target", sw_target, "DIAMETER,FOUND,DISTINCT")->required();
  CLI::Option* candidates_opt = sweep_cmd->add_option("--candidates", sw_candidates, "Comma-separated policies");
  sw_common.attach(*sweep_cmd);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*check_cmd) return run_check(check, out, err);
    if (*table_cmd) return run_table2(t2_policy, t2_models, t2_uses, t2_common, out);
    return run_sweep(sw_model, sw_uses, sw_target, candidates_opt->count() ? &sw_candidates : nullptr, sw_common,
                     out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace usecon
