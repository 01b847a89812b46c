#include "usecon/report.hpp"

#include <algorithm>
#include <charconv>
#include <iomanip>
#include <limits>
#include <ostream>

#include "usecon/description.hpp"

namespace usecon {

using nlohmann::json;

namespace {

template <class T>
std::optional<T> to_number(std::string_view s) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string_view to_string(DeadlockClass c) {
  return c == DeadlockClass::expected_terminal ? "expected-terminal" : "unexpected";
}

DeadlockClass parse_deadlock_class(const std::string& text) {
  if (text == "expected-terminal") return DeadlockClass::expected_terminal;
  if (text == "unexpected") return DeadlockClass::unexpected;
  throw json::other_error::create(501, "unknown deadlock classification: " + text, nullptr);
}

StateKey key_from(const json& j) {
  auto key = StateKey::from_hex(j.get<std::string>());
  if (!key) throw json::other_error::create(501, "malformed state key", nullptr);
  return *key;
}

json trace_json(const Trace& trace) {
  json steps = json::array();
  for (const auto& s : trace.steps)
    steps.push_back({{"label", s.label ? json(s.label->to_string()) : json(nullptr)},
                     {"key", s.key.hex()},
                     {"state", s.state}});
  return {{"steps", steps}, {"cycle_start", trace.cycle_start ? json(*trace.cycle_start) : json(nullptr)}};
}

Trace trace_from(const json& j) {
  Trace trace;
  for (const auto& s : j.at("steps")) {
    TraceStep step;
    if (!s.at("label").is_null()) {
      step.label = ActionLabel::parse(s.at("label").get<std::string>());
      if (!step.label) throw json::other_error::create(501, "malformed action label", nullptr);
    }
    step.key = key_from(s.at("key"));
    step.state = s.at("state").get<std::string>();
    trace.steps.push_back(std::move(step));
  }
  if (!j.at("cycle_start").is_null()) trace.cycle_start = j.at("cycle_start").get<std::size_t>();
  return trace;
}

json stats_json(const Statistics& s) {
  return {{"diameter", s.diameter}, {"states_found", s.states_found}, {"distinct_states", s.distinct_states}};
}

Statistics stats_from(const json& j) {
  return Statistics{j.at("diameter").get<std::uint32_t>(), j.at("states_found").get<std::uint64_t>(),
                    j.at("distinct_states").get<std::uint64_t>()};
}

Statistics stats_of(const ExplorationResult& r) { return {r.diameter, r.states_found, r.distinct_states}; }

std::uint64_t gap(std::uint64_t a, std::uint64_t b) { return a > b ? a - b : b - a; }

std::uint64_t distance(const Statistics& a, const Statistics& b) {
  std::uint64_t d = gap(a.diameter, b.diameter);
  for (auto part : {gap(a.states_found, b.states_found), gap(a.distinct_states, b.distinct_states)}) {
    if (d > std::numeric_limits<std::uint64_t>::max() - part) return std::numeric_limits<std::uint64_t>::max();
    d += part;
  }
  return d;
}

ViolationKind kind_for_check(const std::string& check) {
  if (check == "deadlock") return ViolationKind::deadlock;
  if (check == "typecorrectness") return ViolationKind::invariant;
  if (check == "safety") return ViolationKind::safety;
  return ViolationKind::liveness;
}

}  // namespace

std::optional<CheckSelection> CheckSelection::parse(std::string_view text) {
  CheckSelection s{false, false, false, false};
  bool any = false;
  while (!text.empty()) {
    auto comma = text.find(',');
    auto name = text.substr(0, comma);
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    if (name == "all") {
      s = CheckSelection{};
    } else if (name == "deadlock") {
      s.deadlock = true;
    } else if (name == "typecorrectness") {
      s.type_correctness = true;
    } else if (name == "safety") {
      s.safety = true;
    } else if (name == "liveness") {
      s.liveness = true;
    } else {
      return std::nullopt;
    }
    any = true;
  }
  if (!any) return std::nullopt;
  return s;
}

std::vector<std::string> CheckSelection::names() const {
  std::vector<std::string> out;
  if (deadlock) out.emplace_back("deadlock");
  if (type_correctness) out.emplace_back("typecorrectness");
  if (safety) out.emplace_back("safety");
  if (liveness) out.emplace_back("liveness");
  return out;
}

std::optional<Statistics> Statistics::parse(std::string_view text) {
  auto c1 = text.find(',');
  if (c1 == std::string_view::npos) return std::nullopt;
  auto c2 = text.find(',', c1 + 1);
  if (c2 == std::string_view::npos) return std::nullopt;
  auto d = to_number<std::uint32_t>(text.substr(0, c1));
  auto f = to_number<std::uint64_t>(text.substr(c1 + 1, c2 - c1 - 1));
  auto s = to_number<std::uint64_t>(text.substr(c2 + 1));
  if (!d || !f || !s) return std::nullopt;
  return Statistics{*d, *f, *s};
}

int RunReport::exit_code() const {
  if (result.partial || !result.violations.empty()) return 1;
  for (const auto& d : result.deadlocks)
    if (d.classification == DeadlockClass::unexpected) return 1;
  return 0;
}

RunReport make_report(ConfigEcho echo, ExplorationResult result, const CheckSelection& checks,
                      std::optional<Statistics> expected) {
  RunReport report;
  report.config = std::move(echo);
  report.result = std::move(result);
  auto has = [&](ViolationKind kind) {
    return std::any_of(report.result.violations.begin(), report.result.violations.end(),
                       [&](const Violation& v) { return v.kind == kind; });
  };
  for (const auto& name : checks.names()) {
    bool passed = !has(kind_for_check(name));
    if (name == "deadlock")
      passed = passed && std::none_of(report.result.deadlocks.begin(), report.result.deadlocks.end(),
                                      [](const Deadlock& d) { return d.classification == DeadlockClass::unexpected; });
    report.verdicts.push_back({name, passed});
  }
  if (has(ViolationKind::evaluation_error)) report.verdicts.push_back({"policy-evaluation", false});
  if (expected) {
    Statistics got = stats_of(report.result);
    report.comparison = Comparison{*expected, got.diameter == expected->diameter,
                                   got.states_found == expected->states_found,
                                   got.distinct_states == expected->distinct_states};
  }
  return report;
}

json to_json(const RunReport& report) {
  const auto& c = report.config;
  const auto& r = report.result;
  json deadlocks = json::array();
  for (const auto& d : r.deadlocks)
    deadlocks.push_back({{"key", d.key.hex()}, {"state", d.state}, {"classification", to_string(d.classification)}});
  json violations = json::array();
  for (const auto& v : r.violations)
    violations.push_back({{"kind", to_string(v.kind)},
                          {"property", v.property},
                          {"message", v.message},
                          {"trace", trace_json(v.witness)}});
  json verdicts = json::array();
  for (const auto& v : report.verdicts) verdicts.push_back({{"check", v.check}, {"passed", v.passed}});
  json comparison = nullptr;
  if (report.comparison) {
    const auto& cmp = *report.comparison;
    comparison = {{"expected", stats_json(cmp.expected)},
                  {"match",
                   {{"diameter", cmp.diameter},
                    {"states_found", cmp.states_found},
                    {"distinct_states", cmp.distinct_states}}}};
  }
  return {{"config",
           {{"model", c.model},
            {"subjects", c.subjects},
            {"actions", c.actions},
            {"objects", c.objects},
            {"uses", c.uses},
            {"policy", c.policy},
            {"system", c.system},
            {"checks", c.checks},
            {"fairness", c.fairness},
            {"workers", c.workers},
            {"memory_limit", c.memory_limit},
            {"fingerprints", c.fingerprints}}},
          {"result",
           {{"diameter", r.diameter},
            {"states_found", r.states_found},
            {"distinct_states", r.distinct_states},
            {"partial", r.partial},
            {"approximate", r.approximate},
            {"elapsed_seconds", r.elapsed_seconds},
            {"diagnostics", r.diagnostics},
            {"deadlocks", deadlocks},
            {"violations", violations}}},
          {"verdicts", verdicts},
          {"comparison", comparison},
          {"exit_code", report.exit_code()}};
}

RunReport report_from_json(const json& doc) {
  RunReport report;
  const json& c = doc.at("config");
  auto& echo = report.config;
  echo.model = c.at("model").get<std::string>();
  echo.subjects = c.at("subjects").get<std::size_t>();
  echo.actions = c.at("actions").get<std::size_t>();
  echo.objects = c.at("objects").get<std::size_t>();
  echo.uses = c.at("uses").get<std::size_t>();
  echo.policy = c.at("policy").get<std::string>();
  echo.system = c.at("system").get<std::string>();
  echo.checks = c.at("checks").get<std::vector<std::string>>();
  echo.fairness = c.at("fairness").get<std::string>();
  echo.workers = c.at("workers").get<int>();
  echo.memory_limit = c.at("memory_limit").get<std::uint64_t>();
  echo.fingerprints = c.at("fingerprints").get<bool>();

  const json& r = doc.at("result");
  auto& res = report.result;
  res.diameter = r.at("diameter").get<std::uint32_t>();
  res.states_found = r.at("states_found").get<std::uint64_t>();
  res.distinct_states = r.at("distinct_states").get<std::uint64_t>();
  res.partial = r.at("partial").get<bool>();
  res.approximate = r.at("approximate").get<bool>();
  res.elapsed_seconds = r.at("elapsed_seconds").get<double>();
  res.diagnostics = r.at("diagnostics").get<std::vector<std::string>>();
  for (const auto& d : r.at("deadlocks"))
    res.deadlocks.push_back(Deadlock{key_from(d.at("key")), d.at("state").get<std::string>(),
                                     parse_deadlock_class(d.at("classification").get<std::string>())});
  for (const auto& v : r.at("violations")) {
    auto kind = parse_violation_kind(v.at("kind").get<std::string>());
    if (!kind) throw json::other_error::create(501, "unknown violation kind", nullptr);
    res.violations.push_back(Violation{*kind, v.at("property").get<std::string>(), v.at("message").get<std::string>(),
                                       trace_from(v.at("trace"))});
  }
  for (const auto& v : doc.at("verdicts"))
    report.verdicts.push_back({v.at("check").get<std::string>(), v.at("passed").get<bool>()});
  if (!doc.at("comparison").is_null()) {
    const json& cmp = doc.at("comparison");
    const json& m = cmp.at("match");
    report.comparison = Comparison{stats_from(cmp.at("expected")), m.at("diameter").get<bool>(),
                                   m.at("states_found").get<bool>(), m.at("distinct_states").get<bool>()};
  }
  return report;
}

std::string emit_json(const RunReport& report) { return to_json(report).dump(2) + "\n"; }

RunReport parse_report(std::string_view text) { return report_from_json(json::parse(text)); }

void print_trace(const Trace& trace, std::ostream& out) {
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& s = trace.steps[i];
    out << "    " << std::setw(3) << i << "  " << std::left << std::setw(34)
        << (s.label ? s.label->to_string() : std::string("<init>")) << std::right << ' ' << s.state;
    if (trace.cycle_start && i == *trace.cycle_start) out << "   <- cycle";
    out << '\n';
  }
  if (trace.cycle_start) out << "    (last state repeats step " << *trace.cycle_start << ")\n";
}

void print_text(const RunReport& report, std::ostream& out) {
  const auto& c = report.config;
  const auto& r = report.result;
  out << "model " << c.model << ", " << c.uses << " candidate uses (" << c.subjects << " subjects x " << c.actions
      << " actions x " << c.objects << " objects)\n";
  if (!c.system.empty()) out << "system " << c.system << '\n';
  out << "policy " << c.policy << '\n';
  out << "diameter         " << r.diameter << '\n';
  out << "states found     " << r.states_found << '\n';
  out << "distinct states  " << r.distinct_states << '\n';
  if (r.partial) out << "PARTIAL: stopped at the limit of " << c.memory_limit << " distinct states\n";
  if (r.approximate) out << "approximate: states deduplicated by 64-bit fingerprints\n";
  std::size_t unexpected = 0;
  for (const auto& d : r.deadlocks) unexpected += d.classification == DeadlockClass::unexpected;
  if (!r.deadlocks.empty()) {
    out << "terminal states  " << r.deadlocks.size() << " (" << r.deadlocks.size() - unexpected
        << " expected, " << unexpected << " unexpected)\n";
    for (const auto& d : r.deadlocks) out << "    " << to_string(d.classification) << "  " << d.state << '\n';
  }
  for (const auto& v : report.verdicts) out << "check " << std::left << std::setw(18) << v.check << std::right
                                             << (v.passed ? "ok" : "FAILED") << '\n';
  for (const auto& d : r.diagnostics) out << "diagnostic: " << d << '\n';
  for (const auto& v : r.violations) {
    out << "violation [" << to_string(v.kind) << "] " << v.property << ": " << v.message << '\n';
    print_trace(v.witness, out);
  }
  if (report.comparison) {
    const auto& cmp = *report.comparison;
    auto row = [&](const char* name, std::uint64_t got, std::uint64_t want, bool ok) {
      out << "expect " << std::left << std::setw(16) << name << std::right << got << " vs " << want << "  "
          << (ok ? "match" : "MISMATCH") << '\n';
    };
    row("diameter", r.diameter, cmp.expected.diameter, cmp.diameter);
    row("states found", r.states_found, cmp.expected.states_found, cmp.states_found);
    row("distinct states", r.distinct_states, cmp.expected.distinct_states, cmp.distinct_states);
  }
  out << "elapsed " << std::fixed << std::setprecision(3) << r.elapsed_seconds << " s\n";
  out.unsetf(std::ios::fixed);
}

const std::vector<PublishedRow>& published_rows() {
  static const std::vector<PublishedRow> rows{
      {ModelKind::pre, 2, {6, 21, 12}},
      {ModelKind::pre, 8, {23, 277969, 16832}},
      {ModelKind::pre, 12, {31, 45533665, 560128}},
      {ModelKind::ongoing, 2, {7, 33, 16}},
      {ModelKind::ongoing, 8, {25, 367873, 23808}},
      {ModelKind::ongoing, 12, {37, 79112449, 1224704}},
  };
  return rows;
}

std::vector<Table2Row> reproduce_table2(const std::vector<ModelKind>& models, const std::vector<int>& uses,
                                        const std::string& policy, const ExploreOptions& options) {
  std::vector<Table2Row> out;
  for (const auto& row : published_rows()) {
    if (std::find(models.begin(), models.end(), row.model) == models.end()) continue;
    if (std::find(uses.begin(), uses.end(), row.uses) == uses.end()) continue;
    Table2Row t{row, std::nullopt, false, 0.0, {}};
    try {
      SystemSpec spec = uniform_system(row.model, 1, 1, row.uses);
      if (!apply_builtin_policy(spec, policy)) throw Error("unknown built-in policy: " + policy);
      SystemConfig config = build_system(std::move(spec));
      Exploration ex = explore_graph(config, options);
      t.measured = stats_of(ex.result);
      t.partial = ex.result.partial;
      t.seconds = ex.result.elapsed_seconds;
    } catch (const std::exception& e) {
      t.error = e.what();
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<SweepEntry> sweep_policies(ModelKind model, int uses, const std::vector<std::string>& candidates,
                                       const Statistics& target, const ExploreOptions& options) {
  std::vector<SweepEntry> out;
  for (const auto& name : candidates) {
    SweepEntry entry{name, std::nullopt, std::numeric_limits<std::uint64_t>::max(), false, {}};
    try {
      SystemSpec spec = uniform_system(model, 1, 1, uses);
      if (!apply_builtin_policy(spec, name)) throw Error("unknown built-in policy: " + name);
      SystemConfig config = build_system(std::move(spec));
      Exploration ex = explore_graph(config, options);
      entry.stats = stats_of(ex.result);
      entry.partial = ex.result.partial;
      if (!entry.partial) entry.distance = distance(*entry.stats, target);
    } catch (const std::exception& e) {
      entry.error = e.what();
    }
    out.push_back(std::move(entry));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const SweepEntry& a, const SweepEntry& b) { return a.distance < b.distance; });
  return out;
}

}  // namespace usecon
