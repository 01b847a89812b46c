#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "usecon/explorer.hpp"

namespace usecon {

struct CheckSelection {
  bool deadlock = true;
  bool type_correctness = true;
  bool safety = true;
  bool liveness = true;

  /// Comma-separated names from deadlock, typecorrectness, safety, liveness, all.
  static std::optional<CheckSelection> parse(std::string_view text);
  std::vector<std::string> names() const;

  bool operator==(const CheckSelection&) const = default;
};

/// (diameter, states found, distinct states)
struct Statistics {
  std::uint32_t diameter = 0;
  std::uint64_t states_found = 0;
  std::uint64_t distinct_states = 0;

  /// "D,F,S"
  static std::optional<Statistics> parse(std::string_view text);

  bool operator==(const Statistics&) const = default;
};

struct Comparison {
  Statistics expected;
  bool diameter = false;
  bool states_found = false;
  bool distinct_states = false;

  bool operator==(const Comparison&) const = default;
};

struct ConfigEcho {
  std::string model;
  std::size_t subjects = 0;
  std::size_t actions = 0;
  std::size_t objects = 0;
  std::size_t uses = 0;
  std::string policy;
  std::string system;  // description file, empty when built from flags
  std::vector<std::string> checks;
  std::string fairness;
  int workers = 1;
  std::uint64_t memory_limit = 0;
  bool fingerprints = false;

  bool operator==(const ConfigEcho&) const = default;
};

struct CheckVerdict {
  std::string check;
  bool passed = true;

  bool operator==(const CheckVerdict&) const = default;
};

struct RunReport {
  ConfigEcho config;
  ExplorationResult result;
  std::vector<CheckVerdict> verdicts;
  std::optional<Comparison> comparison;

  /// 0 when nothing was violated, every deadlock is an expected terminal and
  /// the run was complete; 1 otherwise.
  int exit_code() const;

  bool operator==(const RunReport&) const = default;
};

nlohmann::json to_json(const RunReport& report);
RunReport report_from_json(const nlohmann::json& doc);

std::string emit_json(const RunReport& report);
/// Throws nlohmann::json::exception on malformed input.
RunReport parse_report(std::string_view text);

void print_text(const RunReport& report, std::ostream& out);
void print_trace(const Trace& trace, std::ostream& out);

RunReport make_report(ConfigEcho echo, ExplorationResult result, const CheckSelection& checks,
                      std::optional<Statistics> expected);

struct PublishedRow {
  ModelKind model = ModelKind::pre;
  int uses = 0;
  Statistics stats;
};

/// The published performance figures, pre rows first.
const std::vector<PublishedRow>& published_rows();

struct Table2Row {
  PublishedRow published;
  std::optional<Statistics> measured;
  bool partial = false;
  double seconds = 0.0;
  std::string error;

  bool matches_diameter() const { return measured && measured->diameter == published.stats.diameter; }
  bool matches_found() const { return measured && measured->states_found == published.stats.states_found; }
  bool matches_distinct() const { return measured && measured->distinct_states == published.stats.distinct_states; }
};

/// Runs every published row whose model and use count are selected.
std::vector<Table2Row> reproduce_table2(const std::vector<ModelKind>& models, const std::vector<int>& uses,
                                        const std::string& policy, const ExploreOptions& options);

struct SweepEntry {
  std::string policy;
  std::optional<Statistics> stats;
  std::uint64_t distance = 0;  // L1 distance to the target; max when the run failed
  bool partial = false;
  std::string error;
};

/// Explores each candidate built-in policy and ranks by distance to `target`
/// (ties keep candidate order).
std::vector<SweepEntry> sweep_policies(ModelKind model, int uses, const std::vector<std::string>& candidates,
                                       const Statistics& target, const ExploreOptions& options);

/// Command-line entry point; returns the process exit code (2 for usage errors).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace usecon
