#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "usecon/model.hpp"
#include "usecon/packed.hpp"
#include "usecon/transition.hpp"

namespace usecon {

using StateId = std::uint32_t;

inline constexpr StateId kNoState = 0xffffffffu;

class UnknownState : public Error {
 public:
  UnknownState() : Error("state is not in the explored graph") {}
};

struct TraceStep {
  std::optional<ActionLabel> label;  // empty for the initial state
  StateKey key;
  std::string state;  // human-readable rendering of the state

  bool operator==(const TraceStep&) const = default;
};

/// A path from Init. For a lasso, the final step returns to the state at
/// steps[*cycle_start], so the last key repeats that one.
struct Trace {
  std::vector<TraceStep> steps;
  std::optional<std::size_t> cycle_start;

  bool operator==(const Trace&) const = default;
};

enum class ViolationKind : std::uint8_t { invariant, safety, liveness, deadlock, evaluation_error };

std::string_view to_string(ViolationKind kind);
std::optional<ViolationKind> parse_violation_kind(std::string_view text);

struct Violation {
  ViolationKind kind = ViolationKind::invariant;
  std::string property;
  std::string message;
  Trace witness;

  bool operator==(const Violation&) const = default;
};

enum class DeadlockClass : std::uint8_t { expected_terminal, unexpected };

struct Deadlock {
  StateKey key;
  std::string state;
  DeadlockClass classification = DeadlockClass::expected_terminal;

  bool operator==(const Deadlock&) const = default;
};

struct ExplorationResult {
  std::uint32_t diameter = 0;
  std::uint64_t states_found = 0;
  std::uint64_t distinct_states = 0;
  std::vector<Deadlock> deadlocks;
  std::vector<Violation> violations;
  /// Fail-safe policy evaluation errors (empty selections), reported but not violations.
  std::vector<std::string> diagnostics;
  /// Aborted at the memory budget; the statistics cover the explored prefix.
  bool partial = false;
  /// Deduplicated by 64-bit fingerprints instead of full states.
  bool approximate = false;
  double elapsed_seconds = 0.0;

  bool operator==(const ExplorationResult&) const = default;
};

struct StatePredicate {
  std::string name;
  std::function<bool(const World&)> holds;
};

/// Forbids a use in status `former` from moving to any status in `forbidden`
/// in a single step.
struct EdgeMonitor {
  std::string name;
  UseStatus former = UseStatus::completed;
  StatusSet forbidden;
};

enum class Fairness : std::uint8_t { none, weak };

std::string_view to_string(Fairness fairness);
std::optional<Fairness> parse_fairness(std::string_view text);

/// P ~> Q per use, with P and Q status sets.
struct LeadsToGoal {
  std::string name;
  StatusSet source;
  StatusSet target;
  Fairness fairness = Fairness::weak;
};

struct Checks {
  bool deadlock = true;
  std::vector<StatePredicate> invariants;
  std::vector<EdgeMonitor> monitors;
  std::vector<LeadsToGoal> liveness;
};

struct ExploreOptions {
  int workers = 1;
  /// Cap on distinct states.
  std::uint64_t memory_limit = 50'000'000;
  bool fingerprints = false;
};

/// Successor lists in compressed-row form; targets are kNoState for
/// successors that left the packed layout.
struct EdgeSet {
  std::vector<std::uint64_t> offsets;
  std::vector<StateId> targets;
  std::vector<PackedLabel> labels;
};

/// The reachable state graph: every distinct state with its BFS level, one
/// shortest-path predecessor, and its out-degree.
class StateGraph {
 public:
  StateGraph(const SystemConfig& config, bool fingerprints);
  ~StateGraph();
  StateGraph(const StateGraph&) = delete;
  StateGraph& operator=(const StateGraph&) = delete;

  const SystemConfig& config() const { return config_; }
  const PackedCodec& codec() const { return codec_; }
  const SuccessorKernel& kernel() const { return kernel_; }

  std::size_t size() const { return parent_.size(); }
  const std::uint8_t* packed(StateId id) const { return keys_.data() + std::size_t(id) * codec_.width(); }
  World world(StateId id) const { return codec_.decode(packed(id)); }
  StateKey key(StateId id) const { return canonical_encode(world(id), config_); }

  StateId parent(StateId id) const { return parent_[id]; }
  PackedLabel label(StateId id) const { return label_[id]; }
  std::uint32_t out_degree(StateId id) const { return out_degree_[id]; }
  std::uint32_t level(StateId id) const;
  /// Number of BFS levels.
  std::uint32_t depth() const { return static_cast<std::uint32_t>(level_start_.size()); }
  /// False once some non-stutter step led back to an earlier or the same level.
  bool graded() const { return graded_; }

  std::optional<StateId> find_packed(const std::uint8_t* key) const;
  std::optional<StateId> find(const StateKey& key) const;

  /// Builds the edge set on first use by re-expanding every state.
  const EdgeSet& edges(int workers = 1) const;

 private:
  friend class Explorer;
  struct Index;

  const SystemConfig& config_;
  PackedCodec codec_;
  SuccessorKernel kernel_;
  std::vector<std::uint8_t> keys_;
  std::vector<StateId> parent_;
  std::vector<PackedLabel> label_;
  std::vector<std::uint32_t> out_degree_;
  std::vector<StateId> level_start_;
  std::unique_ptr<Index> index_;
  bool graded_ = true;
  mutable std::unique_ptr<EdgeSet> edges_;
};

/// Everything a check pass needs to report: the graph plus events recorded
/// while exploring (successors that left their domains, evaluation errors).
struct Exploration {
  std::unique_ptr<StateGraph> graph;
  ExplorationResult result;
};

/// Level-synchronous parallel BFS from Init, then the requested checks.
/// Statistics, state numbering, and reported violations do not depend on
/// options.workers.
Exploration explore(const SystemConfig& config, const Checks& checks, const ExploreOptions& options = {});
// The graph refers to the configuration, so it must outlive the result.
Exploration explore(SystemConfig&&, const Checks&, const ExploreOptions& = {}) = delete;

/// BFS only: the graph and its statistics (plus violations found while
/// generating successors).
Exploration explore_graph(const SystemConfig& config, const ExploreOptions& options = {});
Exploration explore_graph(SystemConfig&&, const ExploreOptions& = {}) = delete;

/// Serial breadth-first reference over canonical keys and successors().
struct ReferenceResult {
  std::uint32_t diameter = 0;
  std::uint64_t states_found = 0;
  std::uint64_t distinct_states = 0;
  std::set<StateKey> keys;
  std::set<StateKey> terminals;
};
ReferenceResult explore_reference(const SystemConfig& config, std::uint64_t memory_limit = 50'000'000);

/// Depth-first enumeration of the keys reachable within `depth_bound` steps.
std::set<StateKey> naive_enumerate(const SystemConfig& config, std::uint32_t depth_bound);

Trace reconstruct_trace(const StateGraph& graph, StateId id);
/// Throws UnknownState.
Trace reconstruct_trace(const StateGraph& graph, const StateKey& key);

/// Terminal states in id order, classified: expected-terminal iff every
/// candidate use exists and is finished (completed or denied for pre,
/// completed or stopped for ongoing).
std::vector<Deadlock> classify_deadlocks(const StateGraph& graph, std::vector<Violation>* violations = nullptr);
bool is_expected_terminal(const World& world, const SystemConfig& config);

std::vector<Violation> check_invariant_states(const StateGraph& graph, const std::vector<StatePredicate>& predicates,
                                              int workers = 1);
std::vector<Violation> check_edge_monitors(const StateGraph& graph, const std::vector<EdgeMonitor>& monitors,
                                           int workers = 1);
std::vector<Violation> check_leads_to(const StateGraph& graph, const LeadsToGoal& goal, int workers = 1);

/// Every non-stutter edge goes from level L to level L + 1.
bool is_graded(const StateGraph& graph, int workers = 1);

/// Replays the labels from Init through successors(); true when every
/// recorded key is reproduced (and the lasso closes, if any).
bool replay_trace(const Trace& trace, const SystemConfig& config);

/// One line per edge: "<preKeyHex> <label> <postKeyHex>".
void write_edge_list(const StateGraph& graph, std::ostream& out);

}  // namespace usecon
