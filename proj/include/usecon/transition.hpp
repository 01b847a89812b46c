#pragma once

#include <optional>
#include <string>
#include <vector>

#include "usecon/model.hpp"
#include "usecon/policy.hpp"

namespace usecon {

enum class ActionKind : std::uint8_t { request, pre_evaluate, activate, on_evaluate, complete };

inline constexpr int kActionKindCount = 5;

enum class Outcome : std::uint8_t { permitted, denied, stopped, unchanged };

std::string_view to_string(ActionKind kind);
std::optional<ActionKind> parse_action_kind(std::string_view text);
std::string_view to_string(Outcome outcome);
std::optional<Outcome> parse_outcome(std::string_view text);

struct ActionLabel {
  ActionKind kind = ActionKind::request;
  UseKey key;
  std::optional<Outcome> outcome;

  /// "<kind>:<sid,aid,oid>[:<outcome>]"
  std::string to_string() const;
  static std::optional<ActionLabel> parse(std::string_view text);

  bool operator==(const ActionLabel&) const = default;
};

class AlreadyRequested : public Error {
 public:
  explicit AlreadyRequested(const UseKey& key) : Error("use already requested: " + key.to_string()) {}
};

class NotEnabled : public Error {
 public:
  NotEnabled(ActionKind kind, const UseKey& key)
      : Error(std::string(to_string(kind)) + " is not enabled for " + key.to_string()) {}
};

/// A policy evaluation failure that the step mapped to a negative decision.
struct Diagnostic {
  EvalError::Code code;
  std::string message;

  bool operator==(const Diagnostic&) const = default;
};

/// One atomic transition. `post` differs from the pre-state in at most one use
/// (plus the tick).
struct Step {
  ActionLabel label;
  World post;
  /// True when the update left the world unchanged (UNCHANGED U).
  bool stutter = false;
  std::optional<Diagnostic> diagnostic;
  /// Set by successors() when an update left an attribute domain; post then
  /// carries the raw out-of-domain value.
  std::optional<std::pair<std::string, AttributeValue>> domain_violation;
};

// The step_* functions check their guard (NotEnabled / AlreadyRequested) and
// throw DomainViolation when an update leaves a declared domain. Policy
// evaluation errors become a negative decision with a diagnostic.

Step step_request(const World& world, const UseKey& candidate, const SystemConfig& config);
Step step_pre_evaluate(const World& world, const UseKey& key, const SystemConfig& config);
Step step_activate(const World& world, const UseKey& key, const SystemConfig& config);
Step step_on_evaluate(const World& world, const UseKey& key, const SystemConfig& config);
Step step_complete(const World& world, const UseKey& key, const SystemConfig& config);

/// Dispatches to the step_* function for `kind`.
Step step(const World& world, ActionKind kind, const UseKey& key, const SystemConfig& config);

/// Like step(), but records a domain violation in the Step instead of throwing.
Step step_unchecked(const World& world, ActionKind kind, const UseKey& key, const SystemConfig& config);

/// Every enabled action instance in canonical order: Requests in candidate
/// order, then per-use actions in use-key order (onEvaluate before Complete).
std::vector<Step> successors(const World& world, const SystemConfig& config);

/// The action kinds that can fire on a use in `status` under `model`, in
/// canonical order.
std::vector<ActionKind> enabled_kinds(UseStatus status, ModelKind model);

}  // namespace usecon
