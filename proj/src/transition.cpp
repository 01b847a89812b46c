#include "usecon/transition.hpp"

#include <algorithm>
#include <array>

namespace usecon {

namespace {

constexpr std::array<std::string_view, kActionKindCount> kKindNames = {"Request", "preEvaluate", "Activate",
                                                                       "onEvaluate", "Complete"};
constexpr std::array<std::string_view, 4> kOutcomeNames = {"permitted", "denied", "stopped", "unchanged"};

const Use& require(const World& world, ActionKind kind, const UseKey& key, UseStatus status) {
  const Use* use = world.find(key);
  if (!use || use->st != status) throw NotEnabled(kind, key);
  return *use;
}

void require_model(ActionKind kind, const UseKey& key, const SystemConfig& config, ModelKind model) {
  if (config.model() != model) throw NotEnabled(kind, key);
}

struct Decision {
  bool permit = false;
  std::optional<Diagnostic> diagnostic;
};

Decision decide(const Use& use, const World& world, const SystemConfig& config) {
  try {
    return {eval_rule(*config.policy(), context_for(use, world, config)), std::nullopt};
  } catch (const EvalError& e) {
    return {false, Diagnostic{e.code(), e.what()}};
  }
}

// Replaces the use by its updated copy. A step whose update reproduces the use
// exactly is the UNCHANGED U stutter: the world, tick included, stays as is.
Step finish(const World& world, ActionLabel label, Use updated) {
  Step out;
  out.label = std::move(label);
  const Use* before = world.find(updated.key);
  if (before && *before == updated) {
    out.post = world;
    out.stutter = true;
    return out;
  }
  out.post = world;
  out.post.put(std::move(updated));
  out.post.tick = world.tick + 1;
  return out;
}

Step run_update(const World& world, ActionLabel label, const Use& use, UpdateProc proc, const SystemConfig& config,
                DomainCheck check) {
  auto ctx = context_for(use, world, config);
  const UpdateSpec& spec = config.update(proc);
  if (check == DomainCheck::unchecked) {
    Use updated = apply_update(spec, use, ctx, DomainCheck::unchecked);
    std::optional<std::pair<std::string, AttributeValue>> bad;
    for (const auto& [name, term] : spec.assignments) {
      const Domain* dom = config.domain(name);
      const auto& v = updated.attrs.at(name);
      if (!dom || std::find(dom->begin(), dom->end(), v) == dom->end()) {
        bad = std::make_pair(name, v);
        break;
      }
    }
    Step out = finish(world, std::move(label), std::move(updated));
    out.domain_violation = std::move(bad);
    return out;
  }
  return finish(world, std::move(label), apply_update(spec, use, ctx, DomainCheck::strict));
}

Step do_request(const World& world, const UseKey& candidate, const SystemConfig& config) {
  if (world.find(candidate)) throw AlreadyRequested(candidate);
  Step out;
  out.label = {ActionKind::request, candidate, std::nullopt};
  out.post = world;
  out.post.put(create_use(candidate, config));
  out.post.tick = world.tick + 1;
  return out;
}

Step do_pre_evaluate(const World& world, const UseKey& key, const SystemConfig& config, DomainCheck check) {
  require_model(ActionKind::pre_evaluate, key, config, ModelKind::pre);
  const Use& use = require(world, ActionKind::pre_evaluate, key, UseStatus::requested);
  auto decision = decide(use, world, config);
  ActionLabel label{ActionKind::pre_evaluate, key, decision.permit ? Outcome::permitted : Outcome::denied};
  Step out = run_update(world, std::move(label), use, decision.permit ? UpdateProc::pre : UpdateProc::den, config, check);
  out.diagnostic = std::move(decision.diagnostic);
  return out;
}

Step do_activate(const World& world, const UseKey& key, const SystemConfig& config, DomainCheck check) {
  require_model(ActionKind::activate, key, config, ModelKind::ongoing);
  const Use& use = require(world, ActionKind::activate, key, UseStatus::requested);
  return run_update(world, {ActionKind::activate, key, std::nullopt}, use, UpdateProc::pre, config, check);
}

Step do_on_evaluate(const World& world, const UseKey& key, const SystemConfig& config, DomainCheck check) {
  require_model(ActionKind::on_evaluate, key, config, ModelKind::ongoing);
  const Use& use = require(world, ActionKind::on_evaluate, key, UseStatus::activated);
  auto decision = decide(use, world, config);
  ActionLabel label{ActionKind::on_evaluate, key, decision.permit ? Outcome::unchanged : Outcome::stopped};
  Step out = run_update(world, std::move(label), use, decision.permit ? UpdateProc::on : UpdateProc::stop, config, check);
  out.diagnostic = std::move(decision.diagnostic);
  return out;
}

Step do_complete(const World& world, const UseKey& key, const SystemConfig& config, DomainCheck check) {
  const Use& use = require(world, ActionKind::complete, key, UseStatus::activated);
  return run_update(world, {ActionKind::complete, key, std::nullopt}, use, UpdateProc::com, config, check);
}

Step dispatch(const World& world, ActionKind kind, const UseKey& key, const SystemConfig& config, DomainCheck check) {
  switch (kind) {
    case ActionKind::request: return do_request(world, key, config);
    case ActionKind::pre_evaluate: return do_pre_evaluate(world, key, config, check);
    case ActionKind::activate: return do_activate(world, key, config, check);
    case ActionKind::on_evaluate: return do_on_evaluate(world, key, config, check);
    case ActionKind::complete: return do_complete(world, key, config, check);
  }
  throw NotEnabled(kind, key);
}

}  // namespace

std::string_view to_string(ActionKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::optional<ActionKind> parse_action_kind(std::string_view text) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (kKindNames[i] == text) return static_cast<ActionKind>(i);
  return std::nullopt;
}

std::string_view to_string(Outcome outcome) { return kOutcomeNames[static_cast<std::size_t>(outcome)]; }

std::optional<Outcome> parse_outcome(std::string_view text) {
  for (std::size_t i = 0; i < kOutcomeNames.size(); ++i)
    if (kOutcomeNames[i] == text) return static_cast<Outcome>(i);
  return std::nullopt;
}

std::string ActionLabel::to_string() const {
  std::string out(usecon::to_string(kind));
  out += ':';
  out += key.to_string();
  if (outcome) {
    out += ':';
    out += usecon::to_string(*outcome);
  }
  return out;
}

std::optional<ActionLabel> ActionLabel::parse(std::string_view text) {
  auto c1 = text.find(':');
  if (c1 == std::string_view::npos) return std::nullopt;
  auto kind = parse_action_kind(text.substr(0, c1));
  if (!kind) return std::nullopt;
  auto rest = text.substr(c1 + 1);
  auto c2 = rest.find(':');
  auto key = UseKey::parse(rest.substr(0, c2));
  if (!key) return std::nullopt;
  ActionLabel label{*kind, std::move(*key), std::nullopt};
  if (c2 != std::string_view::npos) {
    label.outcome = parse_outcome(rest.substr(c2 + 1));
    if (!label.outcome) return std::nullopt;
  }
  return label;
}

Step step_request(const World& world, const UseKey& candidate, const SystemConfig& config) {
  return do_request(world, candidate, config);
}
Step step_pre_evaluate(const World& world, const UseKey& key, const SystemConfig& config) {
  return do_pre_evaluate(world, key, config, DomainCheck::strict);
}
Step step_activate(const World& world, const UseKey& key, const SystemConfig& config) {
  return do_activate(world, key, config, DomainCheck::strict);
}
Step step_on_evaluate(const World& world, const UseKey& key, const SystemConfig& config) {
  return do_on_evaluate(world, key, config, DomainCheck::strict);
}
Step step_complete(const World& world, const UseKey& key, const SystemConfig& config) {
  return do_complete(world, key, config, DomainCheck::strict);
}

Step step(const World& world, ActionKind kind, const UseKey& key, const SystemConfig& config) {
  return dispatch(world, kind, key, config, DomainCheck::strict);
}

Step step_unchecked(const World& world, ActionKind kind, const UseKey& key, const SystemConfig& config) {
  return dispatch(world, kind, key, config, DomainCheck::unchecked);
}

std::vector<ActionKind> enabled_kinds(UseStatus status, ModelKind model) {
  if (status == UseStatus::requested)
    return {model == ModelKind::pre ? ActionKind::pre_evaluate : ActionKind::activate};
  if (status == UseStatus::activated) {
    if (model == ModelKind::pre) return {ActionKind::complete};
    return {ActionKind::on_evaluate, ActionKind::complete};
  }
  return {};
}

std::vector<Step> successors(const World& world, const SystemConfig& config) {
  std::vector<Step> out;
  for (const auto& candidate : config.candidates())
    if (!world.find(candidate)) out.push_back(do_request(world, candidate, config));
  for (const auto& use : world.uses)
    for (auto kind : enabled_kinds(use.st, config.model()))
      out.push_back(dispatch(world, kind, use.key, config, DomainCheck::unchecked));
  return out;
}

}  // namespace usecon
