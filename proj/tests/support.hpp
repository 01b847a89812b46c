#pragma once

#include <string>
#include <vector>

#include "usecon/description.hpp"
#include "usecon/explorer.hpp"
#include "usecon/policy.hpp"

namespace usecon::testing {

/// 1 subject, 1 action, n objects with a built-in policy.
SystemConfig uniform(ModelKind model, int n, const std::string& policy = "true");

UseKey key(int object);

Use use(int object, UseStatus st);

World world_of(std::vector<Use> uses, std::uint64_t tick = 0);

/// Product-of-chains oracle for the status-only systems with a constant
/// policy: walks every per-use stage vector directly and counts enabled
/// actions, without touching the transition or explorer code.
struct ChainCounts {
  std::uint64_t distinct = 0;
  std::uint64_t found = 0;
  std::uint32_t diameter = 0;
};
ChainCounts chain_counts(ModelKind model, int n, bool permit);

/// The closed forms; the ongoing form assumes an always-permit policy.
ChainCounts closed_form(ModelKind model, int n, bool permit);

std::uint64_t ipow(std::uint64_t base, int exp);

}  // namespace usecon::testing
