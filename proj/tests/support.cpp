#include "support.hpp"

#include <functional>
#include <stdexcept>

namespace usecon::testing {

SystemConfig uniform(ModelKind model, int n, const std::string& policy) {
  SystemSpec spec = uniform_system(model, 1, 1, n);
  if (!apply_builtin_policy(spec, policy)) spec.policy = parse_policy(policy);
  return build_system(std::move(spec));
}

UseKey key(int object) { return UseKey{"s1", "a1", "o" + std::to_string(object)}; }

Use use(int object, UseStatus st) { return Use{key(object), st, {}}; }

World world_of(std::vector<Use> uses, std::uint64_t tick) {
  World w;
  for (auto& u : uses) w.put(std::move(u));
  w.tick = tick;
  return w;
}

std::uint64_t ipow(std::uint64_t base, int exp) {
  std::uint64_t r = 1;
  while (exp-- > 0) r *= base;
  return r;
}

ChainCounts chain_counts(ModelKind model, int n, bool permit) {
  if (model == ModelKind::ongoing && !permit) throw std::invalid_argument("no chain oracle for ongoing always-deny");
  // Stages per use: 0 absent, 1 requested, 2 activated, 3 finished.
  // Under always-deny the pre model skips activated: 0, 1, 3.
  const bool pre = model == ModelKind::pre;
  std::vector<int> stages = (pre && !permit) ? std::vector<int>{0, 1, 3} : std::vector<int>{0, 1, 2, 3};
  ChainCounts out;
  out.found = 1;
  int deepest = 0;
  std::vector<int> v(n, 0);
  std::function<void(int)> walk = [&](int i) {
    if (i == n) {
      ++out.distinct;
      int depth = 0;
      for (int s : v) depth += (s == 3 && pre && !permit) ? 2 : s;
      deepest = std::max(deepest, depth);
      for (int s : v) {
        if (s == 0 || s == 1) out.found += 1;           // Request / evaluate or Activate
        if (s == 2) out.found += pre ? 1 : 2;  // Complete, plus onEvaluate when ongoing
      }
      return;
    }
    for (int s : stages) {
      v[i] = s;
      walk(i + 1);
    }
  };
  walk(0);
  out.diameter = static_cast<std::uint32_t>(deepest + 1);
  return out;
}

ChainCounts closed_form(ModelKind model, int n, bool permit) {
  const std::uint64_t N = static_cast<std::uint64_t>(n);
  if (model == ModelKind::pre && !permit)
    return {ipow(3, n), n == 0 ? 1 : 1 + 2 * N * ipow(3, n - 1), static_cast<std::uint32_t>(2 * n + 1)};
  if (model == ModelKind::pre)
    return {ipow(4, n), n == 0 ? 1 : 1 + 3 * N * ipow(4, n - 1), static_cast<std::uint32_t>(3 * n + 1)};
  return {ipow(4, n), 1 + N * ipow(4, n), static_cast<std::uint32_t>(3 * n + 1)};
}

}  // namespace usecon::testing
