#include "usecon/description.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "usecon/policy.hpp"

namespace usecon {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string_view strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

// Splits on `sep` outside parentheses, braces, tuple literals and quotes.
std::vector<std::string_view> split_top(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  int depth = 0;
  int tuple = 0;
  bool quoted = false;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '"') quoted = !quoted;
    if (quoted) continue;
    if (c == '(' || c == '{') ++depth;
    if (c == ')' || c == '}') --depth;
    if (c == '<' && i + 1 < s.size() && s[i + 1] == '@') ++tuple;
    if (c == '>' && tuple > 0) --tuple;
    if (c == sep && depth == 0 && tuple == 0) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  out.push_back(trim(s.substr(start)));
  return out;
}

std::vector<std::string_view> words(std::string_view s) {
  std::vector<std::string_view> out;
  for (auto part : split_top(s, ' '))
    if (!part.empty()) out.push_back(part);
  return out;
}

std::optional<std::int64_t> to_int(std::string_view s) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

Domain parse_domain(std::string_view text, std::size_t line) {
  text = trim(text);
  if (text.size() < 2 || text.front() != '{' || text.back() != '}')
    throw DescriptionError(line, "domain must be written {v1, ..., vk} or {lo..hi}");
  std::string_view body = trim(text.substr(1, text.size() - 2));
  if (auto dots = body.find(".."); dots != std::string_view::npos && body.find(',') == std::string_view::npos) {
    auto lo = to_int(trim(body.substr(0, dots)));
    auto hi = to_int(trim(body.substr(dots + 2)));
    if (!lo || !hi || *lo > *hi) throw DescriptionError(line, "bad integer range");
    Domain d;
    for (auto v = *lo; v <= *hi; ++v) d.emplace_back(v);
    return d;
  }
  Domain d;
  for (auto item : split_top(body, ',')) {
    if (item.empty()) throw DescriptionError(line, "empty domain value");
    d.push_back(parse_value(item));
  }
  return d;
}

void parse_entity(std::string_view text, std::size_t line, SystemSpec& spec) {
  auto w = words(text);
  if (w.size() < 2) throw DescriptionError(line, "expected: <subject|object|action> <id> [attr=value ...]");
  Entity e;
  e.id = std::string(w[1]);
  for (std::size_t i = 2; i < w.size(); ++i) {
    auto eq = w[i].find('=');
    if (eq == std::string_view::npos || eq == 0) throw DescriptionError(line, "expected attr=value");
    e.attrs.insert_or_assign(std::string(w[i].substr(0, eq)), parse_value(w[i].substr(eq + 1)));
  }
  if (w[0] == "subject") {
    e.kind = EntityKind::subject;
    spec.subjects.push_back(std::move(e));
  } else if (w[0] == "object") {
    e.kind = EntityKind::object;
    spec.objects.push_back(std::move(e));
  } else if (w[0] == "action") {
    e.kind = EntityKind::action;
    spec.actions.push_back(std::move(e));
  } else {
    throw DescriptionError(line, "unknown entity kind '" + std::string(w[0]) + "'");
  }
}

void parse_update(std::string_view text, std::size_t line, SystemSpec& spec) {
  auto colon = text.find(':');
  if (colon == std::string_view::npos) throw DescriptionError(line, "expected <procName>: assignments");
  auto proc = parse_update_proc(trim(text.substr(0, colon)));
  if (!proc) throw DescriptionError(line, "unknown update procedure '" + std::string(trim(text.substr(0, colon))) + "'");
  UpdateSpec update{default_target(*proc), {}};
  for (auto item : split_top(text.substr(colon + 1), ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string_view::npos) throw DescriptionError(line, "expected attr=TERM");
    auto name = trim(item.substr(0, eq));
    auto rhs = trim(item.substr(eq + 1));
    if (name == "st") {
      auto st = parse_status(rhs);
      if (!st) throw DescriptionError(line, "unknown status '" + std::string(rhs) + "'");
      update.target = *st;
    } else {
      update.assignments.emplace_back(std::string(name), parse_term(rhs));
    }
  }
  if (!spec.updates.emplace(*proc, std::move(update)).second)
    throw DescriptionError(line, std::string(to_string(*proc)) + " declared twice");
}

}  // namespace

SystemSpec parse_description(std::string_view text) {
  SystemSpec spec;
  std::string section;
  std::string policy;
  std::size_t policy_line = 0;
  bool model_seen = false;
  std::size_t number = 0;
  std::istringstream in{std::string(text)};
  for (std::string raw; std::getline(in, raw);) {
    ++number;
    std::string_view line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw DescriptionError(number, "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section != "entities" && section != "domains" && section != "model" && section != "policy" &&
          section != "updates")
        throw DescriptionError(number, "unknown section [" + section + "]");
      continue;
    }
    try {
      if (section == "entities") {
        parse_entity(line, number, spec);
      } else if (section == "domains") {
        auto eq = line.find('=');
        if (eq == std::string_view::npos) throw DescriptionError(number, "expected attr = {values}");
        std::string name(trim(line.substr(0, eq)));
        if (!spec.domains.emplace(name, parse_domain(line.substr(eq + 1), number)).second)
          throw DescriptionError(number, "domain for '" + name + "' declared twice");
      } else if (section == "model") {
        auto model = parse_model(line);
        if (!model || model_seen) throw DescriptionError(number, "expected a single 'pre' or 'ongoing'");
        spec.model = *model;
        model_seen = true;
      } else if (section == "policy") {
        if (policy.empty()) policy_line = number;
        policy += std::string(line) + '\n';
      } else if (section == "updates") {
        parse_update(line, number, spec);
      } else {
        throw DescriptionError(number, "content outside a section");
      }
    } catch (const DescriptionError&) {
      throw;
    } catch (const Error& e) {
      throw DescriptionError(number, e.what());
    }
  }
  if (!policy.empty()) {
    try {
      spec.policy = parse_policy(policy);
    } catch (const Error& e) {
      throw DescriptionError(policy_line, e.what());
    }
  }
  return spec;
}

SystemSpec read_description(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_description(text.str());
}

SystemSpec uniform_system(ModelKind model, int subjects, int actions, int objects) {
  SystemSpec spec;
  spec.model = model;
  for (int i = 1; i <= subjects; ++i) spec.subjects.push_back(Entity{EntityKind::subject, "s" + std::to_string(i), {}});
  for (int i = 1; i <= actions; ++i) spec.actions.push_back(Entity{EntityKind::action, "a" + std::to_string(i), {}});
  for (int i = 1; i <= objects; ++i) spec.objects.push_back(Entity{EntityKind::object, "o" + std::to_string(i), {}});
  return spec;
}

namespace {

RulePtr count_below(std::string_view status, std::int64_t bound) {
  using namespace rules;
  auto selected = compare(CompareOp::eq, attr(Role::x, "st"), value(Token{std::string(status)}));
  return compare(CompareOp::lt, aggregate(Aggregator::count, Source::uses, selected), value(bound));
}

}  // namespace

bool apply_builtin_policy(SystemSpec& spec, std::string_view name) {
  if (name == "true" || name == "false") {
    spec.policy = rules::constant(name == "true");
    return true;
  }
  if (name == "id-parity") {
    std::int64_t index = 0;
    for (auto& o : spec.objects) {
      ++index;
      o.attrs.insert_or_assign("index", index);
      o.attrs.insert_or_assign("parity", index % 2);
    }
    // Without objects there is nothing to declare parity on, and no use to permit.
    if (spec.objects.empty()) {
      spec.policy = rules::constant(false);
      return true;
    }
    spec.policy = rules::compare(CompareOp::eq, rules::attr(Role::object, "parity"), rules::value(std::int64_t{0}));
    return true;
  }
  for (std::string_view status : {"activated", "completed"}) {
    std::string prefix = std::string(status) + "-lt-";
    if (name.substr(0, prefix.size()) != prefix) continue;
    auto bound = to_int(name.substr(prefix.size()));
    if (!bound || *bound < 0) return false;
    spec.policy = count_below(status, *bound);
    return true;
  }
  return false;
}

std::vector<std::string> builtin_policy_names(int uses) {
  std::vector<std::string> out{"true", "false", "id-parity"};
  for (int k = 1; k <= uses; ++k) out.push_back("activated-lt-" + std::to_string(k));
  for (int k = 1; k <= uses; ++k) out.push_back("completed-lt-" + std::to_string(k));
  return out;
}

}  // namespace usecon
