#include "usecon/policy.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace usecon {

namespace rules {

RulePtr constant(bool value) { return std::make_shared<Rule>(Rule{Rule::Const{value}}); }
RulePtr compare(CompareOp op, TermPtr lhs, TermPtr rhs) {
  return std::make_shared<Rule>(Rule{Rule::Compare{op, std::move(lhs), std::move(rhs)}});
}
RulePtr all(RulePtr lhs, RulePtr rhs) {
  return std::make_shared<Rule>(Rule{Rule::And{std::move(lhs), std::move(rhs)}});
}
RulePtr any(RulePtr lhs, RulePtr rhs) {
  return std::make_shared<Rule>(Rule{Rule::Or{std::move(lhs), std::move(rhs)}});
}
RulePtr negate(RulePtr operand) { return std::make_shared<Rule>(Rule{Rule::Not{std::move(operand)}}); }

TermPtr value(AttributeValue v) { return std::make_shared<Term>(Term{Term::Const{std::move(v)}}); }
TermPtr attr(Role role, std::string name) {
  return std::make_shared<Term>(Term{Term::Attr{role, std::move(name)}});
}
TermPtr attr_of(TermPtr target, std::string name) {
  return std::make_shared<Term>(Term{Term::AttrOf{std::move(target), std::move(name)}});
}
TermPtr choose(RulePtr predicate) { return std::make_shared<Term>(Term{Term::Choose{std::move(predicate)}}); }
TermPtr aggregate(Aggregator agg, Source source, RulePtr predicate, std::optional<std::string> projected) {
  return std::make_shared<Term>(Term{Term::Aggregate{agg, source, std::move(predicate), std::move(projected)}});
}
TermPtr tick() { return std::make_shared<Term>(Term{Term::Tick{}}); }
TermPtr arith(ArithOp op, TermPtr lhs, TermPtr rhs) {
  return std::make_shared<Term>(Term{Term::Arith{op, std::move(lhs), std::move(rhs)}});
}

}  // namespace rules

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr std::string_view kCompareNames[] = {"=", "/=", "<", "<=", ">", ">="};
constexpr std::string_view kRoleNames[] = {"subject", "object", "action", "use", "x"};
constexpr std::string_view kAggNames[] = {"count", "sum", "min", "max"};
constexpr std::string_view kSourceNames[] = {"entities", "uses"};

template <class E, std::size_t N>
std::optional<E> lookup(const std::string_view (&names)[N], std::string_view word) {
  for (std::size_t i = 0; i < N; ++i)
    if (names[i] == word) return static_cast<E>(i);
  return std::nullopt;
}

template <class E, std::size_t N>
std::string_view name_of(const std::string_view (&names)[N], E e) {
  return names[static_cast<std::size_t>(e)];
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  RulePtr parse_rule_document() {
    auto r = rule();
    finish();
    return r;
  }

  TermPtr parse_term_document() {
    auto t = term();
    finish();
    return t;
  }

 private:
  void finish() {
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected trailing input");
  }

  [[noreturn]] void fail(const std::string& what) const { throw SyntaxError(pos_, what); }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  char peek() {
    skip_ws();
    return pos_ < src_.size() ? src_[pos_] : '\0';
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string_view word() {
    skip_ws();
    auto start = pos_;
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == '"') break;
      ++pos_;
    }
    if (start == pos_) fail("expected a word");
    return src_.substr(start, pos_ - start);
  }

  RulePtr rule() {
    char c = peek();
    if (c != '(') {
      auto at = pos_;
      auto w = word();
      if (w == "true") return rules::constant(true);
      if (w == "false") return rules::constant(false);
      pos_ = at;
      fail("expected a rule, got '" + std::string(w) + "'");
    }
    ++pos_;
    auto at = pos_;
    auto head = word();
    RulePtr out;
    if (head == "and" || head == "or") {
      auto lhs = rule();
      auto rhs = rule();
      out = head == "and" ? rules::all(std::move(lhs), std::move(rhs)) : rules::any(std::move(lhs), std::move(rhs));
    } else if (head == "not") {
      out = rules::negate(rule());
    } else if (auto op = lookup<CompareOp>(kCompareNames, head)) {
      auto lhs = term();
      auto rhs = term();
      out = rules::compare(*op, std::move(lhs), std::move(rhs));
    } else {
      pos_ = at;
      fail("unknown rule operator '" + std::string(head) + "'");
    }
    expect(')');
    return out;
  }

  TermPtr term() {
    char c = peek();
    if (c == '\0') fail("unexpected end of input");
    if (c == ')') fail("expected a term");
    if (c == '"') {
      ++pos_;
      auto end = src_.find('"', pos_);
      if (end == std::string_view::npos) fail("unterminated token");
      std::string text(src_.substr(pos_, end - pos_));
      pos_ = end + 1;
      return rules::value(AttributeValue::token(std::move(text)));
    }
    if (c != '(') {
      auto at = pos_;
      auto w = word();
      if (w == "tick") return rules::tick();
      if (w.front() == '@' && w.size() > 1) return rules::value(AttributeValue::identity(std::string(w.substr(1))));
      if (w.front() == '<' && w.back() == '>') {
        auto v = parse_value(w);
        if (v.tag() == ValueTag::identity_tuple) return rules::value(std::move(v));
      }
      std::int64_t v = 0;
      auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
      if (ec == std::errc{} && ptr == w.data() + w.size()) return rules::value(v);
      pos_ = at;
      fail("expected a term, got '" + std::string(w) + "'");
    }
    ++pos_;
    auto at = pos_;
    auto head = word();
    TermPtr out;
    if (head == "attr") {
      if (peek() == '(') {
        auto target = term();
        out = rules::attr_of(std::move(target), std::string(name()));
      } else {
        auto role_at = pos_;
        auto role_word = word();
        auto role = lookup<Role>(kRoleNames, role_word);
        if (!role) {
          pos_ = role_at;
          fail("unknown role '" + std::string(role_word) + "'");
        }
        if (*role == Role::x && x_depth_ == 0) {
          pos_ = role_at;
          fail("x is only bound inside choose or aggregate");
        }
        out = rules::attr(*role, std::string(name()));
      }
    } else if (head == "choose") {
      ++x_depth_;
      out = rules::choose(rule());
      --x_depth_;
    } else if (head == "aggregate") {
      auto agg_at = pos_;
      auto agg = lookup<Aggregator>(kAggNames, word());
      if (!agg) {
        pos_ = agg_at;
        fail("unknown aggregator");
      }
      auto src_at = pos_;
      auto source = lookup<Source>(kSourceNames, word());
      if (!source) {
        pos_ = src_at;
        fail("unknown aggregation source");
      }
      ++x_depth_;
      auto pred = rule();
      --x_depth_;
      std::optional<std::string> projected;
      if (peek() != ')') projected = std::string(name());
      out = rules::aggregate(*agg, *source, std::move(pred), std::move(projected));
    } else if (head == "+" || head == "-") {
      auto lhs = term();
      auto rhs = term();
      out = rules::arith(head == "+" ? ArithOp::add : ArithOp::sub, std::move(lhs), std::move(rhs));
    } else {
      pos_ = at;
      fail("unknown term operator '" + std::string(head) + "'");
    }
    expect(')');
    return out;
  }

  std::string_view name() {
    auto at = pos_;
    auto w = word();
    if (!std::isalpha(static_cast<unsigned char>(w.front())) && w.front() != '_') {
      pos_ = at;
      fail("expected an attribute name");
    }
    return w;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int x_depth_ = 0;
};

// ---------------------------------------------------------------------------
// Static checking

enum class Scope : std::uint8_t { none, entities, uses };

class Checker {
 public:
  explicit Checker(const SystemConfig& cfg) : cfg_(cfg) {}

  void rule(const Rule& r, Scope x) {
    std::visit(overloaded{
                   [](const Rule::Const&) {},
                   [&](const Rule::Compare& c) {
                     auto lt = term(*c.lhs, x);
                     auto rt = term(*c.rhs, x);
                     auto op = std::string(name_of(kCompareNames, c.op));
                     if (lt != rt) throw TypeMismatch(op, describe(lt, rt));
                     if (c.op != CompareOp::eq && c.op != CompareOp::ne && lt != ValueTag::integer)
                       throw TypeMismatch(op, describe(lt, rt));
                   },
                   [&](const Rule::And& a) {
                     rule(*a.lhs, x);
                     rule(*a.rhs, x);
                   },
                   [&](const Rule::Or& o) {
                     rule(*o.lhs, x);
                     rule(*o.rhs, x);
                   },
                   [&](const Rule::Not& n) { rule(*n.operand, x); },
               },
               r.node);
  }

  ValueTag term(const Term& t, Scope x) {
    return std::visit(
        overloaded{
            [](const Term::Const& c) { return c.value.tag(); },
            [&](const Term::Attr& a) { return attr(a.role, a.name, x); },
            [&](const Term::AttrOf& a) {
              auto target = term(*a.target, x);
              if (target != ValueTag::identity) throw TypeMismatch("attr", std::string(to_string(target)));
              return entity_attr_any(a.name);
            },
            [&](const Term::Choose& c) {
              rule(*c.predicate, Scope::entities);
              return ValueTag::identity;
            },
            [&](const Term::Aggregate& a) {
              auto scope = a.source == Source::entities ? Scope::entities : Scope::uses;
              rule(*a.predicate, scope);
              if (a.agg == Aggregator::count) return ValueTag::integer;
              if (!a.projected) throw TypeMismatch(std::string(name_of(kAggNames, a.agg)), "no projected attribute");
              auto tag = attr(Role::x, *a.projected, scope);
              if (tag != ValueTag::integer)
                throw TypeMismatch(std::string(name_of(kAggNames, a.agg)), std::string(to_string(tag)));
              return ValueTag::integer;
            },
            [](const Term::Tick&) { return ValueTag::integer; },
            [&](const Term::Arith& a) {
              auto lt = term(*a.lhs, x);
              auto rt = term(*a.rhs, x);
              if (lt != ValueTag::integer || rt != ValueTag::integer)
                throw TypeMismatch(a.op == ArithOp::add ? "+" : "-", describe(lt, rt));
              return ValueTag::integer;
            },
        },
        t.node);
  }

 private:
  static std::string describe(ValueTag a, ValueTag b) {
    return std::string(to_string(a)) + " vs " + std::string(to_string(b));
  }

  ValueTag attr(Role role, const std::string& name, Scope x) {
    switch (role) {
      case Role::subject: return entity_attr(cfg_.subjects(), name);
      case Role::object: return entity_attr(cfg_.objects(), name);
      case Role::action: return entity_attr(cfg_.actions(), name);
      case Role::use: return use_attr(name);
      case Role::x:
        if (x == Scope::uses) return use_attr(name);
        return entity_attr_any(name);
    }
    throw UnknownAttribute(name);
  }

  static ValueTag entity_attr(const std::vector<Entity>& list, const std::string& name) {
    if (name == "id") return ValueTag::identity;
    for (const auto& e : list)
      if (auto it = e.attrs.find(name); it != e.attrs.end()) return it->second.tag();
    throw UnknownAttribute(name);
  }

  ValueTag entity_attr_any(const std::string& name) const {
    if (name == "id") return ValueTag::identity;
    for (const Entity* e : cfg_.entities())
      if (auto it = e->attrs.find(name); it != e->attrs.end()) return it->second.tag();
    throw UnknownAttribute(name);
  }

  ValueTag use_attr(const std::string& name) const {
    if (name == "st") return ValueTag::token;
    if (name == "sid" || name == "aid" || name == "oid") return ValueTag::identity;
    if (name == "id") return ValueTag::identity_tuple;
    if (const Domain* d = cfg_.domain(name)) return d->front().tag();
    throw UnknownAttribute(name);
  }

  const SystemConfig& cfg_;
};

// ---------------------------------------------------------------------------
// Evaluation

struct Binding {
  const Entity* entity = nullptr;
  const Use* use = nullptr;
};

class Evaluator {
 public:
  explicit Evaluator(const EvalContext& ctx) : ctx_(ctx) {}

  bool rule(const Rule& r, Binding x) const {
    return std::visit(overloaded{
                          [](const Rule::Const& c) { return c.value; },
                          [&](const Rule::Compare& c) { return compare(c, x); },
                          [&](const Rule::And& a) {
                            bool lhs = rule(*a.lhs, x);
                            bool rhs = rule(*a.rhs, x);
                            return lhs && rhs;
                          },
                          [&](const Rule::Or& o) {
                            bool lhs = rule(*o.lhs, x);
                            bool rhs = rule(*o.rhs, x);
                            return lhs || rhs;
                          },
                          [&](const Rule::Not& n) { return !rule(*n.operand, x); },
                      },
                      r.node);
  }

  AttributeValue term(const Term& t, Binding x) const {
    return std::visit(
        overloaded{
            [](const Term::Const& c) { return c.value; },
            [&](const Term::Attr& a) { return attr(a.role, a.name, x); },
            [&](const Term::AttrOf& a) {
              auto target = term(*a.target, x);
              if (target.tag() != ValueTag::identity)
                throw EvalError(EvalError::Code::type_mismatch, "attr of a non-identity value");
              const Entity* e = ctx_.config.entity(target.as_identity().id);
              if (!e) throw EvalError(EvalError::Code::unknown_entity, "no entity " + target.as_identity().id);
              return required(e->attribute(a.name), a.name);
            },
            [&](const Term::Choose& c) { return choose(c); },
            [&](const Term::Aggregate& a) { return aggregate(a); },
            [&](const Term::Tick&) { return AttributeValue(static_cast<std::int64_t>(ctx_.world.tick)); },
            [&](const Term::Arith& a) {
              auto lhs = term(*a.lhs, x);
              auto rhs = term(*a.rhs, x);
              if (!lhs.is_int() || !rhs.is_int())
                throw EvalError(EvalError::Code::type_mismatch, "arithmetic on non-integers");
              return AttributeValue(a.op == ArithOp::add ? lhs.as_int() + rhs.as_int() : lhs.as_int() - rhs.as_int());
            },
        },
        t.node);
  }

 private:
  // An entity without an attribute the selection reads is not selected.
  struct NoMatch {};

  bool matches(const Rule& predicate, Binding x) const {
    try {
      return rule(predicate, x);
    } catch (const NoMatch&) {
      return false;
    }
  }

  static AttributeValue required(std::optional<AttributeValue> v, const std::string& name) {
    if (!v) throw EvalError(EvalError::Code::missing_attribute, "missing attribute " + name);
    return std::move(*v);
  }

  AttributeValue attr(Role role, const std::string& name, Binding x) const {
    switch (role) {
      case Role::subject: return required(ctx_.subject.attribute(name), name);
      case Role::object: return required(ctx_.object.attribute(name), name);
      case Role::action: return required(ctx_.action.attribute(name), name);
      case Role::use:
        if (!ctx_.use) throw EvalError(EvalError::Code::missing_attribute, "no use under decision");
        return required(ctx_.use->attribute(name), name);
      case Role::x:
        if (x.entity) {
          auto v = x.entity->attribute(name);
          if (!v) throw NoMatch{};
          return std::move(*v);
        }
        if (x.use) return required(x.use->attribute(name), name);
        throw EvalError(EvalError::Code::missing_attribute, "x is unbound");
    }
    throw EvalError(EvalError::Code::missing_attribute, name);
  }

  bool compare(const Rule::Compare& c, Binding x) const {
    auto lhs = term(*c.lhs, x);
    auto rhs = term(*c.rhs, x);
    if (lhs.tag() != rhs.tag())
      throw EvalError(EvalError::Code::type_mismatch, "comparing " + std::string(to_string(lhs.tag())) + " with " +
                                                           std::string(to_string(rhs.tag())));
    switch (c.op) {
      case CompareOp::eq: return lhs == rhs;
      case CompareOp::ne: return lhs != rhs;
      default: break;
    }
    if (!lhs.is_int()) throw EvalError(EvalError::Code::type_mismatch, "ordering on non-integers");
    auto a = lhs.as_int();
    auto b = rhs.as_int();
    switch (c.op) {
      case CompareOp::lt: return a < b;
      case CompareOp::le: return a <= b;
      case CompareOp::gt: return a > b;
      case CompareOp::ge: return a >= b;
      default: return false;
    }
  }

  AttributeValue choose(const Term::Choose& c) const {
    // Entities are visited in id order, so the first match has the smallest id.
    const Entity* found = nullptr;
    for (const Entity* e : ctx_.config.entities()) {
      if (!matches(*c.predicate, Binding{e, nullptr})) continue;
      if (!found) {
        found = e;
        if (ctx_.config.select_mode() == SelectMode::smallest_id) break;
      } else {
        throw EvalError(EvalError::Code::select_ambiguous, "choose matched both " + found->id + " and " + e->id);
      }
    }
    if (!found) throw EvalError(EvalError::Code::select_empty, "choose matched no entity");
    return AttributeValue::identity(found->id);
  }

  AttributeValue aggregate(const Term::Aggregate& a) const {
    std::int64_t count = 0;
    std::int64_t acc = 0;
    auto fold = [&](Binding b) {
      if (!matches(*a.predicate, b)) return;
      ++count;
      if (a.agg == Aggregator::count) return;
      auto v = b.entity ? required(b.entity->attribute(*a.projected), *a.projected) : attr(Role::x, *a.projected, b);
      if (!v.is_int()) throw EvalError(EvalError::Code::type_mismatch, "aggregating a non-integer");
      auto i = v.as_int();
      if (count == 1 && a.agg != Aggregator::sum)
        acc = i;
      else if (a.agg == Aggregator::sum)
        acc += i;
      else if (a.agg == Aggregator::min)
        acc = std::min(acc, i);
      else
        acc = std::max(acc, i);
    };
    if (a.source == Source::entities) {
      for (const Entity* e : ctx_.config.entities()) fold(Binding{e, nullptr});
    } else {
      for (const Use& u : ctx_.world.uses) fold(Binding{nullptr, &u});
    }
    if (a.agg == Aggregator::count) return AttributeValue(count);
    if (count == 0 && a.agg != Aggregator::sum)
      throw EvalError(EvalError::Code::aggregate_empty, "min/max over an empty selection");
    return AttributeValue(acc);
  }

  const EvalContext& ctx_;
};

bool term_reads_tick(const Term& t);

bool rule_reads_tick(const Rule& r) {
  return std::visit(overloaded{
                        [](const Rule::Const&) { return false; },
                        [](const Rule::Compare& c) { return term_reads_tick(*c.lhs) || term_reads_tick(*c.rhs); },
                        [](const Rule::And& a) { return rule_reads_tick(*a.lhs) || rule_reads_tick(*a.rhs); },
                        [](const Rule::Or& o) { return rule_reads_tick(*o.lhs) || rule_reads_tick(*o.rhs); },
                        [](const Rule::Not& n) { return rule_reads_tick(*n.operand); },
                    },
                    r.node);
}

bool term_reads_tick(const Term& t) {
  return std::visit(overloaded{
                        [](const Term::Const&) { return false; },
                        [](const Term::Attr&) { return false; },
                        [](const Term::AttrOf& a) { return term_reads_tick(*a.target); },
                        [](const Term::Choose& c) { return rule_reads_tick(*c.predicate); },
                        [](const Term::Aggregate& a) { return rule_reads_tick(*a.predicate); },
                        [](const Term::Tick&) { return true; },
                        [](const Term::Arith& a) { return term_reads_tick(*a.lhs) || term_reads_tick(*a.rhs); },
                    },
                    t.node);
}

bool term_is_direct(const Term& t) {
  return std::visit(overloaded{
                        [](const Term::Const&) { return true; },
                        [](const Term::Attr& a) {
                          return a.role == Role::subject || a.role == Role::object || a.role == Role::action;
                        },
                        [](const Term::AttrOf&) { return false; },
                        [](const Term::Choose&) { return false; },
                        [](const Term::Aggregate&) { return false; },
                        [](const Term::Tick&) { return false; },
                        [](const Term::Arith& a) { return term_is_direct(*a.lhs) && term_is_direct(*a.rhs); },
                    },
                    t.node);
}

}  // namespace

RulePtr parse_policy(std::string_view text) { return Parser(text).parse_rule_document(); }
TermPtr parse_term(std::string_view text) { return Parser(text).parse_term_document(); }

std::string to_string(const Rule& rule) {
  return std::visit(overloaded{
                        [](const Rule::Const& c) { return std::string(c.value ? "true" : "false"); },
                        [](const Rule::Compare& c) {
                          return "(" + std::string(name_of(kCompareNames, c.op)) + " " + to_string(*c.lhs) + " " +
                                 to_string(*c.rhs) + ")";
                        },
                        [](const Rule::And& a) { return "(and " + to_string(*a.lhs) + " " + to_string(*a.rhs) + ")"; },
                        [](const Rule::Or& o) { return "(or " + to_string(*o.lhs) + " " + to_string(*o.rhs) + ")"; },
                        [](const Rule::Not& n) { return "(not " + to_string(*n.operand) + ")"; },
                    },
                    rule.node);
}

std::string to_string(const Term& term) {
  return std::visit(
      overloaded{
          [](const Term::Const& c) { return c.value.to_string(); },
          [](const Term::Attr& a) { return "(attr " + std::string(name_of(kRoleNames, a.role)) + " " + a.name + ")"; },
          [](const Term::AttrOf& a) { return "(attr " + to_string(*a.target) + " " + a.name + ")"; },
          [](const Term::Choose& c) { return "(choose " + to_string(*c.predicate) + ")"; },
          [](const Term::Aggregate& a) {
            std::string out = "(aggregate " + std::string(name_of(kAggNames, a.agg)) + " " +
                              std::string(name_of(kSourceNames, a.source)) + " " + to_string(*a.predicate);
            if (a.projected) out += " " + *a.projected;
            return out + ")";
          },
          [](const Term::Tick&) { return std::string("tick"); },
          [](const Term::Arith& a) {
            return std::string(a.op == ArithOp::add ? "(+ " : "(- ") + to_string(*a.lhs) + " " + to_string(*a.rhs) +
                   ")";
          },
      },
      term.node);
}

bool operator==(const Rule& a, const Rule& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      overloaded{
          [&](const Rule::Const& x) { return x.value == std::get<Rule::Const>(b.node).value; },
          [&](const Rule::Compare& x) {
            const auto& y = std::get<Rule::Compare>(b.node);
            return x.op == y.op && *x.lhs == *y.lhs && *x.rhs == *y.rhs;
          },
          [&](const Rule::And& x) {
            const auto& y = std::get<Rule::And>(b.node);
            return *x.lhs == *y.lhs && *x.rhs == *y.rhs;
          },
          [&](const Rule::Or& x) {
            const auto& y = std::get<Rule::Or>(b.node);
            return *x.lhs == *y.lhs && *x.rhs == *y.rhs;
          },
          [&](const Rule::Not& x) { return *x.operand == *std::get<Rule::Not>(b.node).operand; },
      },
      a.node);
}

bool operator==(const Term& a, const Term& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(overloaded{
                        [&](const Term::Const& x) { return x.value == std::get<Term::Const>(b.node).value; },
                        [&](const Term::Attr& x) {
                          const auto& y = std::get<Term::Attr>(b.node);
                          return x.role == y.role && x.name == y.name;
                        },
                        [&](const Term::AttrOf& x) {
                          const auto& y = std::get<Term::AttrOf>(b.node);
                          return x.name == y.name && *x.target == *y.target;
                        },
                        [&](const Term::Choose& x) { return *x.predicate == *std::get<Term::Choose>(b.node).predicate; },
                        [&](const Term::Aggregate& x) {
                          const auto& y = std::get<Term::Aggregate>(b.node);
                          return x.agg == y.agg && x.source == y.source && x.projected == y.projected &&
                                 *x.predicate == *y.predicate;
                        },
                        [](const Term::Tick&) { return true; },
                        [&](const Term::Arith& x) {
                          const auto& y = std::get<Term::Arith>(b.node);
                          return x.op == y.op && *x.lhs == *y.lhs && *x.rhs == *y.rhs;
                        },
                    },
                    a.node);
}

void check_policy(const Rule& rule, const SystemConfig& config) { Checker(config).rule(rule, Scope::none); }

ValueTag check_update_term(const Term& term, const SystemConfig& config) {
  return Checker(config).term(term, Scope::none);
}

bool is_direct(const Rule& rule) {
  return std::visit(overloaded{
                        [](const Rule::Const&) { return true; },
                        [](const Rule::Compare& c) { return term_is_direct(*c.lhs) && term_is_direct(*c.rhs); },
                        [](const Rule::And& a) { return is_direct(*a.lhs) && is_direct(*a.rhs); },
                        [](const Rule::Or& o) { return is_direct(*o.lhs) && is_direct(*o.rhs); },
                        [](const Rule::Not& n) { return is_direct(*n.operand); },
                    },
                    rule.node);
}

bool reads_tick(const Term& term) { return term_reads_tick(term); }
bool reads_tick(const Rule& rule) { return rule_reads_tick(rule); }

EvalContext context_for(const Use& use, const World& world, const SystemConfig& config) {
  const Entity* s = config.entity(use.key.sid);
  const Entity* o = config.entity(use.key.oid);
  const Entity* a = config.entity(use.key.aid);
  if (!s || !o || !a) throw EvalError(EvalError::Code::unknown_entity, "use references unknown entity: " + use.key.to_string());
  return EvalContext{*s, *o, *a, &use, world, config};
}

AttributeValue eval_term(const Term& term, const EvalContext& ctx) { return Evaluator(ctx).term(term, {}); }

bool eval_rule(const Rule& rule, const EvalContext& ctx) { return Evaluator(ctx).rule(rule, {}); }

Use apply_update(const UpdateSpec& spec, const Use& use, const EvalContext& ctx, DomainCheck check) {
  std::vector<AttributeValue> values;
  values.reserve(spec.assignments.size());
  for (const auto& [name, term] : spec.assignments) values.push_back(eval_term(*term, ctx));

  Use out = use;
  out.st = spec.target;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto& name = spec.assignments[i].first;
    if (check == DomainCheck::strict) {
      const Domain* dom = ctx.config.domain(name);
      if (!dom || std::find(dom->begin(), dom->end(), values[i]) == dom->end())
        throw DomainViolation(name, values[i]);
    }
    out.attrs.insert_or_assign(name, std::move(values[i]));
  }
  return out;
}

}  // namespace usecon
