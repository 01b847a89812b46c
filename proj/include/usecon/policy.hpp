#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>

#include "usecon/model.hpp"

namespace usecon {

class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, const std::string& what)
      : Error("syntax error at " + std::to_string(position) + ": " + what), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class UnknownAttribute : public Error {
 public:
  explicit UnknownAttribute(std::string name)
      : Error("unknown attribute: " + name), name_(std::move(name)) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class TypeMismatch : public Error {
 public:
  TypeMismatch(std::string op, std::string tags)
      : Error("type mismatch in '" + op + "': " + tags), op_(std::move(op)), tags_(std::move(tags)) {}
  const std::string& op() const { return op_; }
  const std::string& tags() const { return tags_; }

 private:
  std::string op_;
  std::string tags_;
};

/// Decision-time failure. Distinct from a rule evaluating to false.
class EvalError : public Error {
 public:
  enum class Code : std::uint8_t {
    select_empty,
    select_ambiguous,
    missing_attribute,
    type_mismatch,
    aggregate_empty,
    unknown_entity,
  };
  EvalError(Code code, const std::string& what) : Error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

class DomainViolation : public Error {
 public:
  DomainViolation(std::string attr, AttributeValue value)
      : Error("value " + value.to_string() + " outside the domain of '" + attr + "'"),
        attr_(std::move(attr)),
        value_(std::move(value)) {}
  const std::string& attr() const { return attr_; }
  const AttributeValue& value() const { return value_; }

 private:
  std::string attr_;
  AttributeValue value_;
};

enum class Role : std::uint8_t { subject, object, action, use, x };
enum class Aggregator : std::uint8_t { count, sum, min, max };
enum class Source : std::uint8_t { entities, uses };
enum class CompareOp : std::uint8_t { eq, ne, lt, le, gt, ge };
enum class ArithOp : std::uint8_t { add, sub };

struct Term {
  struct Const {
    AttributeValue value;
  };
  /// Attribute of a direct entity, of the use under decision, or of the bound x.
  struct Attr {
    Role role;
    std::string name;
  };
  /// Attribute of the entity an identity-valued term designates.
  struct AttrOf {
    TermPtr target;
    std::string name;
  };
  /// The entity (as an identity) satisfying the predicate over x ranging over E.
  struct Choose {
    RulePtr predicate;
  };
  struct Aggregate {
    Aggregator agg;
    Source source;
    RulePtr predicate;
    std::optional<std::string> projected;
  };
  /// The logical clock.
  struct Tick {};
  struct Arith {
    ArithOp op;
    TermPtr lhs;
    TermPtr rhs;
  };

  std::variant<Const, Attr, AttrOf, Choose, Aggregate, Tick, Arith> node;
};

struct Rule {
  struct Const {
    bool value;
  };
  struct Compare {
    CompareOp op;
    TermPtr lhs;
    TermPtr rhs;
  };
  struct And {
    RulePtr lhs;
    RulePtr rhs;
  };
  struct Or {
    RulePtr lhs;
    RulePtr rhs;
  };
  struct Not {
    RulePtr operand;
  };

  std::variant<Const, Compare, And, Or, Not> node;
};

namespace rules {
RulePtr constant(bool value);
RulePtr compare(CompareOp op, TermPtr lhs, TermPtr rhs);
RulePtr all(RulePtr lhs, RulePtr rhs);
RulePtr any(RulePtr lhs, RulePtr rhs);
RulePtr negate(RulePtr operand);

TermPtr value(AttributeValue v);
TermPtr attr(Role role, std::string name);
TermPtr attr_of(TermPtr target, std::string name);
TermPtr choose(RulePtr predicate);
TermPtr aggregate(Aggregator agg, Source source, RulePtr predicate,
                  std::optional<std::string> projected = std::nullopt);
TermPtr tick();
TermPtr arith(ArithOp op, TermPtr lhs, TermPtr rhs);
}  // namespace rules

// Policy grammar (s-expressions):
//   RULE := true | false | (and RULE RULE) | (or RULE RULE) | (not RULE) | (CMP TERM TERM)
//   CMP  := = | /= | < | <= | > | >=
//   TERM := integer | "token" | @identity | <@id,...> | tick
//         | (attr ROLE name) | (attr TERM name)
//         | (choose RULE) | (aggregate AGG SRC RULE [name])
//         | (+ TERM TERM) | (- TERM TERM)
//   ROLE := subject | object | action | use | x
//   AGG  := count | sum | min | max        SRC := entities | uses

/// Throws SyntaxError with the byte offset of the offending input.
RulePtr parse_policy(std::string_view text);
TermPtr parse_term(std::string_view text);

/// Canonical s-expression; parse_policy(to_string(r)) yields an equal tree.
std::string to_string(const Rule& rule);
std::string to_string(const Term& term);

bool operator==(const Rule& a, const Rule& b);
bool operator==(const Term& a, const Term& b);

/// Static check against the configuration's attribute schema.
/// Throws UnknownAttribute or TypeMismatch.
void check_policy(const Rule& rule, const SystemConfig& config);
/// Checks an update assignment term; returns the tag it produces.
ValueTag check_update_term(const Term& term, const SystemConfig& config);

/// True when the rule reads only the direct entities and constants.
bool is_direct(const Rule& rule);
bool reads_tick(const Term& term);
bool reads_tick(const Rule& rule);

/// Decision context for one use: its direct entities plus the pre-state.
struct EvalContext {
  const Entity& subject;
  const Entity& object;
  const Entity& action;
  const Use* use;  // the use under decision, if any
  const World& world;
  const SystemConfig& config;
};

/// Builds the context for an existing use of `world`.
EvalContext context_for(const Use& use, const World& world, const SystemConfig& config);

AttributeValue eval_term(const Term& term, const EvalContext& ctx);
bool eval_rule(const Rule& rule, const EvalContext& ctx);

enum class DomainCheck : std::uint8_t { strict, unchecked };

/// EXCEPT-style update: st becomes spec.target, each assignment is evaluated
/// in the pre-state and written; every other field is copied unchanged.
/// With DomainCheck::strict an out-of-domain result throws DomainViolation.
Use apply_update(const UpdateSpec& spec, const Use& use, const EvalContext& ctx,
                 DomainCheck check = DomainCheck::strict);

}  // namespace usecon
