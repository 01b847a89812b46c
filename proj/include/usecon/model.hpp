#pragma once

#include <compare>
#include <initializer_list>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace usecon {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DuplicateEntityId : public Error {
 public:
  explicit DuplicateEntityId(std::string id)
      : Error("duplicate entity id: " + id), id_(std::move(id)) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

class DanglingReference : public Error {
 public:
  DanglingReference(std::string attr, std::string id)
      : Error("attribute '" + attr + "' references unknown entity '" + id + "'"),
        attr_(std::move(attr)),
        id_(std::move(id)) {}
  const std::string& attr() const { return attr_; }
  const std::string& id() const { return id_; }

 private:
  std::string attr_;
  std::string id_;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

enum class EntityKind : std::uint8_t { subject, object, action };

std::string_view to_string(EntityKind kind);

struct Token {
  std::string text;
  auto operator<=>(const Token&) const = default;
};

struct Identity {
  std::string id;
  auto operator<=>(const Identity&) const = default;
};

struct IdentityTuple {
  std::vector<std::string> ids;
  auto operator<=>(const IdentityTuple&) const = default;
};

enum class ValueTag : std::uint8_t { integer, token, identity, identity_tuple };

std::string_view to_string(ValueTag tag);

/// Tagged scalar held by entity and use attributes.
///
/// operator== is structural (values of different tags are simply unequal) and
/// exists for container use. Policy comparisons go through the policy engine,
/// which rejects mixed-tag comparisons as type errors.
class AttributeValue {
 public:
  using Storage = std::variant<std::int64_t, Token, Identity, IdentityTuple>;

  AttributeValue() : value_(std::int64_t{0}) {}
  AttributeValue(std::int64_t v) : value_(v) {}  // NOLINT(google-explicit-constructor)
  AttributeValue(int v) : value_(std::int64_t{v}) {}  // NOLINT(google-explicit-constructor)
  AttributeValue(Token v) : value_(std::move(v)) {}  // NOLINT(google-explicit-constructor)
  AttributeValue(Identity v) : value_(std::move(v)) {}  // NOLINT(google-explicit-constructor)
  AttributeValue(IdentityTuple v) : value_(std::move(v)) {}  // NOLINT(google-explicit-constructor)

  static AttributeValue token(std::string text) { return Token{std::move(text)}; }
  static AttributeValue identity(std::string id) { return Identity{std::move(id)}; }

  ValueTag tag() const { return static_cast<ValueTag>(value_.index()); }
  const Storage& storage() const { return value_; }

  bool is_int() const { return tag() == ValueTag::integer; }
  std::int64_t as_int() const { return std::get<std::int64_t>(value_); }
  const Token& as_token() const { return std::get<Token>(value_); }
  const Identity& as_identity() const { return std::get<Identity>(value_); }
  const IdentityTuple& as_tuple() const { return std::get<IdentityTuple>(value_); }

  /// Text form accepted by parse_value: 3, "text", @id, <@a,@b>.
  std::string to_string() const;

  auto operator<=>(const AttributeValue&) const = default;

 private:
  Storage value_;
};

/// Parses the text form produced by AttributeValue::to_string. Bare words are
/// read as tokens.
AttributeValue parse_value(std::string_view text);

using AttributeMap = std::map<std::string, AttributeValue, std::less<>>;

/// Immutable attributed record for a subject, object, or action.
struct Entity {
  EntityKind kind = EntityKind::subject;
  std::string id;
  AttributeMap attrs;

  /// Reads an attribute; "id" resolves to the entity's identity.
  std::optional<AttributeValue> attribute(std::string_view name) const;

  bool operator==(const Entity&) const = default;
};

enum class UseStatus : std::uint8_t { requested, activated, denied, stopped, completed };

inline constexpr int kStatusCount = 5;

std::string_view to_string(UseStatus status);
std::optional<UseStatus> parse_status(std::string_view text);
bool is_valid_status(UseStatus status);

/// Bit set over UseStatus.
class StatusSet {
 public:
  constexpr StatusSet() = default;
  constexpr StatusSet(std::initializer_list<UseStatus> statuses) {
    for (auto s : statuses) bits_ |= bit(s);
  }
  static constexpr StatusSet all() {
    StatusSet s;
    s.bits_ = (1u << kStatusCount) - 1;
    return s;
  }
  static constexpr StatusSet all_except(UseStatus status) {
    StatusSet s = all();
    s.bits_ &= ~bit(status);
    return s;
  }

  constexpr bool contains(UseStatus s) const { return (bits_ & bit(s)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint32_t bits() const { return bits_; }
  int size() const;

  /// "completed|stopped"
  std::string to_string() const;

  constexpr bool operator==(const StatusSet&) const = default;

 private:
  static constexpr std::uint32_t bit(UseStatus s) { return 1u << static_cast<unsigned>(s); }
  std::uint32_t bits_ = 0;
};

struct UseKey {
  std::string sid;
  std::string aid;
  std::string oid;

  /// "sid,aid,oid"
  std::string to_string() const;
  static std::optional<UseKey> parse(std::string_view text);

  auto operator<=>(const UseKey&) const = default;
};

/// Mutable attributed record instantiating one (subject, action, object) request.
struct Use {
  UseKey key;
  UseStatus st = UseStatus::requested;
  AttributeMap attrs;

  /// Reads st, sid, aid, oid, id (the (sid, oid, aid) tuple) or a declared attribute.
  std::optional<AttributeValue> attribute(std::string_view name) const;

  bool operator==(const Use&) const = default;
};

/// A system state: the use set U plus the logical clock.
struct World {
  std::vector<Use> uses;  // sorted by key, keys unique
  std::uint64_t tick = 0;

  const Use* find(const UseKey& key) const;
  /// Inserts or replaces by key, keeping the sort order.
  void put(Use use);

  bool operator==(const World&) const = default;
};

enum class ModelKind : std::uint8_t { pre, ongoing };

std::string_view to_string(ModelKind kind);
std::optional<ModelKind> parse_model(std::string_view text);

struct Rule;
struct Term;
using RulePtr = std::shared_ptr<const Rule>;
using TermPtr = std::shared_ptr<const Term>;

enum class UpdateProc : std::uint8_t { pre, den, com, on, stop };

inline constexpr int kUpdateProcCount = 5;

std::string_view to_string(UpdateProc proc);
std::optional<UpdateProc> parse_update_proc(std::string_view text);
/// Status each procedure sets when the description does not override it.
UseStatus default_target(UpdateProc proc);

struct UpdateSpec {
  UseStatus target = UseStatus::activated;
  std::vector<std::pair<std::string, TermPtr>> assignments;
};

using Domain = std::vector<AttributeValue>;

enum class SelectMode : std::uint8_t { smallest_id, strict };

/// Everything build_system needs.
struct SystemSpec {
  std::vector<Entity> subjects;
  std::vector<Entity> objects;
  std::vector<Entity> actions;
  ModelKind model = ModelKind::pre;
  RulePtr policy;  // null means "true"
  std::map<UpdateProc, UpdateSpec> updates;  // missing entries use default_target
  std::map<std::string, Domain, std::less<>> domains;  // use attributes; first value is initial
  SelectMode select = SelectMode::smallest_id;
};

/// Validated, immutable system configuration.
class SystemConfig {
 public:
  // Holds pointers into its own entity lists, so it moves but never copies.
  SystemConfig(const SystemConfig&) = delete;
  SystemConfig& operator=(const SystemConfig&) = delete;
  SystemConfig(SystemConfig&&) = default;
  SystemConfig& operator=(SystemConfig&&) = default;

  const std::vector<Entity>& subjects() const { return subjects_; }
  const std::vector<Entity>& objects() const { return objects_; }
  const std::vector<Entity>& actions() const { return actions_; }
  /// All entities sorted by id.
  const std::vector<const Entity*>& entities() const { return by_id_; }
  const Entity* entity(std::string_view id) const;

  ModelKind model() const { return model_; }
  const RulePtr& policy() const { return policy_; }
  const UpdateSpec& update(UpdateProc proc) const { return updates_[static_cast<int>(proc)]; }
  SelectMode select_mode() const { return select_; }

  /// Use attributes in sorted name order.
  const std::vector<std::string>& use_attributes() const { return use_attr_names_; }
  const Domain* domain(std::string_view attr) const;
  const std::map<std::string, Domain, std::less<>>& domains() const { return domains_; }

  /// S x A x O in lexicographic (sid, aid, oid) order.
  const std::vector<UseKey>& candidates() const { return candidates_; }

  /// True when some update assignment reads the logical clock; only then is
  /// the tick part of state identity.
  bool tick_dependent() const { return tick_dependent_; }

  /// True when some update procedure assigns a use attribute.
  bool mutates_attributes() const { return mutates_; }

 private:
  friend SystemConfig build_system(SystemSpec spec);
  SystemConfig() = default;

  std::vector<Entity> subjects_;
  std::vector<Entity> objects_;
  std::vector<Entity> actions_;
  std::vector<const Entity*> by_id_;
  ModelKind model_ = ModelKind::pre;
  RulePtr policy_;
  UpdateSpec updates_[kUpdateProcCount];
  SelectMode select_ = SelectMode::smallest_id;
  std::map<std::string, Domain, std::less<>> domains_;
  std::vector<std::string> use_attr_names_;
  std::vector<UseKey> candidates_;
  bool tick_dependent_ = false;
  bool mutates_ = false;
};

/// Validates the description and returns the configuration.
/// Throws DuplicateEntityId, DanglingReference, InvalidConfig, and the policy
/// engine's UnknownAttribute / TypeMismatch.
SystemConfig build_system(SystemSpec spec);

World initial_world();

/// A fresh use for `key` with status requested and every declared attribute at
/// its initial (first listed) domain value.
Use create_use(const UseKey& key, const SystemConfig& config);

/// U is a subset of Uses: ids reference entities of the right kind, st is one of
/// the five statuses, and the use carries exactly the declared attributes, each
/// inside its domain.
bool type_correctness(const World& world, const SystemConfig& config);

/// (sid, aid, oid) maps injectively to uses.
bool key_uniqueness(const World& world);

/// Canonical byte encoding of a state.
struct StateKey {
  std::string bytes;

  std::string hex() const;
  static std::optional<StateKey> from_hex(std::string_view hex);

  auto operator<=>(const StateKey&) const = default;
};

/// Uses in key order, attributes in name order; the tick is included only for
/// tick-dependent configurations.
StateKey canonical_encode(const World& world, const SystemConfig& config);
World canonical_decode(const StateKey& key, const SystemConfig& config);

/// One-line rendering of a world, e.g. "{s1,a1,o1:activated att=1}".
std::string describe(const World& world, const SystemConfig& config);

}  // namespace usecon
