#include "usecon/model.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <set>

#include "usecon/policy.hpp"

namespace usecon {

namespace {

constexpr std::array<std::string_view, kStatusCount> kStatusNames = {
    "requested", "activated", "denied", "stopped", "completed"};

constexpr std::array<std::string_view, kUpdateProcCount> kProcNames = {
    "preUpdate", "denUpdate", "comUpdate", "onUpdate", "stopUpdate"};

bool valid_identifier(std::string_view id) {
  if (id.empty()) return false;
  return std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-' || c == '.';
  });
}

std::optional<std::int64_t> parse_int(std::string_view text) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

}  // namespace

std::string_view to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::subject: return "subject";
    case EntityKind::object: return "object";
    case EntityKind::action: return "action";
  }
  return "?";
}

std::string_view to_string(ValueTag tag) {
  switch (tag) {
    case ValueTag::integer: return "integer";
    case ValueTag::token: return "token";
    case ValueTag::identity: return "identity";
    case ValueTag::identity_tuple: return "identity-tuple";
  }
  return "?";
}

std::string AttributeValue::to_string() const {
  switch (tag()) {
    case ValueTag::integer: return std::to_string(as_int());
    case ValueTag::token: return "\"" + as_token().text + "\"";
    case ValueTag::identity: return "@" + as_identity().id;
    case ValueTag::identity_tuple: {
      std::string out = "<";
      const auto& ids = as_tuple().ids;
      for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ',';
        out += '@';
        out += ids[i];
      }
      return out + ">";
    }
  }
  return {};
}

AttributeValue parse_value(std::string_view text) {
  if (text.empty()) throw InvalidConfig("empty attribute value");
  if (auto v = parse_int(text)) return *v;
  if (text.front() == '"') {
    if (text.size() < 2 || text.back() != '"') throw InvalidConfig("unterminated token: " + std::string(text));
    return AttributeValue::token(std::string(text.substr(1, text.size() - 2)));
  }
  if (text.front() == '@') return AttributeValue::identity(std::string(text.substr(1)));
  if (text.front() == '<') {
    if (text.back() != '>') throw InvalidConfig("unterminated tuple: " + std::string(text));
    IdentityTuple tuple;
    std::string_view body = text.substr(1, text.size() - 2);
    while (!body.empty()) {
      auto comma = body.find(',');
      auto item = body.substr(0, comma);
      if (item.empty() || item.front() != '@') throw InvalidConfig("tuple items must be @identities: " + std::string(text));
      tuple.ids.emplace_back(item.substr(1));
      if (comma == std::string_view::npos) break;
      body.remove_prefix(comma + 1);
    }
    return tuple;
  }
  return AttributeValue::token(std::string(text));
}

std::optional<AttributeValue> Entity::attribute(std::string_view name) const {
  if (name == "id") return AttributeValue::identity(id);
  auto it = attrs.find(name);
  if (it == attrs.end()) return std::nullopt;
  return it->second;
}

std::string_view to_string(UseStatus status) {
  auto i = static_cast<std::size_t>(status);
  return i < kStatusNames.size() ? kStatusNames[i] : std::string_view("invalid");
}

std::optional<UseStatus> parse_status(std::string_view text) {
  for (std::size_t i = 0; i < kStatusNames.size(); ++i)
    if (kStatusNames[i] == text) return static_cast<UseStatus>(i);
  return std::nullopt;
}

bool is_valid_status(UseStatus status) { return static_cast<int>(status) < kStatusCount; }

int StatusSet::size() const { return std::popcount(bits_); }

std::string StatusSet::to_string() const {
  std::string out;
  for (int i = 0; i < kStatusCount; ++i) {
    auto s = static_cast<UseStatus>(i);
    if (!contains(s)) continue;
    if (!out.empty()) out += '|';
    out += usecon::to_string(s);
  }
  return out.empty() ? "none" : out;
}

std::string UseKey::to_string() const { return sid + "," + aid + "," + oid; }

std::optional<UseKey> UseKey::parse(std::string_view text) {
  auto c1 = text.find(',');
  if (c1 == std::string_view::npos) return std::nullopt;
  auto c2 = text.find(',', c1 + 1);
  if (c2 == std::string_view::npos || text.find(',', c2 + 1) != std::string_view::npos) return std::nullopt;
  return UseKey{std::string(text.substr(0, c1)), std::string(text.substr(c1 + 1, c2 - c1 - 1)),
                std::string(text.substr(c2 + 1))};
}

std::optional<AttributeValue> Use::attribute(std::string_view name) const {
  if (name == "st") return AttributeValue::token(std::string(to_string(st)));
  if (name == "sid") return AttributeValue::identity(key.sid);
  if (name == "aid") return AttributeValue::identity(key.aid);
  if (name == "oid") return AttributeValue::identity(key.oid);
  if (name == "id") return IdentityTuple{{key.sid, key.oid, key.aid}};
  auto it = attrs.find(name);
  if (it == attrs.end()) return std::nullopt;
  return it->second;
}

const Use* World::find(const UseKey& key) const {
  auto it = std::lower_bound(uses.begin(), uses.end(), key,
                             [](const Use& u, const UseKey& k) { return u.key < k; });
  return (it != uses.end() && it->key == key) ? &*it : nullptr;
}

void World::put(Use use) {
  auto it = std::lower_bound(uses.begin(), uses.end(), use.key,
                             [](const Use& u, const UseKey& k) { return u.key < k; });
  if (it != uses.end() && it->key == use.key)
    *it = std::move(use);
  else
    uses.insert(it, std::move(use));
}

std::string_view to_string(ModelKind kind) { return kind == ModelKind::pre ? "pre" : "ongoing"; }

std::optional<ModelKind> parse_model(std::string_view text) {
  if (text == "pre") return ModelKind::pre;
  if (text == "ongoing") return ModelKind::ongoing;
  return std::nullopt;
}

std::string_view to_string(UpdateProc proc) { return kProcNames[static_cast<std::size_t>(proc)]; }

std::optional<UpdateProc> parse_update_proc(std::string_view text) {
  for (std::size_t i = 0; i < kProcNames.size(); ++i)
    if (kProcNames[i] == text) return static_cast<UpdateProc>(i);
  return std::nullopt;
}

UseStatus default_target(UpdateProc proc) {
  switch (proc) {
    case UpdateProc::pre: return UseStatus::activated;
    case UpdateProc::den: return UseStatus::denied;
    case UpdateProc::com: return UseStatus::completed;
    case UpdateProc::on: return UseStatus::activated;
    case UpdateProc::stop: return UseStatus::stopped;
  }
  return UseStatus::activated;
}

const Entity* SystemConfig::entity(std::string_view id) const {
  auto it = std::lower_bound(by_id_.begin(), by_id_.end(), id,
                             [](const Entity* e, std::string_view k) { return e->id < k; });
  return (it != by_id_.end() && (*it)->id == id) ? *it : nullptr;
}

const Domain* SystemConfig::domain(std::string_view attr) const {
  auto it = domains_.find(attr);
  return it == domains_.end() ? nullptr : &it->second;
}

SystemConfig build_system(SystemSpec spec) {
  SystemConfig cfg;
  cfg.subjects_ = std::move(spec.subjects);
  cfg.objects_ = std::move(spec.objects);
  cfg.actions_ = std::move(spec.actions);
  cfg.model_ = spec.model;
  cfg.select_ = spec.select;
  cfg.policy_ = spec.policy ? spec.policy : rules::constant(true);

  auto fix_kind = [](std::vector<Entity>& list, EntityKind kind) {
    for (auto& e : list) e.kind = kind;
  };
  fix_kind(cfg.subjects_, EntityKind::subject);
  fix_kind(cfg.objects_, EntityKind::object);
  fix_kind(cfg.actions_, EntityKind::action);

  for (auto* list : {&cfg.subjects_, &cfg.objects_, &cfg.actions_})
    for (const auto& e : *list) {
      if (!valid_identifier(e.id)) throw InvalidConfig("invalid entity id: '" + e.id + "'");
      cfg.by_id_.push_back(&e);
    }
  std::sort(cfg.by_id_.begin(), cfg.by_id_.end(), [](auto* a, auto* b) { return a->id < b->id; });
  for (std::size_t i = 1; i < cfg.by_id_.size(); ++i)
    if (cfg.by_id_[i - 1]->id == cfg.by_id_[i]->id) throw DuplicateEntityId(cfg.by_id_[i]->id);

  for (const Entity* e : cfg.by_id_)
    for (const auto& [name, value] : e->attrs) {
      if (value.tag() == ValueTag::identity && !cfg.entity(value.as_identity().id))
        throw DanglingReference(name, value.as_identity().id);
      if (value.tag() == ValueTag::identity_tuple)
        for (const auto& id : value.as_tuple().ids)
          if (!cfg.entity(id)) throw DanglingReference(name, id);
    }

  static const std::set<std::string, std::less<>> kReserved = {"st", "sid", "aid", "oid", "id"};
  for (auto& [name, dom] : spec.domains) {
    if (kReserved.count(name)) throw InvalidConfig("use attribute name is reserved: " + name);
    if (dom.empty()) throw InvalidConfig("empty domain for use attribute: " + name);
    for (const auto& v : dom)
      if (v.tag() != dom.front().tag()) throw InvalidConfig("mixed value tags in domain of " + name);
    std::set<AttributeValue> seen(dom.begin(), dom.end());
    if (seen.size() != dom.size()) throw InvalidConfig("repeated value in domain of " + name);
    cfg.use_attr_names_.push_back(name);
  }
  cfg.domains_ = std::move(spec.domains);

  for (int i = 0; i < kUpdateProcCount; ++i) {
    auto proc = static_cast<UpdateProc>(i);
    auto it = spec.updates.find(proc);
    cfg.updates_[i] = it != spec.updates.end() ? std::move(it->second) : UpdateSpec{default_target(proc), {}};
  }

  for (const auto& s : cfg.subjects_)
    for (const auto& a : cfg.actions_)
      for (const auto& o : cfg.objects_) cfg.candidates_.push_back({s.id, a.id, o.id});
  std::sort(cfg.candidates_.begin(), cfg.candidates_.end());

  for (const auto& spec_i : cfg.updates_) {
    std::set<std::string_view> assigned;
    for (const auto& [name, term] : spec_i.assignments) {
      const Domain* dom = cfg.domain(name);
      if (!dom) throw UnknownAttribute(name);
      if (!assigned.insert(name).second) throw InvalidConfig("attribute assigned twice: " + name);
      ValueTag produced = check_update_term(*term, cfg);
      if (produced != dom->front().tag())
        throw TypeMismatch("assign " + name,
                           std::string(to_string(produced)) + " vs " + std::string(to_string(dom->front().tag())));
      cfg.mutates_ = true;
      if (reads_tick(*term)) cfg.tick_dependent_ = true;
    }
  }

  check_policy(*cfg.policy_, cfg);
  if (reads_tick(*cfg.policy_)) cfg.tick_dependent_ = true;
  return cfg;
}

World initial_world() { return World{}; }

Use create_use(const UseKey& key, const SystemConfig& config) {
  Use use{key, UseStatus::requested, {}};
  for (const auto& [name, dom] : config.domains()) use.attrs.emplace(name, dom.front());
  return use;
}

bool type_correctness(const World& world, const SystemConfig& config) {
  for (const auto& use : world.uses) {
    const Entity* s = config.entity(use.key.sid);
    const Entity* a = config.entity(use.key.aid);
    const Entity* o = config.entity(use.key.oid);
    if (!s || s->kind != EntityKind::subject) return false;
    if (!a || a->kind != EntityKind::action) return false;
    if (!o || o->kind != EntityKind::object) return false;
    if (!is_valid_status(use.st)) return false;
    if (use.attrs.size() != config.domains().size()) return false;
    for (const auto& [name, value] : use.attrs) {
      const Domain* dom = config.domain(name);
      if (!dom || std::find(dom->begin(), dom->end(), value) == dom->end()) return false;
    }
  }
  return true;
}

bool key_uniqueness(const World& world) {
  std::set<UseKey> keys;
  for (const auto& use : world.uses)
    if (!keys.insert(use.key).second) return false;
  return true;
}

namespace {

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_str(std::string& out, std::string_view s) {
  put_u64(out, s.size());
  out.append(s);
}

void put_value(std::string& out, const AttributeValue& v) {
  out.push_back(static_cast<char>(v.tag()));
  switch (v.tag()) {
    case ValueTag::integer: put_u64(out, static_cast<std::uint64_t>(v.as_int())); break;
    case ValueTag::token: put_str(out, v.as_token().text); break;
    case ValueTag::identity: put_str(out, v.as_identity().id); break;
    case ValueTag::identity_tuple:
      put_u64(out, v.as_tuple().ids.size());
      for (const auto& id : v.as_tuple().ids) put_str(out, id);
      break;
  }
}

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::uint8_t byte() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::string str() {
    auto n = u64();
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  AttributeValue value() {
    switch (static_cast<ValueTag>(byte())) {
      case ValueTag::integer: return static_cast<std::int64_t>(u64());
      case ValueTag::token: return AttributeValue::token(str());
      case ValueTag::identity: return AttributeValue::identity(str());
      case ValueTag::identity_tuple: {
        IdentityTuple t;
        auto n = u64();
        for (std::uint64_t i = 0; i < n; ++i) t.ids.push_back(str());
        return t;
      }
    }
    throw Error("state key: bad value tag");
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (data_.size() - pos_ < n) throw Error("state key: truncated");
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string StateKey::hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (unsigned char c : bytes) {
    out.push_back(kDigits[c >> 4]);
    out.push_back(kDigits[c & 15]);
  }
  return out;
}

std::optional<StateKey> StateKey::from_hex(std::string_view hex) {
  if (hex.size() % 2) return std::nullopt;
  StateKey key;
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    unsigned v = 0;
    auto [ptr, ec] = std::from_chars(hex.data() + i, hex.data() + i + 2, v, 16);
    if (ec != std::errc{} || ptr != hex.data() + i + 2) return std::nullopt;
    key.bytes.push_back(static_cast<char>(v));
  }
  return key;
}

StateKey canonical_encode(const World& world, const SystemConfig& config) {
  StateKey key;
  if (config.tick_dependent()) put_u64(key.bytes, world.tick);
  put_u64(key.bytes, world.uses.size());
  // World keeps uses sorted by key and AttributeMap is ordered by name.
  for (const auto& use : world.uses) {
    put_str(key.bytes, use.key.sid);
    put_str(key.bytes, use.key.aid);
    put_str(key.bytes, use.key.oid);
    key.bytes.push_back(static_cast<char>(use.st));
    put_u64(key.bytes, use.attrs.size());
    for (const auto& [name, value] : use.attrs) {
      put_str(key.bytes, name);
      put_value(key.bytes, value);
    }
  }
  return key;
}

World canonical_decode(const StateKey& key, const SystemConfig& config) {
  Reader in(key.bytes);
  World world;
  if (config.tick_dependent()) world.tick = in.u64();
  auto n = in.u64();
  for (std::uint64_t i = 0; i < n; ++i) {
    Use use;
    use.key.sid = in.str();
    use.key.aid = in.str();
    use.key.oid = in.str();
    use.st = static_cast<UseStatus>(in.byte());
    auto attrs = in.u64();
    for (std::uint64_t j = 0; j < attrs; ++j) {
      auto name = in.str();
      use.attrs.emplace(std::move(name), in.value());
    }
    world.uses.push_back(std::move(use));
  }
  if (!in.done()) throw Error("state key: trailing bytes");
  return world;
}

std::string describe(const World& world, const SystemConfig& config) {
  std::string out = "{";
  for (std::size_t i = 0; i < world.uses.size(); ++i) {
    const auto& use = world.uses[i];
    if (i) out += "; ";
    out += use.key.to_string();
    out += ':';
    out += to_string(use.st);
    for (const auto& [name, value] : use.attrs) out += " " + name + "=" + value.to_string();
  }
  out += "}";
  if (config.tick_dependent()) out += " tick=" + std::to_string(world.tick);
  return out;
}

}  // namespace usecon
