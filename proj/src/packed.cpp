#include "usecon/packed.hpp"

#include <algorithm>
#include <cstring>
#include <limits>

namespace usecon {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

}  // namespace

std::uint64_t hash_key(const std::uint8_t* key, std::size_t width) {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ width;
  std::size_t i = 0;
  for (; i + 8 <= width; i += 8) {
    std::uint64_t w;
    std::memcpy(&w, key + i, 8);
    h = mix(h ^ w) + 0x9e3779b97f4a7c15ULL;
  }
  if (i < width) {
    std::uint64_t w = 0;
    std::memcpy(&w, key + i, width - i);
    h = mix(h ^ w ^ (std::uint64_t(width - i) << 56));
  }
  return mix(h);
}

PackedCodec::PackedCodec(const SystemConfig& config) : config_(config) {
  slots_ = config.candidates().size();
  if (slots_ >= (1u << 26)) throw InvalidConfig("too many candidate uses for the packed layout");
  attr_count_ = config.use_attributes().size();
  std::size_t largest = 1;
  for (const auto& [name, dom] : config.domains()) largest = std::max(largest, dom.size());
  attr_width_ = largest <= 0xff ? 1 : 2;
  if (largest > 0xffff) throw InvalidConfig("attribute domain too large for the packed layout");
  stride_ = 1 + attr_count_ * attr_width_;
  has_tick_ = config.tick_dependent();
  width_ = slots_ * stride_ + (has_tick_ ? 4 : 0);
}

std::optional<std::uint32_t> PackedCodec::slot_of(const UseKey& key) const {
  const auto& c = config_.candidates();
  auto it = std::lower_bound(c.begin(), c.end(), key);
  if (it == c.end() || *it != key) return std::nullopt;
  return static_cast<std::uint32_t>(it - c.begin());
}

bool PackedCodec::encode(const World& world, std::uint8_t* out) const {
  std::memset(out, 0, width_);
  for (const auto& use : world.uses) {
    auto slot = slot_of(use.key);
    if (!slot || !is_valid_status(use.st)) return false;
    std::uint8_t* rec = out + *slot * stride_;
    if (rec[0] != 0) return false;
    rec[0] = static_cast<std::uint8_t>(use.st) + 1;
    if (use.attrs.size() != attr_count_) return false;
    std::size_t i = 0;
    for (const auto& [name, dom] : config_.domains()) {
      auto it = use.attrs.find(name);
      if (it == use.attrs.end()) return false;
      auto pos = std::find(dom.begin(), dom.end(), it->second);
      if (pos == dom.end()) return false;
      auto index = static_cast<std::size_t>(pos - dom.begin());
      std::uint8_t* field = rec + 1 + i * attr_width_;
      field[0] = static_cast<std::uint8_t>(index & 0xff);
      if (attr_width_ == 2) field[1] = static_cast<std::uint8_t>(index >> 8);
      ++i;
    }
  }
  if (has_tick_) {
    if (world.tick > std::numeric_limits<std::uint32_t>::max()) return false;
    set_tick(out, static_cast<std::uint32_t>(world.tick));
  }
  return true;
}

World PackedCodec::decode(const std::uint8_t* in) const {
  World world;
  for (std::size_t slot = 0; slot < slots_; ++slot) {
    const std::uint8_t* rec = in + slot * stride_;
    if (rec[0] == 0) continue;
    Use use{config_.candidates()[slot], static_cast<UseStatus>(rec[0] - 1), {}};
    std::size_t i = 0;
    for (const auto& [name, dom] : config_.domains()) {
      const std::uint8_t* field = rec + 1 + i * attr_width_;
      std::size_t index = field[0] | (attr_width_ == 2 ? std::size_t(field[1]) << 8 : 0);
      use.attrs.emplace(name, dom.at(index));
      ++i;
    }
    world.uses.push_back(std::move(use));
  }
  if (has_tick_) world.tick = tick(in);
  return world;
}

std::uint32_t PackedCodec::tick(const std::uint8_t* key) const {
  std::uint32_t t;
  std::memcpy(&t, key + slots_ * stride_, 4);
  return t;
}

void PackedCodec::set_tick(std::uint8_t* key, std::uint32_t tick) const {
  std::memcpy(key + slots_ * stride_, &tick, 4);
}

PackedLabel PackedCodec::pack(const ActionLabel& label) const {
  auto slot = slot_of(label.key);
  if (!slot) throw Error("label references a non-candidate use: " + label.key.to_string());
  return PackedLabel::make(label.kind, label.outcome, *slot);
}

ActionLabel PackedCodec::unpack(PackedLabel label) const {
  return ActionLabel{label.kind(), key_of(label.slot()), label.outcome()};
}

SuccessorKernel::SuccessorKernel(const PackedCodec& codec) : codec_(codec) {
  const auto& config = codec.config();
  if (const auto* c = std::get_if<Rule::Const>(&config.policy()->node)) constant_policy_ = c->value;
  for (int i = 0; i < kUpdateProcCount; ++i)
    trivial_update_[i] = config.update(static_cast<UpdateProc>(i)).assignments.empty();
}

std::size_t SuccessorKernel::expand(const std::uint8_t* key, SuccessorBuffer& out) const {
  const auto& config = codec_.config();
  const std::size_t width = codec_.width();
  const std::size_t slots = codec_.slots();
  const std::size_t before = out.items.size();
  std::optional<World> world;  // decoded on first slow-path action

  auto push_key = [&](const std::uint8_t* src) {
    auto at = out.keys.size();
    out.keys.resize(at + width);
    std::memcpy(out.keys.data() + at, src, width);
    return out.keys.data() + at;
  };

  auto bump_tick = [&](std::uint8_t* k) {
    if (codec_.has_tick()) codec_.set_tick(k, codec_.tick(k) + 1);
  };

  // Status-only update on the bytes.
  auto fast = [&](ActionKind kind, std::optional<Outcome> outcome, std::uint32_t slot, UpdateProc proc) {
    std::uint8_t* k = push_key(key);
    auto code = static_cast<std::uint8_t>(static_cast<std::uint8_t>(config.update(proc).target) + 1);
    PackedSuccessor item{PackedLabel::make(kind, outcome, slot)};
    if (codec_.status_code(k, slot) == code) {
      item.stutter = true;
    } else {
      codec_.set_status_code(k, slot, code);
      bump_tick(k);
    }
    out.items.push_back(item);
  };

  auto slow = [&](ActionKind kind, std::uint32_t slot) {
    if (!world) world = codec_.decode(key);
    Step s = step_unchecked(*world, kind, codec_.key_of(slot), config);
    PackedSuccessor item{codec_.pack(s.label)};
    item.stutter = s.stutter;
    auto at = out.keys.size();
    out.keys.resize(at + width);
    item.encodable = codec_.encode(s.post, out.keys.data() + at);
    if (!item.encodable || s.diagnostic || s.domain_violation) {
      item.side = static_cast<std::uint32_t>(out.side.size());
      out.side.push_back(std::move(s));
    }
    out.items.push_back(item);
  };

  for (std::uint32_t slot = 0; slot < slots; ++slot) {
    if (codec_.status_code(key, slot) != 0) continue;
    std::uint8_t* k = push_key(key);
    // Absent records are all zero, which is also every attribute's initial index.
    codec_.set_status_code(k, slot, static_cast<std::uint8_t>(UseStatus::requested) + 1);
    bump_tick(k);
    out.items.push_back(PackedSuccessor{PackedLabel::make(ActionKind::request, std::nullopt, slot)});
  }

  const bool pre_model = config.model() == ModelKind::pre;
  for (std::uint32_t slot = 0; slot < slots; ++slot) {
    auto st = codec_.status(key, slot);
    if (!st) continue;
    if (*st == UseStatus::requested) {
      if (pre_model) {
        if (constant_policy_) {
          auto proc = *constant_policy_ ? UpdateProc::pre : UpdateProc::den;
          if (trivial_update_[static_cast<int>(proc)]) {
            fast(ActionKind::pre_evaluate, *constant_policy_ ? Outcome::permitted : Outcome::denied, slot, proc);
            continue;
          }
        }
        slow(ActionKind::pre_evaluate, slot);
      } else if (trivial_update_[static_cast<int>(UpdateProc::pre)]) {
        fast(ActionKind::activate, std::nullopt, slot, UpdateProc::pre);
      } else {
        slow(ActionKind::activate, slot);
      }
    } else if (*st == UseStatus::activated) {
      if (!pre_model) {
        bool done = false;
        if (constant_policy_) {
          auto proc = *constant_policy_ ? UpdateProc::on : UpdateProc::stop;
          if (trivial_update_[static_cast<int>(proc)]) {
            fast(ActionKind::on_evaluate, *constant_policy_ ? Outcome::unchanged : Outcome::stopped, slot, proc);
            done = true;
          }
        }
        if (!done) slow(ActionKind::on_evaluate, slot);
      }
      if (trivial_update_[static_cast<int>(UpdateProc::com)])
        fast(ActionKind::complete, std::nullopt, slot, UpdateProc::com);
      else
        slow(ActionKind::complete, slot);
    }
  }
  return out.items.size() - before;
}

}  // namespace usecon
