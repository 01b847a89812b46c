#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "usecon/model.hpp"
#include "usecon/transition.hpp"

namespace usecon {

/// ActionLabel packed into 32 bits: kind (3) | outcome+1 (3) | candidate slot (26).
struct PackedLabel {
  std::uint32_t bits = 0;

  ActionKind kind() const { return static_cast<ActionKind>(bits & 7u); }
  std::optional<Outcome> outcome() const {
    auto o = (bits >> 3) & 7u;
    return o ? std::optional<Outcome>(static_cast<Outcome>(o - 1)) : std::nullopt;
  }
  std::uint32_t slot() const { return bits >> 6; }

  static PackedLabel make(ActionKind kind, std::optional<Outcome> outcome, std::uint32_t slot) {
    std::uint32_t o = outcome ? static_cast<std::uint32_t>(*outcome) + 1 : 0;
    return {static_cast<std::uint32_t>(kind) | (o << 3) | (slot << 6)};
  }

  bool operator==(const PackedLabel&) const = default;
};

/// Fixed-width state layout for the explorer's store: one record per
/// candidate use (status byte, 0 = absent, then one domain index per declared
/// attribute), followed by a 32-bit tick for tick-dependent configurations.
class PackedCodec {
 public:
  explicit PackedCodec(const SystemConfig& config);

  std::size_t width() const { return width_; }
  std::size_t slots() const { return slots_; }

  /// False when the world is not representable: an attribute outside its
  /// domain, a use that is not a candidate, or an overflowing tick.
  bool encode(const World& world, std::uint8_t* out) const;
  World decode(const std::uint8_t* in) const;

  /// 0 when the slot's use is absent, otherwise status + 1.
  std::uint8_t status_code(const std::uint8_t* key, std::size_t slot) const { return key[slot * stride_]; }
  void set_status_code(std::uint8_t* key, std::size_t slot, std::uint8_t code) const { key[slot * stride_] = code; }
  std::optional<UseStatus> status(const std::uint8_t* key, std::size_t slot) const {
    auto c = status_code(key, slot);
    return c ? std::optional<UseStatus>(static_cast<UseStatus>(c - 1)) : std::nullopt;
  }

  bool has_tick() const { return has_tick_; }
  std::uint32_t tick(const std::uint8_t* key) const;
  void set_tick(std::uint8_t* key, std::uint32_t tick) const;

  /// Slot of a candidate key, if it is one.
  std::optional<std::uint32_t> slot_of(const UseKey& key) const;
  const UseKey& key_of(std::uint32_t slot) const { return config_.candidates()[slot]; }

  PackedLabel pack(const ActionLabel& label) const;
  ActionLabel unpack(PackedLabel label) const;

  const SystemConfig& config() const { return config_; }

 private:
  const SystemConfig& config_;
  std::size_t slots_ = 0;
  std::size_t attr_count_ = 0;
  std::size_t attr_width_ = 1;
  std::size_t stride_ = 1;
  std::size_t width_ = 0;
  bool has_tick_ = false;
};

struct PackedSuccessor {
  static constexpr std::uint32_t kNoSide = 0xffffffffu;

  PackedLabel label;
  /// Index into SuccessorBuffer::side when the full Step was kept.
  std::uint32_t side = kNoSide;
  bool stutter = false;
  /// False when the post-state left the packed layout (domain violation).
  bool encodable = true;
};

/// Successors of one state: keys are stored back to back, codec.width() bytes
/// per item, in the same order as items.
struct SuccessorBuffer {
  std::vector<std::uint8_t> keys;
  std::vector<PackedSuccessor> items;
  std::vector<Step> side;

  void clear() {
    keys.clear();
    items.clear();
    side.clear();
  }
  const std::uint8_t* key(std::size_t i, std::size_t width) const { return keys.data() + i * width; }
};

/// Successor relation over packed states. Status-only updates under a
/// constant policy are applied on the bytes directly; everything else decodes
/// the world and goes through the transition functions. Produces the same
/// steps, in the same order, as successors().
class SuccessorKernel {
 public:
  explicit SuccessorKernel(const PackedCodec& codec);

  /// Appends the successors of `key` to `out`; returns how many were added.
  std::size_t expand(const std::uint8_t* key, SuccessorBuffer& out) const;

 private:
  const PackedCodec& codec_;
  std::optional<bool> constant_policy_;
  bool trivial_update_[kUpdateProcCount] = {};
};

/// 64-bit hash of a packed key.
std::uint64_t hash_key(const std::uint8_t* key, std::size_t width);

}  // namespace usecon
