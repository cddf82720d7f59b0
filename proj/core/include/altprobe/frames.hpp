#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace altprobe {

enum class Alternation {
  CausativeInchoative,
  Dative,
  SprayLoad,
  ThereInsertion,
  UnderstoodObject,
};

inline constexpr std::size_t kNumAlternations = 5;
inline constexpr std::size_t kNumFrames = 10;

inline constexpr std::array<Alternation, kNumAlternations> kAllAlternations = {
    Alternation::CausativeInchoative, Alternation::Dative, Alternation::SprayLoad,
    Alternation::ThereInsertion, Alternation::UnderstoodObject};

/// Which of the two syntactic frames of an alternation.  The meaning of
/// First/Second depends on the alternation; see frame_token().
enum class FrameSlot { First, Second };

/// One of the ten (alternation, frame) pairs.  Construction goes through
/// the named factories or parse_frame(), so an instance is always legal.
class FrameId {
 public:
  static constexpr FrameId inchoative() { return {Alternation::CausativeInchoative, FrameSlot::First}; }
  static constexpr FrameId causative() { return {Alternation::CausativeInchoative, FrameSlot::Second}; }
  static constexpr FrameId dative_prep() { return {Alternation::Dative, FrameSlot::First}; }
  static constexpr FrameId dative_double_obj() { return {Alternation::Dative, FrameSlot::Second}; }
  static constexpr FrameId spray_load_with() { return {Alternation::SprayLoad, FrameSlot::First}; }
  static constexpr FrameId spray_load_locative() { return {Alternation::SprayLoad, FrameSlot::Second}; }
  static constexpr FrameId no_there() { return {Alternation::ThereInsertion, FrameSlot::First}; }
  static constexpr FrameId there() { return {Alternation::ThereInsertion, FrameSlot::Second}; }
  static constexpr FrameId understood_refl() { return {Alternation::UnderstoodObject, FrameSlot::First}; }
  static constexpr FrameId understood_non_refl() { return {Alternation::UnderstoodObject, FrameSlot::Second}; }

  static constexpr FrameId from_index(std::size_t i) {
    return {kAllAlternations[i / 2], i % 2 == 0 ? FrameSlot::First : FrameSlot::Second};
  }

  constexpr Alternation alternation() const { return alternation_; }
  constexpr FrameSlot slot() const { return slot_; }
  /// Column position in the canonical LaVA header (0..9).
  constexpr std::size_t index() const {
    return static_cast<std::size_t>(alternation_) * 2 + (slot_ == FrameSlot::First ? 0 : 1);
  }

  constexpr auto operator<=>(const FrameId& o) const { return index() <=> o.index(); }
  constexpr bool operator==(const FrameId& o) const { return index() == o.index(); }

 private:
  constexpr FrameId(Alternation a, FrameSlot s) : alternation_(a), slot_(s) {}
  Alternation alternation_;
  FrameSlot slot_;
};

/// All ten frames in canonical column order.
std::array<FrameId, kNumFrames> all_frames();

/// Fixed file tokens, e.g. "spray_load.with".
std::string_view frame_token(FrameId f);
std::optional<FrameId> parse_frame(std::string_view token);

/// Alternation tokens as they appear in FAVA files: "caus_inch", "dative",
/// "spray_load", "there", "understood".
std::string_view alternation_token(Alternation a);
std::optional<Alternation> parse_alternation(std::string_view token);

}  // namespace altprobe
