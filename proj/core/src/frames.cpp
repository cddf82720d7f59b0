#include "altprobe/frames.hpp"

namespace altprobe {
namespace {

constexpr std::array<std::string_view, kNumFrames> kFrameTokens = {
    "caus_inch.inchoative", "caus_inch.causative", "dative.prep",     "dative.double_obj",
    "spray_load.with",      "spray_load.locative", "there.no_there",  "there.there",
    "understood.refl",      "understood.non_refl"};

constexpr std::array<std::string_view, kNumAlternations> kAlternationTokens = {
    "caus_inch", "dative", "spray_load", "there", "understood"};

}  // namespace

std::array<FrameId, kNumFrames> all_frames() {
  std::array<FrameId, kNumFrames> out = {
      FrameId::inchoative(),      FrameId::causative(),           FrameId::dative_prep(),
      FrameId::dative_double_obj(), FrameId::spray_load_with(),   FrameId::spray_load_locative(),
      FrameId::no_there(),        FrameId::there(),               FrameId::understood_refl(),
      FrameId::understood_non_refl()};
  return out;
}

std::string_view frame_token(FrameId f) { return kFrameTokens[f.index()]; }

std::optional<FrameId> parse_frame(std::string_view token) {
  for (std::size_t i = 0; i < kFrameTokens.size(); ++i) {
    if (kFrameTokens[i] == token) return FrameId::from_index(i);
  }
  return std::nullopt;
}

std::string_view alternation_token(Alternation a) {
  return kAlternationTokens[static_cast<std::size_t>(a)];
}

std::optional<Alternation> parse_alternation(std::string_view token) {
  for (std::size_t i = 0; i < kAlternationTokens.size(); ++i) {
    if (kAlternationTokens[i] == token) return kAllAlternations[i];
  }
  return std::nullopt;
}

}  // namespace altprobe
