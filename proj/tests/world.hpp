#pragma once

#include <memory>

#include "altprobe/aggregate.hpp"
#include "altprobe/datasets.hpp"
#include "altprobe/synth.hpp"
#include "scratch.hpp"

namespace altprobe::testing {

/// Synthetic LaVA/FAVA pair plus a store and the verb features built from it.
struct World {
  World(LavaDataset l, FavaDataset f) : lava(std::move(l)), fava(std::move(f)), store(dir / "world.altp") {}

  TempDir dir;
  LavaDataset lava;
  FavaDataset fava;
  std::filesystem::path store;
  VerbFeatures features;
};

inline std::unique_ptr<World> make_world(SynthScheme scheme, std::uint64_t seed, std::size_t sentences = 2500,
                                         std::uint32_t layers = 3, std::uint32_t dim = 24) {
  auto lava = make_synthetic_lava(seed);
  auto fava = make_synthetic_fava(lava, seed, sentences);
  auto w = std::make_unique<World>(std::move(lava), std::move(fava));
  SynthOptions o;
  o.seed = seed;
  o.scheme = scheme;
  o.num_layers = layers;
  o.hidden_dim = dim;
  synth_store(o, w->lava, w->fava, w->store);
  w->features = build_verb_features(w->lava, w->fava, w->store);
  return w;
}

/// Noise-free LinearSignal world shared by the tests of one binary.
inline const World& signal_world() {
  static const auto w = make_world({SynthKind::LinearSignal, 0.0}, 1);
  return *w;
}

}  // namespace altprobe::testing
