#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "altprobe/datasets.hpp"

namespace altprobe {

enum class SynthKind { LinearSignal, PureNoise };

struct SynthScheme {
  SynthKind kind = SynthKind::LinearSignal;
  double sigma = 0.0;  // isotropic Gaussian noise on layers >= 1 (LinearSignal only)
};

struct SynthOptions {
  std::uint64_t seed = 0;
  SynthScheme scheme;
  std::uint32_t num_layers = 5;
  std::uint32_t hidden_dim = 32;
  std::string model_id = "synthetic";
};

/// Writes a deterministic ALTPROB1 store (plus sidecar) with one record per
/// FAVA sentence and one isolated-verb record per LaVA verb.
///
/// Tokens are whole words except inflected verbs, which split into the lemma
/// piece and a verb-specific "##suffix" piece; [CLS]/[SEP] wrap every
/// sequence and are masked out.  Layer 0 rows depend on token identity only.
///
/// Under LinearSignal, dimension f < 10 of both verb pieces' static rows carries
/// +a / -a for positive / negative membership in frame f (0 if
/// unannotated), dimension 10 of every content row at layers >= 1 carries
/// the sentence's grammaticality sign, and the remaining dimensions hold
/// label-free lexical identity.  Under PureNoise, layer 0 is lexical identity
/// only and layers >= 1 are i.i.d. standard normal.
void synth_store(const SynthOptions& options, const LavaDataset& lava, const FavaDataset& fava,
                 const std::filesystem::path& out);

/// Pseudo-word verb table with exactly the published per-frame positive and
/// negative tallies (516 verbs).
LavaDataset make_synthetic_lava(std::uint64_t seed);

/// Template-generated sentences over the verbs of `lava`; grammatical iff
/// the verb participates in the template's frame.
FavaDataset make_synthetic_fava(const LavaDataset& lava, std::uint64_t seed, std::size_t total = 9413);

}  // namespace altprobe
