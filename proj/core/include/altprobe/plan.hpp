#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "altprobe/experiments.hpp"
#include "altprobe/report.hpp"

namespace altprobe {

/// Declarative sweep description, read from `key = value` text:
///
///     lava = data/lava.tsv
///     fava = data/fava.tsv
///     store = bert.altp
///     frames = spray_load.with        # or "all" (non-degenerate frames)
///     layers = 8,9,10                 # or "all"
///     probes = linear,mlp1,mlp2
///     k = 20,100,300,500              # each value is its own cell
///     p = 0.1,0.3,0.5,0.7,0.9
///     l2 = 0.01,0.1,0.2,0.5,1
///     include_default = true
///     seed = 7
///     out = sweep.csv
///
/// Relative paths resolve against the plan file's directory.
struct ExperimentPlan {
  std::filesystem::path lava;
  std::filesystem::path fava;
  std::filesystem::path store;
  std::filesystem::path out;
  std::vector<FrameId> frames;     // empty = every non-degenerate frame
  std::vector<std::size_t> layers; // empty = every layer in the store
  std::vector<ProbeKind> probes{ProbeKind::Linear};
  std::vector<std::size_t> k_values;
  std::vector<double> p_values;
  std::vector<double> l2_values;
  bool include_default = true;
  std::uint64_t seed = 0;
  std::size_t folds = 4;
  std::size_t threads = 1;
  std::size_t hidden_size = 768;
  std::size_t max_iters = 1000;
  double grad_tol = 1e-8;
  ExportFormat format = ExportFormat::Csv;
};

/// Throws InvalidConfig on unknown keys or unparsable values.
ExperimentPlan parse_plan(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentPlan load_plan(const std::filesystem::path& path);

/// frames x layers x probes x (default, then each k, p, l2 value), in that
/// nesting order.
std::vector<SweepCell> expand_plan(const ExperimentPlan& plan, const LavaDataset& lava, std::size_t num_layers);

}  // namespace altprobe
