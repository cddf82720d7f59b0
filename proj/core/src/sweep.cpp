#include <atomic>
#include <exception>
#include <thread>

#include <fmt/format.h>

#include "altprobe/error.hpp"
#include "altprobe/experiments.hpp"
#include "altprobe/seed.hpp"

namespace altprobe {

std::string SweepCell::knob() const {
  if (complexity.k) return "k";
  if (complexity.p != 1.0) return "p";
  if (complexity.l2 != 0.0) return "l2";
  return "default";
}

double SweepCell::knob_value() const {
  if (complexity.k) return static_cast<double>(*complexity.k);
  if (complexity.p != 1.0) return complexity.p;
  if (complexity.l2 != 0.0) return complexity.l2;
  return 0.0;
}

std::string SweepCell::id() const {
  return fmt::format("{}/{}/{}/{}={}", frame_token(frame), layer, probe_kind_token(kind), knob(), knob_value());
}

void validate_cells(std::span<const SweepCell> cells) {
  for (const auto& c : cells) {
    try {
      c.complexity.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidConfig, fmt::format("cell {}: {}", c.id(), e.what()));
    }
  }
}

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& job) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::jthread> workers;
  for (std::size_t t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count && !failed; i = next++) {
        try {
          job(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  workers.clear();
  if (failure) std::rethrow_exception(failure);
}

std::vector<SweepRow> run_sweep(std::span<const SweepCell> cells, const LavaDataset& lava,
                                const VerbFeatures& features, const SweepOptions& options) {
  validate_cells(cells);
  std::vector<SweepRow> rows(cells.size());
  parallel_for(cells.size(), options.threads, [&](std::size_t i) {
    const auto& cell = cells[i];
    rows[i].cell = cell;
    try {
      auto seeds = ControlSeeds::from(options.seed, cell.frame);
      seeds.probe = derive_seed(options.seed, "probe:" + cell.id());
      rows[i].result = run_control_experiment(lava, features, cell.frame, cell.layer, cell.kind, cell.complexity,
                                              seeds, options.base, options.folds);
    } catch (const std::exception& e) {
      rows[i].error = e.what();
    }
  });
  return rows;
}

}  // namespace altprobe
