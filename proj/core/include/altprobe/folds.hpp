#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace altprobe {

struct FoldAssignment {
  std::size_t k = 4;
  std::uint64_t seed = 0;
  std::vector<std::size_t> fold_of;  // per example

  std::vector<std::size_t> members(std::size_t fold) const;
  std::size_t size() const { return fold_of.size(); }
};

/// Stratified k-fold split.  Each class is shuffled, then the two classes
/// are dealt round-robin (minority first) so every fold's positive count is
/// within one of its proportional share.  Throws TooFewExamples when
/// k < 2 or there are fewer than k examples.
FoldAssignment stratified_kfold(std::span<const int> y, std::size_t k = 4, std::uint64_t seed = 0);

/// Randomly relabeled targets with the empirical positive rate of `y`.
struct ControlTask {
  std::vector<int> labels;
  double positive_rate = 0.0;
  std::uint64_t seed = 0;
};

ControlTask make_control_task(std::span<const int> y, std::uint64_t seed);

/// Training-subsample mask: inside every fold, keeps round(p * count) of the
/// positives and of the negatives (at least one of each class present), chosen
/// at random.  p == 1 keeps everything without touching the generator.
std::vector<std::uint8_t> subsample_mask(const FoldAssignment& folds, std::span<const int> y, double p,
                                         std::uint64_t seed);

}  // namespace altprobe
