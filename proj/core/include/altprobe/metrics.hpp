#pragma once

#include <cstdint>
#include <span>

namespace altprobe {

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + tn + fp + fn; }
  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    tp += o.tp;
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const ConfusionMatrix&) const = default;
};

inline ConfusionMatrix operator+(ConfusionMatrix a, const ConfusionMatrix& b) { return a += b; }

/// Tallies predictions against 0/1 ground truth (label 1 is positive).
ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted);

/// Matthews correlation coefficient.  0.0 whenever a marginal is empty,
/// which is what a single-class frame scores.
double mcc(const ConfusionMatrix& cm);

/// (tp + tn) / total.  Throws EmptyEvaluation on an empty matrix.
double accuracy(const ConfusionMatrix& cm);

}  // namespace altprobe
