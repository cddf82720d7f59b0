#include "altprobe/folds.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "altprobe/error.hpp"

namespace altprobe {

std::vector<std::size_t> FoldAssignment::members(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] == fold) out.push_back(i);
  }
  return out;
}

FoldAssignment stratified_kfold(std::span<const int> y, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::TooFewExamples, fmt::format("k must be >= 2 (got {})", k));
  if (y.size() < k) {
    throw Error(ErrorCode::TooFewExamples, fmt::format("{} examples cannot fill {} folds", y.size(), k));
  }
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < y.size(); ++i) (y[i] ? pos : neg).push_back(i);

  std::mt19937_64 rng(seed);
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);
  auto& minority = pos.size() <= neg.size() ? pos : neg;
  auto& majority = pos.size() <= neg.size() ? neg : pos;

  FoldAssignment out{k, seed, std::vector<std::size_t>(y.size())};
  std::size_t slot = 0;
  for (auto i : minority) out.fold_of[i] = slot++ % k;
  for (auto i : majority) out.fold_of[i] = slot++ % k;
  return out;
}

ControlTask make_control_task(std::span<const int> y, std::uint64_t seed) {
  if (y.empty()) throw Error(ErrorCode::TooFewExamples, "control task needs labels");
  const auto positives = std::count_if(y.begin(), y.end(), [](int v) { return v != 0; });
  ControlTask out;
  out.seed = seed;
  out.positive_rate = static_cast<double>(positives) / static_cast<double>(y.size());
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(out.positive_rate);
  out.labels.reserve(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out.labels.push_back(coin(rng) ? 1 : 0);
  return out;
}

std::vector<std::uint8_t> subsample_mask(const FoldAssignment& folds, std::span<const int> y, double p,
                                         std::uint64_t seed) {
  if (!(p > 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidConfig, fmt::format("train proportion {} not in (0, 1]", p));
  if (y.size() != folds.size()) throw Error(ErrorCode::DimMismatch, "labels and folds differ in length");
  std::vector<std::uint8_t> keep(y.size(), 1);
  if (p == 1.0) return keep;

  std::mt19937_64 rng(seed);
  for (std::size_t f = 0; f < folds.k; ++f) {
    for (int cls : {1, 0}) {
      std::vector<std::size_t> group;
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (folds.fold_of[i] == f && (y[i] != 0) == (cls == 1)) group.push_back(i);
      }
      if (group.empty()) continue;
      auto n_keep = static_cast<std::size_t>(std::llround(p * static_cast<double>(group.size())));
      n_keep = std::clamp<std::size_t>(n_keep, 1, group.size());
      std::shuffle(group.begin(), group.end(), rng);
      for (std::size_t j = n_keep; j < group.size(); ++j) keep[group[j]] = 0;
    }
  }
  return keep;
}

}  // namespace altprobe
