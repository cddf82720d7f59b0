#include "altprobe/plan.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "altprobe/error.hpp"

namespace altprobe {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    auto pos = s.find(',');
    auto item = trim(s.substr(0, pos));
    if (!item.empty()) out.push_back(item);
    if (pos == std::string_view::npos) break;
    s.remove_prefix(pos + 1);
  }
  return out;
}

template <typename T>
T number(std::string_view key, std::string_view v) {
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw Error(ErrorCode::InvalidConfig, fmt::format("plan key '{}': cannot parse '{}'", key, v));
  }
  return out;
}

template <typename T>
std::vector<T> numbers(std::string_view key, std::string_view v) {
  std::vector<T> out;
  for (auto item : split_list(v)) out.push_back(number<T>(key, item));
  return out;
}

bool boolean(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::InvalidConfig, fmt::format("plan key '{}': expected a boolean, got '{}'", key, v));
}

}  // namespace

ExperimentPlan parse_plan(std::string_view text, const std::filesystem::path& base_dir) {
  ExperimentPlan plan;
  auto path_value = [&](std::string_view v) {
    std::filesystem::path p{std::string(v)};
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::InvalidConfig, fmt::format("plan line {}: expected key = value", line_no));
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "lava") plan.lava = path_value(value);
    else if (key == "fava") plan.fava = path_value(value);
    else if (key == "store") plan.store = path_value(value);
    else if (key == "out") plan.out = path_value(value);
    else if (key == "frames") {
      plan.frames.clear();
      if (value != "all") {
        for (auto item : split_list(value)) {
          auto f = parse_frame(item);
          if (!f) throw Error(ErrorCode::UnknownFrame, fmt::format("plan line {}: '{}'", line_no, item));
          plan.frames.push_back(*f);
        }
      }
    } else if (key == "layers") {
      plan.layers = value == "all" ? std::vector<std::size_t>{} : numbers<std::size_t>(key, value);
    } else if (key == "probes") {
      plan.probes.clear();
      for (auto item : split_list(value)) {
        auto k = parse_probe_kind(item);
        if (!k) throw Error(ErrorCode::InvalidConfig, fmt::format("plan line {}: unknown probe '{}'", line_no, item));
        plan.probes.push_back(*k);
      }
    } else if (key == "k") plan.k_values = numbers<std::size_t>(key, value);
    else if (key == "p") plan.p_values = numbers<double>(key, value);
    else if (key == "l2") plan.l2_values = numbers<double>(key, value);
    else if (key == "include_default") plan.include_default = boolean(key, value);
    else if (key == "seed") plan.seed = number<std::uint64_t>(key, value);
    else if (key == "folds") plan.folds = number<std::size_t>(key, value);
    else if (key == "threads") plan.threads = number<std::size_t>(key, value);
    else if (key == "hidden_size") plan.hidden_size = number<std::size_t>(key, value);
    else if (key == "max_iters") plan.max_iters = number<std::size_t>(key, value);
    else if (key == "grad_tol") plan.grad_tol = number<double>(key, value);
    else if (key == "format") {
      auto f = parse_export_format(value);
      if (!f) throw Error(ErrorCode::InvalidConfig, fmt::format("plan line {}: unknown format '{}'", line_no, value));
      plan.format = *f;
    } else {
      throw Error(ErrorCode::InvalidConfig, fmt::format("plan line {}: unknown key '{}'", line_no, key));
    }
  }
  return plan;
}

ExperimentPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot open {}", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_plan(buf.str(), path.parent_path());
}

std::vector<SweepCell> expand_plan(const ExperimentPlan& plan, const LavaDataset& lava, std::size_t num_layers) {
  std::vector<FrameId> frames = plan.frames;
  if (frames.empty()) {
    for (auto f : all_frames()) {
      if (!lava.counts(f).degenerate()) frames.push_back(f);
    }
  }
  std::vector<std::size_t> layers = plan.layers;
  if (layers.empty()) {
    for (std::size_t l = 0; l < num_layers; ++l) layers.push_back(l);
  }
  std::vector<ComplexityConfig> knobs;
  if (plan.include_default) knobs.emplace_back();
  for (auto k : plan.k_values) knobs.push_back({k, 1.0, 0.0});
  for (auto p : plan.p_values) knobs.push_back({std::nullopt, p, 0.0});
  for (auto l2 : plan.l2_values) knobs.push_back({std::nullopt, 1.0, l2});

  std::vector<SweepCell> cells;
  for (auto f : frames) {
    for (auto l : layers) {
      if (l >= num_layers) {
        throw Error(ErrorCode::InvalidConfig, fmt::format("layer {} out of range (L={})", l, num_layers));
      }
      for (auto kind : plan.probes) {
        for (const auto& c : knobs) cells.push_back({f, l, kind, c});
      }
    }
  }
  return cells;
}

}  // namespace altprobe
