#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "altprobe/aggregate.hpp"
#include "altprobe/datasets.hpp"
#include "altprobe/error.hpp"
#include "altprobe/experiments.hpp"
#include "altprobe/plan.hpp"
#include "altprobe/report.hpp"
#include "altprobe/seed.hpp"
#include "altprobe/synth.hpp"

namespace fs = std::filesystem;
using namespace altprobe;

namespace {

struct Common {
  fs::path lava;
  fs::path fava;
  fs::path store;
  fs::path out;
  std::string layers = "all";
  std::string format = "csv";
  std::uint64_t seed = 0;
  std::size_t folds = 4;
  std::size_t threads = 1;
};

struct ProbeFlags {
  std::string probe = "linear";
  std::optional<double> l2;
  std::optional<std::size_t> svd_rank;
  std::optional<double> train_prop;
  std::size_t hidden_size = 768;
  std::size_t max_iters = 1000;
};

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); }

std::vector<std::size_t> parse_layers(const std::string& text, std::size_t num_layers) {
  std::vector<std::size_t> out;
  if (text == "all") {
    for (std::size_t l = 0; l < num_layers; ++l) out.push_back(l);
    return out;
  }
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const auto item = text.substr(pos, comma - pos);
    pos = comma + 1;
    if (item.empty()) continue;
    try {
      if (auto dash = item.find('-'); dash != std::string::npos) {
        const auto lo = std::stoul(item.substr(0, dash));
        const auto hi = std::stoul(item.substr(dash + 1));
        if (hi < lo) invalid(fmt::format("bad layer range '{}'", item));
        for (auto l = lo; l <= hi; ++l) out.push_back(l);
      } else {
        out.push_back(std::stoul(item));
      }
    } catch (const std::logic_error&) {
      invalid(fmt::format("bad layer list '{}'", text));
    }
  }
  if (out.empty()) invalid("empty layer list");
  for (auto l : out) {
    if (l >= num_layers) invalid(fmt::format("layer {} out of range (store has {})", l, num_layers));
  }
  return out;
}

ExportFormat export_format(const std::string& token) {
  auto f = parse_export_format(token);
  if (!f) invalid(fmt::format("unknown format '{}'", token));
  return *f;
}

FrameId frame_arg(const std::string& token) {
  auto f = parse_frame(token);
  if (!f) throw Error(ErrorCode::UnknownFrame, token);
  return *f;
}

ProbeKind probe_arg(const std::string& token) {
  auto k = parse_probe_kind(token);
  if (!k) invalid(fmt::format("unknown probe '{}'", token));
  return *k;
}

ProbeConfig probe_config(const ProbeFlags& flags) {
  ProbeConfig c;
  c.kind = probe_arg(flags.probe);
  c.l2 = flags.l2.value_or(0.0);
  c.svd_rank = flags.svd_rank;
  c.hidden_size = flags.hidden_size;
  c.max_iters = flags.max_iters;
  return c;
}

void require(const fs::path& p, const char* flag) {
  if (p.empty()) invalid(fmt::format("{} is required", flag));
}

void emit(std::span<const LayerResult> results, const Common& common) {
  if (!common.out.empty()) export_results(results, common.out, export_format(common.format));
  std::cout << render_table(best_layer_table(results));
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--lava", c.lava, "LaVA verb table (TSV)");
  app->add_option("--fava", c.fava, "FAVA sentence file (TSV)");
  app->add_option("--store", c.store, "embedding store");
  app->add_option("--layers", c.layers, "comma list, ranges like 1-12, or 'all'");
  app->add_option("--seed", c.seed, "global seed");
  app->add_option("--out", c.out, "export path");
  app->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
}

void add_probe(CLI::App* app, ProbeFlags& p) {
  app->add_option("--probe", p.probe, "linear, mlp1 or mlp2")->check(CLI::IsMember({"linear", "mlp1", "mlp2"}));
  app->add_option("--l2", p.l2, "L2 penalty");
  app->add_option("--svd-rank", p.svd_rank, "SVD rank (linear) or hidden width (MLPs)");
  app->add_option("--hidden-size", p.hidden_size, "MLP hidden width");
  app->add_option("--max-iters", p.max_iters, "optimizer iteration cap");
}

void word_probe(const Common& c, const ProbeFlags& p, const std::vector<std::string>& frame_tokens) {
  require(c.lava, "--lava");
  require(c.fava, "--fava");
  require(c.store, "--store");
  const auto base = probe_config(p);
  const auto lava = load_lava(c.lava);
  const auto fava = load_fava(c.fava);
  for (const auto& w : fava.warnings()) std::cerr << "warning: " << w << "\n";
  std::vector<FrameId> frames;
  for (const auto& t : frame_tokens) frames.push_back(frame_arg(t));
  if (frames.empty()) {
    const auto all = all_frames();
    frames.assign(all.begin(), all.end());
  }
  const auto features = build_verb_features(lava, fava, c.store);
  const auto layers = parse_layers(c.layers, features.num_layers());
  base.validate(features.dim());

  std::vector<LayerResult> results(frames.size() * layers.size());
  parallel_for(results.size(), c.threads, [&](std::size_t i) {
    const auto frame = frames[i / layers.size()];
    const auto layer = layers[i % layers.size()];
    auto config = base;
    config.seed = derive_seed(c.seed, fmt::format("probe:{}", frame_token(frame)));
    results[i] = run_word_experiment(lava, features, frame, layer, config, {c.folds, fold_seed_for(c.seed, frame)});
  });
  emit(results, c);
}

void sentence_probe(const Common& c, const ProbeFlags& p, const std::vector<std::string>& classes, bool combined) {
  require(c.fava, "--fava");
  require(c.store, "--store");
  const auto base = probe_config(p);
  std::vector<SentenceTask> tasks;
  for (const auto& t : classes) {
    auto a = parse_alternation(t);
    if (!a) throw Error(ErrorCode::UnknownAlternation, t);
    tasks.emplace_back(*a);
  }
  if (combined || tasks.empty()) tasks.emplace_back(std::nullopt);
  const auto fava = load_fava(c.fava);
  for (const auto& w : fava.warnings()) std::cerr << "warning: " << w << "\n";
  std::uint32_t num_layers = 0;
  {
    StoreReader reader(c.store);
    num_layers = reader.header().num_layers;
  }
  const auto layers = parse_layers(c.layers, num_layers);
  const auto features = build_sentence_features(fava, c.store, layers);
  base.validate(features.header.hidden_dim);

  std::vector<LayerResult> results(tasks.size() * layers.size());
  parallel_for(results.size(), c.threads, [&](std::size_t i) {
    const auto& task = tasks[i / layers.size()];
    auto config = base;
    config.seed = derive_seed(c.seed, fmt::format("probe:{}", sentence_task_token(task)));
    results[i] = run_sentence_experiment(fava, features, task, layers[i % layers.size()], config);
  });
  emit(results, c);
}

void run_cells(const fs::path& lava_path, const fs::path& fava_path, const fs::path& store,
               std::span<const SweepCell> cells, const SweepOptions& options, const fs::path& out,
               ExportFormat format) {
  validate_cells(cells);
  const auto lava = load_lava(lava_path);
  const auto fava = load_fava(fava_path);
  for (const auto& w : fava.warnings()) std::cerr << "warning: " << w << "\n";
  const auto features = build_verb_features(lava, fava, store);
  const auto rows = run_sweep(cells, lava, features, options);
  if (!out.empty()) export_sweep(rows, out, format);
  std::size_t failed = 0;
  for (const auto& row : rows) {
    if (row.result) {
      std::cout << fmt::format("{:<40} real {:.3f}  control {:.3f}  selectivity {:+.3f}\n", row.cell.id(),
                               row.result->real_accuracy, row.result->control_accuracy, row.result->selectivity);
    } else {
      ++failed;
      std::cerr << fmt::format("{}: {}\n", row.cell.id(), row.error);
    }
  }
  if (failed > 0) std::cerr << fmt::format("{} of {} cells failed\n", failed, rows.size());
}

void control(const Common& c, const ProbeFlags& p, const std::vector<std::string>& frame_tokens) {
  require(c.lava, "--lava");
  require(c.fava, "--fava");
  require(c.store, "--store");
  ComplexityConfig complexity;
  complexity.k = p.svd_rank;
  complexity.p = p.train_prop.value_or(1.0);
  complexity.l2 = p.l2.value_or(0.0);
  complexity.validate();
  const auto kind = probe_arg(p.probe);
  const auto lava = load_lava(c.lava);

  std::vector<FrameId> frames;
  for (const auto& t : frame_tokens) frames.push_back(frame_arg(t));
  if (frames.empty()) {
    for (auto f : all_frames()) {
      if (!lava.counts(f).degenerate()) frames.push_back(f);
    }
  }
  std::uint32_t num_layers = 0;
  {
    StoreReader reader(c.store);
    num_layers = reader.header().num_layers;
  }
  std::vector<SweepCell> cells;
  for (auto f : frames) {
    for (auto l : parse_layers(c.layers, num_layers)) cells.push_back({f, l, kind, complexity});
  }
  SweepOptions options;
  options.seed = c.seed;
  options.folds = c.folds;
  options.threads = c.threads;
  options.base.hidden_size = p.hidden_size;
  options.base.max_iters = p.max_iters;
  run_cells(c.lava, c.fava, c.store, cells, options, c.out, export_format(c.format));
}

void sweep(const Common& c, const fs::path& plan_path) {
  auto plan = load_plan(plan_path);
  if (!c.out.empty()) plan.out = c.out;
  require(plan.lava, "lava (plan)");
  require(plan.fava, "fava (plan)");
  require(plan.store, "store (plan)");
  std::uint32_t num_layers = 0;
  {
    StoreReader reader(plan.store);
    num_layers = reader.header().num_layers;
  }
  const auto lava = load_lava(plan.lava);
  const auto cells = expand_plan(plan, lava, num_layers);
  SweepOptions options;
  options.seed = plan.seed;
  options.folds = plan.folds;
  options.threads = c.threads > 1 ? c.threads : plan.threads;
  options.base.hidden_size = plan.hidden_size;
  options.base.max_iters = plan.max_iters;
  options.base.grad_tol = plan.grad_tol;
  run_cells(plan.lava, plan.fava, plan.store, cells, options, plan.out, plan.format);
}

void report(const Common& c, const std::vector<fs::path>& inputs, const fs::path& curves) {
  if (inputs.empty()) invalid("report needs at least one --in file");
  std::vector<LayerResult> results;
  for (const auto& path : inputs) {
    const auto fmt_in = path.extension() == ".json" ? ExportFormat::Json : ExportFormat::Csv;
    auto part = import_results(path, fmt_in);
    results.insert(results.end(), part.begin(), part.end());
  }
  const auto table = best_layer_table(results);
  std::cout << render_table(table);
  if (!curves.empty()) export_curves(mean_curves(results), curves, export_format(c.format));
}

void synth(const Common& c, const std::string& scheme, double sigma, std::uint32_t num_layers,
           std::uint32_t dim, const std::string& model_id) {
  require(c.lava, "--lava");
  require(c.fava, "--fava");
  require(c.out, "--out");
  SynthOptions o;
  o.seed = c.seed;
  o.scheme.kind = scheme == "noise" ? SynthKind::PureNoise : SynthKind::LinearSignal;
  o.scheme.sigma = sigma;
  o.num_layers = num_layers;
  o.hidden_dim = dim;
  o.model_id = model_id;
  synth_store(o, load_lava(c.lava), load_fava(c.fava), c.out);
}

void synth_data(std::uint64_t seed, std::size_t sentences, const fs::path& lava_out, const fs::path& fava_out) {
  require(lava_out, "--lava-out");
  require(fava_out, "--fava-out");
  const auto lava = make_synthetic_lava(seed);
  write_lava(lava, lava_out);
  write_fava(make_synthetic_fava(lava, seed, sentences), fava_out);
}

bool is_validation(ErrorCode code) { return code != ErrorCode::IoError; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layer-wise probing of verb alternation knowledge in embedding stores"};
  app.require_subcommand(1);

  Common common;
  ProbeFlags probe;
  std::vector<std::string> frames;
  std::vector<std::string> classes;
  bool combined = false;

  auto* word = app.add_subcommand("word-probe", "frame-membership probes over verb embeddings");
  add_common(word, common);
  add_probe(word, probe);
  word->add_option("--frame", frames, "frame id, e.g. spray_load.with (repeatable; default all)");
  word->add_option("--folds", common.folds, "cross-validation folds")->check(CLI::Range(2, 1000));

  auto* sentence = app.add_subcommand("sentence-probe", "grammaticality probes over sentence embeddings");
  add_common(sentence, common);
  add_probe(sentence, probe);
  sentence->add_option("--class", classes, "alternation id, e.g. dative (repeatable)");
  sentence->add_flag("--combined", combined, "all alternations pooled");

  auto* ctrl = app.add_subcommand("control", "real vs random-label selectivity");
  add_common(ctrl, common);
  add_probe(ctrl, probe);
  ctrl->add_option("--frame", frames, "frame id (repeatable; default every non-degenerate frame)");
  ctrl->add_option("--train-prop", probe.train_prop, "training proportion in (0, 1]");
  ctrl->add_option("--folds", common.folds, "cross-validation folds")->check(CLI::Range(2, 1000));

  fs::path plan_path;
  auto* sw = app.add_subcommand("sweep", "run an experiment plan");
  sw->add_option("--plan", plan_path, "plan file")->required();
  sw->add_option("--out", common.out, "override the plan's output path");
  sw->add_option("--threads", common.threads, "override the plan's thread count")->check(CLI::PositiveNumber);

  std::vector<fs::path> inputs;
  fs::path curves;
  auto* rep = app.add_subcommand("report", "best-layer table and mean curves from exported results");
  rep->add_option("--in", inputs, "results file(s) written by word-probe / sentence-probe")->required();
  rep->add_option("--curves", curves, "write mean-MCC-per-layer curves here");
  rep->add_option("--format", common.format, "curve file format")->check(CLI::IsMember({"csv", "json"}));

  std::string scheme = "signal";
  double sigma = 0.0;
  std::uint32_t num_layers = 5;
  std::uint32_t dim = 32;
  std::string model_id = "synthetic";
  auto* ss = app.add_subcommand("synth-store", "write a synthetic embedding store");
  ss->add_option("--lava", common.lava)->required();
  ss->add_option("--fava", common.fava)->required();
  ss->add_option("--out", common.out)->required();
  ss->add_option("--seed", common.seed);
  ss->add_option("--scheme", scheme, "signal or noise")->check(CLI::IsMember({"signal", "noise"}));
  ss->add_option("--sigma", sigma, "noise level of the signal scheme")->check(CLI::NonNegativeNumber);
  ss->add_option("--num-layers", num_layers)->check(CLI::Range(1u, 1000u));
  ss->add_option("--dim", dim)->check(CLI::Range(1u, 100000u));
  ss->add_option("--model-id", model_id);

  fs::path lava_out;
  fs::path fava_out;
  std::size_t sentences = 9413;
  auto* sd = app.add_subcommand("synth-data", "write synthetic LaVA / FAVA tables");
  sd->add_option("--lava-out", lava_out)->required();
  sd->add_option("--fava-out", fava_out)->required();
  sd->add_option("--seed", common.seed);
  sd->add_option("--sentences", sentences)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*word) word_probe(common, probe, frames);
    else if (*sentence) sentence_probe(common, probe, classes, combined);
    else if (*ctrl) control(common, probe, frames);
    else if (*sw) sweep(common, plan_path);
    else if (*rep) report(common, inputs, curves);
    else if (*ss) synth(common, scheme, sigma, num_layers, dim, model_id);
    else if (*sd) synth_data(common.seed, sentences, lava_out, fava_out);
  } catch (const Error& e) {
    std::cerr << "altprobe: " << e.what() << "\n";
    return is_validation(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "altprobe: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
