#include "altprobe/report.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <fmt/format.h>
#include <json.hpp>

#include "altprobe/error.hpp"

namespace altprobe {
namespace {

using nlohmann::ordered_json;

constexpr std::string_view kResultColumns =
    "model_id,task,layer,tp,tn,fp,fn,mcc,accuracy,degenerate,fallback_verbs,unconverged_fits";

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write {}", path.string()));
  return out;
}

// Quotes a CSV field only when needed.
std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<std::string> parse_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

template <typename T>
T parse_number(const std::string& s, std::string_view what) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::MalformedRow, fmt::format("bad {} '{}'", what, s));
  }
  return v;
}

// Canonical ordering of task ids: the ten frames, then combined, then alternations.
std::tuple<int, std::string> task_key(const std::string& task) {
  if (auto f = parse_frame(task)) return {static_cast<int>(f->index()), task};
  if (task == "combined") return {100, task};
  if (auto a = parse_alternation(task)) return {101 + static_cast<int>(*a), task};
  return {1000, task};
}

}  // namespace

std::optional<ExportFormat> parse_export_format(std::string_view token) {
  if (token == "csv") return ExportFormat::Csv;
  if (token == "json") return ExportFormat::Json;
  return std::nullopt;
}

// ---------------------------------------------------------------- results

void export_results(std::span<const LayerResult> results, const std::filesystem::path& path, ExportFormat format) {
  auto out = open_output(path);
  if (format == ExportFormat::Csv) {
    out << kResultColumns << '\n';
    for (const auto& r : results) {
      out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", csv_field(r.model_id), csv_field(r.task), r.layer,
                         r.cm.tp, r.cm.tn, r.cm.fp, r.cm.fn, r.mcc, r.accuracy, r.degenerate ? 1 : 0,
                         r.fallback_verbs, r.unconverged_fits);
    }
  } else {
    auto arr = ordered_json::array();
    for (const auto& r : results) {
      arr.push_back({{"model_id", r.model_id},
                     {"task", r.task},
                     {"layer", r.layer},
                     {"tp", r.cm.tp},
                     {"tn", r.cm.tn},
                     {"fp", r.cm.fp},
                     {"fn", r.cm.fn},
                     {"mcc", r.mcc},
                     {"accuracy", r.accuracy},
                     {"degenerate", r.degenerate},
                     {"fallback_verbs", r.fallback_verbs},
                     {"unconverged_fits", r.unconverged_fits}});
    }
    out << arr.dump(2) << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, fmt::format("write failed: {}", path.string()));
}

std::vector<LayerResult> import_results(const std::filesystem::path& path, ExportFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot open {}", path.string()));
  std::vector<LayerResult> out;
  if (format == ExportFormat::Csv) {
    std::string line;
    if (!std::getline(in, line) || line != kResultColumns) {
      throw Error(ErrorCode::MalformedRow, fmt::format("{}: unexpected header", path.string()));
    }
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto f = parse_csv_line(line);
      if (f.size() != 12) throw Error(ErrorCode::MalformedRow, fmt::format("{}: expected 12 fields", path.string()));
      LayerResult r;
      r.model_id = f[0];
      r.task = f[1];
      r.layer = parse_number<std::size_t>(f[2], "layer");
      r.cm = {parse_number<std::uint64_t>(f[3], "tp"), parse_number<std::uint64_t>(f[4], "tn"),
              parse_number<std::uint64_t>(f[5], "fp"), parse_number<std::uint64_t>(f[6], "fn")};
      r.mcc = parse_number<double>(f[7], "mcc");
      r.accuracy = parse_number<double>(f[8], "accuracy");
      r.degenerate = f[9] == "1";
      r.fallback_verbs = parse_number<std::size_t>(f[10], "fallback_verbs");
      r.unconverged_fits = parse_number<std::size_t>(f[11], "unconverged_fits");
      out.push_back(std::move(r));
    }
    return out;
  }
  try {
    const auto arr = ordered_json::parse(in);
    for (const auto& j : arr) {
      LayerResult r;
      r.model_id = j.at("model_id").get<std::string>();
      r.task = j.at("task").get<std::string>();
      r.layer = j.at("layer").get<std::size_t>();
      r.cm = {j.at("tp").get<std::uint64_t>(), j.at("tn").get<std::uint64_t>(), j.at("fp").get<std::uint64_t>(),
              j.at("fn").get<std::uint64_t>()};
      r.mcc = j.at("mcc").get<double>();
      r.accuracy = j.at("accuracy").get<double>();
      r.degenerate = j.at("degenerate").get<bool>();
      r.fallback_verbs = j.at("fallback_verbs").get<std::size_t>();
      r.unconverged_fits = j.at("unconverged_fits").get<std::size_t>();
      out.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRow, fmt::format("{}: {}", path.string(), e.what()));
  }
  return out;
}

// ---------------------------------------------------------------- sweep

void export_sweep(std::span<const SweepRow> rows, const std::filesystem::path& path, ExportFormat format) {
  auto out = open_output(path);
  if (format == ExportFormat::Csv) {
    out << "frame,layer,probe,knob,knob_value,real_tp,real_tn,real_fp,real_fn,control_tp,control_tn,control_fp,"
           "control_fn,real_accuracy,control_accuracy,selectivity,control_positive_rate,error\n";
    for (const auto& row : rows) {
      const auto& c = row.cell;
      out << fmt::format("{},{},{},{},{},", frame_token(c.frame), c.layer, probe_kind_token(c.kind), c.knob(),
                         c.knob_value());
      if (row.result) {
        const auto& r = *row.result;
        out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},", r.real_cm.tp, r.real_cm.tn, r.real_cm.fp,
                           r.real_cm.fn, r.control_cm.tp, r.control_cm.tn, r.control_cm.fp, r.control_cm.fn,
                           r.real_accuracy, r.control_accuracy, r.selectivity, r.control_positive_rate);
      } else {
        out << ",,,,,,,,,,,,";
      }
      out << csv_field(row.error) << '\n';
    }
  } else {
    auto arr = ordered_json::array();
    for (const auto& row : rows) {
      const auto& c = row.cell;
      ordered_json j = {{"frame", frame_token(c.frame)},
                        {"layer", c.layer},
                        {"probe", probe_kind_token(c.kind)},
                        {"knob", c.knob()},
                        {"knob_value", c.knob_value()}};
      if (row.result) {
        const auto& r = *row.result;
        j["real_cm"] = {r.real_cm.tp, r.real_cm.tn, r.real_cm.fp, r.real_cm.fn};
        j["control_cm"] = {r.control_cm.tp, r.control_cm.tn, r.control_cm.fp, r.control_cm.fn};
        j["real_accuracy"] = r.real_accuracy;
        j["control_accuracy"] = r.control_accuracy;
        j["selectivity"] = r.selectivity;
        j["control_positive_rate"] = r.control_positive_rate;
      }
      j["error"] = row.error;
      arr.push_back(std::move(j));
    }
    out << arr.dump(2) << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, fmt::format("write failed: {}", path.string()));
}

// ---------------------------------------------------------------- tables

ReportTable best_layer_table(std::span<const LayerResult> results) {
  if (results.empty()) throw Error(ErrorCode::EmptyResults, "no results to tabulate");
  // (model, task) -> layer -> result
  std::map<std::pair<std::string, std::string>, std::map<std::size_t, const LayerResult*>> grouped;
  for (const auto& r : results) {
    auto& series = grouped[{r.model_id, r.task}];
    if (!series.emplace(r.layer, &r).second) {
      throw Error(ErrorCode::InvalidConfig,
                  fmt::format("duplicate result for {} / {} layer {}", r.model_id, r.task, r.layer));
    }
  }
  ReportTable table;
  for (const auto& [key, series] : grouped) {
    ReportRow row;
    row.model_id = key.first;
    row.task = key.second;
    bool first = true;
    for (const auto& [layer, r] : series) {  // ascending layer order
      const double m = mcc(r->cm);
      const double a = accuracy(r->cm);
      row.degenerate = row.degenerate || r->degenerate;
      row.layers.push_back(layer);
      row.mcc.push_back(m);
      row.accuracy.push_back(a);
      if (first || m > row.best_mcc) {
        row.best_layer = layer;
        row.best_mcc = m;
        row.best_accuracy = a;
        first = false;
      }
    }
    table.rows.push_back(std::move(row));
  }
  std::stable_sort(table.rows.begin(), table.rows.end(), [](const ReportRow& a, const ReportRow& b) {
    return std::make_tuple(std::cref(a.model_id), task_key(a.task)) <
           std::make_tuple(std::cref(b.model_id), task_key(b.task));
  });
  return table;
}

std::string render_cell(const ReportRow& row) {
  if (row.degenerate) return fmt::format("{:.3f}", row.best_mcc);
  return fmt::format("{:.3f} [{}]", row.best_mcc, row.best_layer);
}

std::string render_table(const ReportTable& table) {
  std::string out = fmt::format("{:<20} {:<24} {:>12} {:>9}\n", "model", "task", "best MCC", "accuracy");
  for (const auto& row : table.rows) {
    out += fmt::format("{:<20} {:<24} {:>12} {:>9.3f}{}\n", row.model_id, row.task, render_cell(row),
                       row.best_accuracy, row.degenerate ? " *" : "");
  }
  return out;
}

// ---------------------------------------------------------------- curves

std::vector<CurveSeries> mean_curves(std::span<const LayerResult> results) {
  if (results.empty()) throw Error(ErrorCode::EmptyResults, "no results to average");
  std::map<std::string, std::map<std::string, std::map<std::size_t, double>>> by_model;
  std::set<std::string> models;
  for (const auto& r : results) {
    models.insert(r.model_id);
    if (r.degenerate) continue;
    by_model[r.model_id][r.task][r.layer] = mcc(r.cm);
  }
  std::vector<CurveSeries> out;
  for (const auto& model : models) {
    auto it = by_model.find(model);
    if (it == by_model.end()) {
      throw Error(ErrorCode::EmptyResults, fmt::format("model {} has only degenerate tasks", model));
    }
    CurveSeries curve;
    curve.model_id = model;
    const auto& tasks = it->second;
    const auto& axis_src = tasks.begin()->second;
    for (const auto& [layer, _] : axis_src) curve.x.push_back(layer);
    curve.y.assign(curve.x.size(), 0.0);
    for (const auto& [task, series] : tasks) {
      if (series.size() != curve.x.size()) {
        throw Error(ErrorCode::AxisMismatch, fmt::format("task {} of {} has {} layers, expected {}", task, model,
                                                         series.size(), curve.x.size()));
      }
      std::size_t i = 0;
      for (const auto& [layer, value] : series) {
        if (layer != curve.x[i]) {
          throw Error(ErrorCode::AxisMismatch, fmt::format("task {} of {} has layer {} where {} was expected",
                                                           task, model, layer, curve.x[i]));
        }
        curve.y[i++] += value;
      }
    }
    curve.tasks = tasks.size();
    for (auto& v : curve.y) v /= static_cast<double>(curve.tasks);
    out.push_back(std::move(curve));
  }
  return out;
}

void export_curves(std::span<const CurveSeries> curves, const std::filesystem::path& path, ExportFormat format) {
  auto out = open_output(path);
  if (format == ExportFormat::Csv) {
    out << "model_id,layer,mean_mcc,tasks\n";
    for (const auto& c : curves) {
      for (std::size_t i = 0; i < c.x.size(); ++i) {
        out << fmt::format("{},{},{},{}\n", csv_field(c.model_id), c.x[i], c.y[i], c.tasks);
      }
    }
  } else {
    auto arr = ordered_json::array();
    for (const auto& c : curves) arr.push_back({{"model_id", c.model_id}, {"layers", c.x}, {"mean_mcc", c.y}, {"tasks", c.tasks}});
    out << arr.dump(2) << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, fmt::format("write failed: {}", path.string()));
}

}  // namespace altprobe
