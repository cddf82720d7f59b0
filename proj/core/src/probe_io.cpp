#include <algorithm>
#include <bit>
#include <cstring>
#include <string>

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "altprobe/error.hpp"
#include "altprobe/probe.hpp"

namespace altprobe {
namespace {

using nlohmann::ordered_json;

std::string base64_encode(const std::string& bytes) {
  using namespace boost::archive::iterators;
  using It = base64_from_binary<transform_width<std::string::const_iterator, 6, 8>>;
  std::string out(It(bytes.begin()), It(bytes.end()));
  out.append((3 - bytes.size() % 3) % 3, '=');
  return out;
}

std::string base64_decode(std::string text) {
  using namespace boost::archive::iterators;
  using It = transform_width<binary_from_base64<std::string::const_iterator>, 8, 6>;
  const auto pad = static_cast<std::size_t>(std::count(text.begin(), text.end(), '='));
  std::replace(text.begin(), text.end(), '=', 'A');
  try {
    std::string out(It(text.begin()), It(text.end()));
    out.erase(out.size() - std::min(pad, out.size()));
    return out;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::MalformedRow, fmt::format("invalid base64: {}", e.what()));
  }
}

std::string encode_doubles(const double* data, std::size_t n) {
  std::string bytes(n * 8, '\0');
  for (std::size_t i = 0; i < n; ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(data[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  return base64_encode(bytes);
}

std::vector<double> decode_doubles(const std::string& text, std::size_t expected) {
  const auto bytes = base64_decode(text);
  if (bytes.size() != expected * 8) {
    throw Error(ErrorCode::DimMismatch, fmt::format("blob holds {} bytes, expected {}", bytes.size(), expected * 8));
  }
  std::vector<double> out(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + b])) << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

ordered_json matrix_json(const Eigen::MatrixXd& m) {
  // Row-major blob, independent of Eigen's storage order.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", encode_doubles(rm.data(), static_cast<std::size_t>(rm.size()))}};
}

Eigen::MatrixXd matrix_from_json(const ordered_json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  auto values = decode_doubles(j.at("data").get<std::string>(), static_cast<std::size_t>(rows * cols));
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm =
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(), rows, cols);
  return rm;
}

}  // namespace

std::string probe_to_json(const Probe& probe) {
  ordered_json j;
  j["format"] = "altprobe-probe";
  j["version"] = 1;
  const auto& c = probe.config;
  j["config"] = {{"kind", probe_kind_token(c.kind)},
                 {"hidden_size", c.hidden_size},
                 {"l2", c.l2},
                 {"svd_rank", c.svd_rank ? ordered_json(*c.svd_rank) : ordered_json(nullptr)},
                 {"seed", c.seed},
                 {"max_iters", c.max_iters},
                 {"grad_tol", c.grad_tol}};
  j["status"] = train_status_token(probe.status);
  j["input_dim"] = probe.input_dim;
  j["iterations"] = probe.iterations;
  j["final_loss"] = probe.final_loss;
  j["constant_label"] = probe.constant_label ? ordered_json(*probe.constant_label) : ordered_json(nullptr);
  if (probe.svd) {
    j["svd"] = {{"basis", matrix_json(probe.svd->basis)}, {"singular_values", matrix_json(probe.svd->singular_values)}};
  } else {
    j["svd"] = nullptr;
  }
  auto layers = ordered_json::array();
  for (const auto& l : probe.layers) layers.push_back({{"weights", matrix_json(l.weights)}, {"bias", matrix_json(l.bias)}});
  j["layers"] = std::move(layers);
  return j.dump(2);
}

Probe probe_from_json(std::string_view text) {
  try {
    const auto j = ordered_json::parse(text);
    if (j.at("format") != "altprobe-probe" || j.at("version") != 1) {
      throw Error(ErrorCode::MalformedRow, "not an altprobe probe document");
    }
    Probe p;
    const auto& c = j.at("config");
    auto kind = parse_probe_kind(c.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorCode::InvalidConfig, "unknown probe kind");
    p.config.kind = *kind;
    p.config.hidden_size = c.at("hidden_size").get<std::size_t>();
    p.config.l2 = c.at("l2").get<double>();
    if (!c.at("svd_rank").is_null()) p.config.svd_rank = c.at("svd_rank").get<std::size_t>();
    p.config.seed = c.at("seed").get<std::uint64_t>();
    p.config.max_iters = c.at("max_iters").get<std::size_t>();
    p.config.grad_tol = c.at("grad_tol").get<double>();
    auto status = parse_train_status(j.at("status").get<std::string>());
    if (!status) throw Error(ErrorCode::MalformedRow, "unknown training status");
    p.status = *status;
    p.input_dim = j.at("input_dim").get<std::size_t>();
    p.iterations = j.at("iterations").get<std::size_t>();
    p.final_loss = j.at("final_loss").get<double>();
    if (!j.at("constant_label").is_null()) p.constant_label = j.at("constant_label").get<int>();
    if (!j.at("svd").is_null()) {
      SvdFrontEnd svd;
      svd.basis = matrix_from_json(j.at("svd").at("basis"));
      svd.singular_values = matrix_from_json(j.at("svd").at("singular_values"));
      p.svd = std::move(svd);
    }
    for (const auto& l : j.at("layers")) {
      p.layers.push_back({matrix_from_json(l.at("weights")), matrix_from_json(l.at("bias"))});
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRow, fmt::format("probe JSON: {}", e.what()));
  }
}

}  // namespace altprobe
