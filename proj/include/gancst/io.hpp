/*
 * Copyright 2026 The gancst Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// File formats.
//
// Labeled matrix, text:   "# dims: <rows> <cols>" then "label v1 ... vcols"
//                          per row, values printed with 17 significant digits.
// Labeled matrix, binary: magic "GCSTMAT\1", u64 rows, u64 cols, then per
//                          row an i64 label and cols little-endian doubles.
// Split file:             "seen: <ids...>" and "unseen: <ids...>" lines, an
//                          optional "scheme: SCS|SCE" line.
// Class list:             "<class_id> <class name ...>" per line.
// Checkpoint:             JSON document, see save_checkpoint().

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gancst/error.hpp"
#include "gancst/gan.hpp"
#include "gancst/metrics.hpp"
#include "gancst/nn.hpp"
#include "gancst/ssl.hpp"

namespace gancst {

struct LabeledMatrix {
  Matrix x;
  std::vector<int> labels;

  std::size_t rows() const { return labels.size(); }
  friend bool operator==(const LabeledMatrix&, const LabeledMatrix&) = default;
};

namespace detail {

inline constexpr std::array<char, 8> kMatrixMagic{'G', 'C', 'S', 'T', 'M', 'A', 'T', '\1'};

inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

}  // namespace detail

inline std::string format_matrix_text(const LabeledMatrix& m) {
  if (static_cast<std::size_t>(m.x.rows()) != m.labels.size()) throw UsageError("label count does not match rows");
  std::string out = "# dims: " + std::to_string(m.x.rows()) + " " + std::to_string(m.x.cols()) + "\n";
  for (Eigen::Index r = 0; r < m.x.rows(); ++r) {
    out += std::to_string(m.labels[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < m.x.cols(); ++c) {
      out.push_back(' ');
      out += detail::format_double(m.x(r, c));
    }
    out.push_back('\n');
  }
  return out;
}

inline LabeledMatrix parse_matrix_text(std::string_view text) {
  LabeledMatrix m;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  long long rows = -1;
  long long cols = -1;
  std::vector<double> values;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto fields = detail::split_ws(line);
    if (fields.empty()) continue;
    if (fields.front().starts_with("#")) {
      if (fields.size() == 4 && fields[0] == "#" && fields[1] == "dims:") {
        if (!detail::parse_number(fields[2], rows) || !detail::parse_number(fields[3], cols) || rows < 0 ||
            cols < 0) {
          throw ParseError("bad dims header", line_no);
        }
      }
      continue;
    }
    if (cols < 0) {
      cols = static_cast<long long>(fields.size()) - 1;
      if (cols < 1) throw ParseError("row has a label but no values", line_no);
    }
    if (static_cast<long long>(fields.size()) - 1 != cols) {
      throw ParseError("row " + std::to_string(m.labels.size() + 1) + " has " + std::to_string(fields.size() - 1) +
                           " values, expected " + std::to_string(cols),
                       line_no);
    }
    int label = 0;
    if (!detail::parse_number(fields[0], label)) throw ParseError("bad label '" + std::string(fields[0]) + "'", line_no);
    m.labels.push_back(label);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      double v = 0.0;
      if (!detail::parse_number(fields[i], v)) {
        throw ParseError("bad value '" + std::string(fields[i]) + "'", line_no);
      }
      values.push_back(v);
    }
  }
  if (rows >= 0 && static_cast<long long>(m.labels.size()) != rows) {
    throw ParseError("header declares " + std::to_string(rows) + " rows, found " + std::to_string(m.labels.size()), 0);
  }
  const auto c = static_cast<Eigen::Index>(std::max<long long>(cols, 0));
  m.x = Eigen::Map<const Matrix>(values.data(), static_cast<Eigen::Index>(m.labels.size()), c);
  return m;
}

inline std::string format_matrix_binary(const LabeledMatrix& m) {
  if (static_cast<std::size_t>(m.x.rows()) != m.labels.size()) throw UsageError("label count does not match rows");
  std::string out(detail::kMatrixMagic.begin(), detail::kMatrixMagic.end());
  auto put = [&out](const void* p, std::size_t n) { out.append(static_cast<const char*>(p), n); };
  const auto rows = static_cast<std::uint64_t>(m.x.rows());
  const auto cols = static_cast<std::uint64_t>(m.x.cols());
  put(&rows, 8);
  put(&cols, 8);
  for (Eigen::Index r = 0; r < m.x.rows(); ++r) {
    const auto label = static_cast<std::int64_t>(m.labels[static_cast<std::size_t>(r)]);
    put(&label, 8);
    put(m.x.row(r).data(), static_cast<std::size_t>(cols) * sizeof(double));
  }
  return out;
}

inline bool is_binary_matrix(std::string_view bytes) {
  return bytes.size() >= 8 && std::equal(detail::kMatrixMagic.begin(), detail::kMatrixMagic.end(), bytes.begin());
}

inline LabeledMatrix parse_matrix_binary(std::string_view bytes) {
  if (!is_binary_matrix(bytes)) throw ParseError("missing binary matrix magic", 0);
  std::size_t off = 8;
  auto take = [&](void* p, std::size_t n) {
    if (off + n > bytes.size()) throw ParseError("binary matrix truncated", 0);
    std::memcpy(p, bytes.data() + off, n);
    off += n;
  };
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  take(&rows, 8);
  take(&cols, 8);
  if (rows * (8 + cols * 8) != bytes.size() - off) throw ParseError("binary matrix size does not match header", 0);
  LabeledMatrix m;
  m.x.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  m.labels.resize(rows);
  for (std::uint64_t r = 0; r < rows; ++r) {
    std::int64_t label = 0;
    take(&label, 8);
    m.labels[r] = static_cast<int>(label);
    take(m.x.row(static_cast<Eigen::Index>(r)).data(), cols * sizeof(double));
  }
  return m;
}

inline LabeledMatrix load_matrix(const std::string& path) {
  const std::string bytes = detail::read_file(path);
  try {
    return is_binary_matrix(bytes) ? parse_matrix_binary(bytes) : parse_matrix_text(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
}

// Feature files and semantic-vector files share the labeled matrix format.
inline LabeledMatrix load_features(const std::string& path) { return load_matrix(path); }

inline void save_matrix(const std::string& path, const LabeledMatrix& m, bool binary = false) {
  detail::write_file(path, binary ? format_matrix_binary(m) : format_matrix_text(m));
}

inline void save_matrix(const std::string& path, const Matrix& x, bool binary = false) {
  LabeledMatrix m{x, std::vector<int>(static_cast<std::size_t>(x.rows()))};
  for (std::size_t i = 0; i < m.labels.size(); ++i) m.labels[i] = static_cast<int>(i);
  save_matrix(path, m, binary);
}

// ---------------------------------------------------------------------------
// Splits

struct SplitSpec {
  std::vector<int> seen;
  std::vector<int> unseen;
  std::string scheme;  // "SCS", "SCE" or empty

  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

inline SplitSpec parse_split(std::string_view text) {
  SplitSpec split;
  bool has_seen = false;
  bool has_unseen = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    auto fields = detail::split_ws(line);
    if (fields.empty() || fields.front().starts_with("#")) continue;
    const auto key = fields.front();
    fields.erase(fields.begin());
    if (key == "scheme:") {
      if (fields.size() != 1 || (fields[0] != "SCS" && fields[0] != "SCE")) {
        throw ParseError("scheme must be SCS or SCE", line_no);
      }
      split.scheme = std::string(fields[0]);
      continue;
    }
    std::vector<int>* target = nullptr;
    if (key == "seen:") {
      target = &split.seen;
      has_seen = true;
    } else if (key == "unseen:") {
      target = &split.unseen;
      has_unseen = true;
    } else {
      throw ParseError("unknown split key '" + std::string(key) + "'", line_no);
    }
    for (const auto f : fields) {
      int id = 0;
      if (!detail::parse_number(f, id) || id < 0) throw ParseError("bad class id '" + std::string(f) + "'", line_no);
      target->push_back(id);
    }
  }
  if (!has_seen || !has_unseen) throw ParseError("split file needs both 'seen:' and 'unseen:' lines", 0);
  std::sort(split.seen.begin(), split.seen.end());
  std::sort(split.unseen.begin(), split.unseen.end());
  return split;
}

// Seen and unseen must be disjoint, non-empty, free of duplicates, and
// together cover exactly `class_ids`.
inline void validate_split(const SplitSpec& split, std::span<const int> class_ids) {
  if (split.seen.empty()) throw ValidationError("split has no seen classes");
  if (split.unseen.empty()) throw ValidationError("split has no unseen classes");
  std::set<int> seen;
  for (const int c : split.seen) {
    if (!seen.insert(c).second) throw ValidationError("class " + std::to_string(c) + " listed twice as seen");
  }
  std::set<int> unseen;
  for (const int c : split.unseen) {
    if (!unseen.insert(c).second) throw ValidationError("class " + std::to_string(c) + " listed twice as unseen");
    if (seen.contains(c)) throw ValidationError("class " + std::to_string(c) + " is both seen and unseen");
  }
  const std::set<int> universe(class_ids.begin(), class_ids.end());
  for (const int c : universe) {
    if (!seen.contains(c) && !unseen.contains(c)) {
      throw ValidationError("class " + std::to_string(c) + " is assigned to neither seen nor unseen");
    }
  }
  for (const int c : seen) {
    if (!universe.contains(c)) throw ValidationError("split names unknown class " + std::to_string(c));
  }
  for (const int c : unseen) {
    if (!universe.contains(c)) throw ValidationError("split names unknown class " + std::to_string(c));
  }
}

inline SplitSpec load_split(const std::string& path) {
  try {
    return parse_split(detail::read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
}

inline SplitSpec load_split(const std::string& path, std::span<const int> class_ids) {
  auto split = load_split(path);
  validate_split(split, class_ids);
  return split;
}

inline std::string format_split(const SplitSpec& s) {
  std::string out;
  if (!s.scheme.empty()) out += "scheme: " + s.scheme + "\n";
  out += "seen:";
  for (const int c : s.seen) out += " " + std::to_string(c);
  out += "\nunseen:";
  for (const int c : s.unseen) out += " " + std::to_string(c);
  out += "\n";
  return out;
}

inline void save_split(const std::string& path, const SplitSpec& s) { detail::write_file(path, format_split(s)); }

// ---------------------------------------------------------------------------
// Class list and article corpus

struct ClassName {
  int class_id = 0;
  std::string name;
};

inline std::vector<ClassName> load_class_list(const std::string& path) {
  const std::string text = detail::read_file(path);
  std::vector<ClassName> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::set<int> ids;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = detail::split_ws(line);
    if (fields.empty() || fields.front().starts_with("#")) continue;
    ClassName c;
    if (!detail::parse_number(fields[0], c.class_id) || c.class_id < 0) {
      throw ParseError(path + ": bad class id", line_no);
    }
    if (fields.size() < 2) throw ParseError(path + ": class without a name", line_no);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      if (i > 1) c.name.push_back(' ');
      c.name += std::string(fields[i]);
    }
    if (!ids.insert(c.class_id).second) throw ParseError(path + ": duplicate class id", line_no);
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const ClassName& a, const ClassName& b) { return a.class_id < b.class_id; });
  return out;
}

// Article of class `id` lives at <dir>/<id>.txt.
inline std::string corpus_path(const std::string& dir, int class_id) {
  return (std::filesystem::path(dir) / (std::to_string(class_id) + ".txt")).string();
}

inline std::string load_article(const std::string& dir, int class_id) {
  return detail::read_file(corpus_path(dir, class_id));
}

// ---------------------------------------------------------------------------
// Feature scaling

// Per-dimension min-max map onto [-1, 1]; constant dimensions map to 0.
struct FeatureScaler {
  Vector min;
  Vector max;

  static FeatureScaler fit(const Matrix& x) {
    if (x.rows() == 0) throw ConfigError("cannot fit a scaler on zero rows");
    return {x.colwise().minCoeff().transpose(), x.colwise().maxCoeff().transpose()};
  }

  static FeatureScaler identity(Eigen::Index dim) { return {Vector::Constant(dim, -1.0), Vector::Constant(dim, 1.0)}; }

  Matrix transform(const Matrix& x) const {
    if (x.cols() != min.size()) {
      throw ConfigError("feature dimension " + std::to_string(x.cols()) + " does not match scaler dimension " +
                        std::to_string(min.size()));
    }
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double range = max[c] - min[c];
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        out(r, c) = range > 0.0 ? 2.0 * (x(r, c) - min[c]) / range - 1.0 : 0.0;
      }
    }
    return out;
  }

  friend bool operator==(const FeatureScaler&, const FeatureScaler&) = default;
};

// ---------------------------------------------------------------------------
// Checkpoints

struct Checkpoint {
  GanModel model;
  FeatureScaler scaler;
  std::vector<int> class_ids;  // global column order: seen block then unseen
  std::size_t seen_count = 0;
  std::string config_hash;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline constexpr int kCheckpointVersion = 1;

// 64-bit FNV-1a as 16 hex digits.
inline std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(h));
  return buf.data();
}

namespace detail {

inline nlohmann::json vector_json(const double* p, std::size_t n) { return std::vector<double>(p, p + n); }

inline nlohmann::json mlp_json(const Mlp& mlp) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : mlp.layers) {
    layers.push_back({{"fan_in", l.fan_in()},
                      {"fan_out", l.fan_out()},
                      {"activation", to_string(l.activation)},
                      {"slope", l.activation.slope},
                      {"weight", vector_json(l.weight.data(), static_cast<std::size_t>(l.weight.size()))},
                      {"bias", vector_json(l.bias.data(), static_cast<std::size_t>(l.bias.size()))}});
  }
  return layers;
}

inline Mlp mlp_from_json(const nlohmann::json& j) {
  std::vector<DenseLayer> layers;
  for (const auto& lj : j) {
    DenseLayer l;
    const auto fan_in = lj.at("fan_in").get<Eigen::Index>();
    const auto fan_out = lj.at("fan_out").get<Eigen::Index>();
    const auto w = lj.at("weight").get<std::vector<double>>();
    const auto b = lj.at("bias").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != fan_in * fan_out || static_cast<Eigen::Index>(b.size()) != fan_out) {
      throw ParseError("checkpoint layer size does not match its declared shape", 0);
    }
    l.weight = Eigen::Map<const Matrix>(w.data(), fan_in, fan_out);
    l.bias = Eigen::Map<const Vector>(b.data(), fan_out);
    l.activation = activation_from_string(lj.at("activation").get<std::string>(), lj.at("slope").get<double>());
    layers.push_back(std::move(l));
  }
  return Mlp(std::move(layers));
}

}  // namespace detail

inline std::string format_checkpoint(const Checkpoint& ck) {
  using nlohmann::json;
  const auto& g = ck.model.generator;
  const auto& d = ck.model.discriminator;
  json j;
  j["format"] = "gancst-checkpoint";
  j["version"] = kCheckpointVersion;
  j["config_hash"] = ck.config_hash;
  j["class_ids"] = ck.class_ids;
  j["seen_count"] = ck.seen_count;
  j["scaling"] = {{"min", detail::vector_json(ck.scaler.min.data(), static_cast<std::size_t>(ck.scaler.min.size()))},
                  {"max", detail::vector_json(ck.scaler.max.data(), static_cast<std::size_t>(ck.scaler.max.size()))}};
  j["generator"] = {{"semantic_dim", g.config.semantic_dim},
                    {"reduce_dim", g.config.reduce_dim},
                    {"noise_dim", g.config.effective_noise_dim()},
                    {"hidden_dim", g.config.hidden_dim},
                    {"visual_dim", g.config.visual_dim},
                    {"noise_sigma", g.config.noise_sigma},
                    {"noise_mode", to_string(g.config.noise_mode)},
                    {"leaky_slope", g.config.leaky_slope},
                    {"reduce", detail::mlp_json(g.reduce)},
                    {"body", detail::mlp_json(g.body)}};
  j["discriminator"] = {{"visual_dim", d.config.visual_dim},
                        {"hidden_dim", d.config.hidden_dim},
                        {"num_classes", d.config.num_classes},
                        {"trunk", detail::mlp_json(d.trunk)},
                        {"critic_head", detail::mlp_json(d.critic_head)},
                        {"class_head", detail::mlp_json(d.class_head)}};
  j["head_classes"] = ck.model.head_classes;
  return j.dump() + "\n";
}

inline Checkpoint parse_checkpoint(std::string_view text) {
  using nlohmann::json;
  try {
    const json j = json::parse(text);
    if (j.at("format") != "gancst-checkpoint") throw ParseError("not a gancst checkpoint", 0);
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw ParseError("unsupported checkpoint version " + j.at("version").dump(), 0);
    }
    Checkpoint ck;
    ck.config_hash = j.at("config_hash").get<std::string>();
    ck.class_ids = j.at("class_ids").get<std::vector<int>>();
    ck.seen_count = j.at("seen_count").get<std::size_t>();
    const auto mn = j.at("scaling").at("min").get<std::vector<double>>();
    const auto mx = j.at("scaling").at("max").get<std::vector<double>>();
    if (mn.size() != mx.size()) throw ParseError("scaling min/max sizes differ", 0);
    ck.scaler.min = Eigen::Map<const Vector>(mn.data(), static_cast<Eigen::Index>(mn.size()));
    ck.scaler.max = Eigen::Map<const Vector>(mx.data(), static_cast<Eigen::Index>(mx.size()));

    const auto& gj = j.at("generator");
    auto& g = ck.model.generator;
    g.config.semantic_dim = gj.at("semantic_dim").get<Eigen::Index>();
    g.config.reduce_dim = gj.at("reduce_dim").get<Eigen::Index>();
    g.config.noise_dim = gj.at("noise_dim").get<Eigen::Index>();
    g.config.hidden_dim = gj.at("hidden_dim").get<Eigen::Index>();
    g.config.visual_dim = gj.at("visual_dim").get<Eigen::Index>();
    g.config.noise_sigma = gj.at("noise_sigma").get<double>();
    g.config.noise_mode = noise_mode_from_string(gj.at("noise_mode").get<std::string>());
    g.config.leaky_slope = gj.at("leaky_slope").get<double>();
    g.reduce = detail::mlp_from_json(gj.at("reduce"));
    g.body = detail::mlp_from_json(gj.at("body"));

    const auto& dj = j.at("discriminator");
    auto& d = ck.model.discriminator;
    d.config.visual_dim = dj.at("visual_dim").get<Eigen::Index>();
    d.config.hidden_dim = dj.at("hidden_dim").get<Eigen::Index>();
    d.config.num_classes = dj.at("num_classes").get<Eigen::Index>();
    d.trunk = detail::mlp_from_json(dj.at("trunk"));
    d.critic_head = detail::mlp_from_json(dj.at("critic_head"));
    d.class_head = detail::mlp_from_json(dj.at("class_head"));
    ck.model.head_classes = j.at("head_classes").get<std::vector<int>>();

    if (g.reduce.input_dim() != g.config.semantic_dim || g.body.output_dim() != g.config.visual_dim ||
        d.trunk.input_dim() != d.config.visual_dim || d.class_head.output_dim() != d.config.num_classes ||
        static_cast<std::size_t>(d.config.num_classes) != ck.model.head_classes.size() ||
        ck.scaler.min.size() != g.config.visual_dim || ck.seen_count > ck.class_ids.size()) {
      throw ParseError("checkpoint sections are inconsistent", 0);
    }
    return ck;
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what(), 0);
  }
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  detail::write_file(path, format_checkpoint(ck));
}

inline Checkpoint load_checkpoint(const std::string& path) { return parse_checkpoint(detail::read_file(path)); }

// ---------------------------------------------------------------------------
// Reports

inline std::string format_train_log(const std::vector<std::pair<std::size_t, TrainLogEntry>>& log) {
  std::string out = "iteration\tstep\tloss_d\tloss_g\tloss_triplet\tval_gacc\n";
  for (const auto& [it, e] : log) {
    out += std::to_string(it) + "\t" + std::to_string(e.step) + "\t" + detail::format_double(e.loss_d) + "\t" +
           detail::format_double(e.loss_g) + "\t" + detail::format_double(e.loss_triplet) + "\t" +
           detail::format_double(e.val_gacc) + "\n";
  }
  return out;
}

inline std::string format_ssl_report(const std::vector<SslIterationReport>& reports) {
  std::string out = "iteration\tretained\tadded\tnew_classes\ttrain_size\tunseen_top1\tgacc\n";
  for (const auto& r : reports) {
    out += std::to_string(r.iteration) + "\t" + std::to_string(r.retained) + "\t" + std::to_string(r.added) + "\t" +
           std::to_string(r.new_classes) + "\t" + std::to_string(r.train_size) + "\t" +
           detail::format_double(r.unseen_top1) + "\t" + detail::format_double(r.gacc) + "\n";
  }
  return out;
}

// "key = value" lines followed by the SUC point list.
inline std::string format_eval_report(const EvalReport& r) {
  std::string out = "# gancst evaluation report v1\n";
  auto kv = [&out](const std::string& k, double v) { out += k + " = " + detail::format_double(v) + "\n"; };
  kv("top1_unseen", r.top1_unseen);
  kv("seen", r.seen);
  kv("unseen", r.unseen);
  kv("harmonic", r.harmonic);
  kv("g_acc", r.g_acc);
  kv("ausuc", r.ausuc);
  for (const auto& [pct, value] : r.map_at) kv("map@" + std::to_string(pct), value);
  out += "suc_points = " + std::to_string(r.suc_points.size()) + "\n";
  for (const auto& p : r.suc_points) out += detail::format_double(p.unseen) + " " + detail::format_double(p.seen) + "\n";
  return out;
}

inline EvalReport parse_eval_report(std::string_view text) {
  EvalReport r;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  std::size_t points_left = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto f = detail::split_ws(line);
    if (f.empty() || f.front().starts_with("#")) continue;
    if (points_left > 0) {
      SucPoint p;
      if (f.size() != 2 || !detail::parse_number(f[0], p.unseen) || !detail::parse_number(f[1], p.seen)) {
        throw ParseError("bad SUC point", line_no);
      }
      r.suc_points.push_back(p);
      --points_left;
      continue;
    }
    if (f.size() != 3 || f[1] != "=") throw ParseError("expected 'key = value'", line_no);
    const std::string key(f[0]);
    if (key == "suc_points") {
      if (!detail::parse_number(f[2], points_left)) throw ParseError("bad point count", line_no);
      continue;
    }
    double v = 0.0;
    if (!detail::parse_number(f[2], v)) throw ParseError("bad number for " + key, line_no);
    if (key == "top1_unseen") r.top1_unseen = v;
    else if (key == "seen") r.seen = v;
    else if (key == "unseen") r.unseen = v;
    else if (key == "harmonic") r.harmonic = v;
    else if (key == "g_acc") r.g_acc = v;
    else if (key == "ausuc") r.ausuc = v;
    else if (key.starts_with("map@")) r.map_at.emplace_back(std::stoi(key.substr(4)), v);
    else throw ParseError("unknown report key '" + key + "'", line_no);
  }
  if (points_left != 0) throw ParseError("report ends before all SUC points", 0);
  return r;
}

// Two tab-separated columns with a header, for plotting.
inline std::string format_suc_points(const std::vector<SucPoint>& points) {
  std::string out = "acc_unseen\tacc_seen\n";
  for (const auto& p : points) out += detail::format_double(p.unseen) + "\t" + detail::format_double(p.seen) + "\n";
  return out;
}

inline void write_text_file(const std::string& path, std::string_view content) { detail::write_file(path, content); }
inline std::string read_text_file(const std::string& path) { return detail::read_file(path); }

}  // namespace gancst
