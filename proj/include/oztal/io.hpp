#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "oztal/error.hpp"
#include "oztal/evaluation.hpp"
#include "oztal/types.hpp"

namespace oztal {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr int kManifestVersion = 1;
inline constexpr const char* kManifestName = "manifest.json";

struct ManifestEntry {
  std::string video_id;
  std::string path;  // relative to the manifest directory
  std::size_t frames = 0;  // T
  std::size_t dim = 0;     // D
  double fps = 30.0;
  std::size_t stride = 1;
  std::size_t window_len = 8;

  TimeBase time() const { return TimeBase{fps, stride}; }
};

struct FeatureManifest {
  int format_version = kManifestVersion;
  fs::path base_dir;
  std::vector<ManifestEntry> entries;
};

namespace detail {

inline std::string read_text(const fs::path& path, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(what + " not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_json(const fs::path& path, const std::string& what) {
  const std::string text = read_text(path, what);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error("malformed " + what + " " + path.string() + ": " + e.what());
  }
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

// Relative path that cannot climb out of its base directory.
inline void check_relative_path(const std::string& p) {
  const fs::path path(p);
  if (p.empty() || path.is_absolute() || path.has_root_name()) {
    throw Error("manifest path must be relative: '" + p + "'");
  }
  for (const auto& part : path) {
    if (part == "..") throw Error("manifest path escapes its directory: '" + p + "'");
  }
}

inline float decode_f32le(const unsigned char* p) {
  std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                       (static_cast<std::uint32_t>(p[2]) << 16) |
                       (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

inline void encode_f32le(float v, unsigned char* p) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  p[0] = static_cast<unsigned char>(bits);
  p[1] = static_cast<unsigned char>(bits >> 8);
  p[2] = static_cast<unsigned char>(bits >> 16);
  p[3] = static_cast<unsigned char>(bits >> 24);
}

// Reads a whole f32 matrix after checking the file size against rows * cols.
inline std::vector<float> read_f32_matrix(const fs::path& path, std::size_t rows,
                                          std::size_t cols) {
  std::error_code ec;
  const auto actual = fs::file_size(path, ec);
  if (ec) throw Error("feature file not found: " + path.string());
  const std::uintmax_t expected = static_cast<std::uintmax_t>(rows) * cols * 4;
  if (actual != expected) {
    throw Error("size mismatch for " + path.string() + ": expected " +
                std::to_string(expected) + " bytes, got " + std::to_string(actual));
  }
  std::vector<unsigned char> raw(static_cast<std::size_t>(expected));
  std::ifstream in(path, std::ios::binary);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw Error("short read: " + path.string());
  }
  std::vector<float> out(rows * cols);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = decode_f32le(raw.data() + 4 * i);
  return out;
}

inline void write_f32_matrix(const fs::path& path, const std::vector<Vector>& rows) {
  std::vector<unsigned char> raw;
  for (const auto& row : rows) {
    for (double v : row) {
      unsigned char b[4];
      encode_f32le(static_cast<float>(v), b);
      raw.insert(raw.end(), b, b + 4);
    }
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

inline std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
T require_field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw Error(where + ": missing \"" + key + "\"");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(where + ": bad value for \"" + key + "\"");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Feature manifests and binaries

inline FeatureManifest read_manifest(const fs::path& dir) {
  const fs::path file = dir / kManifestName;
  if (!fs::exists(file)) throw Error("manifest not found: " + file.string());
  const json j = detail::parse_json(file, "manifest");
  FeatureManifest m;
  m.base_dir = dir;
  m.format_version = detail::require_field<int>(j, "format_version", "manifest");
  if (m.format_version != kManifestVersion) {
    throw Error("unsupported manifest format_version " + std::to_string(m.format_version));
  }
  if (!j.contains("videos") || !j["videos"].is_array()) throw Error("manifest: missing \"videos\"");
  std::size_t index = 0;
  for (const auto& v : j["videos"]) {
    const std::string where = "manifest video " + std::to_string(index++);
    ManifestEntry e;
    e.video_id = detail::require_field<std::string>(v, "video_id", where);
    e.path = detail::require_field<std::string>(v, "path", where);
    e.frames = detail::require_field<std::size_t>(v, "T", where);
    e.dim = detail::require_field<std::size_t>(v, "D", where);
    e.fps = detail::require_field<double>(v, "fps", where);
    e.stride = detail::require_field<std::size_t>(v, "stride", where);
    e.window_len = detail::require_field<std::size_t>(v, "window_len", where);
    detail::check_relative_path(e.path);
    if (e.dim == 0) throw Error(where + ": D must be >= 1");
    if (!(e.fps > 0.0) || e.stride == 0) throw Error(where + ": fps and stride must be positive");
    if (!m.entries.empty() && e.dim != m.entries.front().dim) {
      throw Error(where + ": D differs from the rest of the manifest");
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

inline void write_manifest(const fs::path& dir, const FeatureManifest& m) {
  json videos = json::array();
  for (const auto& e : m.entries) {
    detail::check_relative_path(e.path);
    videos.push_back({{"video_id", e.video_id},
                      {"path", e.path},
                      {"T", e.frames},
                      {"D", e.dim},
                      {"fps", e.fps},
                      {"stride", e.stride},
                      {"window_len", e.window_len}});
  }
  json j = {{"format_version", m.format_version}, {"videos", videos}};
  detail::write_text(dir / kManifestName, j.dump(2) + "\n");
}

/// Row-major little-endian f32, one row per timestep.
inline std::vector<FrameFeature> read_features(const ManifestEntry& entry, const fs::path& base_dir) {
  const auto data = detail::read_f32_matrix(base_dir / entry.path, entry.frames, entry.dim);
  std::vector<FrameFeature> out;
  out.reserve(entry.frames);
  for (std::size_t t = 0; t < entry.frames; ++t) {
    Vector row(data.begin() + static_cast<std::ptrdiff_t>(t * entry.dim),
               data.begin() + static_cast<std::ptrdiff_t>((t + 1) * entry.dim));
    out.push_back(make_feature(static_cast<Timestep>(t), std::move(row), entry.dim));
  }
  return out;
}

inline void write_features(const fs::path& path, const std::vector<FrameFeature>& features) {
  std::vector<Vector> rows;
  rows.reserve(features.size());
  for (const auto& f : features) rows.push_back(f.values);
  detail::write_f32_matrix(path, rows);
}

// ---------------------------------------------------------------------------
// Text banks: PREFIX.json (names, descriptions, prompts) + PREFIX.bin ((K+2) x D f32,
// classes in JSON order, then foreground, then background).

struct TextBankFiles {
  fs::path json_path;
  fs::path bin_path;
};

inline TextBankFiles textbank_files(const fs::path& prefix) {
  return {fs::path(prefix.string() + ".json"), fs::path(prefix.string() + ".bin")};
}

inline TextBank load_textbank(const fs::path& json_path, const fs::path& bin_path) {
  const json j = detail::parse_json(json_path, "text bank");
  const auto dim = detail::require_field<std::size_t>(j, "dim", "text bank");
  if (dim == 0) throw Error("text bank: dim must be >= 1");
  if (!j.contains("classes") || !j["classes"].is_array() || j["classes"].empty()) {
    throw Error("text bank: \"classes\" must be a non-empty array");
  }
  std::vector<std::string> names, descriptions;
  std::size_t index = 0;
  for (const auto& c : j["classes"]) {
    const std::string where = "text bank class " + std::to_string(index++);
    names.push_back(detail::require_field<std::string>(c, "name", where));
    descriptions.push_back(c.value("description", std::string{}));
  }
  const auto fg = detail::require_field<std::string>(j, "foreground", "text bank");
  const auto bg = detail::require_field<std::string>(j, "background", "text bank");

  const std::size_t k = names.size();
  std::error_code ec;
  const auto bytes = fs::file_size(bin_path, ec);
  if (ec) throw Error("text bank binary not found: " + bin_path.string());
  const std::uintmax_t row_bytes = static_cast<std::uintmax_t>(dim) * 4;
  if (bytes % row_bytes != 0 || bytes / row_bytes != k + 2) {
    throw Error("text bank binary " + bin_path.string() + ": expected K+2 = " +
                std::to_string(k + 2) + " rows of dim " + std::to_string(dim) + " (" +
                std::to_string((k + 2) * row_bytes) + " bytes), got " + std::to_string(bytes) +
                " bytes");
  }
  const auto data = detail::read_f32_matrix(bin_path, k + 2, dim);
  auto row = [&](std::size_t r) {
    return Vector(data.begin() + static_cast<std::ptrdiff_t>(r * dim),
                  data.begin() + static_cast<std::ptrdiff_t>((r + 1) * dim));
  };
  std::vector<Vector> classes;
  for (std::size_t r = 0; r < k; ++r) classes.push_back(row(r));
  return TextBank(std::move(names), std::move(descriptions), classes, row(k), row(k + 1), fg, bg);
}

inline TextBank load_textbank(const fs::path& prefix) {
  const auto files = textbank_files(prefix);
  return load_textbank(files.json_path, files.bin_path);
}

inline void save_textbank(const fs::path& prefix, const TextBank& bank) {
  const auto files = textbank_files(prefix);
  json classes = json::array();
  std::vector<Vector> rows;
  for (std::size_t k = 0; k < bank.num_classes(); ++k) {
    classes.push_back({{"name", bank.names()[k]}, {"description", bank.descriptions()[k]}});
    const auto e = bank.class_embedding(k);
    rows.emplace_back(e.begin(), e.end());
  }
  rows.emplace_back(bank.foreground().begin(), bank.foreground().end());
  rows.emplace_back(bank.background().begin(), bank.background().end());
  json j = {{"dim", bank.dim()},
            {"classes", classes},
            {"foreground", bank.foreground_description()},
            {"background", bank.background_description()}};
  detail::write_text(files.json_path, j.dump(2) + "\n");
  detail::write_f32_matrix(files.bin_path, rows);
}

// ---------------------------------------------------------------------------
// Annotations: {video_id: {duration, annotations: [{label, segment: [s, e]}]}}, optionally
// wrapped as {"database": ..., "classes": [...]} where the class list may name classes
// that have no segments.

inline constexpr double kClampTolerance = 0.1;

inline GroundTruthSet load_annotations(const fs::path& path,
                                       std::vector<std::string>* warnings = nullptr) {
  json j = detail::parse_json(path, "annotation file");
  std::vector<std::string> declared;
  if (j.is_object() && j.contains("database") && j["database"].is_object()) {
    if (j.contains("classes")) {
      declared = detail::require_field<std::vector<std::string>>(j, "classes", "annotation file");
    }
    j = json(j["database"]);
  }
  if (!j.is_object()) throw Error("annotation file must hold a JSON object");
  GroundTruthSet gt;
  for (const auto& [id, v] : j.items()) {
    const std::string where = "video " + id;
    VideoAnnotation va;
    va.duration = detail::require_field<double>(v, "duration", where);
    if (!std::isfinite(va.duration) || va.duration <= 0.0) {
      throw Error(where + ": duration must be positive");
    }
    if (!v.contains("annotations") || !v["annotations"].is_array()) {
      throw Error(where + ": missing \"annotations\"");
    }
    std::size_t index = 0;
    for (const auto& a : v["annotations"]) {
      const std::string at = where + " annotation " + std::to_string(index++);
      AnnotatedSegment seg;
      seg.label = detail::require_field<std::string>(a, "label", at);
      const auto bounds = detail::require_field<std::vector<double>>(a, "segment", at);
      if (bounds.size() != 2 || !std::isfinite(bounds[0]) || !std::isfinite(bounds[1])) {
        throw Error(at + ": \"segment\" must be [start, end]");
      }
      seg.start = bounds[0];
      seg.end = bounds[1];
      if (seg.start >= seg.end) throw Error(at + ": start >= end");
      if (seg.start < 0.0) {
        if (seg.start < -kClampTolerance) throw Error(at + ": starts before 0");
        if (warnings) warnings->push_back(at + ": start clamped to 0");
        seg.start = 0.0;
      }
      if (seg.end > va.duration) {
        if (seg.end > va.duration + kClampTolerance) throw Error(at + ": ends after duration");
        if (warnings) warnings->push_back(at + ": end clamped to duration");
        seg.end = va.duration;
      }
      if (seg.start >= seg.end) throw Error(at + ": empty after clamping");
      va.segments.push_back(std::move(seg));
    }
    gt.videos.emplace(id, std::move(va));
  }
  collect_classes(gt);
  if (!declared.empty()) {
    std::set<std::string> all(gt.classes.begin(), gt.classes.end());
    all.insert(declared.begin(), declared.end());
    gt.classes.assign(all.begin(), all.end());
  }
  return gt;
}

/// Writes the wrapped form, including the class list.
inline void write_annotations(const fs::path& path, const GroundTruthSet& gt) {
  json j = json::object();
  for (const auto& [id, v] : gt.videos) {
    json anns = json::array();
    for (const auto& s : v.segments) {
      anns.push_back({{"label", s.label}, {"segment", {s.start, s.end}}});
    }
    j[id] = {{"duration", v.duration}, {"annotations", anns}};
  }
  json wrapped = {{"database", j}, {"classes", gt.classes}};
  detail::write_text(path, wrapped.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Prediction logs: one JSON object per line. Seconds carry 6 decimals; the score is
// written at full precision; emit is the emission timestep.

inline std::string format_prediction(const Detection& d) {
  return "{\"video_id\":" + json(d.video_id).dump() + ",\"label\":" + json(d.label).dump() +
         ",\"start\":" + detail::fixed6(d.start) + ",\"end\":" + detail::fixed6(d.end) +
         ",\"score\":" + detail::exact(d.score) + ",\"emit\":" + std::to_string(d.emit) + "}";
}

inline void write_predictions(const fs::path& path, const DetectionSet& dets) {
  std::string text;
  for (const auto& d : dets) text += format_prediction(d) + "\n";
  detail::write_text(path, text);
}

inline DetectionSet read_predictions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("prediction file not found: " + path.string());
  DetectionSet out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + " line " + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      throw Error(where + ": malformed JSON");
    }
    Detection d;
    d.video_id = detail::require_field<std::string>(j, "video_id", where);
    d.label = detail::require_field<std::string>(j, "label", where);
    d.start = detail::require_field<double>(j, "start", where);
    d.end = detail::require_field<double>(j, "end", where);
    d.score = detail::require_field<double>(j, "score", where);
    d.emit = detail::require_field<Timestep>(j, "emit", where);
    if (!std::isfinite(d.score)) throw Error(where + ": non-finite score");
    if (!(d.end > d.start)) throw Error(where + ": end must exceed start");
    out.push_back(std::move(d));
  }
  return out;
}

inline Detection to_detection(const ActionInstance& inst, const std::string& video_id,
                              const TextBank& bank) {
  return Detection{video_id,        bank.names().at(inst.class_index), inst.start_sec,
                   inst.end_sec,    inst.confidence,                  inst.emit_t};
}

}  // namespace oztal
