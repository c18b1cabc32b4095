#pragma once

// Library side of the oztal command line: each command is a function taking an options
// struct, so tests can drive the same code paths as the binary.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "oztal/config.hpp"
#include "oztal/error.hpp"
#include "oztal/evaluation.hpp"
#include "oztal/io.hpp"
#include "oztal/parallel.hpp"
#include "oztal/stream.hpp"
#include "oztal/synth.hpp"

namespace oztal {

/// Default worker count: OZTAL_JOBS when set to a positive integer, else 1.
inline std::size_t default_jobs() {
  if (const char* env = std::getenv("OZTAL_JOBS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return 1;
}

// Per-video configuration: timing fields come from the manifest entry.
inline LocalizerConfig config_for(const LocalizerConfig& base, const ManifestEntry& e) {
  LocalizerConfig cfg = base;
  cfg.fps = e.fps;
  cfg.stride = e.stride;
  cfg.window_len = e.window_len;
  return validate_config(cfg);
}

inline void check_bank_matches(const FeatureManifest& m, const TextBank& bank) {
  if (!m.entries.empty() && m.entries.front().dim != bank.dim()) {
    throw Error("feature dimension " + std::to_string(m.entries.front().dim) +
                " does not match text bank dimension " + std::to_string(bank.dim()));
  }
}

// ---------------------------------------------------------------------------
// localize

struct LocalizeOptions {
  fs::path features_dir;
  fs::path textbank_prefix;
  fs::path out;
  std::optional<fs::path> trace;
  LocalizerConfig config;
  std::size_t jobs = 1;
};

struct LocalizeSummary {
  std::size_t videos = 0;
  std::size_t instances = 0;
  std::size_t timesteps = 0;
};

inline void write_trace_csv(const fs::path& path, const std::vector<std::string>& ids,
                            const std::vector<std::vector<StepTrace>>& traces) {
  std::string text = "video_id,t,memory_fill,appended,lambda,background,max_refined\n";
  char buf[256];
  for (std::size_t v = 0; v < ids.size(); ++v) {
    for (const auto& tr : traces[v]) {
      std::snprintf(buf, sizeof buf, ",%lld,%zu,%d,%.9g,%.9g,%.9g\n",
                    static_cast<long long>(tr.t), tr.memory_fill, tr.appended ? 1 : 0,
                    tr.lambda, tr.background, tr.max_refined);
      text += ids[v] + buf;
    }
  }
  detail::write_text(path, text);
}

/// Runs the online localizer over every manifest video and writes the prediction log in
/// manifest order, so the output does not depend on the worker count.
inline LocalizeSummary run_localize(const LocalizeOptions& opt) {
  validate_config(opt.config);
  const FeatureManifest manifest = read_manifest(opt.features_dir);
  const TextBank bank = load_textbank(opt.textbank_prefix);
  check_bank_matches(manifest, bank);

  const std::size_t n = manifest.entries.size();
  std::vector<std::vector<ActionInstance>> results(n);
  std::vector<std::vector<StepTrace>> traces(n);
  std::vector<std::size_t> lengths(n);
  parallel_for(n, opt.jobs, [&](std::size_t i) {
    const auto& entry = manifest.entries[i];
    const auto features = read_features(entry, manifest.base_dir);
    lengths[i] = features.size();
    if (features.empty()) return;
    auto res = run_stream(features, bank, config_for(opt.config, entry), opt.trace.has_value());
    results[i] = std::move(res.instances);
    traces[i] = std::move(res.trace);
  });

  LocalizeSummary summary;
  DetectionSet dets;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) {
    ids.push_back(manifest.entries[i].video_id);
    for (const auto& inst : results[i]) {
      dets.push_back(to_detection(inst, manifest.entries[i].video_id, bank));
    }
    summary.timesteps += lengths[i];
  }
  summary.videos = n;
  summary.instances = dets.size();
  write_predictions(opt.out, dets);
  if (opt.trace) write_trace_csv(*opt.trace, ids, traces);
  return summary;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::optional<fs::path> preds;
  fs::path gt;
  std::vector<double> tious = thumos_thresholds();
  std::optional<fs::path> splits;
  std::optional<fs::path> json_out;
};

struct EvalResult {
  MapReport report;  // per-threshold mAP averaged over splits when splits are used
  std::size_t splits = 1;
  std::vector<std::string> warnings;
};

struct SplitSpec {
  std::string name;
  fs::path preds;
  std::vector<std::string> classes;
};

/// Split file: a JSON array (or {"splits": [...]}) of {name, preds, classes}; relative
/// prediction paths resolve against the split file's directory.
inline std::vector<SplitSpec> read_splits(const fs::path& path) {
  json j = detail::parse_json(path, "split file");
  if (j.is_object() && j.contains("splits")) j = json(j["splits"]);
  if (!j.is_array() || j.empty()) throw Error("split file must list at least one split");
  std::vector<SplitSpec> out;
  std::size_t index = 0;
  for (const auto& s : j) {
    const std::string where = "split " + std::to_string(index++);
    SplitSpec spec;
    spec.name = s.value("name", where);
    spec.preds = detail::require_field<std::string>(s, "preds", where);
    if (spec.preds.is_relative()) spec.preds = path.parent_path() / spec.preds;
    spec.classes = detail::require_field<std::vector<std::string>>(s, "classes", where);
    if (spec.classes.empty()) throw Error(where + ": empty class list");
    out.push_back(std::move(spec));
  }
  return out;
}

inline std::string format_map_table(const MapReport& r) {
  std::string out = "tIoU  ";
  char buf[64];
  for (double t : r.thresholds) {
    std::snprintf(buf, sizeof buf, " %7.2f", t);
    out += buf;
  }
  out += "     Avg\nmAP   ";
  for (double m : r.map) {
    std::snprintf(buf, sizeof buf, " %7.2f", 100.0 * m);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, " %7.2f\n", 100.0 * r.average);
  out += buf;
  return out;
}

inline json map_report_json(const MapReport& r, std::size_t splits) {
  json per_class = json::object();
  for (const auto& [cls, aps] : r.per_class) per_class[cls] = aps;
  return {{"thresholds", r.thresholds}, {"mAP", r.map},   {"average", r.average},
          {"splits", splits},           {"classes", r.classes}, {"per_class", per_class}};
}

inline EvalResult run_eval(const EvalOptions& opt) {
  for (double t : opt.tious) {
    if (!(t > 0.0 && t <= 1.0)) throw Error("tIoU thresholds must be in (0, 1]");
  }
  EvalResult result;
  const GroundTruthSet gt = load_annotations(opt.gt, &result.warnings);
  if (!opt.splits) {
    if (!opt.preds) throw Error("eval needs --preds or --splits");
    result.report = mean_ap(read_predictions(*opt.preds), gt, opt.tious);
  } else {
    const auto splits = read_splits(*opt.splits);
    MapReport acc;
    acc.thresholds = opt.tious;
    acc.map.assign(opt.tious.size(), 0.0);
    for (const auto& s : splits) {
      const auto r = mean_ap(read_predictions(s.preds), restrict_classes(gt, s.classes), opt.tious);
      for (std::size_t i = 0; i < r.map.size(); ++i) acc.map[i] += r.map[i];
      acc.average += r.average;
    }
    for (double& m : acc.map) m /= static_cast<double>(splits.size());
    acc.average /= static_cast<double>(splits.size());
    result.report = std::move(acc);
    result.splits = splits.size();
  }
  if (opt.json_out) {
    detail::write_text(*opt.json_out, map_report_json(result.report, result.splits).dump(2) + "\n");
  }
  return result;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepGrid {
  std::vector<double> taus;
  std::vector<std::size_t> memory_lengths;  // 0 disables the memory stage
};

// "a:b:step" (inclusive) or "a,b,c".
inline std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  if (text.empty()) return out;
  auto to_double = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw Error("");
      return v;
    } catch (...) {
      throw Error("bad grid value '" + s + "'");
    }
  };
  if (const auto c1 = text.find(':'); c1 != std::string::npos) {
    const auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string::npos) throw Error("range must be start:stop:step, got '" + text + "'");
    const double a = to_double(text.substr(0, c1));
    const double b = to_double(text.substr(c1 + 1, c2 - c1 - 1));
    const double step = to_double(text.substr(c2 + 1));
    if (!(step > 0.0)) throw Error("range step must be > 0");
    for (std::size_t i = 0;; ++i) {
      const double v = a + static_cast<double>(i) * step;
      if (v > b + 1e-9 * std::max(1.0, std::abs(b))) break;
      out.push_back(v);
    }
    return out;
  }
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos
                                                                          : comma - pos);
    out.push_back(to_double(item));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

/// Grid spec: "tau=5:20:2.5;lq=0,5,10,20,40". Axes left out take the base values.
inline SweepGrid parse_grid(const std::string& spec, double base_tau, std::size_t base_lq) {
  SweepGrid grid{{base_tau}, {base_lq}};
  std::size_t pos = 0;
  while (pos < spec.size()) {
    const auto semi = spec.find(';', pos);
    const std::string item = spec.substr(pos, semi == std::string::npos ? std::string::npos
                                                                        : semi - pos);
    pos = semi == std::string::npos ? spec.size() : semi + 1;
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error("grid item must be key=values, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    const auto values = parse_values(item.substr(eq + 1));
    if (values.empty()) throw Error("empty grid");
    if (key == "tau") {
      grid.taus = values;
    } else if (key == "lq") {
      grid.memory_lengths.clear();
      for (double v : values) {
        if (v < 0.0 || v != std::floor(v)) throw Error("lq values must be non-negative integers");
        grid.memory_lengths.push_back(static_cast<std::size_t>(v));
      }
    } else {
      throw Error("unknown grid axis '" + key + "' (expected tau or lq)");
    }
  }
  if (grid.taus.empty() || grid.memory_lengths.empty()) throw Error("empty grid");
  return grid;
}

struct SweepOptions {
  fs::path features_dir;
  fs::path textbank_prefix;
  fs::path gt;
  fs::path out;  // CSV
  SweepGrid grid;
  LocalizerConfig config;
  std::vector<double> tious = thumos_thresholds();
  std::size_t jobs = 1;
};

struct SweepRow {
  double tau = 0.0;
  std::size_t memory_length = 0;
  MapReport report;
};

inline LocalizerConfig with_memory_length(LocalizerConfig cfg, std::size_t lq) {
  cfg.use_memory = lq > 0;
  cfg.memory_capacity = lq > 0 ? lq : 1;
  return cfg;
}

/// Evaluates every (tau, lq) pair. Refined score streams are computed once per lq and
/// replayed through the span machine for each tau.
inline std::vector<SweepRow> run_sweep(const SweepOptions& opt) {
  if (opt.grid.taus.empty() || opt.grid.memory_lengths.empty()) throw Error("empty grid");
  const FeatureManifest manifest = read_manifest(opt.features_dir);
  const TextBank bank = load_textbank(opt.textbank_prefix);
  check_bank_matches(manifest, bank);
  const GroundTruthSet gt = load_annotations(opt.gt);

  std::vector<std::vector<FrameFeature>> features(manifest.entries.size());
  parallel_for(features.size(), opt.jobs, [&](std::size_t i) {
    features[i] = read_features(manifest.entries[i], manifest.base_dir);
  });

  std::vector<SweepRow> rows;
  for (std::size_t lq : opt.grid.memory_lengths) {
    const LocalizerConfig base = with_memory_length(opt.config, lq);
    std::vector<ScoreTrace> scores(features.size());
    parallel_for(features.size(), opt.jobs, [&](std::size_t i) {
      if (!features[i].empty()) {
        scores[i] = score_stream(features[i], bank, config_for(base, manifest.entries[i]));
      }
    });
    for (double tau : opt.grid.taus) {
      DetectionSet dets;
      for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i].length() == 0) continue;
        for (const auto& inst : localize_scores(scores[i], tau)) {
          dets.push_back(to_detection(inst, manifest.entries[i].video_id, bank));
        }
      }
      rows.push_back({tau, lq, mean_ap(dets, gt, opt.tious)});
    }
  }

  std::string csv = "tau,lq";
  char buf[64];
  for (double t : opt.tious) {
    std::snprintf(buf, sizeof buf, ",mAP@%.2f", t);
    csv += buf;
  }
  csv += ",avg\n";
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%g,%zu", r.tau, r.memory_length);
    csv += buf;
    for (double m : r.report.map) {
      std::snprintf(buf, sizeof buf, ",%.6f", 100.0 * m);
      csv += buf;
    }
    std::snprintf(buf, sizeof buf, ",%.6f\n", 100.0 * r.report.average);
    csv += buf;
  }
  detail::write_text(opt.out, csv);
  return rows;
}

// ---------------------------------------------------------------------------
// synth

inline SynthData run_synth(const SynthOptions& opt, const fs::path& out_dir) {
  SynthData data = generate_synthetic(opt);
  write_synthetic(out_dir, data);
  return data;
}

}  // namespace oztal
