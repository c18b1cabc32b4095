#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "oztal/error.hpp"
#include "oztal/evaluation.hpp"
#include "oztal/io.hpp"
#include "oztal/linalg.hpp"
#include "oztal/types.hpp"

namespace oztal {

// Synthetic benchmark parameters. Features inside a class-k segment are
//   context_weight * c_v + class_weight * u_k + foreground_weight * u_fg + noise * n
// and outside segments
//   context_weight * c_v + background_weight * u_bg + distractor_weight * u_j + noise * n
// where u_j is the class of the nearest planted segment (scene context that resembles
// the action), the u are the orthonormal text directions, c_v is a per-video direction
// orthogonal to all of them, and n has i.i.d. N(0, 1/D) entries.
struct SynthOptions {
  std::size_t classes = 3;
  std::size_t dim = 16;
  std::size_t videos = 5;
  std::size_t frames = 400;
  std::uint64_t seed = 42;
  double noise = 0.0;
  double fps = 30.0;
  std::size_t stride = 1;
  std::size_t window_len = 8;
  double context_weight = 2.0;
  double class_weight = 1.0;
  double foreground_weight = 1.0;
  double background_weight = 1.0;
  double distractor_weight = 0.0;
  std::size_t min_len = 8;
  std::size_t max_len = 48;
  std::size_t min_gap = 8;
  std::size_t max_gap = 40;
};

struct PlantedSegment {
  std::size_t start_t = 0;
  std::size_t end_t = 0;  // exclusive
  std::size_t class_index = 0;
};

struct SynthVideo {
  std::string video_id;
  std::vector<PlantedSegment> segments;
  std::vector<FrameFeature> features;
};

struct SynthData {
  TextBank bank;
  std::vector<SynthVideo> videos;
  GroundTruthSet gt;
  SynthOptions options;
};

namespace detail {

inline Vector gaussian_vector(std::mt19937_64& rng, std::size_t dim, double stddev) {
  std::normal_distribution<double> normal(0.0, stddev);
  Vector v(dim);
  for (double& x : v) x = normal(rng);
  return v;
}

// Removes the components along already-orthonormal rows.
inline void project_out(Vector& v, const std::vector<Vector>& basis) {
  for (const auto& b : basis) {
    const double c = dot(v, b);
    for (std::size_t d = 0; d < v.size(); ++d) v[d] -= c * b[d];
  }
}

}  // namespace detail

inline SynthData generate_synthetic(const SynthOptions& opt) {
  if (opt.classes < 1) throw Error("synth: classes must be >= 1");
  if (opt.dim < opt.classes + 2) {
    throw Error("synth: dim must be >= classes + 2 to build a near-orthogonal text bank");
  }
  if (opt.videos < 1 || opt.frames < 1) throw Error("synth: videos and frames must be >= 1");
  if (opt.min_len < 1 || opt.max_len < opt.min_len || opt.min_gap < 1 ||
      opt.max_gap < opt.min_gap) {
    throw Error("synth: bad segment length or gap range");
  }
  if (!(opt.noise >= 0.0) || !std::isfinite(opt.noise)) throw Error("synth: noise must be >= 0");
  if (!(opt.fps > 0.0) || opt.stride < 1) throw Error("synth: fps and stride must be positive");

  std::mt19937_64 rng(opt.seed);
  const std::size_t dim = opt.dim;

  // Gram-Schmidt over K + 2 random directions: classes, then foreground, background.
  std::vector<Vector> basis;
  while (basis.size() < opt.classes + 2) {
    Vector v = detail::gaussian_vector(rng, dim, 1.0);
    detail::project_out(v, basis);
    if (l2_norm(v) < 1e-6) continue;
    normalize_in_place(v);
    basis.push_back(std::move(v));
  }
  std::vector<std::string> names, descriptions;
  std::vector<Vector> class_rows;
  for (std::size_t k = 0; k < opt.classes; ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "class_%02zu", k);
    names.emplace_back(name);
    descriptions.push_back("synthetic action " + std::to_string(k));
    class_rows.push_back(basis[k]);
  }
  const Vector& fg = basis[opt.classes];
  const Vector& bg = basis[opt.classes + 1];

  SynthData data{TextBank(names, descriptions, class_rows, fg, bg, "synthetic foreground",
                          "synthetic background"),
                 {},
                 {},
                 opt};

  const TimeBase time{opt.fps, opt.stride};
  std::uniform_int_distribution<std::size_t> len_dist(opt.min_len, opt.max_len);
  std::uniform_int_distribution<std::size_t> gap_dist(opt.min_gap, opt.max_gap);
  std::uniform_int_distribution<std::size_t> class_dist(0, opt.classes - 1);
  const double noise_std = 1.0 / std::sqrt(static_cast<double>(dim));

  for (std::size_t v = 0; v < opt.videos; ++v) {
    SynthVideo video;
    char id[32];
    std::snprintf(id, sizeof id, "video_%03zu", v);
    video.video_id = id;

    Vector context(dim, 0.0);
    if (dim > opt.classes + 2) {
      for (int attempt = 0; attempt < 16; ++attempt) {
        Vector c = detail::gaussian_vector(rng, dim, 1.0);
        detail::project_out(c, basis);
        if (l2_norm(c) < 1e-6) continue;
        normalize_in_place(c);
        context = std::move(c);
        break;
      }
    }

    // Segments never touch the last frame, so every planted run closes before the end.
    std::size_t cursor = gap_dist(rng);
    while (true) {
      const std::size_t len = len_dist(rng);
      const std::size_t cls = class_dist(rng);
      if (cursor + len >= opt.frames) break;
      video.segments.push_back({cursor, cursor + len, cls});
      cursor += len + gap_dist(rng);
    }

    std::vector<int> label(opt.frames, -1);
    for (const auto& s : video.segments) {
      for (std::size_t t = s.start_t; t < s.end_t; ++t) label[t] = static_cast<int>(s.class_index);
    }
    // Nearest segment class for background frames; ties go to the earlier segment.
    std::vector<int> nearest(opt.frames, -1);
    for (std::size_t t = 0; t < opt.frames && !video.segments.empty(); ++t) {
      std::size_t best = opt.frames;
      for (const auto& s : video.segments) {
        const std::size_t d = t < s.start_t ? s.start_t - t : (t >= s.end_t ? t + 1 - s.end_t : 0);
        if (d < best) {
          best = d;
          nearest[t] = static_cast<int>(s.class_index);
        }
      }
    }
    video.features.reserve(opt.frames);
    for (std::size_t t = 0; t < opt.frames; ++t) {
      Vector x(dim, 0.0);
      for (std::size_t d = 0; d < dim; ++d) x[d] = opt.context_weight * context[d];
      if (label[t] >= 0) {
        const Vector& u = basis[static_cast<std::size_t>(label[t])];
        for (std::size_t d = 0; d < dim; ++d) {
          x[d] += opt.class_weight * u[d] + opt.foreground_weight * fg[d];
        }
      } else {
        for (std::size_t d = 0; d < dim; ++d) x[d] += opt.background_weight * bg[d];
        if (opt.distractor_weight != 0.0 && nearest[t] >= 0) {
          const Vector& u = basis[static_cast<std::size_t>(nearest[t])];
          for (std::size_t d = 0; d < dim; ++d) x[d] += opt.distractor_weight * u[d];
        }
      }
      if (opt.noise > 0.0) {
        const Vector n = detail::gaussian_vector(rng, dim, noise_std);
        for (std::size_t d = 0; d < dim; ++d) x[d] += opt.noise * n[d];
      }
      video.features.push_back(make_feature(static_cast<Timestep>(t), std::move(x), dim));
    }

    VideoAnnotation va;
    va.duration = time.seconds(static_cast<Timestep>(opt.frames));
    for (const auto& s : video.segments) {
      va.segments.push_back({time.seconds(static_cast<Timestep>(s.start_t)),
                             time.seconds(static_cast<Timestep>(s.end_t)), names[s.class_index]});
    }
    data.gt.videos.emplace(video.video_id, std::move(va));
    data.videos.push_back(std::move(video));
  }
  data.gt.classes = names;  // every class is declared, planted or not
  return data;
}

// Layout: manifest.json, features/<video>.bin, textbank.{json,bin}, gt.json.
inline void write_synthetic(const fs::path& dir, const SynthData& data) {
  FeatureManifest manifest;
  for (const auto& v : data.videos) {
    const std::string rel = "features/" + v.video_id + ".bin";
    write_features(dir / rel, v.features);
    manifest.entries.push_back({v.video_id, rel, v.features.size(), data.options.dim,
                                data.options.fps, data.options.stride, data.options.window_len});
  }
  write_manifest(dir, manifest);
  save_textbank(dir / "textbank", data.bank);
  write_annotations(dir / "gt.json", data.gt);
}

}  // namespace oztal
