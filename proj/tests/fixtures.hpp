#pragma once

// Seeded random inputs shared by the unit tests and the acceptance suite.

#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "oztal/evaluation.hpp"
#include "oztal/types.hpp"

namespace fixtures {

struct Instance {
  std::vector<oracle::Gt> gts;
  std::vector<oracle::Pred> preds;
  std::vector<std::string> vocabulary;
};

// Random small instance: <= 5 videos, <= 3 classes, <= 20 segments. Predictions are
// jittered copies of ground truth plus pure false positives; scores come from a small
// grid so ties occur.
inline Instance random_instance(std::mt19937_64& rng) {
  Instance in;
  const int videos = 1 + static_cast<int>(rng() % 5);
  const int classes = 1 + static_cast<int>(rng() % 3);
  const int n_gt = 1 + static_cast<int>(rng() % 20);
  std::uniform_real_distribution<double> pos(0, 100), len(1, 20), jit(-4, 4);
  auto video = [&] { return "v" + std::to_string(rng() % videos); };
  auto label = [&] { return "c" + std::to_string(rng() % classes); };
  for (int c = 0; c < classes; ++c) in.vocabulary.push_back("c" + std::to_string(c));
  for (int i = 0; i < n_gt; ++i) {
    const double s = pos(rng);
    in.gts.push_back({video(), label(), s, s + len(rng)});
  }
  const int n_pred = static_cast<int>(rng() % 25);
  for (int i = 0; i < n_pred; ++i) {
    const double score = static_cast<double>(rng() % 8) * 0.5;
    if (rng() % 3 && !in.gts.empty()) {
      const auto& g = in.gts[rng() % in.gts.size()];
      double s = g.start + jit(rng), e = g.end + jit(rng);
      if (e <= s + 0.1) e = s + 0.5;
      in.preds.push_back({g.video, rng() % 5 ? g.label : label(), s, e, score});
    } else {
      const double s = pos(rng);
      in.preds.push_back({video(), label(), s, s + len(rng), score});
    }
  }
  return in;
}

inline oztal::GroundTruthSet ground_truth(const Instance& in) {
  oztal::GroundTruthSet gt;
  for (const auto& g : in.gts) {
    auto& v = gt.videos[g.video];
    v.duration = std::max(v.duration, g.end + 1);
    v.segments.push_back({g.start, g.end, g.label});
  }
  gt.classes = in.vocabulary;
  return gt;
}

inline oztal::DetectionSet detections(const std::vector<oracle::Pred>& ps) {
  oztal::DetectionSet d;
  for (const auto& p : ps) d.push_back({p.video, p.label, p.start, p.end, p.score, 0});
  return d;
}

inline oztal::Vector gaussian(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  oztal::Vector v(dim);
  for (double& x : v) x = n(rng);
  return v;
}

// Text bank with random (not orthogonal) class, foreground and background rows.
inline oztal::TextBank random_bank(std::mt19937_64& rng, std::size_t classes, std::size_t dim) {
  std::vector<std::string> names, desc;
  std::vector<oztal::Vector> rows;
  for (std::size_t k = 0; k < classes; ++k) {
    names.push_back("k" + std::to_string(k));
    desc.push_back("class " + std::to_string(k));
    rows.push_back(gaussian(rng, dim));
  }
  return oztal::TextBank(names, desc, rows, gaussian(rng, dim), gaussian(rng, dim), "fg", "bg");
}

// Stream that alternates between background and class episodes, so thresholds get
// crossed, memory fills and the fusion gate opens and closes.
inline std::vector<oztal::FrameFeature> random_stream(std::mt19937_64& rng,
                                                      const oztal::TextBank& bank,
                                                      std::size_t length, double noise) {
  const std::size_t dim = bank.dim();
  const oztal::Vector context = gaussian(rng, dim);
  std::vector<oztal::FrameFeature> out;
  out.reserve(length);
  int label = -1;
  std::uniform_real_distribution<double> u(0, 1);
  for (std::size_t t = 0; t < length; ++t) {
    if (u(rng) < 0.05) {
      label = label >= 0 ? -1 : static_cast<int>(rng() % bank.num_classes());
    }
    oztal::Vector x = gaussian(rng, dim);
    for (std::size_t d = 0; d < dim; ++d) {
      x[d] = 0.5 * context[d] / std::sqrt(static_cast<double>(dim)) + noise * x[d] /
             std::sqrt(static_cast<double>(dim));
      if (label >= 0) {
        x[d] += bank.class_embedding(static_cast<std::size_t>(label))[d] + bank.foreground()[d];
      } else {
        x[d] += bank.background()[d];
      }
    }
    out.push_back(oztal::make_feature(static_cast<oztal::Timestep>(t), std::move(x), dim));
  }
  return out;
}

}  // namespace fixtures
