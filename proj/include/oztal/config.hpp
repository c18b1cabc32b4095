#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "oztal/error.hpp"

namespace oztal {

struct LocalizerConfig {
  std::size_t window_len = 8;        // provenance only; features arrive pre-encoded
  std::size_t memory_capacity = 20;  // L_q
  double fusion_threshold = 0.8;     // theta
  double action_threshold = 10.0;    // tau
  double logit_scale = 100.0;
  double fps = 30.0;
  std::size_t stride = 1;
  bool renormalize_fused = true;
  bool normalized_memory_weights = false;
  // Ablation switches. With use_memory off the feature passes through unchanged and the
  // bank is never touched; with background_refinement off the raw class logits are
  // thresholded directly.
  bool use_memory = true;
  bool background_refinement = true;
};

/// Returns cfg unchanged when valid; otherwise throws naming the first bad field.
inline LocalizerConfig validate_config(const LocalizerConfig& cfg) {
  if (cfg.window_len < 1) throw Error("window_len must be >= 1");
  if (cfg.memory_capacity < 1) throw Error("memory_capacity must be >= 1");
  if (!std::isfinite(cfg.fusion_threshold) || cfg.fusion_threshold < -1.0 ||
      cfg.fusion_threshold > 1.0) {
    throw Error("fusion_threshold outside [-1,1]");
  }
  if (!std::isfinite(cfg.action_threshold)) throw Error("action_threshold must be finite");
  if (!std::isfinite(cfg.logit_scale) || cfg.logit_scale <= 0.0) {
    throw Error("logit_scale must be > 0");
  }
  if (!std::isfinite(cfg.fps) || cfg.fps <= 0.0) throw Error("fps must be > 0");
  if (cfg.stride < 1) throw Error("stride must be >= 1");
  return cfg;
}

// Published hyperparameters for the two benchmark settings.
inline LocalizerConfig thumos14_config() { return LocalizerConfig{}; }

inline LocalizerConfig activitynet_config() {
  LocalizerConfig cfg;
  cfg.memory_capacity = 40;
  cfg.action_threshold = 8.0;
  return cfg;
}

}  // namespace oztal
