#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "oztal/error.hpp"
#include "oztal/linalg.hpp"
#include "oztal/types.hpp"

namespace oztal {

// K scaled matching logits for one timestep. Values are not confined to [-1, 1].
struct ScoreVector {
  Timestep t = 0;
  Vector values;
};

inline void class_scores_into(std::span<const double> z, const TextBank& bank, double scale,
                              std::span<double> out) {
  if (!(scale > 0.0)) throw Error("logit scale must be > 0");
  if (z.size() != bank.dim()) {
    throw Error("dimension mismatch: feature has " + std::to_string(z.size()) +
                ", text bank has " + std::to_string(bank.dim()));
  }
  const double zn = l2_norm(z);
  if (zn == 0.0) throw Error("class scores of zero-norm feature");
  // Bank rows are unit norm, so cosine reduces to a dot product over |z|.
  for (std::size_t k = 0; k < bank.num_classes(); ++k) {
    out[k] = scale * std::clamp(dot(z, bank.class_embedding(k)) / zn, -1.0, 1.0);
  }
}

inline ScoreVector class_scores(std::span<const double> z, const TextBank& bank, double scale,
                                Timestep t = 0) {
  ScoreVector k{t, Vector(bank.num_classes())};
  class_scores_into(z, bank, scale, k.values);
  return k;
}

inline double background_score(std::span<const double> z, const TextBank& bank, double scale) {
  if (!(scale > 0.0)) throw Error("logit scale must be > 0");
  return scale * cosine(z, bank.background());
}

/// Background-aware refinement of one class logit k against background logit r.
/// alpha = k / (k + r) floored at 0.5 and capped at 1; alpha = 0.5 when k + r == 0.
inline double refine_score(double k, double r) {
  if (std::isnan(k) || std::isnan(r)) throw Error("NaN score in refinement");
  double alpha = 0.5;
  const double sum = k + r;
  if (sum != 0.0) alpha = std::min(std::max(k / sum, 0.5), 1.0);
  return alpha * k - (1.0 - alpha) * r;
}

inline void refine_scores_into(std::span<const double> k, double r, std::span<double> out) {
  for (std::size_t j = 0; j < k.size(); ++j) out[j] = refine_score(k[j], r);
}

inline ScoreVector refine_scores(const ScoreVector& k, double r) {
  if (!std::isfinite(r)) throw Error("background score must be finite");
  ScoreVector y{k.t, Vector(k.values.size())};
  refine_scores_into(k.values, r, y.values);
  return y;
}

}  // namespace oztal
