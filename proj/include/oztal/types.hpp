#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "oztal/error.hpp"
#include "oztal/linalg.hpp"

namespace oztal {

// Stream time index: one step per `stride` raw frames.
using Timestep = std::int64_t;

// Converts between timesteps and seconds for one video.
struct TimeBase {
  double fps = 1.0;
  std::size_t stride = 1;

  double seconds(Timestep t) const {
    return static_cast<double>(t) * static_cast<double>(stride) / fps;
  }
  Timestep timestep(double sec) const {
    return static_cast<Timestep>(std::llround(sec * fps / static_cast<double>(stride)));
  }
};

// One embedding per timestep: the encoded window ending at t.
struct FrameFeature {
  Timestep t = 0;
  Vector values;
};

/// Builds a feature after checking dimension, finiteness and non-zero norm.
inline FrameFeature make_feature(Timestep t, Vector values, std::size_t dim) {
  if (values.size() != dim) {
    throw Error("feature at t=" + std::to_string(t) + " has dimension " +
                std::to_string(values.size()) + ", expected " + std::to_string(dim));
  }
  if (!all_finite(values)) throw Error("non-finite feature at t=" + std::to_string(t));
  if (l2_norm(values) == 0.0) throw Error("zero-norm feature at t=" + std::to_string(t));
  return FrameFeature{t, std::move(values)};
}

/// Class, foreground and background text embeddings. All rows are L2-normalized on
/// construction; construction fails on empty, duplicate, non-finite or zero rows.
class TextBank {
 public:
  TextBank(std::vector<std::string> names, std::vector<std::string> descriptions,
           const std::vector<Vector>& class_embeddings, Vector foreground, Vector background,
           std::string foreground_description = {}, std::string background_description = {})
      : names_(std::move(names)),
        descriptions_(std::move(descriptions)),
        foreground_(std::move(foreground)),
        background_(std::move(background)),
        foreground_description_(std::move(foreground_description)),
        background_description_(std::move(background_description)) {
    if (names_.empty()) throw Error("text bank needs at least one class");
    if (class_embeddings.size() != names_.size()) {
      throw Error("text bank has " + std::to_string(names_.size()) + " class names but " +
                  std::to_string(class_embeddings.size()) + " class embeddings");
    }
    if (descriptions_.empty()) descriptions_.resize(names_.size());
    if (descriptions_.size() != names_.size()) {
      throw Error("text bank class descriptions do not match class names");
    }
    std::unordered_set<std::string> seen;
    for (const auto& n : names_) {
      if (!seen.insert(n).second) throw Error("duplicate class name '" + n + "'");
    }
    dim_ = foreground_.size();
    if (dim_ == 0) throw Error("text bank embeddings must be non-empty");
    embeddings_.reserve(names_.size() * dim_);
    for (std::size_t k = 0; k < class_embeddings.size(); ++k) {
      Vector row = class_embeddings[k];
      check_row(row, "class '" + names_[k] + "'");
      embeddings_.insert(embeddings_.end(), row.begin(), row.end());
    }
    check_row(foreground_, "foreground");
    check_row(background_, "background");
  }

  std::size_t num_classes() const { return names_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<std::string>& descriptions() const { return descriptions_; }
  const std::string& foreground_description() const { return foreground_description_; }
  const std::string& background_description() const { return background_description_; }

  std::span<const double> class_embedding(std::size_t k) const {
    return std::span<const double>(embeddings_).subspan(k * dim_, dim_);
  }
  std::span<const double> foreground() const { return foreground_; }
  std::span<const double> background() const { return background_; }

  std::optional<std::size_t> class_index(const std::string& name) const {
    for (std::size_t k = 0; k < names_.size(); ++k) {
      if (names_[k] == name) return k;
    }
    return std::nullopt;
  }

 private:
  void check_row(Vector& row, const std::string& what) const {
    if (row.size() != dim_) {
      throw Error("embedding for " + what + " has dimension " + std::to_string(row.size()) +
                  ", expected " + std::to_string(dim_));
    }
    if (!all_finite(row)) throw Error("non-finite embedding for " + what);
    if (l2_norm(row) == 0.0) throw Error("zero-norm embedding for " + what);
    normalize_in_place(row);
  }

  std::vector<std::string> names_;
  std::vector<std::string> descriptions_;
  Vector embeddings_;  // row-major K x D
  Vector foreground_;
  Vector background_;
  std::string foreground_description_;
  std::string background_description_;
  std::size_t dim_ = 0;
};

// A completed action. The segment covers timesteps [start_t, end_t] inclusive; in seconds
// it is [start_sec, end_sec) with end_sec at the start of timestep end_t + 1.
struct ActionInstance {
  Timestep start_t = 0;
  Timestep end_t = 0;
  std::size_t class_index = 0;
  double confidence = 0.0;
  Timestep emit_t = 0;
  double start_sec = 0.0;
  double end_sec = 0.0;

  // End-of-stream emissions close at the emission step itself.
  bool flushed() const { return end_t == emit_t; }

  friend bool operator==(const ActionInstance&, const ActionInstance&) = default;
};

inline void assign_seconds(ActionInstance& inst, const TimeBase& time) {
  inst.start_sec = time.seconds(inst.start_t);
  inst.end_sec = time.seconds(inst.end_t + 1);
}

}  // namespace oztal
