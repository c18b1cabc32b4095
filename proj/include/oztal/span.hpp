#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oztal/error.hpp"
#include "oztal/types.hpp"

namespace oztal {

/// Confidence of a closed run: summed refined logits over sqrt(run length).
inline double segment_confidence(double sum_y, Timestep start_t, Timestep end_t) {
  if (end_t < start_t) throw Error("segment_confidence: end before start");
  return sum_y / std::sqrt(static_cast<double>(end_t - start_t + 1));
}

/// Per-class on/off machine over refined scores. A class switches on when its score is
/// strictly above the threshold and the instance is emitted at the first step where it
/// no longer is, covering the last above-threshold step as its end.
class SpanStateMachine {
 public:
  SpanStateMachine(std::size_t num_classes, double threshold, TimeBase time = {})
      : tracks_(num_classes), threshold_(threshold), time_(time) {
    if (num_classes < 1) throw Error("state machine needs at least one class");
    if (std::isnan(threshold)) throw Error("action threshold must not be NaN");
  }

  std::size_t num_classes() const { return tracks_.size(); }
  double threshold() const { return threshold_; }
  std::optional<Timestep> last_step() const { return last_t_; }
  bool active(std::size_t k) const { return tracks_.at(k).active; }
  std::optional<Timestep> open_start(std::size_t k) const {
    const auto& tr = tracks_.at(k);
    return tr.active ? std::optional<Timestep>(tr.start) : std::nullopt;
  }
  std::size_t open_count() const {
    std::size_t n = 0;
    for (const auto& tr : tracks_) n += tr.active ? 1 : 0;
    return n;
  }

  /// Advances to timestep t, appending instances completed at t (ascending class order).
  void step(Timestep t, std::span<const double> y, std::vector<ActionInstance>& out) {
    if (last_t_ && t <= *last_t_) {
      throw Error("timestep " + std::to_string(t) + " does not follow " +
                  std::to_string(*last_t_));
    }
    if (y.size() != tracks_.size()) {
      throw Error("score vector has " + std::to_string(y.size()) + " entries, expected " +
                  std::to_string(tracks_.size()));
    }
    for (std::size_t k = 0; k < y.size(); ++k) {
      if (!std::isfinite(y[k])) throw Error("non-finite score at t=" + std::to_string(t));
    }
    last_t_ = t;
    for (std::size_t k = 0; k < y.size(); ++k) {
      Track& tr = tracks_[k];
      const bool on = y[k] > threshold_;
      if (on && !tr.active) {
        tr = Track{true, t, y[k]};
      } else if (on) {
        tr.sum += y[k];
      } else if (tr.active) {
        out.push_back(close(k, t - 1, t));
      }
    }
  }

  std::vector<ActionInstance> step(Timestep t, std::span<const double> y) {
    std::vector<ActionInstance> out;
    step(t, y, out);
    return out;
  }

  /// Emits every open run ending at t_last and returns to the all-off state.
  std::vector<ActionInstance> flush(Timestep t_last) {
    if (last_t_ && t_last < *last_t_) {
      throw Error("flush at " + std::to_string(t_last) + " precedes last step " +
                  std::to_string(*last_t_));
    }
    std::vector<ActionInstance> out;
    for (std::size_t k = 0; k < tracks_.size(); ++k) {
      if (tracks_[k].active) out.push_back(close(k, t_last, t_last));
    }
    last_t_ = t_last;
    return out;
  }

 private:
  struct Track {
    bool active = false;
    Timestep start = 0;
    double sum = 0.0;
  };

  ActionInstance close(std::size_t k, Timestep end_t, Timestep emit_t) {
    Track& tr = tracks_[k];
    ActionInstance inst;
    inst.start_t = tr.start;
    inst.end_t = end_t;
    inst.class_index = k;
    inst.confidence = segment_confidence(tr.sum, tr.start, end_t);
    inst.emit_t = emit_t;
    assign_seconds(inst, time_);
    tr = Track{};
    return inst;
  }

  std::vector<Track> tracks_;
  double threshold_;
  TimeBase time_;
  std::optional<Timestep> last_t_;
};

}  // namespace oztal
