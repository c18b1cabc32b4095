#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "oztal/classification.hpp"
#include "oztal/config.hpp"
#include "oztal/error.hpp"
#include "oztal/memory.hpp"
#include "oztal/span.hpp"
#include "oztal/types.hpp"

namespace oztal {

// Per-step diagnostics. memory_fill is read after this step's memory update.
struct StepTrace {
  Timestep t = 0;
  std::size_t memory_fill = 0;
  bool appended = false;
  double lambda = 0.0;
  double background = 0.0;
  double max_refined = 0.0;
};

/// Memory update, enhancement, scoring and refinement for one stream, without the span
/// machine. Holds only the bank and fixed scratch buffers.
class FrameScorer {
 public:
  FrameScorer(const TextBank& bank, const LocalizerConfig& cfg)
      : bank_(&bank),
        cfg_(validate_config(cfg)),
        memory_(cfg.memory_capacity, bank.dim()),
        z_(bank.dim()),
        mean_(bank.dim()),
        weighted_(bank.dim()),
        k_(bank.num_classes()) {}

  const LocalizerConfig& config() const { return cfg_; }
  const TextBank& text_bank() const { return *bank_; }
  const MemoryBank& memory() const { return memory_; }
  std::size_t num_classes() const { return bank_->num_classes(); }

  /// Writes the refined scores for feature x into y (size K).
  StepTrace score(Timestep t, std::span<const double> x, std::span<double> y) {
    if (x.size() != bank_->dim()) {
      throw Error("dimension mismatch at t=" + std::to_string(t) + ": feature has " +
                  std::to_string(x.size()) + ", text bank has " + std::to_string(bank_->dim()));
    }
    if (y.size() != k_.size()) throw Error("score buffer has wrong length");
    StepTrace tr;
    tr.t = t;
    std::span<const double> z = x;
    if (cfg_.use_memory) {
      tr.appended = update_memory(memory_, x, bank_->foreground(), bank_->background());
      tr.lambda = detail::enhance_into(memory_, x, cfg_, z_, mean_, weighted_);
      z = z_;
    }
    tr.memory_fill = memory_.size();
    class_scores_into(z, *bank_, cfg_.logit_scale, k_);
    tr.background = background_score(z, *bank_, cfg_.logit_scale);
    if (cfg_.background_refinement) {
      refine_scores_into(k_, tr.background, y);
    } else {
      std::copy(k_.begin(), k_.end(), y.begin());
    }
    tr.max_refined = *std::max_element(y.begin(), y.end());
    return tr;
  }

 private:
  const TextBank* bank_;
  LocalizerConfig cfg_;
  MemoryBank memory_;
  Vector z_, mean_, weighted_, k_;
};

/// Online localization of one video. Features must arrive with t = 0, 1, 2, ...; each
/// call sees only the current feature and state built from earlier ones. The text bank
/// must outlive the session.
class StreamSession {
 public:
  StreamSession(const TextBank& bank, const LocalizerConfig& cfg, std::string video_id = {})
      : scorer_(bank, cfg),
        machine_(bank.num_classes(), cfg.action_threshold, TimeBase{cfg.fps, cfg.stride}),
        video_id_(std::move(video_id)),
        y_(bank.num_classes()) {}

  const std::string& video_id() const { return video_id_; }
  Timestep next_timestep() const { return next_t_; }
  const MemoryBank& memory() const { return scorer_.memory(); }
  const SpanStateMachine& machine() const { return machine_; }
  const StepTrace& last_trace() const { return last_trace_; }
  std::span<const double> last_scores() const { return y_; }

  void process(const FrameFeature& x, std::vector<ActionInstance>& out) {
    if (x.t != next_t_) {
      throw Error("out-of-order timestep: expected " + std::to_string(next_t_) + ", got " +
                  std::to_string(x.t));
    }
    last_trace_ = scorer_.score(x.t, x.values, y_);
    machine_.step(x.t, y_, out);
    ++next_t_;
  }

  std::vector<ActionInstance> process(const FrameFeature& x) {
    std::vector<ActionInstance> out;
    process(x, out);
    return out;
  }

  /// End-of-stream: emits open runs ending at the last processed timestep.
  std::vector<ActionInstance> finish() {
    if (next_t_ == 0) return {};
    return machine_.flush(next_t_ - 1);
  }

 private:
  FrameScorer scorer_;
  SpanStateMachine machine_;
  std::string video_id_;
  Vector y_;
  Timestep next_t_ = 0;
  StepTrace last_trace_;
};

struct StreamResult {
  std::vector<ActionInstance> instances;  // ordered by emit_t
  std::vector<StepTrace> trace;           // empty unless requested
};

inline StreamResult run_stream(std::span<const FrameFeature> features, const TextBank& bank,
                               const LocalizerConfig& cfg, bool with_trace = false) {
  if (features.empty()) throw Error("empty feature stream");
  StreamSession session(bank, cfg);
  StreamResult result;
  if (with_trace) result.trace.reserve(features.size());
  for (const auto& x : features) {
    session.process(x, result.instances);
    if (with_trace) result.trace.push_back(session.last_trace());
  }
  for (auto& inst : session.finish()) result.instances.push_back(inst);
  return result;
}

// Refined score rows for a whole stream. Replaying the span machine over it is
// equivalent to run_stream at any action threshold, which makes threshold sweeps cheap.
struct ScoreTrace {
  std::size_t num_classes = 0;
  TimeBase time;
  Vector values;  // row-major T x K

  std::size_t length() const { return num_classes == 0 ? 0 : values.size() / num_classes; }
  std::span<const double> row(std::size_t t) const {
    return std::span<const double>(values).subspan(t * num_classes, num_classes);
  }
};

inline ScoreTrace score_stream(std::span<const FrameFeature> features, const TextBank& bank,
                               const LocalizerConfig& cfg) {
  if (features.empty()) throw Error("empty feature stream");
  FrameScorer scorer(bank, cfg);
  ScoreTrace out{bank.num_classes(), TimeBase{cfg.fps, cfg.stride},
                 Vector(features.size() * bank.num_classes())};
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].t != static_cast<Timestep>(i)) {
      throw Error("out-of-order timestep: expected " + std::to_string(i) + ", got " +
                  std::to_string(features[i].t));
    }
    std::span<double> row = std::span<double>(out.values).subspan(i * out.num_classes,
                                                                  out.num_classes);
    scorer.score(features[i].t, features[i].values, row);
  }
  return out;
}

inline std::vector<ActionInstance> localize_scores(const ScoreTrace& scores, double threshold) {
  if (scores.length() == 0) throw Error("empty score trace");
  SpanStateMachine machine(scores.num_classes, threshold, scores.time);
  std::vector<ActionInstance> out;
  for (std::size_t t = 0; t < scores.length(); ++t) {
    machine.step(static_cast<Timestep>(t), scores.row(t), out);
  }
  for (auto& inst : machine.flush(static_cast<Timestep>(scores.length()) - 1)) {
    out.push_back(inst);
  }
  return out;
}

}  // namespace oztal
