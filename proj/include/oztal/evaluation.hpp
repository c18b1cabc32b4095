#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "oztal/error.hpp"
#include "oztal/types.hpp"

namespace oztal {

// Half-open time interval in seconds.
struct Interval {
  double start = 0.0;
  double end = 0.0;
};

inline double tiou(const Interval& a, const Interval& b) {
  if (!(a.end > a.start) || !(b.end > b.start)) throw Error("tiou of zero-length segment");
  const double inter = std::max(0.0, std::min(a.end, b.end) - std::max(a.start, b.start));
  const double uni = (a.end - a.start) + (b.end - b.start) - inter;
  return inter / uni;
}

struct AnnotatedSegment {
  double start = 0.0;
  double end = 0.0;
  std::string label;
};

struct VideoAnnotation {
  double duration = 0.0;
  std::vector<AnnotatedSegment> segments;
};

struct GroundTruthSet {
  std::map<std::string, VideoAnnotation> videos;
  std::vector<std::string> classes;  // sorted, unique

  std::size_t segment_count() const {
    std::size_t n = 0;
    for (const auto& [id, v] : videos) n += v.segments.size();
    return n;
  }
};

/// Rebuilds `classes` from the labels present in the annotations.
inline void collect_classes(GroundTruthSet& gt) {
  std::set<std::string> labels;
  for (const auto& [id, v] : gt.videos) {
    for (const auto& s : v.segments) labels.insert(s.label);
  }
  gt.classes.assign(labels.begin(), labels.end());
}

/// Keeps only segments whose label is in `classes`; the class list becomes `classes`.
inline GroundTruthSet restrict_classes(const GroundTruthSet& gt,
                                       const std::vector<std::string>& classes) {
  std::set<std::string> keep(classes.begin(), classes.end());
  GroundTruthSet out;
  for (const auto& [id, v] : gt.videos) {
    VideoAnnotation va{v.duration, {}};
    for (const auto& s : v.segments) {
      if (keep.count(s.label)) va.segments.push_back(s);
    }
    out.videos.emplace(id, std::move(va));
  }
  out.classes.assign(keep.begin(), keep.end());
  return out;
}

struct Detection {
  std::string video_id;
  std::string label;
  double start = 0.0;
  double end = 0.0;
  double score = 0.0;
  Timestep emit = 0;
};

using DetectionSet = std::vector<Detection>;

struct ScoredSegment {
  std::string video_id;
  Interval span;
  double score = 0.0;
};

struct VideoSegment {
  std::string video_id;
  Interval span;
};

/// Detection AP for one class: predictions are ranked by score (ties: earlier start, then
/// video id, then end), each matched greedily to the unmatched ground truth of the same
/// video with the highest tIoU. AP is the sum of precision at each true positive over
/// the number of ground-truth segments.
inline double average_precision(std::span<const ScoredSegment> preds,
                                 std::span<const VideoSegment> gt, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw Error("tIoU threshold must be in (0, 1]");
  if (gt.empty()) return 0.0;

  std::map<std::string, std::vector<std::size_t>> gt_by_video;
  for (std::size_t i = 0; i < gt.size(); ++i) gt_by_video[gt[i].video_id].push_back(i);

  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& pa = preds[a];
    const auto& pb = preds[b];
    if (pa.score != pb.score) return pa.score > pb.score;
    if (pa.span.start != pb.span.start) return pa.span.start < pb.span.start;
    if (pa.video_id != pb.video_id) return pa.video_id < pb.video_id;
    return pa.span.end < pb.span.end;
  });

  std::vector<bool> matched(gt.size(), false);
  std::size_t tp = 0;
  double precision_sum = 0.0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const auto& p = preds[order[rank]];
    const auto it = gt_by_video.find(p.video_id);
    if (it == gt_by_video.end()) continue;
    double best = -1.0;
    std::size_t best_idx = 0;
    for (std::size_t g : it->second) {
      if (matched[g]) continue;
      const double ov = tiou(p.span, gt[g].span);
      if (ov > best) {
        best = ov;
        best_idx = g;
      }
    }
    if (best >= threshold) {
      matched[best_idx] = true;
      ++tp;
      precision_sum += static_cast<double>(tp) / static_cast<double>(rank + 1);
    }
  }
  return precision_sum / static_cast<double>(gt.size());
}

struct MapReport {
  std::vector<double> thresholds;
  std::vector<double> map;  // one per threshold, in [0, 1]
  double average = 0.0;
  std::vector<std::string> classes;                    // classes with ground truth
  std::map<std::string, std::vector<double>> per_class;  // AP per threshold
};

inline std::vector<std::string> unknown_labels(const DetectionSet& dets,
                                               const GroundTruthSet& gt) {
  std::set<std::string> known(gt.classes.begin(), gt.classes.end());
  std::set<std::string> unknown;
  for (const auto& d : dets) {
    if (!known.count(d.label)) unknown.insert(d.label);
  }
  return {unknown.begin(), unknown.end()};
}

/// Mean over ground-truth classes of per-class AP, at each threshold, plus the mean
/// across thresholds.
inline MapReport mean_ap(const DetectionSet& dets, const GroundTruthSet& gt,
                         const std::vector<double>& thresholds) {
  if (gt.segment_count() == 0) throw Error("empty ground truth");
  if (thresholds.empty()) throw Error("no tIoU thresholds given");
  if (auto unknown = unknown_labels(dets, gt); !unknown.empty()) {
    std::string msg = "predictions use classes absent from ground truth:";
    for (const auto& u : unknown) msg += " " + u;
    throw Error(msg);
  }

  std::map<std::string, std::vector<VideoSegment>> gt_by_class;
  for (const auto& [id, v] : gt.videos) {
    for (const auto& s : v.segments) gt_by_class[s.label].push_back({id, {s.start, s.end}});
  }
  std::map<std::string, std::vector<ScoredSegment>> pred_by_class;
  for (const auto& d : dets) {
    if (!(d.end > d.start)) throw Error("detection with end <= start in " + d.video_id);
    pred_by_class[d.label].push_back({d.video_id, {d.start, d.end}, d.score});
  }

  MapReport report;
  report.thresholds = thresholds;
  report.map.assign(thresholds.size(), 0.0);
  for (const auto& cls : gt.classes) {
    const auto g = gt_by_class.find(cls);
    if (g == gt_by_class.end()) continue;
    report.classes.push_back(cls);
    const auto& preds = pred_by_class[cls];
    auto& aps = report.per_class[cls];
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
      aps.push_back(average_precision(preds, g->second, thresholds[i]));
      report.map[i] += aps.back();
    }
  }
  for (double& m : report.map) m /= static_cast<double>(report.classes.size());
  report.average = std::accumulate(report.map.begin(), report.map.end(), 0.0) /
                   static_cast<double>(report.map.size());
  return report;
}

// The two threshold sets used for THUMOS14 and ActivityNet-1.3 style reporting.
inline std::vector<double> thumos_thresholds() { return {0.3, 0.4, 0.5, 0.6, 0.7}; }
inline std::vector<double> activitynet_thresholds() { return {0.5, 0.75, 0.95}; }

}  // namespace oztal
