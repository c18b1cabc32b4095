#pragma once

// Brute-force reference implementations used only by tests. They deliberately avoid the
// library's code paths.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace oracle {

struct Run {
  long long start = 0;
  long long end = 0;  // inclusive
  std::size_t cls = 0;
  double confidence = 0;
  long long emit = 0;
};

// Maximal runs of scores strictly above tau for one class, with the confidence computed
// from the stored run values. A run reaching the last step is emitted at that step.
inline std::vector<Run> run_length_scan(const std::vector<double>& y, double tau,
                                        std::size_t cls) {
  std::vector<Run> out;
  const long long n = static_cast<long long>(y.size());
  long long t = 0;
  while (t < n) {
    if (!(y[t] > tau)) {
      ++t;
      continue;
    }
    long long e = t;
    while (e + 1 < n && y[e + 1] > tau) ++e;
    std::vector<double> stored(y.begin() + t, y.begin() + e + 1);
    double sum = 0;
    for (double v : stored) sum += v;
    const double len = static_cast<double>(stored.size());
    out.push_back({t, e, cls, sum / std::sqrt(len), e + 1 < n ? e + 1 : e});
    t = e + 1;
  }
  return out;
}

struct Gt {
  std::string video;
  std::string label;
  double start, end;
};

struct Pred {
  std::string video;
  std::string label;
  double start, end, score;
};

inline double overlap(double s1, double e1, double s2, double e2) {
  const double inter = std::min(e1, e2) - std::max(s1, s2);
  if (inter <= 0) return 0.0;
  return inter / ((e1 - s1) + (e2 - s2) - inter);
}

// Exhaustive evaluator: for each class, walk predictions in score order (ties: start,
// video, end) and, for each, scan every ground-truth segment to find the best unmatched
// one in the same video. Precision is recomputed from the full TP/FP prefix each time.
inline double brute_force_map(const std::vector<Pred>& preds, const std::vector<Gt>& gts,
                              double thr) {
  std::vector<std::string> classes;
  for (const auto& g : gts) {
    if (std::find(classes.begin(), classes.end(), g.label) == classes.end()) {
      classes.push_back(g.label);
    }
  }
  double total = 0;
  for (const auto& cls : classes) {
    std::vector<Pred> ps;
    for (const auto& p : preds) {
      if (p.label == cls) ps.push_back(p);
    }
    // Selection sort to avoid sharing any comparator logic.
    for (std::size_t i = 0; i < ps.size(); ++i) {
      std::size_t best = i;
      for (std::size_t j = i + 1; j < ps.size(); ++j) {
        const auto& a = ps[j];
        const auto& b = ps[best];
        const bool before =
            a.score > b.score ||
            (a.score == b.score &&
             (a.start < b.start ||
              (a.start == b.start &&
               (a.video < b.video || (a.video == b.video && a.end < b.end)))));
        if (before) best = j;
      }
      std::swap(ps[i], ps[best]);
    }
    std::vector<int> used;
    std::vector<const Gt*> gs;
    for (const auto& g : gts) {
      if (g.label == cls) gs.push_back(&g);
    }
    used.assign(gs.size(), 0);
    std::vector<int> is_tp;
    for (const auto& p : ps) {
      int best = -1;
      double best_ov = -1;
      for (std::size_t g = 0; g < gs.size(); ++g) {
        if (used[g] || gs[g]->video != p.video) continue;
        const double ov = overlap(p.start, p.end, gs[g]->start, gs[g]->end);
        if (ov > best_ov) {
          best_ov = ov;
          best = static_cast<int>(g);
        }
      }
      if (best >= 0 && best_ov >= thr) {
        used[best] = 1;
        is_tp.push_back(1);
      } else {
        is_tp.push_back(0);
      }
    }
    double ap = 0;
    for (std::size_t i = 0; i < is_tp.size(); ++i) {
      if (!is_tp[i]) continue;
      int tp = 0;
      for (std::size_t j = 0; j <= i; ++j) tp += is_tp[j];
      ap += static_cast<double>(tp) / static_cast<double>(i + 1);
    }
    total += ap / static_cast<double>(gs.size());
  }
  return classes.empty() ? 0.0 : total / static_cast<double>(classes.size());
}

}  // namespace oracle
