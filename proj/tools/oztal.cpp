// oztal: online zero-shot temporal action localization over pre-extracted embeddings.

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "oztal/commands.hpp"

namespace {

void add_model_flags(CLI::App* cmd, oztal::LocalizerConfig& cfg, std::size_t& lq) {
  cmd->add_option("--tau", cfg.action_threshold, "action threshold on refined logits")
      ->capture_default_str();
  cmd->add_option("--lq", lq, "memory bank length (0 disables memory enhancement)")
      ->capture_default_str();
  cmd->add_option("--theta", cfg.fusion_threshold, "memory fusion threshold")
      ->capture_default_str();
  cmd->add_option("--scale", cfg.logit_scale, "cosine-to-logit scale")->capture_default_str();
  cmd->add_flag("--normalized-weights", cfg.normalized_memory_weights,
                "normalize recency weights to sum to one");
  cmd->add_flag("!--no-renormalize", cfg.renormalize_fused,
                "keep the fused feature unnormalized");
  cmd->add_flag("!--no-refine", cfg.background_refinement,
                "threshold raw class logits without background refinement");
}

int run(int argc, char** argv) {
  CLI::App app{"Online zero-shot temporal action localization"};
  app.require_subcommand(1);

  // localize
  oztal::LocalizeOptions loc;
  std::size_t loc_lq = loc.config.memory_capacity;
  std::string loc_trace;
  loc.jobs = oztal::default_jobs();
  auto* localize = app.add_subcommand("localize", "run the online localizer over a manifest");
  localize->add_option("--features", loc.features_dir, "directory holding manifest.json")
      ->required();
  localize->add_option("--textbank", loc.textbank_prefix, "text bank prefix (PREFIX.json/.bin)")
      ->required();
  localize->add_option("--out", loc.out, "prediction log (JSON lines)")->required();
  localize->add_option("--trace", loc_trace, "optional per-step diagnostics CSV");
  localize->add_option("--jobs", loc.jobs, "videos processed in parallel")->capture_default_str();
  add_model_flags(localize, loc.config, loc_lq);

  // eval
  oztal::EvalOptions ev;
  std::string ev_preds, ev_splits, ev_json, ev_tiou = "0.3,0.4,0.5,0.6,0.7";
  auto* eval = app.add_subcommand("eval", "compute mAP at tIoU thresholds");
  eval->add_option("--preds", ev_preds, "prediction log");
  eval->add_option("--gt", ev.gt, "ground-truth annotations")->required();
  eval->add_option("--tiou", ev_tiou, "comma-separated tIoU thresholds")->capture_default_str();
  eval->add_option("--splits", ev_splits, "split file for multi-split averaging");
  eval->add_option("--json", ev_json, "write machine-readable results here");

  // sweep
  oztal::SweepOptions sw;
  std::size_t sw_lq = sw.config.memory_capacity;
  std::string sw_grid, sw_tiou = "0.3,0.4,0.5,0.6,0.7";
  sw.jobs = oztal::default_jobs();
  auto* sweep = app.add_subcommand("sweep", "grid over tau and memory length, CSV output");
  sweep->add_option("--features", sw.features_dir, "directory holding manifest.json")->required();
  sweep->add_option("--textbank", sw.textbank_prefix, "text bank prefix")->required();
  sweep->add_option("--gt", sw.gt, "ground-truth annotations")->required();
  sweep->add_option("--out", sw.out, "output CSV")->required();
  sweep->add_option("--grid", sw_grid, "e.g. \"tau=5:20:2.5;lq=0,5,10,20,40\"")->required();
  sweep->add_option("--tiou", sw_tiou, "comma-separated tIoU thresholds")->capture_default_str();
  sweep->add_option("--jobs", sw.jobs, "videos processed in parallel")->capture_default_str();
  add_model_flags(sweep, sw.config, sw_lq);

  // synth
  oztal::SynthOptions sy;
  std::string sy_out;
  auto* synth = app.add_subcommand("synth", "write a seeded synthetic benchmark");
  synth->add_option("--classes", sy.classes, "number of classes K")->capture_default_str();
  synth->add_option("--dim", sy.dim, "embedding dimension D")->capture_default_str();
  synth->add_option("--videos", sy.videos, "number of videos")->capture_default_str();
  synth->add_option("--frames", sy.frames, "timesteps per video")->capture_default_str();
  synth->add_option("--seed", sy.seed, "random seed")->capture_default_str();
  synth->add_option("--noise", sy.noise, "feature noise sigma")->capture_default_str();
  synth->add_option("--distractor", sy.distractor_weight,
                    "weight of the nearest action class in background frames")
      ->capture_default_str();
  synth->add_option("--fps", sy.fps, "frames per second")->capture_default_str();
  synth->add_option("--stride", sy.stride, "raw frames per timestep")->capture_default_str();
  synth->add_option("--out", sy_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (localize->parsed()) {
    loc.config = oztal::with_memory_length(loc.config, loc_lq);
    if (!loc_trace.empty()) loc.trace = loc_trace;
    const auto s = oztal::run_localize(loc);
    std::fprintf(stderr, "localized %zu videos (%zu timesteps), %zu instances -> %s\n", s.videos,
                 s.timesteps, s.instances, loc.out.string().c_str());
  } else if (eval->parsed()) {
    if (!ev_preds.empty()) ev.preds = ev_preds;
    if (!ev_splits.empty()) ev.splits = ev_splits;
    if (!ev_json.empty()) ev.json_out = ev_json;
    ev.tious = oztal::parse_values(ev_tiou);
    const auto r = oztal::run_eval(ev);
    for (const auto& w : r.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    std::cout << oztal::format_map_table(r.report);
  } else if (sweep->parsed()) {
    sw.tious = oztal::parse_values(sw_tiou);
    sw.grid = oztal::parse_grid(sw_grid, sw.config.action_threshold, sw_lq);
    const auto rows = oztal::run_sweep(sw);
    std::fprintf(stderr, "evaluated %zu grid points -> %s\n", rows.size(), sw.out.string().c_str());
  } else if (synth->parsed()) {
    const auto data = oztal::run_synth(sy, sy_out);
    std::fprintf(stderr, "wrote %zu videos, %zu classes, dim %zu -> %s\n", data.videos.size(),
                 sy.classes, sy.dim, sy_out.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "oztal: %s\n", e.what());
    return 1;
  }
}
