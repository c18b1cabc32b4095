#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "oztal/stream.hpp"
#include "oztal/synth.hpp"

using namespace oztal;

namespace {

// Classes on e0..e{k-1}, foreground e_k, background e_{k+1}.
TextBank axis_bank(std::size_t k, std::size_t dim) {
  std::vector<std::string> names;
  std::vector<Vector> rows;
  for (std::size_t j = 0; j < k; ++j) {
    names.push_back("c" + std::to_string(j));
    Vector r(dim, 0.0);
    r[j] = 1.0;
    rows.push_back(r);
  }
  Vector fg(dim, 0.0), bg(dim, 0.0);
  fg[k] = 1.0;
  bg[k + 1] = 1.0;
  return TextBank(names, {}, rows, fg, bg);
}

Vector axis(std::size_t dim, std::size_t i) {
  Vector v(dim, 0.0);
  v[i] = 1.0;
  return v;
}

std::vector<FrameFeature> random_stream(std::mt19937_64& rng, std::size_t n, std::size_t dim,
                                        std::size_t k) {
  // Piecewise-constant class/background directions plus noise, so runs occur.
  std::normal_distribution<double> noise(0.0, 0.35);
  std::vector<FrameFeature> out;
  std::size_t dir = k + 1;
  for (std::size_t t = 0; t < n; ++t) {
    if (rng() % 12 == 0) dir = (rng() % 3 == 0) ? k + 1 : rng() % k;
    Vector x = axis(dim, dir);
    if (dir < k) x[k] += 0.8;  // actions look like foreground
    for (auto& v : x) v += noise(rng);
    out.push_back(make_feature(static_cast<Timestep>(t), std::move(x), dim));
  }
  return out;
}

}  // namespace

TEST(ProcessTimestep, QuiescentPath) {
  const auto bank = axis_bank(3, 6);
  StreamSession s(bank, LocalizerConfig{});
  // Background direction: fg cosine 0 < bg cosine 1, class logits 0, refined -50.
  const auto out = s.process(FrameFeature{0, axis(6, 4)});
  EXPECT_TRUE(out.empty());
  EXPECT_TRUE(s.memory().empty());
  EXPECT_EQ(s.machine().open_count(), 0u);
  EXPECT_FALSE(s.last_trace().appended);
  EXPECT_DOUBLE_EQ(s.last_trace().background, 100.0);
}

TEST(ProcessTimestep, ClassAlignedFeatureOpensThenOrthogonalFeatureEmits) {
  const auto bank = axis_bank(3, 6);
  LocalizerConfig cfg;
  StreamSession s(bank, cfg, "v");
  for (Timestep t = 0; t < 3; ++t) EXPECT_TRUE(s.process(FrameFeature{t, axis(6, 4)}).empty());

  // Identical to class 1's embedding; equal fg/bg cosine keeps the bank empty.
  EXPECT_TRUE(s.process(FrameFeature{3, axis(6, 1)}).empty());
  EXPECT_TRUE(s.memory().empty());
  EXPECT_DOUBLE_EQ(s.last_scores()[1], 100.0);
  EXPECT_TRUE(s.machine().active(1));
  EXPECT_EQ(s.machine().open_start(1), 3);

  const auto out = s.process(FrameFeature{4, axis(6, 4)});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].class_index, 1u);
  EXPECT_EQ(out[0].start_t, 3);
  EXPECT_EQ(out[0].end_t, 3);
  EXPECT_EQ(out[0].emit_t, 4);
  EXPECT_DOUBLE_EQ(out[0].confidence, 100.0);
}

TEST(ProcessTimestep, Errors) {
  const auto bank = axis_bank(2, 4);
  StreamSession s(bank, LocalizerConfig{});
  EXPECT_THROW(s.process(FrameFeature{1, axis(4, 0)}), Error);
  EXPECT_THROW(s.process(FrameFeature{0, axis(5, 0)}), Error);
  s.process(FrameFeature{0, axis(4, 0)});
  EXPECT_THROW(s.process(FrameFeature{0, axis(4, 0)}), Error);
  LocalizerConfig bad;
  bad.memory_capacity = 0;
  EXPECT_THROW(StreamSession(bank, bad), Error);
}

TEST(ProcessTimestep, TraceReflectsPostUpdateBank) {
  const auto bank = axis_bank(2, 5);
  LocalizerConfig cfg;
  cfg.memory_capacity = 3;
  StreamSession s(bank, cfg);
  // Foreground-leaning feature: appended before the fusion weight is computed, so the
  // very first step already fuses with itself (cosine 1, lambda 0.5).
  Vector x = axis(5, 0);
  x[2] = 1.0;
  s.process(FrameFeature{0, x});
  EXPECT_TRUE(s.last_trace().appended);
  EXPECT_EQ(s.last_trace().memory_fill, 1u);
  EXPECT_DOUBLE_EQ(s.last_trace().lambda, 0.5);
  for (Timestep t = 1; t < 10; ++t) {
    s.process(FrameFeature{t, x});
    EXPECT_EQ(s.last_trace().memory_fill, std::min<std::size_t>(t + 1, 3));
  }
}

TEST(RunStream, EmptyStreamIsAnError) {
  const auto bank = axis_bank(2, 4);
  EXPECT_THROW(run_stream({}, bank, LocalizerConfig{}), Error);
}

TEST(RunStream, DeterministicAndOrderedByEmission) {
  std::mt19937_64 rng(8);
  const auto bank = axis_bank(4, 8);
  const auto feats = random_stream(rng, 1500, 8, 4);
  const auto a = run_stream(feats, bank, LocalizerConfig{}, true);
  const auto b = run_stream(feats, bank, LocalizerConfig{}, true);
  EXPECT_EQ(a.instances, b.instances);
  ASSERT_EQ(a.trace.size(), feats.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    EXPECT_EQ(a.trace[i].lambda, b.trace[i].lambda);
    EXPECT_EQ(a.trace[i].max_refined, b.trace[i].max_refined);
  }
  EXPECT_FALSE(a.instances.empty());
  for (std::size_t i = 1; i < a.instances.size(); ++i) {
    EXPECT_LE(a.instances[i - 1].emit_t, a.instances[i].emit_t);
  }
}

TEST(RunStream, PrefixRunsAgreeWithFullRun) {
  std::mt19937_64 rng(9);
  const auto bank = axis_bank(3, 6);
  for (int trial = 0; trial < 5; ++trial) {
    const auto feats = random_stream(rng, 150, 6, 3);
    const auto full = run_stream(feats, bank, LocalizerConfig{}).instances;
    for (std::size_t t = 0; t < feats.size(); ++t) {
      const auto prefix =
          run_stream(std::span(feats).first(t + 1), bank, LocalizerConfig{}).instances;
      std::vector<ActionInstance> a, b;
      for (const auto& i : full) {
        if (i.emit_t <= static_cast<Timestep>(t) && !i.flushed()) a.push_back(i);
      }
      for (const auto& i : prefix) {
        if (!i.flushed()) b.push_back(i);
      }
      ASSERT_EQ(a, b) << "prefix " << t;
    }
  }
}

TEST(RunStream, ScoreReplayMatchesStreaming) {
  std::mt19937_64 rng(10);
  const auto bank = axis_bank(3, 6);
  const auto feats = random_stream(rng, 2000, 6, 3);
  for (double tau : {0.0, 5.0, 10.0, 25.0}) {
    for (bool memory : {false, true}) {
      LocalizerConfig cfg;
      cfg.action_threshold = tau;
      cfg.use_memory = memory;
      const auto direct = run_stream(feats, bank, cfg).instances;
      const auto replay = localize_scores(score_stream(feats, bank, cfg), tau);
      EXPECT_EQ(direct, replay);
    }
  }
}

TEST(RunStream, MemoryStaysBounded) {
  std::mt19937_64 rng(12);
  const auto bank = axis_bank(3, 6);
  LocalizerConfig cfg;
  cfg.memory_capacity = 7;
  StreamSession s(bank, cfg);
  const auto feats = random_stream(rng, 5000, 6, 3);
  for (const auto& f : feats) {
    s.process(f);
    ASSERT_LE(s.memory().size(), 7u);
    ASSERT_EQ(s.memory().capacity(), 7u);
  }
}

TEST(RunStream, AblationSwitches) {
  const auto bank = axis_bank(2, 5);
  // Class 0 with a strong background component: raw logit 70.7 passes tau, refined does not.
  Vector x = axis(5, 0);
  x[3] = 1.0;
  std::vector<FrameFeature> feats;
  for (Timestep t = 0; t < 5; ++t) feats.push_back(FrameFeature{t, x});
  LocalizerConfig cfg;
  EXPECT_TRUE(run_stream(feats, bank, cfg).instances.empty());
  cfg.background_refinement = false;
  const auto raw = run_stream(feats, bank, cfg).instances;
  ASSERT_EQ(raw.size(), 1u);
  EXPECT_TRUE(raw[0].flushed());

  cfg = LocalizerConfig{};
  cfg.use_memory = false;
  StreamSession s(bank, cfg);
  Vector fgx = axis(5, 1);
  fgx[2] = 1.0;
  s.process(FrameFeature{0, fgx});
  EXPECT_TRUE(s.memory().empty());
  EXPECT_EQ(s.last_trace().lambda, 0.0);
}

TEST(RunStream, NoiselessSyntheticRecoversPlantedSegments) {
  SynthOptions opt;
  opt.classes = 3;
  opt.dim = 16;
  opt.videos = 4;
  opt.frames = 500;
  opt.noise = 0.0;
  const auto data = generate_synthetic(opt);
  for (const auto& v : data.videos) {
    const auto got = run_stream(v.features, data.bank, LocalizerConfig{}).instances;
    ASSERT_EQ(got.size(), v.segments.size()) << v.video_id;
    for (const auto& seg : v.segments) {
      const auto it = std::find_if(got.begin(), got.end(), [&](const ActionInstance& g) {
        return g.start_t == static_cast<Timestep>(seg.start_t);
      });
      ASSERT_NE(it, got.end());
      EXPECT_EQ(it->end_t, static_cast<Timestep>(seg.end_t) - 1);
      EXPECT_EQ(it->class_index, seg.class_index);
      EXPECT_FALSE(it->flushed());
    }
  }
}
