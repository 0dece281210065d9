#include <gtest/gtest.h>

#include "streamgaze/eval.hpp"
#include "support/generators.hpp"

using namespace streamgaze;

namespace {

QAItem mcq(int i, Task task, double t, int answer) {
  QAItem q;
  q.id = "v/" + std::string(task_name(task)) + "/" + std::to_string(i);
  q.task = task;
  q.video_id = "v";
  q.query_time = t;
  q.question = "Which?";
  q.options = {"red cup", "steel pot", "knife", "green bowl"};
  q.answer_index = answer;
  return q;
}

class CapturingAdapter : public ModelAdapter {
 public:
  std::string answer(const AdapterRequest& r) override {
    std::lock_guard lock(mu);
    seen.push_back(r);
    return "A";
  }
  std::mutex mu;
  std::vector<AdapterRequest> seen;
};

class FutureFrameProvider : public FrameProvider {
 public:
  std::vector<TimedFrame> frames(const std::string&, std::span<const double> ts) override {
    std::vector<TimedFrame> out;
    for (double t : ts) out.push_back({t + 5.0, Image(2, 2)});
    return out;
  }
};

std::shared_ptr<const FrameSource> constant_video(int n, double fps) {
  std::vector<Image> frames;
  std::vector<double> ts;
  for (int i = 0; i < n; ++i) {
    frames.emplace_back(40, 30, Rgb{static_cast<std::uint8_t>(i), 0, 0});
    ts.push_back(i / fps);
  }
  return std::make_shared<MemoryFrameSource>(frames, ts);
}

ProactiveItem six_checkpoints() {
  ProactiveItem p;
  p.id = "v/GTA/0";
  p.task = Task::GTA;
  p.video_id = "v";
  p.target = "knife";
  p.question = "Alert?";
  const bool labels[] = {false, false, true, false, true, false};
  for (int k = 0; k < 6; ++k) p.checkpoints.push_back({10.0 * (k + 1), labels[k]});
  return p;
}

}  // namespace

TEST(Eval, ContextWindows) {
  auto present = context_window(TemporalScope::present, 100, 60);
  EXPECT_EQ(present, (ContextWindow{40, 100, true}));
  EXPECT_FALSE(present.contains(40));
  EXPECT_TRUE(present.contains(40.001));
  EXPECT_TRUE(present.contains(100));
  EXPECT_FALSE(present.contains(100.001));
  EXPECT_EQ(context_window(TemporalScope::present, 30, 60), (ContextWindow{0, 30, false}));
  EXPECT_EQ(context_window(TemporalScope::past, 100, 60), (ContextWindow{0, 100, false}));
  EXPECT_EQ(context_window(TemporalScope::proactive, 75, 60), (ContextWindow{0, 75, false}));
  EXPECT_THROW(context_window(TemporalScope::past, -1), UsageError);
  EXPECT_DOUBLE_EQ(kPresentWindowSeconds, 60.0);
  EvalConfig cfg;
  EXPECT_DOUBLE_EQ(cfg.omega, 60.0);
  EXPECT_DOUBLE_EQ(cfg.frame_rate, 1.0);
  EXPECT_EQ(cfg.max_frames, 16);
}

TEST(Eval, SampleFramesFixtures) {
  auto a = sample_frames({0, 10, false}, 1, 16);
  ASSERT_EQ(a.size(), 11u);
  EXPECT_DOUBLE_EQ(a.front(), 0);
  EXPECT_DOUBLE_EQ(a.back(), 10);
  auto b = sample_frames({0, 5, true}, 1, 16);
  EXPECT_EQ(b, (std::vector<double>{1, 2, 3, 4, 5}));
  auto c = sample_frames({40, 100, true}, 1, 16);
  ASSERT_EQ(c.size(), 16u);
  EXPECT_DOUBLE_EQ(c.back(), 100);
  EXPECT_DOUBLE_EQ(c.front(), 100 - 15 * 60.0 / 16);
  EXPECT_EQ(sample_frames({3, 3, false}, 1, 16), (std::vector<double>{3}));
  EXPECT_THROW(sample_frames({0, 1, false}, 0, 16), UsageError);
}

TEST(Eval, SampleFramesAgainstEnumeration) {
  Rng rng(99);
  for (int trial = 0; trial < 2000; ++trial) {
    const double start = rng.unit() < 0.3 ? 0.0 : rng.uniform_real(0, 200);
    const double end = start + (rng.unit() < 0.2 ? std::floor(rng.uniform_real(0, 40)) : rng.uniform_real(0, 120));
    const bool open = rng.unit() < 0.5 && end > start;
    const double fps = rng.unit() < 0.5 ? 1.0 : rng.uniform_real(0.2, 4);
    const int cap = 1 + static_cast<int>(rng.uniform(24));
    const ContextWindow w{start, end, open};
    const auto got = sample_frames(w, fps, cap);
    // expected count: grid points end - k/fps inside the window, capped
    long long fit = 0;
    for (long long k = 0;; ++k) {
      const double t = end - static_cast<double>(k) / fps;
      const bool inside = open ? t > start + 1e-9 : t >= start - 1e-9;
      if (!inside) break;
      ++fit;
    }
    ASSERT_EQ(got.size(), static_cast<std::size_t>(std::min<long long>(std::max<long long>(fit, 1), cap)))
        << start << " " << end << " " << open << " " << fps << " " << cap;
    ASSERT_DOUBLE_EQ(got.back(), end);
    for (std::size_t i = 0; i < got.size(); ++i) {
      ASSERT_TRUE(w.contains(got[i]) || (got.size() == 1 && got[0] == end));
      if (i) ASSERT_GT(got[i], got[i - 1]);
    }
  }
}

TEST(Eval, McqScoringAndUnparsedCountsWrong) {
  std::vector<QAItem> items{mcq(0, Task::OI_E, 10, 0), mcq(1, Task::OI_E, 10, 1), mcq(2, Task::NFI, 10, 2),
                            mcq(3, Task::NFI, 10, 3)};
  ScriptedAdapter adapter({{items[0].id, "The answer is A"}, {items[1].id, "C. pot"}, {items[2].id, "hmm"},
                           {items[3].id, "the green bowl"}});
  NoFrameProvider frames;
  EvalConfig cfg;
  auto r = run_mcq_eval(items, adapter, frames, cfg);
  EXPECT_EQ(r.mcq[Task::OI_E].correct, 1u);
  EXPECT_EQ(r.mcq[Task::OI_E].total, 2u);
  EXPECT_DOUBLE_EQ(r.mcq[Task::OI_E].accuracy, 0.5);
  EXPECT_EQ(r.mcq[Task::NFI].unparsed, 1u);
  EXPECT_EQ(r.mcq[Task::NFI].correct, 1u);
  ASSERT_EQ(r.audit.size(), 4u);
  EXPECT_TRUE(r.audit[2]["parsed"].is_null());
  EXPECT_EQ(r.audit[1]["parsed"], "C");
}

TEST(Eval, RandomChoiceCalibratesToChance) {
  std::vector<QAItem> items;
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) items.push_back(mcq(i, Task::OI_H, 10, static_cast<int>(rng.uniform(4))));
  RandomChoiceAdapter adapter(11);
  NoFrameProvider frames;
  EvalConfig cfg;
  auto r = run_mcq_eval(items, adapter, frames, cfg);
  EXPECT_NEAR(r.mcq[Task::OI_H].accuracy, 0.25, 0.03);
  EXPECT_EQ(r.mcq[Task::OI_H].unparsed, 0u);
  ScriptedAdapter perfect(answer_key(items));
  EXPECT_DOUBLE_EQ(run_mcq_eval(items, perfect, frames, cfg).mcq[Task::OI_H].accuracy, 1.0);
}

TEST(Eval, CausalityViolationFromBuggyProvider) {
  std::vector<QAItem> items{mcq(0, Task::OI_E, 10, 0)};
  ConstantAdapter adapter("A");
  FutureFrameProvider frames;
  EXPECT_THROW(run_mcq_eval(items, adapter, frames, EvalConfig{}), CausalityViolation);
  auto p = six_checkpoints();
  EXPECT_THROW(run_proactive_eval({p}, adapter, frames, EvalConfig{}), CausalityViolation);
}

TEST(Eval, VideoProviderServesLatestFrameAtOrBefore) {
  VideoFrameProvider frames;
  frames.add("v", constant_video(100, 10));
  std::vector<double> ts{0.05, 0.1, 2.0, 2.04, 9.99};
  auto got = frames.frames("v", ts);
  ASSERT_EQ(got.size(), 4u);
  EXPECT_DOUBLE_EQ(got[0].timestamp, 0.0);
  EXPECT_DOUBLE_EQ(got[1].timestamp, 0.1);
  EXPECT_EQ(got[1].image.at(0, 0).r, 1);
  EXPECT_DOUBLE_EQ(got[2].timestamp, 2.0);
  EXPECT_DOUBLE_EQ(got[3].timestamp, 9.9);
  EXPECT_THROW(frames.frames("w", ts), DataError);

  std::vector<QAItem> items{mcq(0, Task::OI_E, 9.0, 0), mcq(1, Task::NFI, 9.0, 0)};
  CapturingAdapter adapter;
  EvalConfig cfg;
  cfg.omega = 2;
  run_mcq_eval(items, adapter, frames, cfg);
  ASSERT_EQ(adapter.seen.size(), 2u);
  EXPECT_EQ(adapter.seen[0].frames.size(), 2u);   // (7, 9] at 1 fps -> 8, 9
  EXPECT_EQ(adapter.seen[1].frames.size(), 10u);  // [0, 9]
  for (const auto& r : adapter.seen)
    for (const auto& f : r.frames) EXPECT_LE(f.timestamp, 9.0);
}

TEST(Eval, ProactiveAlwaysYesAlwaysNo) {
  auto p = six_checkpoints();
  NoFrameProvider frames;
  ConstantAdapter yes("Yes"), no("No");
  auto ry = run_proactive_eval({p}, yes, frames, EvalConfig{}).proactive[Task::GTA];
  EXPECT_EQ(ry.positives, 2u);
  EXPECT_EQ(ry.negatives, 4u);
  EXPECT_DOUBLE_EQ(ry.type1_rate, 1.0);
  EXPECT_DOUBLE_EQ(ry.type2_rate, 0.0);
  auto rn = run_proactive_eval({p}, no, frames, EvalConfig{}).proactive[Task::GTA];
  EXPECT_DOUBLE_EQ(rn.type1_rate, 0.0);
  EXPECT_DOUBLE_EQ(rn.type2_rate, 1.0);
  EXPECT_DOUBLE_EQ(rn.accuracy, 4.0 / 6.0);
}

TEST(Eval, ProactiveHandBuiltSixCheckpoints) {
  auto p = six_checkpoints();
  std::map<std::string, std::string> table{{checkpoint_id(p.id, 0), "Yes"}, {checkpoint_id(p.id, 1), "No"},
                                           {checkpoint_id(p.id, 2), "Yes."}, {checkpoint_id(p.id, 3), "no"},
                                           {checkpoint_id(p.id, 4), "No"},  {checkpoint_id(p.id, 5), "Maybe"}};
  ScriptedAdapter adapter(table);
  NoFrameProvider frames;
  auto report = run_proactive_eval({p}, adapter, frames, EvalConfig{});
  const auto& r = report.proactive[Task::GTA];
  EXPECT_EQ(r.total, 6u);
  EXPECT_EQ(r.false_positives, 1u);
  EXPECT_EQ(r.false_negatives, 1u);
  EXPECT_EQ(r.unparsed, 1u);
  EXPECT_DOUBLE_EQ(r.type1_rate, 0.25);
  EXPECT_DOUBLE_EQ(r.type2_rate, 0.5);
  EXPECT_DOUBLE_EQ(r.accuracy, 4.0 / 6.0);
  ASSERT_EQ(report.audit.size(), 6u);
  EXPECT_EQ(report.audit[3]["window"], io::ordered_json({0.0, 40.0}));
}

TEST(Eval, JobsDoNotChangeResults) {
  std::vector<QAItem> items;
  for (int i = 0; i < 300; ++i) items.push_back(mcq(i, i % 2 ? Task::OTP : Task::SR, 5.0 + i, i % 4));
  VideoFrameProvider frames;
  frames.add("v", constant_video(4000, 10));
  RandomChoiceAdapter adapter(3);
  EvalConfig one, four;
  four.jobs = 4;
  const auto a = run_mcq_eval(items, adapter, frames, one);
  const auto b = run_mcq_eval(items, adapter, frames, four);
  EXPECT_EQ(to_json(a, one)["mcq"], to_json(b, four)["mcq"]);
  ASSERT_EQ(a.audit.size(), b.audit.size());
  for (std::size_t i = 0; i < a.audit.size(); ++i) EXPECT_EQ(a.audit[i], b.audit[i]);
}

TEST(Eval, GazePromptingModes) {
  GazeContexts gaze;
  GazeContext ctx;
  ctx.trajectory.width = 40;
  ctx.trajectory.height = 30;
  for (int i = 0; i < 100; ++i) {
    GazeSample s;
    s.frame_index = i;
    s.timestamp = i / 10.0;
    s.x = 20;
    s.y = 15;
    s.valid = s.in_frame = true;
    ctx.trajectory.samples.push_back(s);
  }
  Fixation f;
  f.centroid_x = 20.4;
  f.centroid_y = 14.6;
  f.t_start = 1;
  f.t_end = 3;
  ctx.fixations = {f};
  ctx.fov_radius = 8;
  gaze["v"] = ctx;
  VideoFrameProvider frames;
  frames.add("v", constant_video(100, 10));
  std::vector<QAItem> items{mcq(0, Task::OI_E, 5.0, 0)};

  CapturingAdapter text_adapter;
  EvalConfig cfg;
  cfg.mode = PromptingMode::text_gaze;
  run_mcq_eval(items, text_adapter, frames, cfg, &gaze);
  const std::string hint = "The user's current fixation center is at pixel (20, 15).";
  EXPECT_NE(text_adapter.seen[0].question.find(hint), std::string::npos);
  EXPECT_EQ(text_adapter.seen[0].aux, hint);

  CapturingAdapter visual;
  cfg.mode = PromptingMode::visual_gaze;
  run_mcq_eval(items, visual, frames, cfg, &gaze);
  ASSERT_FALSE(visual.seen[0].frames.empty());
  EXPECT_EQ(visual.seen[0].frames.back().image.at(20, 15), kGreen);
  EXPECT_EQ(visual.seen[0].frames.back().image.at(28, 15), kRed);
  EXPECT_EQ(visual.seen[0].question.rfind(std::string(prompts::kVisualGazePreamble), 0), 0u);

  CapturingAdapter plain;
  cfg.mode = PromptingMode::none;
  run_mcq_eval(items, plain, frames, cfg, &gaze);
  EXPECT_TRUE(plain.seen[0].aux.empty());
  EXPECT_NE(plain.seen[0].frames.back().image.at(20, 15), kGreen);
  EXPECT_EQ(prompting_mode_from_string("visual-gaze"), PromptingMode::visual_gaze);
  EXPECT_THROW(prompting_mode_from_string("xray"), UsageError);
}
