// Acceptance suite: one PASS/FAIL line per criterion.
// usage: acceptance <streamgaze-cli> <work-dir>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <Eigen/Geometry>

#include "streamgaze/streamgaze.hpp"
#include "support/generators.hpp"
#include "support/qa_invariants.hpp"

using namespace streamgaze;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && out_.pass) out_.detail = what;
    out_.pass = out_.pass && ok;
  }
  void note(const std::string& s) {
    if (out_.pass) out_.detail = s;
  }
  Outcome result() const { return out_; }

 private:
  Outcome out_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int prec = 3) {
  std::ostringstream s;
  s.precision(prec);
  s << std::fixed << v;
  return s.str();
}

Outcome fixation_oracle() {
  Check c;
  double extract_time = 0;
  std::size_t fixations = 0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    const auto traj = testsupport::random_trajectory(seed * 31 + 5);
    const auto cfg = testsupport::random_fixation_config(seed * 977);
    const auto t0 = std::chrono::steady_clock::now();
    const auto got = extract_candidates(traj, cfg);
    extract_time += seconds_since(t0);
    const auto want = testsupport::brute_force_fixations(traj, cfg);
    bool same = got.size() == want.size();
    for (std::size_t i = 0; same && i < got.size(); ++i)
      same = got[i].frame_range == std::pair<int, int>(static_cast<int>(want[i].first), static_cast<int>(want[i].second));
    c.expect(same, "mismatch against brute force at trajectory " + std::to_string(seed));
    fixations += got.size();
  }
  c.expect(extract_time < 10.0, "extraction took " + fmt(extract_time) + " s");
  c.note("1000 trajectories, " + std::to_string(fixations) + " fixations, extractor " + fmt(extract_time) + " s");
  return c.result();
}

Outcome projection() {
  Check c;
  CameraIntrinsics k{320, 300, 317.25, 241.5, 640, 480};
  Rng rng(2024);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    Eigen::Vector3d axis(rng.uniform_real(-1, 1), rng.uniform_real(-1, 1), rng.uniform_real(-1, 1));
    CameraPose pose;
    pose.world_from_camera.topLeftCorner<3, 3>() =
        Eigen::AngleAxisd(rng.uniform_real(-3.1, 3.1), axis.normalized()).toRotationMatrix();
    pose.world_from_camera.topRightCorner<3, 1>() =
        Eigen::Vector3d(rng.uniform_real(-3, 3), rng.uniform_real(-3, 3), rng.uniform_real(-3, 3));
    GazeRay ray;
    ray.origin = pose.world_from_camera.topRightCorner<3, 1>();
    ray.direction = pose.world_from_camera.topLeftCorner<3, 3>() * Eigen::Vector3d::UnitZ();
    std::vector<GazeRay> rays{ray};
    std::vector<CameraPose> poses{pose};
    std::vector<double> ts{0};
    const auto traj = build_trajectory(rays, poses, k, ts, rng.uniform_real(0.2, 5));
    worst = std::max({worst, std::abs(traj.samples[0].x - k.cx), std::abs(traj.samples[0].y - k.cy)});
  }
  c.expect(worst <= 1e-9, "optical axis off principal point by " + std::to_string(worst));
  const double hfov = hfov_from_intrinsics(320, 640);
  c.expect(std::abs(hfov - 90.0) < 1e-9, "hfov " + fmt(hfov));
  const double tau = fov_radius_px(640, 90, kPerifovealRadiusDeg);
  c.expect(std::abs(tau - 106.67) < 0.005, "radius " + fmt(tau));
  std::ostringstream err;
  err << std::scientific << std::setprecision(1) << worst;
  c.note("axis error " + err.str() + " px, hfov " + fmt(hfov, 1) + " deg, radius " + fmt(tau, 2) + " px");
  return c.result();
}

Image pattern(bool inverted) {
  Image img(64, 48);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x) {
      Rgb v = x < 32 ? Rgb{210, 40, 40} : y < 24 ? Rgb{40, 190, 60} : Rgb{50, 70, 220};
      if (inverted) v = {static_cast<std::uint8_t>(255 - v.r), static_cast<std::uint8_t>(255 - v.g),
                         static_cast<std::uint8_t>(255 - v.b)};
      img.set(x, y, v);
    }
  return img;
}

Outcome scene() {
  Check c;
  FixationConfig cfg;
  cfg.r_thresh = 0.05;
  cfg.tau_dur = 0.2;
  Fixation f;
  f.frame_range = {0, 15};
  std::vector<double> ts;
  for (int i = 0; i < 16; ++i) ts.push_back(i / 10.0);
  const auto same = scene_consistency(f, MemoryFrameSource(std::vector<Image>(16, pattern(false)), ts), cfg);
  c.expect(same.s_min && std::abs(*same.s_min - 1.0) < 1e-12 && same.keep, "identical frames not kept at 1.0");
  std::vector<Image> cut(16, pattern(false));
  for (int i = 8; i < 16; ++i) cut[static_cast<std::size_t>(i)] = pattern(true);
  const auto inv = scene_consistency(f, MemoryFrameSource(cut, ts), cfg);
  c.expect(inv.s_min && *inv.s_min < cfg.tau_scene && !inv.keep, "inverted frame not rejected");
  c.note("identical s_min " + fmt(same.s_min.value_or(-9)) + ", inverted s_min " + fmt(inv.s_min.value_or(-9)) +
         " < " + fmt(cfg.tau_scene, 2));
  return c.result();
}

Outcome qa_invariants() {
  Check c;
  std::size_t mcq = 0, pro = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const auto s = testsupport::random_scanpath(seed * 13 + 1, "sp" + std::to_string(seed));
    const auto items = testsupport::structural_items(s, seed);
    for (const auto& q : items.mcq) {
      const auto bad = testsupport::check_item(q, s);
      c.expect(bad.empty(), bad.empty() ? "" : bad.front());
    }
    for (const auto& p : items.proactive) {
      const auto bad = testsupport::check_proactive(p, s, default_checkpoint_offsets());
      c.expect(bad.empty(), bad.empty() ? "" : bad.front());
    }
    const auto again = testsupport::structural_items(s, seed);
    c.expect(again.mcq == items.mcq && again.proactive == items.proactive, "generation not deterministic");
    mcq += items.mcq.size();
    pro += items.proactive.size();
  }
  c.expect(mcq > 0 && pro > 0, "no items generated");
  c.note("200 scanpaths, " + std::to_string(mcq) + " multiple-choice and " + std::to_string(pro) +
         " proactive items, 0 violations");
  return c.result();
}

class FutureFrames : public FrameProvider {
 public:
  std::vector<TimedFrame> frames(const std::string&, std::span<const double> ts) override {
    std::vector<TimedFrame> out;
    for (double t : ts) out.push_back({t + 1.0, Image(2, 2)});
    return out;
  }
};

Outcome windowing() {
  Check c;
  EvalConfig cfg;
  c.expect(cfg.omega == 60.0 && cfg.frame_rate == 1.0 && cfg.max_frames == 16, "default eval constants");
  const auto present = context_window(TemporalScope::present, 100, cfg.omega);
  c.expect(present.start == 40 && present.end == 100 && present.start_open, "present window");
  c.expect(!present.contains(40) && present.contains(100), "present window half-open");
  c.expect(context_window(TemporalScope::past, 100) == ContextWindow{0, 100, false}, "past window");
  c.expect(context_window(TemporalScope::proactive, 37) == ContextWindow{0, 37, false}, "proactive window");
  const auto f = sample_frames(present, cfg.frame_rate, cfg.max_frames);
  c.expect(f.size() == 16 && f.back() == 100 && f.front() > 40, "present sampling");
  const auto g = sample_frames({0, 10, false}, 1, 16);
  c.expect(g.size() == 11 && g.front() == 0 && g.back() == 10, "1 fps sampling");
  QAItem q;
  q.id = "v/OI_E/0";
  q.task = Task::OI_E;
  q.video_id = "v";
  q.query_time = 20;
  q.options = {"a", "b", "c", "d"};
  ConstantAdapter a("A");
  FutureFrames future;
  bool threw = false;
  try {
    run_mcq_eval({q}, a, future, cfg);
  } catch (const CausalityViolation&) {
    threw = true;
  }
  c.expect(threw, "future frame not rejected");
  c.note("omega 60 s half-open, past [0,t], proactive [0,t], 16 frames at 1 fps, future frame rejected");
  return c.result();
}

Outcome parser() {
  Check c;
  const std::vector<std::string> opts{"red cup", "steel pot", "knife", "green bowl"};
  c.expect(parse_choice("The answer is B", opts) == 1, "'The answer is B'");
  c.expect(parse_choice("C. pot", opts) == 2, "'C. pot'");
  c.expect(!parse_choice("the knife or the green bowl", opts).has_value(), "two keywords must be unparsed");
  c.expect(parse_choice("definitely the knife", opts) == 2, "single keyword");
  c.expect(parse_choice("<answer>D</answer>", opts) == 3, "answer tag");
  c.expect(parse_yes_no("Yes, it is.") == true && parse_yes_no("No") == false && !parse_yes_no("unsure"), "yes/no");
  c.note("letter, prefix, keyword and ambiguity fixtures");
  return c.result();
}

Outcome calibration() {
  Check c;
  std::vector<QAItem> items;
  Rng rng(77);
  for (int i = 0; i < 10000; ++i) {
    QAItem q;
    q.id = "v/OI_H/" + std::to_string(i);
    q.task = Task::OI_H;
    q.video_id = "v";
    q.query_time = 10;
    q.options = {"a", "b", "c", "d"};
    q.answer_index = static_cast<int>(rng.uniform(4));
    items.push_back(q);
  }
  RandomChoiceAdapter random(2026);
  NoFrameProvider none;
  EvalConfig cfg;
  const double acc = run_mcq_eval(items, random, none, cfg).mcq[Task::OI_H].accuracy;
  c.expect(std::abs(acc - 0.25) <= 0.03, "random accuracy " + fmt(acc));
  ProactiveItem p;
  p.id = "v/OAA/0";
  p.task = Task::OAA;
  p.video_id = "v";
  for (int k = 0; k < 10; ++k) p.checkpoints.push_back({k * 5.0, k % 3 == 0});
  ConstantAdapter yes("Yes"), no("No");
  const auto ry = run_proactive_eval({p}, yes, none, cfg).proactive[Task::OAA];
  const auto rn = run_proactive_eval({p}, no, none, cfg).proactive[Task::OAA];
  c.expect(ry.type1_rate == 1.0 && ry.type2_rate == 0.0, "always-yes rates");
  c.expect(rn.type1_rate == 0.0 && rn.type2_rate == 1.0, "always-no rates");
  c.note("random " + fmt(acc) + ", always-yes type1 " + fmt(ry.type1_rate, 1) + " / type2 " + fmt(ry.type2_rate, 1) +
         ", always-no type1 " + fmt(rn.type1_rate, 1) + " / type2 " + fmt(rn.type2_rate, 1));
  return c.result();
}

Outcome kappa() {
  Check c;
  const double perfect = fleiss_kappa({{3, 0}, {0, 3}, {3, 0}});
  const double third = fleiss_kappa({{2, 0}, {0, 2}, {1, 1}});
  c.expect(std::abs(perfect - 1.0) < 1e-12, "perfect agreement " + fmt(perfect));
  c.expect(std::abs(third - 1.0 / 3.0) < 1e-12, "two-rater fixture " + fmt(third));
  c.note("fixtures 1.000 and " + fmt(third) + "; reference " + fmt(kReferenceKappa, 2) + " (display only)");
  return c.result();
}

Outcome finetune() {
  Check c;
  ProactiveItem p;
  p.task = Task::GTA;
  p.target = "steel pot";
  p.checkpoints = {{10, false}, {20, false}, {30, true}, {40, false}};
  const auto recs = export_finetune({p});
  c.expect(recs.size() == 1, "one record");
  if (recs.size() == 1) {
    const auto& conv = recs[0]["conversations"];
    c.expect(conv.size() == 4, "instruction + 2 silent turns + alert");
    if (conv.size() == 4) {
      c.expect(conv[0]["from"] == "human" && conv[0]["time"] == 0.0 &&
                   conv[0]["value"] == "Monitor and alert when I gaze <steel pot>",
               "instruction turn");
      c.expect(conv[1]["from"] == "gpt" && conv[1]["value"] == "" && conv[1]["time"] == 10.0, "first silent turn");
      c.expect(conv[2]["from"] == "gpt" && conv[2]["value"] == "" && conv[2]["time"] == 20.0, "second silent turn");
      c.expect(conv[3]["value"] == "You are now gazing <steel pot>." && conv[3]["time"] == 30.0, "alert turn");
    }
    c.expect(recs[0]["proactive"] == true, "proactive flag");
  }
  c.note("2 negatives + 1 positive -> human, gpt '', gpt '', gpt alert");
  return c.result();
}

int run_cli(const std::string& cli, const std::string& args, const fs::path& log) {
  const std::string cmd = "\"" + cli + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

bool same_tree(const fs::path& a, const fs::path& b, std::string& diff) {
  std::map<std::string, std::string> fa, fb;
  auto scan = [](const fs::path& root, std::map<std::string, std::string>& out) {
    for (const auto& e : fs::recursive_directory_iterator(root))
      if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = io::read_text(e.path());
  };
  scan(a, fa);
  scan(b, fb);
  if (fa.size() != fb.size()) {
    diff = "file count " + std::to_string(fa.size()) + " vs " + std::to_string(fb.size());
    return false;
  }
  for (const auto& [name, content] : fa) {
    auto it = fb.find(name);
    if (it == fb.end() || it->second != content) {
      diff = name;
      return false;
    }
  }
  return true;
}

Outcome end_to_end(const std::string& cli, const fs::path& work) {
  Check c;
  fs::remove_all(work);
  fs::create_directories(work);
  const auto a = work / "first", b = work / "second";
  const auto t0 = std::chrono::steady_clock::now();
  int rc = run_cli(cli, "synth -o \"" + a.string() + "\"", work / "synth1.log");
  c.expect(rc == 0, "synth exited " + std::to_string(rc));
  rc = run_cli(cli, "-c \"" + (a / "pipeline.json").string() + "\" run", work / "run1.log");
  c.expect(rc == 0, "run exited " + std::to_string(rc));
  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 60.0, "synth + run took " + fmt(elapsed, 1) + " s");
  for (const char* f : {"qa/mcq.jsonl", "qa/proactive.jsonl", "eval/report.json", "qa/finetune.jsonl", "stats.json"})
    c.expect(fs::exists(a / "out" / f), std::string("missing out/") + f);
  std::size_t items = 0;
  if (fs::exists(a / "out/qa/mcq.jsonl")) items = io::read_jsonl(a / "out/qa/mcq.jsonl").size();
  c.expect(items > 0, "empty corpus");

  rc = run_cli(cli, "synth -o \"" + b.string() + "\"", work / "synth2.log");
  c.expect(rc == 0, "second synth exited " + std::to_string(rc));
  rc = run_cli(cli, "-c \"" + (b / "pipeline.json").string() + "\" -j 3 run", work / "run2.log");
  c.expect(rc == 0, "second run exited " + std::to_string(rc));
  std::string diff;
  const bool same = fs::exists(a / "out") && fs::exists(b / "out") && same_tree(a / "out", b / "out", diff);
  c.expect(same, "rerun differs: " + diff);
  c.note("synth + run " + fmt(elapsed, 1) + " s, " + std::to_string(items) +
         " multiple-choice items, rerun with -j 3 byte-identical");
  return c.result();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: acceptance <streamgaze-cli> <work-dir>\n";
    return 2;
  }
  const std::string cli = argv[1];
  const fs::path work = argv[2];
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"fixation extractor equals brute-force oracle", fixation_oracle},
      {"gaze projection and FOV radius", projection},
      {"scene-consistency filter", scene},
      {"QA structural invariants", qa_invariants},
      {"evaluation windows and causality", windowing},
      {"answer parser", parser},
      {"metric calibration", calibration},
      {"Fleiss kappa", kappa},
      {"fine-tuning export", finetune},
      {"end-to-end synthetic run", [&] { return end_to_end(cli, work); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s  %2zu  %-46s  %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed ? 1 : 0;
}
