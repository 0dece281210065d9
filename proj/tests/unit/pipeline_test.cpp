#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>

#include "streamgaze/pipeline.hpp"
#include "streamgaze/synthetic.hpp"
#include "support/qa_invariants.hpp"

using namespace streamgaze;
namespace fs = std::filesystem;

TEST(Config, RoundTripThroughJson) {
  auto c = synth::default_config();
  c.videos = {"vid01"};
  c.qa.tasks = {"OTP", "GTA"};
  c.eval.mode = PromptingMode::text_gaze;
  c.eval_tasks = {"OI_E"};
  c.adapter.kind = "constant";
  c.adapter.text = "B";
  c.jobs = 3;
  const auto back = config_from_json(io::json::parse(to_json(c).dump()));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(back.qa, c.qa);
  EXPECT_EQ(back.oracle, c.oracle);
  EXPECT_EQ(back.adapter, c.adapter);
  EXPECT_EQ(back.eval.mode, PromptingMode::text_gaze);
}

TEST(Config, EnvironmentInterpolation) {
  ::setenv("SG_TEST_HOST", "http://example.test", 1);
  ::unsetenv("SG_TEST_UNSET");
  EXPECT_EQ(interpolate_env("${SG_TEST_HOST}/v1"), "http://example.test/v1");
  EXPECT_EQ(interpolate_env("a${SG_TEST_UNSET}b"), "ab");
  EXPECT_EQ(interpolate_env("$HOME stays"), "$HOME stays");
  auto j = io::json::parse(to_json(synth::default_config()).dump());
  j["oracle"]["endpoint"]["url"] = "${SG_TEST_HOST}/chat";
  EXPECT_EQ(config_from_json(j).oracle.endpoint.url, "http://example.test/chat");
}

TEST(Config, Errors) {
  EXPECT_THROW(config_from_json(io::json::object()), UsageError);
  auto j = io::json::parse(to_json(synth::default_config()).dump());
  j["qa"]["tasks"] = {"NOPE"};
  EXPECT_THROW(config_from_json(j), UsageError);
  j = io::json::parse(to_json(synth::default_config()).dump());
  j["jobs"] = 0;
  EXPECT_THROW(config_from_json(j), UsageError);
  j["jobs"] = "many";
  EXPECT_THROW(config_from_json(j), UsageError);
  EXPECT_THROW(load_config("/nonexistent/pipeline.json"), UsageError);
}

TEST(Stages, MissingArtifactNamesProducer) {
  const auto root = fs::temp_directory_path() / "sg_missing_artifact";
  fs::remove_all(root);
  auto cfg = synth::default_config();
  cfg.base_dir = root;
  try {
    stage_fixations(cfg, "vid01");
    FAIL();
  } catch (const MissingArtifactError& e) {
    EXPECT_EQ(e.producer(), "project");
    EXPECT_NE(std::string(e.what()).find("streamgaze project"), std::string::npos);
  }
  try {
    stage_scanpath(cfg, "vid01");
    FAIL();
  } catch (const MissingArtifactError& e) {
    EXPECT_EQ(e.producer(), "fixations");
  }
  try {
    load_decisions(cfg);
    FAIL();
  } catch (const MissingArtifactError& e) {
    EXPECT_EQ(e.producer(), "serve-annotation");
  }
}

TEST(Synthetic, OracleReadsColorsAndGazeDot) {
  synth::VideoSpec v;
  const auto& cat = synth::catalog();
  std::vector<synth::Placement> scene{{0, 10, 10, 20, 14}, {4, 60, 40, 20, 14}, {10, 120, 90, 20, 14}};
  const Image frame = synth::render(v, scene, 1.0, 128);
  const auto patch = crop_fov_patch(frame, {70, 47}, 30, true);
  synth::SyntheticOracle oracle;
  const auto fov = parse_fov_extraction(oracle.complete({{patch}, build_fov_prompt("x", {}, {30, 30})}));
  EXPECT_EQ(fov.gaze_object.identity, cat[4].name);
  const auto out = parse_outfov_extraction(oracle.complete({{mask_fov(frame, {70, 47}, 30)}, build_outfov_prompt("x", {})}));
  std::set<std::string> names;
  for (const auto& o : out) names.insert(o.identity);
  EXPECT_EQ(names, (std::set<std::string>{cat[0].name, cat[10].name}));
  EXPECT_EQ(oracle.complete({{}, build_static_object_prompt(synth::kBackgroundName)}), "Yes");
  EXPECT_EQ(oracle.complete({{}, build_static_object_prompt("pink cup")}), "No");
  EXPECT_NE(oracle.complete({{}, build_attribute_prompt("teal bottle", "c")}).find("not able"), std::string::npos);
}

TEST(Synthetic, SmallDatasetThroughAllStages) {
  const auto root = fs::temp_directory_path() / "sg_synth_stages";
  fs::remove_all(root);
  synth::SynthOptions opt;
  opt.videos = 2;
  opt.duration = 30;
  const auto config_path = synth::synthesize(root, opt);
  auto cfg = load_config(config_path);
  MockOracle oracle;
  oracle.load_directory(cfg.resolve(cfg.oracle.mock_dir));
  ASSERT_GT(oracle.size(), 0u);
  const auto decisions = load_decisions(cfg);
  for (const auto& v : list_videos(cfg)) {
    const auto traj = stage_project(cfg, v.video_id);
    EXPECT_EQ(traj.source, v.source == "synthetic-3d" ? GazeSource::projected : GazeSource::provided_2d);
    const auto fx = stage_fixations(cfg, v.video_id);
    EXPECT_GT(fx.size(), 3u);
    const auto ex = stage_extract(cfg, v.video_id, oracle);
    EXPECT_EQ(ex.size(), fx.size());
    const auto raw = stage_scanpath(cfg, v.video_id);
    const auto s = apply_verification(raw, decisions);
    ASSERT_GT(s.size(), 2u);
    const auto corpus = generate_for_video(cfg, s, &oracle);
    EXPECT_FALSE(corpus.mcq.empty());
    for (const auto& q : corpus.mcq) {
      const auto bad = testsupport::check_item(q, s);
      EXPECT_TRUE(bad.empty()) << bad.front();
    }
    for (const auto& p : corpus.proactive) {
      EXPECT_NE(p.target, synth::kBackgroundName);
      const auto bad = testsupport::check_proactive(p, s, cfg.qa.checkpoint_offsets);
      EXPECT_TRUE(bad.empty()) << bad.front();
    }
  }
  fs::remove_all(root);
}
