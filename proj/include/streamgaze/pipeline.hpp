#pragma once

#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "streamgaze/annotation.hpp"
#include "streamgaze/error.hpp"
#include "streamgaze/eval.hpp"
#include "streamgaze/fixation.hpp"
#include "streamgaze/fov.hpp"
#include "streamgaze/gaze_ingest.hpp"
#include "streamgaze/image.hpp"
#include "streamgaze/io.hpp"
#include "streamgaze/oracle.hpp"
#include "streamgaze/oracle_http.hpp"
#include "streamgaze/qa.hpp"
#include "streamgaze/scanpath.hpp"

namespace streamgaze {

namespace fs = std::filesystem;

// ---- configuration -----------------------------------------------------------------

struct OracleConfig {
  std::string kind = "mock";  // mock | http
  std::string mock_dir;
  bool strict = true;
  EndpointConfig endpoint;
  int attempts = 3;
  int backoff_ms = 1000;
  friend bool operator==(const OracleConfig& a, const OracleConfig& b) {
    return a.kind == b.kind && a.mock_dir == b.mock_dir && a.strict == b.strict && a.attempts == b.attempts &&
           a.backoff_ms == b.backoff_ms && to_json(a.endpoint) == to_json(b.endpoint);
  }
};

struct QaConfig {
  std::uint64_t seed = 0;
  std::vector<std::string> tasks;  // empty: all
  int fap_steps = 3;
  std::vector<double> checkpoint_offsets = default_checkpoint_offsets();
  std::vector<std::string> static_denylist;
  bool oracle_static_filter = false;
  std::string templates;  // optional JSON file overriding question wording
  friend bool operator==(const QaConfig&, const QaConfig&) = default;
};

struct AdapterConfig {
  std::string kind = "random";  // random | answer-key | scripted | constant | http
  std::string path;             // scripted: answer table file
  std::string text;             // constant
  std::uint64_t seed = 0;       // random
  EndpointConfig endpoint;      // http
  friend bool operator==(const AdapterConfig& a, const AdapterConfig& b) {
    return a.kind == b.kind && a.path == b.path && a.text == b.text && a.seed == b.seed &&
           to_json(a.endpoint) == to_json(b.endpoint);
  }
};

struct PipelineConfig {
  std::string dataset_root = "dataset";
  std::string output_root = "out";
  std::string annotations_dir;  // default: <output_root>/annotations
  std::vector<std::string> videos;  // empty: every video in <dataset_root>/videos.json
  FixationConfig fixation;
  bool scene_filter = true;
  double fov_r_deg = kPerifovealRadiusDeg;
  double d_eye = 1.0;
  int extraction_frames = 3;
  OracleConfig oracle;
  QaConfig qa;
  EvalConfig eval;
  std::vector<std::string> eval_tasks;  // empty: all
  AdapterConfig adapter;
  int jobs = 1;
  fs::path base_dir;  // directory relative paths resolve against; not serialized

  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  }
  fs::path dataset() const { return resolve(dataset_root); }
  fs::path output() const { return resolve(output_root); }
  fs::path annotations() const {
    return annotations_dir.empty() ? output() / "annotations" : resolve(annotations_dir);
  }
  fs::path video_out(const std::string& v) const { return output() / "videos" / v; }
  fs::path media_root() const { return output() / "media"; }
  fs::path qa_dir() const { return output() / "qa"; }
  fs::path eval_dir() const { return output() / "eval"; }
};

/// Replaces ${NAME} with the environment value (empty when unset).
inline std::string interpolate_env(const std::string& s) {
  static const std::regex var(R"(\$\{([A-Za-z_][A-Za-z0-9_]*)\})");
  std::string out;
  auto begin = std::sregex_iterator(s.begin(), s.end(), var);
  std::size_t last = 0;
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    out.append(s, last, static_cast<std::size_t>(it->position()) - last);
    const char* v = std::getenv((*it)[1].str().c_str());
    out += v ? v : "";
    last = static_cast<std::size_t>(it->position() + it->length());
  }
  out.append(s, last);
  return out;
}

inline void interpolate_env(io::json& j) {
  if (j.is_string()) j = interpolate_env(j.get<std::string>());
  else if (j.is_structured())
    for (auto& v : j) interpolate_env(v);
}

inline io::ordered_json to_json(const PipelineConfig& c) {
  io::ordered_json j;
  j["dataset_root"] = c.dataset_root;
  j["output_root"] = c.output_root;
  j["annotations_dir"] = c.annotations_dir;
  j["videos"] = c.videos;
  j["fixation"] = to_json(c.fixation);
  j["scene_filter"] = c.scene_filter;
  j["fov_r_deg"] = c.fov_r_deg;
  j["d_eye"] = c.d_eye;
  j["extraction_frames"] = c.extraction_frames;
  j["oracle"] = {{"kind", c.oracle.kind},         {"mock_dir", c.oracle.mock_dir},
                 {"strict", c.oracle.strict},     {"endpoint", to_json(c.oracle.endpoint)},
                 {"attempts", c.oracle.attempts}, {"backoff_ms", c.oracle.backoff_ms}};
  j["qa"] = {{"seed", c.qa.seed},
             {"tasks", c.qa.tasks},
             {"fap_steps", c.qa.fap_steps},
             {"checkpoint_offsets", c.qa.checkpoint_offsets},
             {"static_denylist", c.qa.static_denylist},
             {"oracle_static_filter", c.qa.oracle_static_filter},
             {"templates", c.qa.templates}};
  auto ev = to_json(c.eval);
  ev["tasks"] = c.eval_tasks;
  j["eval"] = ev;
  j["adapter"] = {{"kind", c.adapter.kind},
                  {"path", c.adapter.path},
                  {"text", c.adapter.text},
                  {"seed", c.adapter.seed},
                  {"endpoint", to_json(c.adapter.endpoint)}};
  j["jobs"] = c.jobs;
  return j;
}

inline PipelineConfig config_from_json(io::json j, const fs::path& base_dir = {}) {
  interpolate_env(j);
  PipelineConfig c;
  c.base_dir = base_dir;
  try {
    c.dataset_root = j.value("dataset_root", c.dataset_root);
    c.output_root = j.value("output_root", c.output_root);
    c.annotations_dir = j.value("annotations_dir", c.annotations_dir);
    c.videos = j.value("videos", c.videos);
    if (!j.contains("fixation")) throw UsageError("config: 'fixation' section with r_thresh and tau_dur is required");
    c.fixation = fixation_config_from_json(j.at("fixation"));
    c.scene_filter = j.value("scene_filter", c.scene_filter);
    c.fov_r_deg = j.value("fov_r_deg", c.fov_r_deg);
    c.d_eye = j.value("d_eye", c.d_eye);
    c.extraction_frames = j.value("extraction_frames", c.extraction_frames);
    if (j.contains("oracle")) {
      const auto& o = j.at("oracle");
      c.oracle.kind = o.value("kind", c.oracle.kind);
      c.oracle.mock_dir = o.value("mock_dir", c.oracle.mock_dir);
      c.oracle.strict = o.value("strict", c.oracle.strict);
      if (o.contains("endpoint")) c.oracle.endpoint = endpoint_from_json(o.at("endpoint"));
      c.oracle.attempts = o.value("attempts", c.oracle.attempts);
      c.oracle.backoff_ms = o.value("backoff_ms", c.oracle.backoff_ms);
    }
    if (j.contains("qa")) {
      const auto& q = j.at("qa");
      c.qa.seed = q.value("seed", c.qa.seed);
      c.qa.tasks = q.value("tasks", c.qa.tasks);
      c.qa.fap_steps = q.value("fap_steps", c.qa.fap_steps);
      c.qa.checkpoint_offsets = q.value("checkpoint_offsets", c.qa.checkpoint_offsets);
      c.qa.static_denylist = q.value("static_denylist", c.qa.static_denylist);
      c.qa.oracle_static_filter = q.value("oracle_static_filter", c.qa.oracle_static_filter);
      c.qa.templates = q.value("templates", c.qa.templates);
    }
    if (j.contains("eval")) {
      c.eval = eval_config_from_json(j.at("eval"));
      c.eval_tasks = j.at("eval").value("tasks", c.eval_tasks);
    }
    if (j.contains("adapter")) {
      const auto& a = j.at("adapter");
      c.adapter.kind = a.value("kind", c.adapter.kind);
      c.adapter.path = a.value("path", c.adapter.path);
      c.adapter.text = a.value("text", c.adapter.text);
      c.adapter.seed = a.value("seed", c.adapter.seed);
      if (a.contains("endpoint")) c.adapter.endpoint = endpoint_from_json(a.at("endpoint"));
    }
    c.jobs = j.value("jobs", c.jobs);
  } catch (const io::json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  if (c.jobs < 1) throw UsageError("config: jobs must be >= 1");
  if (c.extraction_frames < 1) throw UsageError("config: extraction_frames must be >= 1");
  for (const auto& t : c.qa.tasks) task_from_name(t);
  for (const auto& t : c.eval_tasks) task_from_name(t);
  return c;
}

inline PipelineConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw UsageError("config file not found: " + path.string());
  io::json j;
  try {
    j = io::json::parse(io::read_text(path));
  } catch (const io::json::parse_error& e) {
    throw UsageError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(std::move(j), fs::absolute(path).parent_path());
}

inline bool task_enabled(const std::vector<std::string>& filter, Task t) {
  return filter.empty() || std::find(filter.begin(), filter.end(), task_name(t)) != filter.end();
}

// ---- dataset layout ------------------------------------------------------------------
//
// <dataset>/videos.json            [{"video_id": "...", "source": "..."}]
// <dataset>/<video>/frames/        frames.csv + images
// <dataset>/<video>/gaze.csv       2D pixels or 3D rays
// <dataset>/<video>/poses.csv      3D only
// <dataset>/<video>/intrinsics.json
// <dataset>/<video>/actions.csv    timestamp_s,description (optional)

struct VideoInfo {
  std::string video_id;
  std::string source;
};

inline std::vector<VideoInfo> list_videos(const PipelineConfig& cfg) {
  const fs::path index = cfg.dataset() / "videos.json";
  if (!fs::exists(index)) throw DataError("dataset index missing: " + index.string());
  std::vector<VideoInfo> all;
  for (const auto& v : io::read_json(index)) all.push_back({v.at("video_id").get<std::string>(), v.value("source", "")});
  if (cfg.videos.empty()) return all;
  std::vector<VideoInfo> picked;
  for (const auto& id : cfg.videos) {
    auto it = std::find_if(all.begin(), all.end(), [&](const VideoInfo& v) { return v.video_id == id; });
    if (it == all.end()) throw UsageError("video '" + id + "' not in " + index.string());
    picked.push_back(*it);
  }
  return picked;
}

inline fs::path require_artifact(const fs::path& p, const std::string& producer) {
  if (!fs::exists(p)) throw MissingArtifactError(p.string(), producer);
  return p;
}

inline std::optional<CameraIntrinsics> video_intrinsics(const PipelineConfig& cfg, const std::string& v) {
  const fs::path p = cfg.dataset() / v / "intrinsics.json";
  if (!fs::exists(p)) return std::nullopt;
  return intrinsics_from_json(io::read_json(p));
}

inline std::vector<ActionAnnotation> video_actions(const PipelineConfig& cfg, const std::string& v) {
  const fs::path p = cfg.dataset() / v / "actions.csv";
  return fs::exists(p) ? read_actions_csv(p) : std::vector<ActionAnnotation>{};
}

inline FovSpec video_fov(const PipelineConfig& cfg, const std::string& v, int width) {
  return make_fov_spec(width, video_intrinsics(cfg, v), cfg.fov_r_deg);
}

/// Latest action at or before t, if any.
inline std::string action_caption_at(const std::vector<ActionAnnotation>& actions, double t) {
  std::string caption;
  for (const auto& a : actions)
    if (a.timestamp <= t) caption = a.description;
  return caption.empty() ? "No action annotation available." : caption;
}

// ---- stages --------------------------------------------------------------------------

/// Gaze (2D or 3D) to a per-frame pixel trajectory.
inline GazeTrajectory stage_project(const PipelineConfig& cfg, const std::string& v) {
  const fs::path dir = cfg.dataset() / v;
  DirectoryFrameSource frames(dir / "frames");
  if (frames.size() == 0) throw IngestionError(v + ": no frames");
  const auto& ts = frames.timestamps();
  const auto gaze = read_gaze_csv(dir / "gaze.csv");
  GazeTrajectory traj;
  if (gaze.is_3d()) {
    const auto k = video_intrinsics(cfg, v);
    if (!k) throw IngestionError(v + ": 3D gaze requires intrinsics.json");
    if (!fs::exists(dir / "poses.csv")) throw IngestionError(v + ": 3D gaze requires poses.csv");
    const auto poses = read_poses_csv(dir / "poses.csv");
    traj = build_trajectory(gaze.rays, poses, *k, ts, cfg.d_eye);
  } else {
    const Image first = frames.frame(0);
    traj = passthrough_2d(gaze.pixels, ts, first.width(), first.height());
  }
  fs::create_directories(cfg.video_out(v));
  write_trajectory(cfg.video_out(v) / "trajectory.jsonl", traj);
  return traj;
}

inline std::vector<Fixation> stage_fixations(const PipelineConfig& cfg, const std::string& v) {
  const auto traj = read_trajectory(require_artifact(cfg.video_out(v) / "trajectory.jsonl", "project"));
  std::unique_ptr<DirectoryFrameSource> frames;
  if (cfg.scene_filter) frames = std::make_unique<DirectoryFrameSource>(cfg.dataset() / v / "frames");
  auto fixations = extract_fixations(traj, frames.get(), cfg.fixation);
  write_fixations(cfg.video_out(v) / "fixations.jsonl", fixations);
  return fixations;
}

inline RetryPolicy retry_policy(const PipelineConfig& cfg) {
  RetryPolicy p;
  p.attempts = cfg.oracle.attempts;
  p.initial_backoff = std::chrono::milliseconds(cfg.oracle.backoff_ms);
  return p;
}

/// Per-fixation FOV and out-of-FOV object extraction. Sequential within a
/// video because each prompt lists the names seen so far.
inline std::vector<io::ordered_json> stage_extract(const PipelineConfig& cfg, const std::string& v, Oracle& oracle) {
  const auto fixations = read_fixations(require_artifact(cfg.video_out(v) / "fixations.jsonl", "fixations"));
  DirectoryFrameSource frames(cfg.dataset() / v / "frames");
  const auto actions = video_actions(cfg, v);
  const fs::path media = cfg.media_root() / v;
  fs::create_directories(media);
  ObjectPool pool;
  const auto policy = retry_policy(cfg);
  std::vector<io::ordered_json> records;
  std::optional<FovSpec> spec;
  for (const auto& f : fixations) {
    io::ordered_json rec;
    rec["fixation_index"] = f.index;
    const std::string action = action_caption_at(actions, f.t_end);
    rec["action_caption"] = action;
    const PixelPoint c{f.centroid_x, f.centroid_y};
    std::vector<Image> fov_imgs, out_imgs;
    PixelPoint in_patch{};
    try {
      for (int idx : uniform_frame_samples(f.frame_range.first, f.frame_range.second, cfg.extraction_frames)) {
        const Image frame = frames.frame(static_cast<std::size_t>(idx));
        if (!spec) spec = video_fov(cfg, v, frame.width());
        fov_imgs.push_back(crop_fov_patch(frame, c, spec->radius_px, true));
        out_imgs.push_back(mask_fov(frame, c, spec->radius_px));
        if (fov_imgs.size() == 1) {
          in_patch = {c.x - std::max(0.0, std::floor(c.x - spec->radius_px)),
                      c.y - std::max(0.0, std::floor(c.y - spec->radius_px))};
          const std::string stem = "fixation_" + std::to_string(f.index);
          write_image(frame, media / (stem + "_clip.png"));
          write_image(fov_imgs.back(), media / (stem + "_fov.png"));
          write_image(out_imgs.back(), media / (stem + "_outfov.png"));
        }
      }
    } catch (const DataError& e) {
      rec["error"] = std::string("frames: ") + e.what();
      records.push_back(std::move(rec));
      continue;
    }
    try {
      const std::string fov_raw = request_extraction(fov_imgs, build_fov_prompt(action, pool, in_patch), oracle, policy);
      rec["fov_response"] = fov_raw;
      auto fov = parse_fov_extraction(fov_raw);
      fov.gaze_object.identity = pool.canonicalize(fov.gaze_object.identity);
      for (auto& o : fov.other_objects) o.identity = pool.canonicalize(o.identity);
      const std::string out_raw = request_extraction(out_imgs, build_outfov_prompt(action, pool), oracle, policy);
      rec["outfov_response"] = out_raw;
      auto out = parse_outfov_extraction(out_raw);
      for (auto& o : out) o.identity = pool.canonicalize(o.identity);
      rec["scene_caption"] = fov.scene_caption;
      rec["gaze_object"] = to_json(fov.gaze_object);
      rec["fov_objects"] = io::ordered_json::array();
      for (const auto& o : fov.other_objects) rec["fov_objects"].push_back(to_json(o));
      rec["out_objects"] = io::ordered_json::array();
      for (const auto& o : out) rec["out_objects"].push_back(to_json(o));
    } catch (const DataError& e) {  // unusable response: the fixation is left out of the scanpath
      rec["error"] = e.what();
    }
    records.push_back(std::move(rec));
  }
  io::write_jsonl(cfg.video_out(v) / "extractions.jsonl", records);
  return records;
}

inline Scanpath stage_scanpath(const PipelineConfig& cfg, const std::string& v) {
  const auto fixations = read_fixations(require_artifact(cfg.video_out(v) / "fixations.jsonl", "fixations"));
  const auto records = io::read_jsonl(require_artifact(cfg.video_out(v) / "extractions.jsonl", "extract-objects"));
  const auto traj = read_trajectory(require_artifact(cfg.video_out(v) / "trajectory.jsonl", "project"));
  std::map<int, Fixation> by_index;
  for (const auto& f : fixations) by_index[f.index] = f;
  std::vector<Fixation> used;
  std::vector<ExtractionPair> pairs;
  for (const auto& r : records) {
    if (r.contains("error")) continue;
    auto it = by_index.find(r.at("fixation_index").get<int>());
    if (it == by_index.end()) throw DataError(v + ": extraction for unknown fixation; rerun extract-objects");
    ExtractionPair p;
    p.fov.scene_caption = r.at("scene_caption").get<std::string>();
    p.fov.gaze_object = object_from_json(r.at("gaze_object"));
    for (const auto& o : r.at("fov_objects")) p.fov.other_objects.push_back(object_from_json(o));
    for (const auto& o : r.at("out_objects")) p.out.push_back(object_from_json(o));
    used.push_back(it->second);
    pairs.push_back(std::move(p));
  }
  auto s = build_scanpath(v, traj.duration(), used, pairs);
  write_scanpath(cfg.video_out(v) / "scanpath.json", s);
  return s;
}

inline std::map<std::string, Scanpath> load_scanpaths(const PipelineConfig& cfg, const std::string& file = "scanpath.json",
                                                      const std::string& producer = "scanpath") {
  std::map<std::string, Scanpath> out;
  for (const auto& v : list_videos(cfg))
    out[v.video_id] = read_scanpath(require_artifact(cfg.video_out(v.video_id) / file, producer));
  return out;
}

inline std::vector<VerificationRecord> load_decisions(const PipelineConfig& cfg) {
  const fs::path log = require_artifact(cfg.annotations() / "decisions.jsonl", "serve-annotation");
  std::vector<VerificationRecord> out;
  for (const auto& j : io::read_jsonl(log)) out.push_back(verification_from_json(j));
  return out;
}

struct QaCorpus {
  std::vector<QAItem> mcq;
  std::vector<ProactiveItem> proactive;
  std::vector<SkipRecord> skips;
};

inline QuestionTemplates load_templates(const PipelineConfig& cfg) {
  if (cfg.qa.templates.empty()) return {};
  return QuestionTemplates::from_json(io::read_json(cfg.resolve(cfg.qa.templates)));
}

/// All enabled generators over one verified scanpath.
inline QaCorpus generate_for_video(const PipelineConfig& cfg, const Scanpath& s, Oracle* oracle) {
  const auto tpl = load_templates(cfg);
  const auto seed = cfg.qa.seed;
  QaCorpus c;
  auto take = [&](Generated<QAItem>&& g) {
    for (auto& i : g.items) c.mcq.push_back(std::move(i));
    for (auto& k : g.skips) c.skips.push_back(std::move(k));
  };
  auto take_p = [&](Generated<ProactiveItem>&& g) {
    for (auto& i : g.items) c.proactive.push_back(std::move(i));
    for (auto& k : g.skips) c.skips.push_back(std::move(k));
  };
  const auto& en = cfg.qa.tasks;
  if (task_enabled(en, Task::NFI)) take(gen_nfi(s, seed, tpl));
  if (task_enabled(en, Task::OTP)) take(gen_otp(s, seed, tpl));
  if (task_enabled(en, Task::GSM)) take(gen_gsm(s, seed, tpl));
  if (task_enabled(en, Task::SR)) take(gen_sr(s, seed, tpl));
  if (task_enabled(en, Task::OI_E)) take(gen_oi(s, OiMode::easy, seed, tpl));
  if (task_enabled(en, Task::OI_H)) take(gen_oi(s, OiMode::hard, seed, tpl));
  if (task_enabled(en, Task::OAR)) {
    if (!oracle) throw UsageError("OAR generation needs an oracle");
    take(gen_oar(s, *oracle, seed, tpl));
  }
  if (task_enabled(en, Task::FAP)) take(gen_fap(s, video_actions(cfg, s.video_id), seed, cfg.qa.fap_steps, tpl));
  std::set<std::string> deny;
  for (const auto& d : cfg.qa.static_denylist) deny.insert(name_key(d));
  TargetFilter filter = denylist_filter(deny);
  if (cfg.qa.oracle_static_filter) {
    if (!oracle) throw UsageError("oracle static filter needs an oracle");
    auto ask = oracle_static_filter(*oracle);
    filter = [filter, ask](const std::string& id) { return filter(id) || ask(id); };
  }
  if (task_enabled(en, Task::GTA)) take_p(gen_gta(s, cfg.qa.checkpoint_offsets, seed, filter, tpl));
  if (task_enabled(en, Task::OAA)) take_p(gen_oaa(s, cfg.qa.checkpoint_offsets, seed, filter, tpl));
  return c;
}

inline io::ordered_json to_json(const SkipRecord& s) {
  return {{"task", task_name(s.task)}, {"video_id", s.video_id}, {"index", s.index}, {"reason", s.reason}};
}

inline void write_corpus(const PipelineConfig& cfg, const QaCorpus& c) {
  fs::create_directories(cfg.qa_dir());
  std::vector<io::ordered_json> mcq, pro, skips;
  for (const auto& q : c.mcq) mcq.push_back(to_json(q));
  for (const auto& p : c.proactive) pro.push_back(to_json(p));
  for (const auto& s : c.skips) skips.push_back(to_json(s));
  io::write_jsonl(cfg.qa_dir() / "mcq.jsonl", mcq);
  io::write_jsonl(cfg.qa_dir() / "proactive.jsonl", pro);
  io::write_jsonl(cfg.qa_dir() / "skips.jsonl", skips);
}

inline QaCorpus read_corpus(const PipelineConfig& cfg) {
  QaCorpus c;
  for (const auto& j : io::read_jsonl(require_artifact(cfg.qa_dir() / "mcq.jsonl", "genqa"))) c.mcq.push_back(qa_item_from_json(j));
  for (const auto& j : io::read_jsonl(require_artifact(cfg.qa_dir() / "proactive.jsonl", "genqa")))
    c.proactive.push_back(proactive_item_from_json(j));
  return c;
}

// ---- corpus statistics ---------------------------------------------------------------

inline io::ordered_json corpus_stats(const PipelineConfig& cfg, const QaCorpus& c,
                                     const std::map<std::string, Scanpath>& scanpaths) {
  io::ordered_json j;
  std::map<Task, std::size_t> counts;
  for (Task t : kAllTasks) counts[t] = 0;
  for (const auto& q : c.mcq) ++counts[q.task];
  for (const auto& p : c.proactive) ++counts[p.task];
  io::ordered_json tasks = io::ordered_json::array();
  std::size_t total = 0;
  for (Task t : kAllTasks) {
    const char* scope = task_scope(t) == TemporalScope::past      ? "past"
                        : task_scope(t) == TemporalScope::present ? "present"
                                                                  : "proactive";
    tasks.push_back({{"task", task_name(t)}, {"scope", scope}, {"count", counts[t]}});
    total += counts[t];
  }
  j["tasks"] = tasks;
  j["total"] = total;
  j["reference_total"] = 8521;
  io::ordered_json videos = io::ordered_json::array();
  std::vector<double> lengths;
  for (const auto& [id, s] : scanpaths) {
    std::size_t fov_objects = 0, out_objects = 0;
    for (const auto& e : s.entries) fov_objects += e.fov_objects.size(), out_objects += e.out_objects.size();
    videos.push_back({{"video_id", id},
                      {"duration_s", s.duration},
                      {"fixations", s.size()},
                      {"fov_objects", fov_objects},
                      {"out_objects", out_objects}});
    lengths.push_back(s.duration);
  }
  j["videos"] = videos;
  // video-length histogram in one-minute bins
  std::map<long long, std::size_t> hist;
  for (double len : lengths) ++hist[static_cast<long long>(std::floor(len / 60.0))];
  io::ordered_json h = io::ordered_json::array();
  for (const auto& [bin, n] : hist) h.push_back({{"minutes_from", bin}, {"minutes_to", bin + 1}, {"videos", n}});
  j["video_length_histogram"] = h;
  (void)cfg;
  return j;
}

}  // namespace streamgaze
