#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "streamgaze/annotation.hpp"
#include "streamgaze/image.hpp"
#include "streamgaze/io.hpp"
#include "streamgaze/oracle.hpp"
#include "streamgaze/pipeline.hpp"
#include "streamgaze/rng.hpp"

namespace streamgaze::synth {

namespace fs = std::filesystem;

struct CatalogObject {
  std::string name;
  Rgb color;
  std::string attribute_type;  // empty: the stand-in oracle cannot describe an attribute
  std::string answer;
  std::vector<std::string> distractors;
};

inline const std::vector<CatalogObject>& catalog() {
  static const std::vector<CatalogObject> objects{
      {"blue bowl", {40, 80, 220}, "color", "blue", {"green", "yellow", "white"}},
      {"green cutting board", {40, 170, 60}, "color", "green", {"brown", "white", "black"}},
      {"yellow sponge", {230, 210, 40}, "texture", "porous", {"smooth", "glossy", "ribbed"}},
      {"wooden spoon", {150, 100, 50}, "material", "wood", {"metal", "plastic", "glass"}},
      {"steel pot", {120, 140, 170}, "material", "stainless steel", {"copper", "ceramic", "cast iron"}},
      {"white plate", {245, 245, 225}, "shape", "round", {"square", "oval", "triangular"}},
      {"black kettle", {30, 30, 45}, "color", "black", {"white", "silver", "green"}},
      {"orange knife", {250, 140, 20}, "state", "clean", {"rusty", "broken", "wet"}},
      {"purple towel", {140, 60, 170}, "state", "folded", {"crumpled", "torn", "soaked"}},
      {"glass jar", {170, 220, 230}, "material", "glass", {"plastic", "metal", "wood"}},
      {"pink cup", {240, 130, 180}, "color", "pink", {"blue", "green", "orange"}},
      {"teal bottle", {20, 150, 150}, "", "", {}},
  };
  return objects;
}

inline constexpr const char* kBackgroundName = "kitchen counter";

inline std::string object_caption(const std::string& name, bool detailed) {
  std::string c = "A " + name + " resting on the kitchen counter. It is clearly visible in the frame.";
  if (detailed) c += " Its edges are sharp against the grey surface. Nothing covers it.";
  return c;
}

/// Stand-in multimodal oracle for the synthetic scenes: identifies objects by
/// their unique flat colors, so answers depend only on the request content.
class SyntheticOracle : public Oracle {
 public:
  std::string complete(const OracleRequest& req) override {
    const std::string& p = req.prompt;
    if (p.rfind("Object: ", 0) == 0) return attribute_answer(p);
    if (p.rfind("Caption: ", 0) == 0) return "Yes.";
    if (p.rfind("Is \"", 0) == 0) return p.find(kBackgroundName) != std::string::npos ? "Yes" : "No";
    if (req.images.empty()) return "I cannot answer without an image.";
    if (p.find("\"gaze_object\"") != std::string::npos) return fov_answer(req.images);
    return outfov_answer(req.images);
  }

 private:
  static int lookup(Rgb c) {
    const auto& cat = catalog();
    for (std::size_t i = 0; i < cat.size(); ++i)
      if (cat[i].color == c) return static_cast<int>(i);
    return -1;
  }

  static std::map<int, int> count_objects(const Image& img) {
    std::map<int, int> counts;
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x)
        if (int k = lookup(img.at(x, y)); k >= 0) ++counts[k];
    return counts;
  }

  static std::string fov_answer(const std::vector<Image>& images) {
    const Image& img = images.front();
    double sx = 0, sy = 0;
    int n = 0;
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x)
        if (img.at(x, y) == kRed) sx += x, sy += y, ++n;
    const double cx = n ? sx / n : img.width() / 2.0, cy = n ? sy / n : img.height() / 2.0;
    int gazed = -1;
    double best = 8.0;
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x)
        if (int k = lookup(img.at(x, y)); k >= 0) {
          const double d = std::hypot(x - cx, y - cy);
          if (d < best) best = d, gazed = k;
        }
    std::map<int, int> counts;
    for (const auto& im : images)
      for (auto [k, c] : count_objects(im)) counts[k] += c;
    FovExtraction e;
    e.scene_caption = "A person works at a kitchen counter with several household objects. The view is steady.";
    e.gaze_object.identity = gazed >= 0 ? catalog()[static_cast<std::size_t>(gazed)].name : kBackgroundName;
    e.gaze_object.caption = object_caption(e.gaze_object.identity, true);
    for (auto [k, c] : counts)
      if (k != gazed && c >= 6)
        e.other_objects.push_back({catalog()[static_cast<std::size_t>(k)].name,
                                   object_caption(catalog()[static_cast<std::size_t>(k)].name, false)});
    return render_fov_extraction(e);
  }

  static std::string outfov_answer(const std::vector<Image>& images) {
    std::map<int, int> counts;
    for (const auto& im : images)
      for (auto [k, c] : count_objects(im)) counts[k] += c;
    std::vector<ObjectRecord> out;
    for (auto [k, c] : counts)
      if (c >= 6) out.push_back({catalog()[static_cast<std::size_t>(k)].name,
                                 object_caption(catalog()[static_cast<std::size_t>(k)].name, false)});
    return render_outfov_extraction(out);
  }

  static std::string attribute_answer(const std::string& prompt) {
    const std::string name = text::trim(prompt.substr(8, prompt.find('\n') - 8));
    for (const auto& o : catalog())
      if (o.name == name && !o.attribute_type.empty()) {
        io::ordered_json j;
        j["attribute_type"] = o.attribute_type;
        j["answer"] = o.answer;
        j["distractors"] = o.distractors;
        return "```json\n" + j.dump() + "\n```";
      }
    return "I am not able to determine a distinctive attribute for this object.";
  }
};

// ---- scene generation ----------------------------------------------------------------

struct Placement {
  int object = 0;  // catalog index
  int x = 0, y = 0, w = 0, h = 0;
  double visible_from = 0, visible_to = 1e9;
  bool visible(double t) const { return t >= visible_from && t <= visible_to; }
};

struct VideoSpec {
  std::string video_id;
  bool three_d = false;
  double duration = 60.0;
  double fps = 10.0;
  int width = 160, height = 120;
  std::uint64_t seed = 0;
};

inline std::vector<Placement> layout(const VideoSpec& v, Rng& rng) {
  std::vector<int> ids(catalog().size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
  rng.shuffle(ids);
  std::vector<Placement> out;
  const int cols = 4, rows = 3;
  const int cw = v.width / cols, ch = v.height / rows;
  std::vector<int> cells(cols * rows);
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = static_cast<int>(i);
  rng.shuffle(cells);
  for (int k = 0; k < 9; ++k) {
    Placement p;
    p.object = ids[static_cast<std::size_t>(k)];
    p.w = 20;
    p.h = 14;
    const int cell = cells[static_cast<std::size_t>(k)];
    p.x = (cell % cols) * cw + (cw - p.w) / 2 + static_cast<int>(rng.uniform(7)) - 3;
    p.y = (cell / cols) * ch + (ch - p.h) / 2 + static_cast<int>(rng.uniform(7)) - 3;
    if (k == 6) p.visible_from = v.duration * 0.35;
    if (k == 7) p.visible_to = v.duration * 0.55;
    if (k == 8) p.visible_from = v.duration * 0.15, p.visible_to = v.duration * 0.75;
    out.push_back(p);
  }
  return out;
}

inline Image render(const VideoSpec& v, const std::vector<Placement>& scene, double t, std::uint8_t bg) {
  Image img(v.width, v.height, Rgb{bg, bg, bg});
  for (const auto& p : scene) {
    if (!p.visible(t)) continue;
    for (int y = p.y; y < p.y + p.h; ++y)
      for (int x = p.x; x < p.x + p.w; ++x)
        if (img.contains(x, y)) img.set(x, y, catalog()[static_cast<std::size_t>(p.object)].color);
  }
  return img;
}

struct GazePoint {
  double t, x, y;
  bool valid;
};

struct Dwell {
  double start, end;
  int object;  // catalog index, -1 for empty counter
};

/// Dwell-and-saccade gaze at `rate` Hz, with jitter and short blinks.
inline std::vector<GazePoint> gaze_path(const VideoSpec& v, const std::vector<Placement>& scene, Rng& rng, double rate,
                                        std::vector<Dwell>& dwells) {
  std::vector<GazePoint> out;
  double t = 0.003;
  double px = v.width / 2.0, py = v.height / 2.0;
  int prev = -2;
  while (t < v.duration) {
    std::vector<const Placement*> candidates;
    for (const auto& p : scene)
      if (p.visible(t) && p.object != prev) candidates.push_back(&p);
    double tx, ty;
    int target = -1;
    if (candidates.empty() || rng.unit() < 0.08) {
      tx = 10 + rng.uniform_real(0, v.width - 20);
      ty = 10 + rng.uniform_real(0, v.height - 20);
    } else {
      const Placement* p = candidates[rng.uniform(candidates.size())];
      target = p->object;
      tx = p->x + p->w / 2.0 + rng.uniform_real(-3, 3);
      ty = p->y + p->h / 2.0 + rng.uniform_real(-2, 2);
    }
    const double sacc = rng.uniform_real(0.1, 0.25);
    for (double s = 0; s < sacc && t < v.duration; s += 1.0 / rate, t += 1.0 / rate) {
      const double a = s / sacc;
      out.push_back({t, px + (tx - px) * a, py + (ty - py) * a, true});
    }
    const double dwell = rng.uniform_real(1.2, 3.0);
    const double start = t;
    const double blink_at = rng.unit() < 0.3 ? rng.uniform_real(0.3, dwell - 0.3) : -1;
    for (double s = 0; s < dwell && t < v.duration; s += 1.0 / rate, t += 1.0 / rate) {
      const bool blink = blink_at >= 0 && s >= blink_at && s < blink_at + 0.1;
      out.push_back({t, tx + rng.uniform_real(-1.2, 1.2), ty + rng.uniform_real(-1.2, 1.2), !blink});
    }
    dwells.push_back({start, t, target});
    px = tx, py = ty;
    prev = target;
  }
  return out;
}

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline Eigen::Matrix4d synthetic_pose(double t) {
  const double yaw = 0.2 * std::sin(t / 10.0);
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitY()).toRotationMatrix();
  m(0, 3) = 0.1 * t / 60.0;
  return m;
}

/// Ray from an eye offset from the camera center that passes through pixel
/// (u, v) at distance 1 from the eye.
inline GazeRay ray_through_pixel(double t, double u, double v, const CameraIntrinsics& k, const Eigen::Matrix4d& pose) {
  const Eigen::Vector3d eye(0.03, 0.0, 0.0);
  const double a = (u - k.cx) / k.fx, b = (v - k.cy) / k.fy;
  const double q = a * a + b * b + 1.0;
  const double z = (a * eye.x() + std::sqrt(a * eye.x() * a * eye.x() - q * (eye.squaredNorm() - 1.0))) / q;
  const Eigen::Vector3d p = z * Eigen::Vector3d(a, b, 1.0);
  const Eigen::Matrix3d r = pose.topLeftCorner<3, 3>();
  GazeRay ray;
  ray.timestamp = t;
  ray.origin = r * eye + pose.topRightCorner<3, 1>();
  ray.direction = r * (p - eye);
  return ray;
}

inline void write_video(const fs::path& root, const VideoSpec& v) {
  Rng rng(derive_seed(v.seed, v.video_id, "scene", 0));
  const auto scene = layout(v, rng);
  const auto bg = static_cast<std::uint8_t>(96 + rng.uniform(24));
  const fs::path dir = root / v.video_id;
  fs::create_directories(dir / "frames");
  std::string frames_csv = "frame_index,timestamp_s,file\n";
  const int n = static_cast<int>(std::lround(v.duration * v.fps));
  for (int i = 0; i < n; ++i) {
    const double t = i / v.fps;
    char name[32];
    std::snprintf(name, sizeof name, "frame_%06d.png", i);
    write_image(render(v, scene, t, bg), dir / "frames" / name);
    frames_csv += std::to_string(i) + "," + fmt(t) + "," + name + "\n";
  }
  io::write_text(dir / "frames" / "frames.csv", frames_csv);

  std::vector<Dwell> dwells;
  const auto gaze = gaze_path(v, scene, rng, 30.0, dwells);
  if (v.three_d) {
    CameraIntrinsics k{v.width / 2.0, v.width / 2.0, v.width / 2.0, v.height / 2.0, v.width, v.height};
    io::write_json(dir / "intrinsics.json", to_json(k));
    std::string g = "timestamp_s,origin_x,origin_y,origin_z,direction_x,direction_y,direction_z,valid\n";
    for (const auto& s : gaze) {
      const auto ray = ray_through_pixel(s.t, s.x, s.y, k, synthetic_pose(s.t));
      g += fmt(s.t);
      for (int i = 0; i < 3; ++i) g += "," + fmt(ray.origin[i]);
      for (int i = 0; i < 3; ++i) g += "," + fmt(ray.direction[i]);
      g += s.valid ? ",1\n" : ",0\n";
    }
    io::write_text(dir / "gaze.csv", g);
    std::string p = "timestamp_s";
    for (int i = 0; i < 16; ++i) p += ",m" + std::to_string(i / 4) + std::to_string(i % 4);
    p += "\n";
    for (double t = 0; t <= v.duration + 1e-9; t += 0.05) {
      const auto m = synthetic_pose(t);
      p += fmt(t);
      for (int i = 0; i < 16; ++i) p += "," + fmt(m(i / 4, i % 4));
      p += "\n";
    }
    io::write_text(dir / "poses.csv", p);
  } else {
    std::string g = "timestamp_s,x_px,y_px,valid\n";
    for (const auto& s : gaze) g += fmt(s.t) + "," + fmt(s.x) + "," + fmt(s.y) + (s.valid ? ",1\n" : ",0\n");
    io::write_text(dir / "gaze.csv", g);
  }

  static const char* verbs[] = {"pick up", "rinse", "put down", "wipe", "move", "inspect"};
  std::string a = "timestamp_s,description\n";
  for (std::size_t i = 0; i < dwells.size(); ++i) {
    if (dwells[i].object < 0 || i % 2 == 1) continue;
    const auto& name = catalog()[static_cast<std::size_t>(dwells[i].object)].name;
    a += fmt(std::round(dwells[i].start * 10) / 10) + "," + verbs[rng.uniform(6)] + " the " + name + "\n";
  }
  io::write_text(dir / "actions.csv", a);
}

/// Three simulated annotators: mostly include, a few majority excludes on
/// non-gazed objects, an occasional gazed-object caption edit.
inline std::vector<VerificationRecord> simulate_annotations(const std::map<std::string, Scanpath>& scanpaths,
                                                            std::uint64_t seed) {
  std::vector<VerificationRecord> out;
  const std::vector<std::string> annotators{"annotator-1", "annotator-2", "annotator-3"};
  for (const auto& [vid, s] : scanpaths) {
    Rng rng(derive_seed(seed, vid, "annotation", 0));
    for (const auto& e : s.entries) {
      auto vote = [&](const ObjectRecord& o, bool gazed) {
        const double u = rng.unit();
        const int excludes = gazed ? (u < 0.05 ? 1 : 0) : (u < 0.08 ? 2 : (u < 0.25 ? 1 : 0));
        const bool edit = gazed && rng.unit() < 0.1;
        for (std::size_t a = 0; a < annotators.size(); ++a) {
          VerificationRecord r;
          r.annotator_id = annotators[a];
          r.video_id = vid;
          r.fixation_index = e.fixation.index;
          r.object_identity = o.identity;
          r.decision = static_cast<int>(a) < excludes ? Decision::exclude : Decision::include;
          if (edit && a == 0) r.edited_caption = o.caption + " Checked against the clip.";
          r.recorded_at = "2026-01-01T00:00:00Z";
          out.push_back(std::move(r));
        }
      };
      for (std::size_t i = 0; i < e.fov_objects.size(); ++i) vote(e.fov_objects[i], i == 0);
      for (const auto& o : e.out_objects) vote(o, false);
    }
  }
  return out;
}

struct SynthOptions {
  std::uint64_t seed = 7;
  int videos = 2;
  double duration = 60.0;
};

inline PipelineConfig default_config() {
  PipelineConfig c;
  c.dataset_root = "dataset";
  c.output_root = "out";
  c.annotations_dir = "dataset/annotations";
  c.fixation.r_thresh = 0.05;
  c.fixation.tau_dur = 0.5;
  c.oracle.kind = "mock";
  c.oracle.mock_dir = "dataset/mock_oracle";
  c.qa.seed = 2026;
  c.qa.static_denylist = {kBackgroundName};
  c.qa.oracle_static_filter = true;
  c.adapter.kind = "random";
  c.adapter.seed = 11;
  return c;
}

/// Writes <root>/dataset (frames, gaze, poses, actions, canned oracle
/// responses, simulated annotator decisions) and <root>/pipeline.json.
/// The canned responses are recorded by running the oracle-backed stages
/// against the stand-in oracle in a scratch directory.
inline fs::path synthesize(const fs::path& root, const SynthOptions& opt) {
  if (opt.videos < 1 || !(opt.duration >= 5)) throw UsageError("synth: need >= 1 video of >= 5 s");
  const fs::path dataset = root / "dataset";
  fs::remove_all(dataset);
  fs::create_directories(dataset);
  io::ordered_json index = io::ordered_json::array();
  for (int i = 0; i < opt.videos; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "vid%02d", i + 1);
    VideoSpec v;
    v.video_id = id;
    v.three_d = i % 2 == 1;
    v.duration = opt.duration;
    v.seed = opt.seed;
    write_video(dataset, v);
    index.push_back({{"video_id", v.video_id}, {"source", v.three_d ? "synthetic-3d" : "synthetic-2d"}});
  }
  io::write_json(dataset / "videos.json", index);

  PipelineConfig cfg = default_config();
  const fs::path config_path = root / "pipeline.json";
  io::write_json(config_path, to_json(cfg));

  PipelineConfig work = cfg;
  work.base_dir = fs::absolute(root);
  work.output_root = (fs::absolute(root) / ".synth-work").string();
  work.annotations_dir = (fs::absolute(root) / ".synth-work" / "annotations").string();
  fs::remove_all(work.output());
  SyntheticOracle truth;
  MockOracle sink;
  RecordingOracle recorder(truth, sink);
  std::map<std::string, Scanpath> raw;
  for (const auto& v : list_videos(work)) {
    stage_project(work, v.video_id);
    stage_fixations(work, v.video_id);
    stage_extract(work, v.video_id, recorder);
    raw[v.video_id] = stage_scanpath(work, v.video_id);
  }
  const auto records = simulate_annotations(raw, opt.seed);
  fs::create_directories(dataset / "annotations");
  std::vector<io::ordered_json> lines;
  for (const auto& r : records) lines.push_back(to_json(r));
  io::write_jsonl(dataset / "annotations" / "decisions.jsonl", lines);
  for (const auto& [vid, s] : raw) generate_for_video(work, apply_verification(s, records), &recorder);
  sink.save_directory(dataset / "mock_oracle");
  fs::remove_all(work.output());
  return config_path;
}

}  // namespace streamgaze::synth
