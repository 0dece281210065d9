#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "streamgaze/error.hpp"
#include "streamgaze/gaze_ingest.hpp"
#include "streamgaze/image.hpp"
#include "streamgaze/io.hpp"

namespace streamgaze {

/// r_thresh and tau_dur have no defaults: they depend on the dataset and must be configured.
struct FixationConfig {
  double r_thresh = 0;           // fraction of frame width
  double tau_dur = 0;            // seconds
  double interruption_max = 0.2; // seconds
  double tau_scene = 0.9;
  int hist_bins_hue = 30;
  int hist_bins_sat = 32;
  int scene_samples = 8;

  void validate() const {
    if (!(r_thresh > 0 && r_thresh < 1)) throw UsageError("fixation: r_thresh must be in (0, 1)");
    if (!(tau_dur > 0)) throw UsageError("fixation: tau_dur must be positive");
    if (!(interruption_max >= 0)) throw UsageError("fixation: interruption_max must be non-negative");
    if (!(tau_scene > 0 && tau_scene <= 1)) throw UsageError("fixation: tau_scene must be in (0, 1]");
    if (hist_bins_hue < 2 || hist_bins_sat < 2) throw UsageError("fixation: histogram needs at least 2 bins per axis");
    if (scene_samples < 1) throw UsageError("fixation: scene_samples must be >= 1");
  }
};

struct Fixation {
  int index = 0;
  double centroid_x = 0, centroid_y = 0;
  double t_start = 0, t_end = 0;
  std::pair<int, int> frame_range{0, 0};  // inclusive
  std::optional<double> s_min;

  double duration() const { return t_end - t_start; }
  bool covers(double t) const { return t >= t_start && t <= t_end; }
  friend bool operator==(const Fixation&, const Fixation&) = default;
};

namespace detail {

inline double dist(const GazeSample& s, double cx, double cy) { return std::hypot(s.x - cx, s.y - cy); }

/// Stability predicate for samples [a, b]: centroid over valid samples,
/// endpoints in radius, every out-of-radius/invalid run bridged within
/// interruption_max, duration >= tau_dur.
inline std::optional<std::pair<double, double>> stable_interval(const std::vector<GazeSample>& s, std::size_t a,
                                                                std::size_t b, double radius,
                                                                const FixationConfig& cfg) {
  if (!s[a].valid || !s[b].valid) return std::nullopt;
  if (s[b].timestamp - s[a].timestamp < cfg.tau_dur) return std::nullopt;
  double sx = 0, sy = 0;
  std::size_t n = 0;
  for (std::size_t j = a; j <= b; ++j) {
    if (!s[j].valid) continue;
    sx += s[j].x;
    sy += s[j].y;
    ++n;
  }
  const double cx = sx / static_cast<double>(n), cy = sy / static_cast<double>(n);
  auto member = [&](std::size_t j) { return s[j].valid && dist(s[j], cx, cy) <= radius; };
  if (!member(a) || !member(b)) return std::nullopt;
  std::size_t last = a;
  for (std::size_t j = a + 1; j <= b; ++j) {
    if (!member(j)) continue;
    if (j - last > 1 && s[j].timestamp - s[last].timestamp > cfg.interruption_max) return std::nullopt;
    last = j;
  }
  return std::make_pair(cx, cy);
}

/// Largest index that can still close an interval starting at a. Any member
/// lies within 2R of s[a]; a block of samples that cannot be members, whose
/// bridging gap exceeds interruption_max, ends every interval before it.
inline std::size_t reach_bound(const std::vector<GazeSample>& s, std::size_t a, double radius,
                               const FixationConfig& cfg) {
  const double limit = 2.0 * radius * (1.0 + 1e-12) + 1e-9;
  auto compatible = [&](std::size_t j) { return s[j].valid && dist(s[j], s[a].x, s[a].y) <= limit; };
  std::size_t last = a;
  for (std::size_t j = a + 1; j < s.size(); ++j) {
    if (!compatible(j)) continue;
    if (j - last > 1 && s[j].timestamp - s[last].timestamp > cfg.interruption_max) return last;
    last = j;
  }
  return last;
}

}  // namespace detail

/// Leftmost-maximal stable intervals, non-overlapping, in temporal order.
/// Scene consistency is not applied here.
inline std::vector<Fixation> extract_candidates(const GazeTrajectory& trajectory, const FixationConfig& config) {
  config.validate();
  if (trajectory.width <= 0) throw DataError("trajectory has no frame width");
  const auto& s = trajectory.samples;
  const double radius = config.r_thresh * trajectory.width;
  std::vector<Fixation> out;
  std::size_t a = 0;
  while (a < s.size()) {
    if (!s[a].valid) {
      ++a;
      continue;
    }
    const std::size_t bound = detail::reach_bound(s, a, radius, config);
    bool found = false;
    for (std::size_t b = bound; b > a; --b) {
      if (s[b].timestamp - s[a].timestamp < config.tau_dur) break;
      if (auto c = detail::stable_interval(s, a, b, radius, config)) {
        Fixation f;
        f.index = static_cast<int>(out.size());
        f.centroid_x = c->first;
        f.centroid_y = c->second;
        f.t_start = s[a].timestamp;
        f.t_end = s[b].timestamp;
        f.frame_range = {s[a].frame_index, s[b].frame_index};
        out.push_back(f);
        a = b + 1;
        found = true;
        break;
      }
    }
    if (!found) ++a;
  }
  return out;
}

// ---- scene consistency ------------------------------------------------------

/// Normalised 2D histogram over hue [0,180) x saturation [0,256).
struct HsHistogram {
  int hue_bins = 0;
  int sat_bins = 0;
  std::vector<double> bins;  // hue-major

  double at(int h, int s) const { return bins[static_cast<std::size_t>(h) * sat_bins + s]; }
  friend bool operator==(const HsHistogram&, const HsHistogram&) = default;
};

/// 8-bit HSV with hue halved into [0,180), saturation scaled to [0,255].
inline std::pair<double, double> rgb_to_hs(Rgb c) {
  const double r = c.r, g = c.g, b = c.b;
  const double v = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double diff = v - mn;
  const double sat = v > 0 ? 255.0 * diff / v : 0.0;
  double hue = 0;
  if (diff > 0) {
    if (v == r) hue = 60.0 * (g - b) / diff;
    else if (v == g) hue = 120.0 + 60.0 * (b - r) / diff;
    else hue = 240.0 + 60.0 * (r - g) / diff;
    if (hue < 0) hue += 360.0;
  }
  return {hue / 2.0, sat};
}

inline HsHistogram hs_histogram(const Image& frame, int hue_bins = 30, int sat_bins = 32) {
  if (frame.empty()) throw DataError("histogram of an empty image");
  if (hue_bins < 2 || sat_bins < 2) throw UsageError("histogram needs at least 2 bins per axis");
  HsHistogram h{hue_bins, sat_bins, std::vector<double>(static_cast<std::size_t>(hue_bins) * sat_bins, 0.0)};
  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 0; x < frame.width(); ++x) {
      auto [hue, sat] = rgb_to_hs(frame.at(x, y));
      int hb = std::min(hue_bins - 1, static_cast<int>(hue * hue_bins / 180.0));
      int sb = std::min(sat_bins - 1, static_cast<int>(sat * sat_bins / 256.0));
      h.bins[static_cast<std::size_t>(hb) * sat_bins + sb] += 1.0;
    }
  }
  const double total = static_cast<double>(frame.width()) * frame.height();
  for (double& v : h.bins) v /= total;
  return h;
}

/// Pearson correlation over flattened bins. Zero variance on either side
/// yields 1 for identical histograms and 0 otherwise.
inline double pearson(const HsHistogram& h1, const HsHistogram& h2) {
  if (h1.hue_bins != h2.hue_bins || h1.sat_bins != h2.sat_bins || h1.bins.size() != h2.bins.size())
    throw UsageError("pearson: histogram shapes differ");
  const std::size_t n = h1.bins.size();
  double m1 = 0, m2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    m1 += h1.bins[i];
    m2 += h2.bins[i];
  }
  m1 /= static_cast<double>(n);
  m2 /= static_cast<double>(n);
  double cov = 0, v1 = 0, v2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d1 = h1.bins[i] - m1, d2 = h2.bins[i] - m2;
    cov += d1 * d2;
    v1 += d1 * d1;
    v2 += d2 * d2;
  }
  if (v1 == 0 || v2 == 0) return h1.bins == h2.bins ? 1.0 : 0.0;
  return std::clamp(cov / (std::sqrt(v1) * std::sqrt(v2)), -1.0, 1.0);
}

/// Up to `count` distinct frame indices spread uniformly over [first, last].
inline std::vector<int> uniform_frame_samples(int first, int last, int count) {
  std::vector<int> out;
  if (last < first || count <= 0) return out;
  if (count == 1) return {first};
  for (int k = 0; k < count; ++k) {
    const double pos = first + static_cast<double>(k) * (last - first) / (count - 1);
    const int idx = static_cast<int>(std::lround(pos));
    if (out.empty() || out.back() != idx) out.push_back(idx);
  }
  return out;
}

struct SceneCheck {
  std::optional<double> s_min;
  bool keep = true;
};

/// Minimum consecutive-pair histogram correlation over uniformly sampled frames.
/// Intervals with fewer than two sampled frames pass unmeasured.
inline SceneCheck scene_consistency(const Fixation& fixation, const FrameSource& frames, const FixationConfig& config) {
  const auto [first, last] = fixation.frame_range;
  if (first < 0 || last < first || static_cast<std::size_t>(last) >= frames.size())
    throw DataError("fixation frame range outside the frame source");
  const auto picks = uniform_frame_samples(first, last, config.scene_samples);
  if (picks.size() < 2) return {};
  std::vector<HsHistogram> hists;
  hists.reserve(picks.size());
  for (int idx : picks)
    hists.push_back(hs_histogram(frames.frame(static_cast<std::size_t>(idx)), config.hist_bins_hue, config.hist_bins_sat));
  double s_min = 1.0;
  for (std::size_t i = 0; i + 1 < hists.size(); ++i) s_min = std::min(s_min, pearson(hists[i], hists[i + 1]));
  return {s_min, s_min >= config.tau_scene};
}

/// Stability scan followed by the scene-consistency filter. Passing a null
/// frame source skips the scene filter. Indices are reassigned from 0.
inline std::vector<Fixation> extract_fixations(const GazeTrajectory& trajectory, const FrameSource* frames,
                                               const FixationConfig& config) {
  auto candidates = extract_candidates(trajectory, config);
  std::vector<Fixation> out;
  for (auto& f : candidates) {
    if (frames) {
      auto check = scene_consistency(f, *frames, config);
      if (!check.keep) continue;
      f.s_min = check.s_min;
    }
    f.index = static_cast<int>(out.size());
    out.push_back(f);
  }
  return out;
}

// ---- serialization ----------------------------------------------------------

inline io::ordered_json to_json(const Fixation& f) {
  io::ordered_json j;
  j["index"] = f.index;
  j["centroid_x"] = f.centroid_x;
  j["centroid_y"] = f.centroid_y;
  j["t_start"] = f.t_start;
  j["t_end"] = f.t_end;
  j["frame_start"] = f.frame_range.first;
  j["frame_end"] = f.frame_range.second;
  j["s_min"] = f.s_min ? io::ordered_json(*f.s_min) : io::ordered_json(nullptr);
  return j;
}

inline Fixation fixation_from_json(const io::json& j) {
  Fixation f;
  f.index = j.at("index").get<int>();
  f.centroid_x = j.at("centroid_x").get<double>();
  f.centroid_y = j.at("centroid_y").get<double>();
  f.t_start = j.at("t_start").get<double>();
  f.t_end = j.at("t_end").get<double>();
  f.frame_range = {j.at("frame_start").get<int>(), j.at("frame_end").get<int>()};
  if (j.contains("s_min") && !j.at("s_min").is_null()) f.s_min = j.at("s_min").get<double>();
  return f;
}

inline void write_fixations(const std::filesystem::path& path, const std::vector<Fixation>& fixations) {
  std::vector<io::ordered_json> lines;
  for (const auto& f : fixations) lines.push_back(to_json(f));
  io::write_jsonl(path, lines);
}

inline std::vector<Fixation> read_fixations(const std::filesystem::path& path) {
  std::vector<Fixation> out;
  for (const auto& j : io::read_jsonl(path)) out.push_back(fixation_from_json(j));
  return out;
}

inline FixationConfig fixation_config_from_json(const io::json& j) {
  FixationConfig c;
  if (!j.contains("r_thresh") || !j.contains("tau_dur"))
    throw UsageError("fixation config requires r_thresh and tau_dur");
  c.r_thresh = j.at("r_thresh").get<double>();
  c.tau_dur = j.at("tau_dur").get<double>();
  c.interruption_max = j.value("interruption_max", c.interruption_max);
  c.tau_scene = j.value("tau_scene", c.tau_scene);
  c.hist_bins_hue = j.value("hist_bins_hue", c.hist_bins_hue);
  c.hist_bins_sat = j.value("hist_bins_sat", c.hist_bins_sat);
  c.scene_samples = j.value("scene_samples", c.scene_samples);
  c.validate();
  return c;
}

inline io::ordered_json to_json(const FixationConfig& c) {
  io::ordered_json j;
  j["r_thresh"] = c.r_thresh;
  j["tau_dur"] = c.tau_dur;
  j["interruption_max"] = c.interruption_max;
  j["tau_scene"] = c.tau_scene;
  j["hist_bins_hue"] = c.hist_bins_hue;
  j["hist_bins_sat"] = c.hist_bins_sat;
  j["scene_samples"] = c.scene_samples;
  return j;
}

}  // namespace streamgaze
