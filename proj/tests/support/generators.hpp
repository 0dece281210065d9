#pragma once

// Seeded random inputs shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "streamgaze/fixation.hpp"
#include "streamgaze/gaze_ingest.hpp"
#include "streamgaze/rng.hpp"
#include "streamgaze/scanpath.hpp"

namespace testsupport {

using namespace streamgaze;

/// Mixed trajectory: dwell clusters with jitter near the radius, short and
/// long flicks, blink dropouts, drifting segments and irregular sampling.
inline GazeTrajectory random_trajectory(std::uint64_t seed, std::size_t max_samples = 300) {
  Rng rng(seed);
  GazeTrajectory t;
  t.width = 640;
  t.height = 480;
  const std::size_t n = 20 + rng.uniform(max_samples - 19);
  double ts = rng.uniform_real(0, 1);
  double cx = rng.uniform_real(50, 590), cy = rng.uniform_real(50, 430);
  const double jitter = rng.uniform_real(2, 16);
  std::size_t left_in_mode = 0;
  int mode = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (left_in_mode == 0) {
      const double u = rng.unit();
      mode = u < 0.55 ? 0 : u < 0.75 ? 1 : u < 0.88 ? 2 : 3;  // dwell, flick, blink, drift
      left_in_mode = mode == 0 ? 3 + rng.uniform(40) : 1 + rng.uniform(mode == 3 ? 15 : 6);
      if (mode == 0 && rng.unit() < 0.6) cx = rng.uniform_real(50, 590), cy = rng.uniform_real(50, 430);
    }
    --left_in_mode;
    GazeSample s;
    s.frame_index = static_cast<int>(i);
    ts += rng.unit() < 0.1 ? rng.uniform_real(0.05, 0.15) : 1.0 / 30.0;
    s.timestamp = ts;
    if (mode == 2 && rng.unit() < 0.9) {
      t.samples.push_back(s);
      continue;
    }
    double x = cx, y = cy;
    if (mode == 0) x += rng.uniform_real(-jitter, jitter), y += rng.uniform_real(-jitter, jitter);
    if (mode == 1) x += rng.uniform_real(-120, 120), y += rng.uniform_real(-120, 120);
    if (mode == 3) cx += rng.uniform_real(-6, 6), cy += rng.uniform_real(-6, 6), x = cx, y = cy;
    s.x = std::clamp(x, 0.0, 639.0);
    s.y = std::clamp(y, 0.0, 479.0);
    s.valid = true;
    s.in_frame = true;
    t.samples.push_back(s);
  }
  return t;
}

inline FixationConfig random_fixation_config(std::uint64_t seed) {
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  FixationConfig c;
  c.r_thresh = rng.uniform_real(0.01, 0.03);
  c.tau_dur = rng.uniform_real(0.08, 0.6);
  c.interruption_max = rng.unit() < 0.5 ? 0.2 : rng.uniform_real(0.0, 0.3);
  return c;
}

/// Brute-force leftmost-maximal extraction: every start, every end from the
/// right, full predicate check. Sums run in index order like the extractor.
inline std::vector<std::pair<std::size_t, std::size_t>> brute_force_fixations(const GazeTrajectory& t,
                                                                             const FixationConfig& c) {
  const auto& s = t.samples;
  const double r = c.r_thresh * t.width;
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t a = 0;
  while (a < s.size()) {
    std::vector<double> px(s.size(), 0), py(s.size(), 0);
    std::vector<std::size_t> cnt(s.size(), 0);
    double sx = 0, sy = 0;
    std::size_t n = 0;
    for (std::size_t j = a; j < s.size(); ++j) {
      if (s[j].valid) sx += s[j].x, sy += s[j].y, ++n;
      px[j] = sx, py[j] = sy, cnt[j] = n;
    }
    std::size_t found = 0;
    for (std::size_t b = s.size() - 1; b > a && !found; --b) {
      if (!s[a].valid || !s[b].valid) continue;
      if (s[b].timestamp - s[a].timestamp < c.tau_dur) continue;
      const double mx = px[b] / static_cast<double>(cnt[b]), my = py[b] / static_cast<double>(cnt[b]);
      auto in = [&](std::size_t j) { return s[j].valid && std::hypot(s[j].x - mx, s[j].y - my) <= r; };
      if (!in(a) || !in(b)) continue;
      bool ok = true;
      std::size_t prev = a;
      for (std::size_t j = a + 1; j <= b && ok; ++j) {
        if (!in(j)) continue;
        if (j > prev + 1 && s[j].timestamp - s[prev].timestamp > c.interruption_max) ok = false;
        prev = j;
      }
      if (ok) found = b;
    }
    if (found) {
      out.emplace_back(a, found);
      a = found + 1;
    } else {
      ++a;
    }
  }
  return out;
}

/// Random verified scanpath over a small identity vocabulary.
inline Scanpath random_scanpath(std::uint64_t seed, const std::string& video_id = "rv") {
  Rng rng(seed);
  Scanpath s;
  s.video_id = video_id;
  s.verified = true;
  const std::size_t vocab = 5 + rng.uniform(16);
  auto name = [](std::size_t k) { return "object " + std::to_string(k); };
  const std::size_t n = 2 + rng.uniform(24);
  double t = rng.uniform_real(0, 5);
  for (std::size_t i = 0; i < n; ++i) {
    ScanpathEntry e;
    e.fixation.index = static_cast<int>(i);
    e.fixation.t_start = t;
    e.fixation.t_end = t + rng.uniform_real(0.2, 4.0);
    e.fixation.frame_range = {static_cast<int>(t * 10), static_cast<int>(e.fixation.t_end * 10)};
    t = e.fixation.t_end + rng.uniform_real(0.05, 12.0);
    std::vector<std::size_t> ids(vocab);
    for (std::size_t k = 0; k < vocab; ++k) ids[k] = k;
    rng.shuffle(ids);
    const std::size_t nf = 1 + rng.uniform(std::min<std::size_t>(4, vocab - 1));
    const std::size_t no = rng.uniform(std::min<std::size_t>(9, vocab - nf + 1));
    for (std::size_t k = 0; k < nf; ++k) e.fov_objects.push_back({name(ids[k]), "caption of " + name(ids[k]), Region::fov_other, 0});
    for (std::size_t k = nf; k < nf + no; ++k) e.out_objects.push_back({name(ids[k]), "caption of " + name(ids[k]), Region::out_of_fov, 0});
    normalize_entry(e);
    s.entries.push_back(std::move(e));
  }
  s.duration = t;
  return s;
}

}  // namespace testsupport
