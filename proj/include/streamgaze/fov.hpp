#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "streamgaze/error.hpp"
#include "streamgaze/gaze_ingest.hpp"
#include "streamgaze/image.hpp"

namespace streamgaze {

inline constexpr double kCanonicalHfovDeg = 90.0;
inline constexpr double kPerifovealRadiusDeg = 15.0;
inline constexpr double kEvalCircleStroke = 3.0;
inline constexpr double kEvalDotRadius = 4.0;

enum class FovSource { intrinsics, canonical_90 };

struct FovSpec {
  double radius_px = 0;
  double r_deg = kPerifovealRadiusDeg;
  double hfov_deg = kCanonicalHfovDeg;
  FovSource source = FovSource::canonical_90;
};

inline double hfov_from_intrinsics(double fx, double width) {
  if (!(fx > 0) || !(width > 0)) throw UsageError("hfov: fx and width must be positive");
  return 2.0 * std::atan(width / (2.0 * fx)) * 180.0 / std::numbers::pi;
}

/// Pixels per degree across the frame width, times the angular radius.
inline double fov_radius_px(double width, double hfov_deg, double r_deg) {
  if (!(width > 0) || !(hfov_deg > 0) || !(r_deg > 0)) throw UsageError("fov radius: arguments must be positive");
  return r_deg * (width / hfov_deg);
}

/// Falls back to a 90 degree HFOV when intrinsics are unavailable.
inline FovSpec make_fov_spec(int width, const std::optional<CameraIntrinsics>& intrinsics,
                             double r_deg = kPerifovealRadiusDeg) {
  FovSpec spec;
  spec.r_deg = r_deg;
  if (intrinsics) {
    spec.hfov_deg = hfov_from_intrinsics(intrinsics->fx, intrinsics->width);
    spec.source = FovSource::intrinsics;
  }
  spec.radius_px = fov_radius_px(width, spec.hfov_deg, r_deg);
  return spec;
}

struct PixelPoint {
  double x = 0, y = 0;
};

namespace detail {
inline void require_inside(const Image& frame, PixelPoint c, const char* what) {
  if (!(c.x >= 0 && c.y >= 0 && c.x < frame.width() && c.y < frame.height()))
    throw DataError(std::string(what) + ": center outside the frame");
}

inline void fill_disk(Image& img, double cx, double cy, double r, Rgb color) {
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - r)));
  const int x1 = std::min(img.width() - 1, static_cast<int>(std::ceil(cx + r)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - r)));
  const int y1 = std::min(img.height() - 1, static_cast<int>(std::ceil(cy + r)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if (std::hypot(x - cx, y - cy) <= r) img.set(x, y, color);
}
}  // namespace detail

/// Dot radius for the oracle patch: 1% of the patch width, at least 3 px.
inline double center_dot_radius(int patch_width) { return std::max(3.0, 0.01 * patch_width); }

/// Square crop circumscribing the FOV circle, clamped at the frame border.
/// Pixels farther than `radius` from the center are blanked.
inline Image crop_fov_patch(const Image& frame, PixelPoint center, double radius, bool mark_center) {
  detail::require_inside(frame, center, "crop_fov_patch");
  if (!(radius > 0)) throw UsageError("crop_fov_patch: radius must be positive");
  const int side = static_cast<int>(std::ceil(2.0 * radius));
  const int x0 = static_cast<int>(std::floor(center.x - radius));
  const int y0 = static_cast<int>(std::floor(center.y - radius));
  const int cx0 = std::max(0, x0), cy0 = std::max(0, y0);
  const int cx1 = std::min(frame.width(), x0 + side), cy1 = std::min(frame.height(), y0 + side);
  Image patch(cx1 - cx0, cy1 - cy0, kBlack);
  for (int y = cy0; y < cy1; ++y)
    for (int x = cx0; x < cx1; ++x)
      if (std::hypot(x - center.x, y - center.y) <= radius) patch.set(x - cx0, y - cy0, frame.at(x, y));
  if (mark_center)
    detail::fill_disk(patch, std::round(center.x) - cx0, std::round(center.y) - cy0, center_dot_radius(side), kRed);
  return patch;
}

/// Every pixel within `radius` of the center set to black; the rest untouched.
inline Image mask_fov(const Image& frame, PixelPoint center, double radius) {
  detail::require_inside(frame, center, "mask_fov");
  Image out = frame;
  detail::fill_disk(out, center.x, center.y, radius, kBlack);
  return out;
}

/// Evaluation overlay: red FOV circle outline and a filled green gaze dot.
inline Image overlay_eval_prompt(const Image& frame, PixelPoint gaze, double radius) {
  detail::require_inside(frame, gaze, "overlay_eval_prompt");
  Image out = frame;
  const double half = kEvalCircleStroke / 2.0;
  const double reach = radius + half;
  const int x0 = std::max(0, static_cast<int>(std::floor(gaze.x - reach)));
  const int x1 = std::min(out.width() - 1, static_cast<int>(std::ceil(gaze.x + reach)));
  const int y0 = std::max(0, static_cast<int>(std::floor(gaze.y - reach)));
  const int y1 = std::min(out.height() - 1, static_cast<int>(std::ceil(gaze.y + reach)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if (std::abs(std::hypot(x - gaze.x, y - gaze.y) - radius) <= half) out.set(x, y, kRed);
  detail::fill_disk(out, gaze.x, gaze.y, kEvalDotRadius, kGreen);
  return out;
}

}  // namespace streamgaze
