#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "streamgaze/error.hpp"
#include "streamgaze/io.hpp"

// Gaze ingestion: nearest-neighbour alignment of gaze/pose streams to video
// frames and projection of 3D gaze rays onto the image plane.
namespace streamgaze {

struct CameraIntrinsics {
  double fx = 0, fy = 0;
  double cx = 0, cy = 0;
  int width = 0, height = 0;

  void validate() const {
    if (!(fx > 0) || !(fy > 0)) throw DataError("intrinsics: focal lengths must be positive");
    if (width <= 0 || height <= 0) throw DataError("intrinsics: frame size must be positive");
    if (cx < 0 || cx > width || cy < 0 || cy > height)
      throw DataError("intrinsics: principal point outside the frame");
  }
};

struct GazeRay {
  double timestamp = 0;
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();
  bool valid = true;
};

struct CameraPose {
  double timestamp = 0;
  Eigen::Matrix4d world_from_camera = Eigen::Matrix4d::Identity();

  void validate() const {
    const Eigen::Matrix3d r = world_from_camera.topLeftCorner<3, 3>();
    if ((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6)
      throw DataError("pose: rotation block is not orthonormal");
    if (world_from_camera.row(3) != Eigen::RowVector4d(0, 0, 0, 1)) throw DataError("pose: last row must be (0,0,0,1)");
  }

  /// Rigid inverse: camera_from_world.
  Eigen::Matrix4d inverse() const {
    Eigen::Matrix4d inv = Eigen::Matrix4d::Identity();
    const Eigen::Matrix3d rt = world_from_camera.topLeftCorner<3, 3>().transpose();
    inv.topLeftCorner<3, 3>() = rt;
    inv.topRightCorner<3, 1>() = -rt * world_from_camera.topRightCorner<3, 1>();
    return inv;
  }
};

struct GazeSample {
  int frame_index = 0;
  double timestamp = 0;
  double x = std::numeric_limits<double>::quiet_NaN();
  double y = std::numeric_limits<double>::quiet_NaN();
  bool valid = false;
  bool in_frame = false;
};

enum class GazeSource { projected, provided_2d };

inline const char* to_string(GazeSource s) { return s == GazeSource::projected ? "projected" : "provided-2d"; }

struct GazeTrajectory {
  std::vector<GazeSample> samples;
  GazeSource source = GazeSource::provided_2d;
  int width = 0;
  int height = 0;

  void validate() const {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      if (s.frame_index != static_cast<int>(i)) throw DataError("trajectory: one sample per frame index required");
      if (i > 0 && !(s.timestamp > samples[i - 1].timestamp))
        throw DataError("trajectory: timestamps must be strictly increasing");
      if (s.in_frame && !(s.x >= 0 && s.x < width && s.y >= 0 && s.y < height))
        throw DataError("trajectory: in_frame sample outside the image");
    }
  }

  double duration() const { return samples.empty() ? 0.0 : samples.back().timestamp; }
};

/// Image-plane gaze as shipped by datasets that already provide 2D coordinates.
struct PixelGaze {
  double timestamp = 0;
  double x = 0, y = 0;
  bool valid = true;
};

namespace detail {
inline void require_sorted(std::span<const double> v, const char* what) {
  if (v.empty()) throw AlignmentError(std::string("align: empty ") + what + " list");
  if (!std::is_sorted(v.begin(), v.end())) throw AlignmentError(std::string("align: ") + what + " not sorted");
}
}  // namespace detail

/// For each frame, the index of the signal sample with the closest timestamp.
/// Ties go to the earlier signal index.
inline std::vector<std::size_t> align_nearest(std::span<const double> signal_timestamps,
                                              std::span<const double> frame_timestamps) {
  detail::require_sorted(signal_timestamps, "signal");
  detail::require_sorted(frame_timestamps, "frame");
  std::vector<std::size_t> out;
  out.reserve(frame_timestamps.size());
  const auto first = signal_timestamps.begin();
  for (double t : frame_timestamps) {
    auto next = std::lower_bound(first, signal_timestamps.end(), t);
    if (next == first) {
      out.push_back(0);
      continue;
    }
    auto prev = std::lower_bound(first, next, *(next - 1));  // earliest index holding that value
    if (next == signal_timestamps.end() || t - *prev <= *next - t)
      out.push_back(static_cast<std::size_t>(prev - first));
    else
      out.push_back(static_cast<std::size_t>(next - first));
  }
  return out;
}

/// Virtual fixation point d_eye metres along the normalised gaze direction.
inline Eigen::Vector3d gaze_point_3d(const GazeRay& ray, double d_eye) {
  const double norm = ray.direction.norm();
  if (!(norm > 0) || !std::isfinite(norm)) throw DegenerateRayError("gaze ray has zero-length direction");
  if (!(d_eye > 0)) throw DegenerateRayError("d_eye must be positive");
  return ray.origin + d_eye * (ray.direction / norm);
}

struct Projection {
  double x = 0, y = 0;
  bool in_frame = false;
};

inline Projection project_pinhole(const Eigen::Vector3d& cam_point, const CameraIntrinsics& k) {
  const double z = cam_point.z();
  if (!(z > 0)) throw BehindCameraError("point is behind the camera");
  Projection p;
  p.x = cam_point.x() / z * k.fx + k.cx;
  p.y = cam_point.y() / z * k.fy + k.cy;
  p.in_frame = p.x >= 0 && p.x < k.width && p.y >= 0 && p.y < k.height;
  return p;
}

/// Inverse pinhole: the camera-frame point at depth z that lands on pixel (u, v).
inline Eigen::Vector3d unproject_pinhole(double u, double v, double z, const CameraIntrinsics& k) {
  return {(u - k.cx) / k.fx * z, (v - k.cy) / k.fy * z, z};
}

/// One sample per frame. Transform chain: axis_transform * inverse(world_from_camera) * [p_world; 1].
inline GazeTrajectory build_trajectory(std::span<const GazeRay> rays, std::span<const CameraPose> poses,
                                       const CameraIntrinsics& intrinsics,
                                       std::span<const double> frame_timestamps, double d_eye = 1.0,
                                       const Eigen::Matrix4d& axis_transform = Eigen::Matrix4d::Identity()) {
  intrinsics.validate();
  if (poses.empty()) throw IngestionError("no camera poses for video");
  if (rays.empty()) throw IngestionError("no gaze samples for video");
  for (const auto& p : poses) p.validate();

  std::vector<double> ray_ts, pose_ts;
  for (const auto& r : rays) ray_ts.push_back(r.timestamp);
  for (const auto& p : poses) pose_ts.push_back(p.timestamp);
  const auto ray_idx = align_nearest(ray_ts, frame_timestamps);
  const auto pose_idx = align_nearest(pose_ts, frame_timestamps);

  GazeTrajectory traj;
  traj.source = GazeSource::projected;
  traj.width = intrinsics.width;
  traj.height = intrinsics.height;
  traj.samples.reserve(frame_timestamps.size());
  for (std::size_t f = 0; f < frame_timestamps.size(); ++f) {
    GazeSample s;
    s.frame_index = static_cast<int>(f);
    s.timestamp = frame_timestamps[f];
    const GazeRay& ray = rays[ray_idx[f]];
    if (ray.valid && ray.direction.norm() > 0) {
      Eigen::Vector4d world;
      world << gaze_point_3d(ray, d_eye), 1.0;
      const Eigen::Vector4d cam = axis_transform * poses[pose_idx[f]].inverse() * world;
      if (cam.z() > 0) {
        auto p = project_pinhole(cam.head<3>(), intrinsics);
        s.x = p.x;
        s.y = p.y;
        s.in_frame = p.in_frame;
        s.valid = true;
      }
    }
    traj.samples.push_back(s);
  }
  traj.validate();
  return traj;
}

/// Datasets that ship image-plane gaze are used as given, aligned to frames.
inline GazeTrajectory passthrough_2d(std::span<const PixelGaze> gaze, std::span<const double> frame_timestamps,
                                     int width, int height) {
  if (gaze.empty()) throw IngestionError("no gaze samples for video");
  std::vector<double> ts;
  for (const auto& g : gaze) ts.push_back(g.timestamp);
  const auto idx = align_nearest(ts, frame_timestamps);
  GazeTrajectory traj;
  traj.source = GazeSource::provided_2d;
  traj.width = width;
  traj.height = height;
  for (std::size_t f = 0; f < frame_timestamps.size(); ++f) {
    const PixelGaze& g = gaze[idx[f]];
    GazeSample s;
    s.frame_index = static_cast<int>(f);
    s.timestamp = frame_timestamps[f];
    if (g.valid && std::isfinite(g.x) && std::isfinite(g.y)) {
      s.x = g.x;
      s.y = g.y;
      s.valid = true;
      s.in_frame = g.x >= 0 && g.x < width && g.y >= 0 && g.y < height;
    }
    traj.samples.push_back(s);
  }
  traj.validate();
  return traj;
}

// ---- file formats ----------------------------------------------------------

/// Gaze table: timestamp_s + either (x_px,y_px) or (origin_x..z, direction_x..z), optional valid.
struct GazeFile {
  std::vector<GazeRay> rays;
  std::vector<PixelGaze> pixels;
  bool is_3d() const { return !rays.empty(); }
};

inline GazeFile read_gaze_csv(const std::filesystem::path& path) {
  auto t = io::read_csv(path);
  const std::string origin = path.string();
  const int c_ts = t.require("timestamp_s", origin);
  const int c_valid = t.column("valid");
  GazeFile out;
  if (t.has("x_px")) {
    const int cx = t.require("x_px", origin), cy = t.require("y_px", origin);
    for (const auto& row : t.rows) {
      PixelGaze g;
      g.timestamp = io::to_double(row[c_ts], origin);
      g.valid = c_valid < 0 || io::to_flag(row[c_valid], origin);
      g.x = g.valid ? io::to_double(row[cx], origin) : 0.0;
      g.y = g.valid ? io::to_double(row[cy], origin) : 0.0;
      out.pixels.push_back(g);
    }
  } else {
    const char* names[] = {"origin_x", "origin_y", "origin_z", "direction_x", "direction_y", "direction_z"};
    int cols[6];
    for (int i = 0; i < 6; ++i) cols[i] = t.require(names[i], origin);
    for (const auto& row : t.rows) {
      GazeRay r;
      r.timestamp = io::to_double(row[c_ts], origin);
      r.valid = c_valid < 0 || io::to_flag(row[c_valid], origin);
      for (int i = 0; i < 3; ++i) r.origin[i] = io::to_double(row[cols[i]], origin);
      for (int i = 0; i < 3; ++i) r.direction[i] = io::to_double(row[cols[3 + i]], origin);
      out.rays.push_back(r);
    }
  }
  if (out.rays.empty() && out.pixels.empty()) throw IngestionError(origin + ": no gaze rows");
  return out;
}

/// Pose table: timestamp_s, m00..m33 (row-major world_from_camera).
inline std::vector<CameraPose> read_poses_csv(const std::filesystem::path& path) {
  auto t = io::read_csv(path);
  const std::string origin = path.string();
  const int c_ts = t.require("timestamp_s", origin);
  int cols[16];
  for (int i = 0; i < 16; ++i) cols[i] = t.require("m" + std::to_string(i / 4) + std::to_string(i % 4), origin);
  std::vector<CameraPose> poses;
  for (const auto& row : t.rows) {
    CameraPose p;
    p.timestamp = io::to_double(row[c_ts], origin);
    for (int i = 0; i < 16; ++i) p.world_from_camera(i / 4, i % 4) = io::to_double(row[cols[i]], origin);
    poses.push_back(p);
  }
  return poses;
}

inline CameraIntrinsics intrinsics_from_json(const io::json& j) {
  CameraIntrinsics k;
  try {
    k.fx = j.at("fx").get<double>();
    k.fy = j.at("fy").get<double>();
    k.cx = j.at("cx").get<double>();
    k.cy = j.at("cy").get<double>();
    k.width = j.at("width").get<int>();
    k.height = j.at("height").get<int>();
  } catch (const io::json::exception& e) {
    throw DataError(std::string("intrinsics: ") + e.what());
  }
  k.validate();
  return k;
}

inline io::json to_json(const CameraIntrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

inline io::ordered_json to_json(const GazeSample& s) {
  io::ordered_json j;
  j["frame_index"] = s.frame_index;
  j["timestamp"] = s.timestamp;
  j["x"] = s.valid ? io::ordered_json(s.x) : io::ordered_json(nullptr);
  j["y"] = s.valid ? io::ordered_json(s.y) : io::ordered_json(nullptr);
  j["valid"] = s.valid;
  j["in_frame"] = s.in_frame;
  return j;
}

/// Line-record trajectory: a header record followed by one record per frame.
inline void write_trajectory(const std::filesystem::path& path, const GazeTrajectory& traj) {
  std::vector<io::ordered_json> lines;
  io::ordered_json head;
  head["source"] = to_string(traj.source);
  head["width"] = traj.width;
  head["height"] = traj.height;
  lines.push_back(head);
  for (const auto& s : traj.samples) lines.push_back(to_json(s));
  io::write_jsonl(path, lines);
}

inline GazeTrajectory read_trajectory(const std::filesystem::path& path) {
  auto lines = io::read_jsonl(path);
  if (lines.empty()) throw DataError(path.string() + ": empty trajectory");
  GazeTrajectory traj;
  const auto& head = lines.front();
  traj.source = head.at("source").get<std::string>() == "projected" ? GazeSource::projected : GazeSource::provided_2d;
  traj.width = head.at("width").get<int>();
  traj.height = head.at("height").get<int>();
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& j = lines[i];
    GazeSample s;
    s.frame_index = j.at("frame_index").get<int>();
    s.timestamp = j.at("timestamp").get<double>();
    s.valid = j.at("valid").get<bool>();
    s.in_frame = j.at("in_frame").get<bool>();
    if (s.valid) {
      s.x = j.at("x").get<double>();
      s.y = j.at("y").get<double>();
    }
    traj.samples.push_back(s);
  }
  traj.validate();
  return traj;
}

}  // namespace streamgaze
