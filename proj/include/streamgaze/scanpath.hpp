#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "streamgaze/error.hpp"
#include "streamgaze/fixation.hpp"
#include "streamgaze/io.hpp"
#include "streamgaze/oracle.hpp"

namespace streamgaze {

using IdentitySet = std::set<std::string>;

struct ScanpathEntry {
  Fixation fixation;
  std::vector<ObjectRecord> fov_objects;  // gazed object first
  std::vector<ObjectRecord> out_objects;

  const ObjectRecord& gazed() const { return fov_objects.front(); }
  IdentitySet fov_ids() const {
    IdentitySet s;
    for (const auto& o : fov_objects) s.insert(o.identity);
    return s;
  }
  IdentitySet out_ids() const {
    IdentitySet s;
    for (const auto& o : out_objects) s.insert(o.identity);
    return s;
  }
  bool in_fov(const std::string& id) const {
    for (const auto& o : fov_objects)
      if (o.identity == id) return true;
    return false;
  }
  bool in_out(const std::string& id) const {
    for (const auto& o : out_objects)
      if (o.identity == id) return true;
    return false;
  }
  friend bool operator==(const ScanpathEntry&, const ScanpathEntry&) = default;
};

struct Scanpath {
  std::string video_id;
  double duration = 0;  // seconds; end of the video timeline
  std::vector<ScanpathEntry> entries;
  bool verified = false;

  std::size_t size() const noexcept { return entries.size(); }
  friend bool operator==(const Scanpath&, const Scanpath&) = default;
};

/// Oracle output for one fixation.
struct ExtractionPair {
  FovExtraction fov;
  std::vector<ObjectRecord> out;
};

namespace detail {
inline void dedup_keep_first(std::vector<ObjectRecord>& objs) {
  IdentitySet seen;
  std::vector<ObjectRecord> kept;
  for (auto& o : objs)
    if (seen.insert(o.identity).second) kept.push_back(std::move(o));
  objs = std::move(kept);
}
}  // namespace detail

/// Enforces the entry invariants: gazed object first, no duplicates within a
/// list, no identity in both lists (the FOV side wins).
inline void normalize_entry(ScanpathEntry& e) {
  detail::dedup_keep_first(e.fov_objects);
  detail::dedup_keep_first(e.out_objects);
  const auto fov = e.fov_ids();
  std::erase_if(e.out_objects, [&](const ObjectRecord& o) { return fov.count(o.identity) > 0; });
  for (std::size_t i = 0; i < e.fov_objects.size(); ++i) {
    e.fov_objects[i].region = i == 0 ? Region::fov_gazed : Region::fov_other;
    e.fov_objects[i].fixation_index = e.fixation.index;
  }
  for (auto& o : e.out_objects) {
    o.region = Region::out_of_fov;
    o.fixation_index = e.fixation.index;
  }
}

/// Zips fixations with their extractions, canonicalizing names through `pool`.
inline Scanpath build_scanpath(std::string video_id, double duration, const std::vector<Fixation>& fixations,
                               const std::vector<ExtractionPair>& extractions, ObjectPool& pool) {
  if (fixations.size() != extractions.size())
    throw DataError("scanpath: " + std::to_string(fixations.size()) + " fixations but " +
                    std::to_string(extractions.size()) + " extractions");
  Scanpath s;
  s.video_id = std::move(video_id);
  s.duration = duration;
  for (std::size_t i = 0; i < fixations.size(); ++i) {
    ScanpathEntry e;
    e.fixation = fixations[i];
    auto add = [&](std::vector<ObjectRecord>& dst, ObjectRecord r) {
      r.identity = pool.canonicalize(r.identity);
      dst.push_back(std::move(r));
    };
    add(e.fov_objects, extractions[i].fov.gaze_object);
    for (const auto& o : extractions[i].fov.other_objects) add(e.fov_objects, o);
    for (const auto& o : extractions[i].out) add(e.out_objects, o);
    normalize_entry(e);
    s.entries.push_back(std::move(e));
  }
  std::stable_sort(s.entries.begin(), s.entries.end(), [](const ScanpathEntry& a, const ScanpathEntry& b) {
    return a.fixation.t_start < b.fixation.t_start;
  });
  return s;
}

inline Scanpath build_scanpath(std::string video_id, double duration, const std::vector<Fixation>& fixations,
                               const std::vector<ExtractionPair>& extractions) {
  ObjectPool pool;
  return build_scanpath(std::move(video_id), duration, fixations, extractions, pool);
}

// ---- set algebra ------------------------------------------------------------------

namespace detail {
inline std::size_t clamp_upto(const Scanpath& s, std::size_t upto) {
  if (s.entries.empty()) return 0;
  return std::min(upto, s.entries.size() - 1);
}
}  // namespace detail

/// Every identity seen (FOV or not) in entries 0..=upto.
inline IdentitySet global_pool(const Scanpath& s, std::size_t upto) {
  IdentitySet out;
  if (s.entries.empty()) return out;
  for (std::size_t i = 0; i <= detail::clamp_upto(s, upto); ++i) {
    for (const auto& o : s.entries[i].fov_objects) out.insert(o.identity);
    for (const auto& o : s.entries[i].out_objects) out.insert(o.identity);
  }
  return out;
}

inline IdentitySet fixated_prefix(const Scanpath& s, std::size_t upto) {
  IdentitySet out;
  if (s.entries.empty()) return out;
  for (std::size_t i = 0; i <= detail::clamp_upto(s, upto); ++i)
    for (const auto& o : s.entries[i].fov_objects) out.insert(o.identity);
  return out;
}

inline IdentitySet fixated_all(const Scanpath& s) {
  return s.entries.empty() ? IdentitySet{} : fixated_prefix(s, s.entries.size() - 1);
}

/// Visible up to `upto` but never inside the FOV up to `upto`.
inline IdentitySet never_fixated(const Scanpath& s, std::size_t upto) {
  IdentitySet out;
  const auto fixated = fixated_prefix(s, upto);
  for (const auto& id : global_pool(s, upto))
    if (!fixated.count(id)) out.insert(id);
  return out;
}

/// Union of every out-of-FOV list.
inline IdentitySet background_pool(const Scanpath& s) {
  IdentitySet out;
  for (const auto& e : s.entries)
    for (const auto& o : e.out_objects) out.insert(o.identity);
  return out;
}

/// First identity, in stored order, of entry i+1's FOV list that is not in entry i's.
inline std::optional<std::string> first_new_object(const Scanpath& s, std::size_t i) {
  if (i + 1 >= s.entries.size()) throw UsageError("first_new_object: index out of range");
  const auto current = s.entries[i].fov_ids();
  for (const auto& o : s.entries[i + 1].fov_objects)
    if (!current.count(o.identity)) return o.identity;
  return std::nullopt;
}

// ---- serialization ----------------------------------------------------------------

inline io::ordered_json to_json(const Scanpath& s) {
  io::ordered_json j;
  j["video_id"] = s.video_id;
  j["duration"] = s.duration;
  j["verified"] = s.verified;
  j["entries"] = io::ordered_json::array();
  for (const auto& e : s.entries) {
    io::ordered_json je;
    je["fixation"] = to_json(e.fixation);
    je["fov_objects"] = io::ordered_json::array();
    for (const auto& o : e.fov_objects) je["fov_objects"].push_back(to_json(o));
    je["out_objects"] = io::ordered_json::array();
    for (const auto& o : e.out_objects) je["out_objects"].push_back(to_json(o));
    j["entries"].push_back(je);
  }
  return j;
}

inline Scanpath scanpath_from_json(const io::json& j) {
  Scanpath s;
  try {
    s.video_id = j.at("video_id").get<std::string>();
    s.duration = j.at("duration").get<double>();
    s.verified = j.at("verified").get<bool>();
    for (const auto& je : j.at("entries")) {
      ScanpathEntry e;
      e.fixation = fixation_from_json(je.at("fixation"));
      for (const auto& o : je.at("fov_objects")) e.fov_objects.push_back(object_from_json(o));
      for (const auto& o : je.at("out_objects")) e.out_objects.push_back(object_from_json(o));
      if (e.fov_objects.empty()) throw SchemaError("scanpath entry without FOV objects");
      s.entries.push_back(std::move(e));
    }
  } catch (const io::json::exception& e) {
    throw SchemaError(std::string("scanpath: ") + e.what());
  }
  return s;
}

inline void write_scanpath(const std::filesystem::path& path, const Scanpath& s) { io::write_json(path, to_json(s)); }
inline Scanpath read_scanpath(const std::filesystem::path& path) { return scanpath_from_json(io::read_json(path)); }

}  // namespace streamgaze
