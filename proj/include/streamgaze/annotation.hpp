#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <vector>

#include "streamgaze/error.hpp"
#include "streamgaze/io.hpp"
#include "streamgaze/scanpath.hpp"

namespace streamgaze {

enum class Decision { include, exclude };

inline const char* to_string(Decision d) { return d == Decision::include ? "include" : "exclude"; }

inline Decision decision_from_string(const std::string& s) {
  if (s == "include") return Decision::include;
  if (s == "exclude") return Decision::exclude;
  throw ValidationError("decision must be 'include' or 'exclude', got '" + s + "'");
}

struct VerificationRecord {
  std::string annotator_id;
  std::string video_id;
  int fixation_index = 0;
  std::string object_identity;
  Decision decision = Decision::include;
  std::optional<std::string> edited_identity;
  std::optional<std::string> edited_caption;
  std::string recorded_at;

  bool edited() const { return edited_identity.has_value() || edited_caption.has_value(); }
  friend bool operator==(const VerificationRecord&, const VerificationRecord&) = default;
};

inline io::ordered_json to_json(const VerificationRecord& r) {
  io::ordered_json j;
  j["annotator_id"] = r.annotator_id;
  j["video_id"] = r.video_id;
  j["fixation_index"] = r.fixation_index;
  j["object_identity"] = r.object_identity;
  j["decision"] = to_string(r.decision);
  j["edited_identity"] = r.edited_identity ? io::ordered_json(*r.edited_identity) : io::ordered_json(nullptr);
  j["edited_caption"] = r.edited_caption ? io::ordered_json(*r.edited_caption) : io::ordered_json(nullptr);
  j["recorded_at"] = r.recorded_at;
  return j;
}

inline VerificationRecord verification_from_json(const io::json& j) {
  VerificationRecord r;
  try {
    r.annotator_id = j.at("annotator_id").get<std::string>();
    r.video_id = j.at("video_id").get<std::string>();
    r.fixation_index = j.at("fixation_index").get<int>();
    r.object_identity = j.at("object_identity").get<std::string>();
    r.decision = decision_from_string(j.at("decision").get<std::string>());
    if (j.contains("edited_identity") && !j["edited_identity"].is_null())
      r.edited_identity = j["edited_identity"].get<std::string>();
    if (j.contains("edited_caption") && !j["edited_caption"].is_null())
      r.edited_caption = j["edited_caption"].get<std::string>();
    r.recorded_at = j.value("recorded_at", std::string{});
  } catch (const io::json::exception& e) {
    throw ValidationError(std::string("verification record: ") + e.what());
  }
  if (r.annotator_id.empty()) throw ValidationError("verification record: empty annotator_id");
  if (r.edited_identity && text::trim(*r.edited_identity).empty())
    throw ValidationError("verification record: empty edited_identity");
  return r;
}

using RecordKey = std::tuple<std::string, std::string, int, std::string>;  // annotator, video, fixation, object
using ObjectKey = std::tuple<std::string, int, std::string>;               // video, fixation, object

inline RecordKey record_key(const VerificationRecord& r) {
  return {r.annotator_id, r.video_id, r.fixation_index, r.object_identity};
}
inline ObjectKey object_key(const VerificationRecord& r) { return {r.video_id, r.fixation_index, r.object_identity}; }

/// Last write wins per (annotator, video, fixation, object); result ordered by key.
inline std::vector<VerificationRecord> replay(const std::vector<VerificationRecord>& log) {
  std::map<RecordKey, VerificationRecord> live;
  for (const auto& r : log) live.insert_or_assign(record_key(r), r);
  std::vector<VerificationRecord> out;
  for (auto& [_, r] : live) out.push_back(std::move(r));
  return out;
}

inline std::string utc_now_iso() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline const ScanpathEntry* find_entry(const Scanpath& s, int fixation_index) {
  for (const auto& e : s.entries)
    if (e.fixation.index == fixation_index) return &e;
  return nullptr;
}

/// Include iff strictly more include than exclude votes.
inline bool majority_include(int includes, int excludes) { return includes > excludes; }

// ---- agreement -----------------------------------------------------------------------

/// Fleiss' kappa over an item x category count matrix; every row must sum to
/// the same n >= 2.
inline double fleiss_kappa(const std::vector<std::vector<int>>& counts) {
  if (counts.empty()) throw ValidationError("fleiss kappa: no items");
  const std::size_t k = counts.front().size();
  if (k < 1) throw ValidationError("fleiss kappa: no categories");
  long long n = -1;
  for (const auto& row : counts) {
    if (row.size() != k) throw ValidationError("fleiss kappa: ragged category counts");
    long long sum = 0;
    for (int c : row) {
      if (c < 0) throw ValidationError("fleiss kappa: negative count");
      sum += c;
    }
    if (n < 0) n = sum;
    if (sum != n) throw ValidationError("fleiss kappa: items rated by different numbers of annotators");
  }
  if (n < 2) throw ValidationError("fleiss kappa: at least 2 ratings per item required");
  const auto N = static_cast<double>(counts.size());
  const auto nn = static_cast<double>(n);
  std::vector<double> p(k, 0.0);
  double p_bar = 0;
  for (const auto& row : counts) {
    double agree = 0;
    for (std::size_t j = 0; j < k; ++j) {
      agree += static_cast<double>(row[j]) * static_cast<double>(row[j] - 1);
      p[j] += row[j];
    }
    p_bar += agree / (nn * (nn - 1));
  }
  p_bar /= N;
  double p_e = 0;
  for (double pj : p) {
    const double share = pj / (N * nn);
    p_e += share * share;
  }
  if (std::abs(1.0 - p_e) < 1e-12) return std::abs(1.0 - p_bar) < 1e-12 ? 1.0 : 0.0;
  return (p_bar - p_e) / (1.0 - p_e);
}

struct AgreementStats {
  double inclusion_ratio = 0;  // percent of reviewed objects kept by majority
  double modified_ratio = 0;   // percent of reviewed gazed objects with an edit
  std::optional<double> fleiss_kappa;
  std::size_t reviewed_objects = 0, gazed_objects = 0;
};

struct ReferenceAgreement {
  const char* source;
  double inclusion_ratio, modified_ratio;
};

inline constexpr std::array<ReferenceAgreement, 3> kReferenceAgreement{{
    {"EGTEA Gaze+", 81.77, 6.89},
    {"HoloAssist", 67.88, 9.99},
    {"EgoExoLearn", 84.31, 7.24},
}};
inline constexpr double kReferenceKappa = 0.60;

/// Per-object agreement over live records. Kappa uses the objects rated by the
/// most common annotator count (>= 2).
inline AgreementStats agreement_stats(const std::vector<VerificationRecord>& live,
                                      const std::map<std::string, Scanpath>& scanpaths) {
  struct Votes {
    int include = 0, exclude = 0;
    bool edited = false, gazed = false;
  };
  std::map<ObjectKey, Votes> votes;
  for (const auto& r : live) {
    auto& v = votes[object_key(r)];
    (r.decision == Decision::include ? v.include : v.exclude)++;
    v.edited |= r.edited();
    auto sp = scanpaths.find(r.video_id);
    if (sp == scanpaths.end()) continue;
    if (const auto* e = find_entry(sp->second, r.fixation_index); e && !e->fov_objects.empty())
      v.gazed = e->gazed().identity == r.object_identity;
  }
  AgreementStats st;
  std::size_t kept = 0, modified = 0;
  std::map<int, std::vector<std::vector<int>>> by_raters;
  for (const auto& [_, v] : votes) {
    ++st.reviewed_objects;
    kept += majority_include(v.include, v.exclude);
    if (v.gazed) {
      ++st.gazed_objects;
      modified += v.edited;
    }
    by_raters[v.include + v.exclude].push_back({v.include, v.exclude});
  }
  if (st.reviewed_objects) st.inclusion_ratio = 100.0 * static_cast<double>(kept) / static_cast<double>(st.reviewed_objects);
  if (st.gazed_objects) st.modified_ratio = 100.0 * static_cast<double>(modified) / static_cast<double>(st.gazed_objects);
  const std::vector<std::vector<int>>* best = nullptr;
  int best_n = 0;
  for (const auto& [n, rows] : by_raters)
    if (n >= 2 && (!best || rows.size() > best->size())) best = &rows, best_n = n;
  (void)best_n;
  if (best) st.fleiss_kappa = fleiss_kappa(*best);
  return st;
}

inline io::ordered_json to_json(const AgreementStats& s) {
  io::ordered_json j;
  j["inclusion_ratio"] = s.inclusion_ratio;
  j["modified_ratio"] = s.modified_ratio;
  j["fleiss_kappa"] = s.fleiss_kappa ? io::ordered_json(*s.fleiss_kappa) : io::ordered_json(nullptr);
  j["reviewed_objects"] = s.reviewed_objects;
  j["gazed_objects"] = s.gazed_objects;
  return j;
}

/// Per-source table plus the published reference rows for comparison.
inline io::ordered_json agreement_report(const std::vector<VerificationRecord>& live,
                                         const std::map<std::string, Scanpath>& scanpaths,
                                         const std::map<std::string, std::string>& video_source) {
  std::map<std::string, std::vector<VerificationRecord>> grouped;
  for (const auto& r : live) {
    auto it = video_source.find(r.video_id);
    grouped[it == video_source.end() ? "default" : it->second].push_back(r);
  }
  io::ordered_json j;
  j["sources"] = io::ordered_json::object();
  for (const auto& [source, recs] : grouped) j["sources"][source] = to_json(agreement_stats(recs, scanpaths));
  j["overall"] = to_json(agreement_stats(live, scanpaths));
  io::ordered_json ref = io::ordered_json::object();
  for (const auto& r : kReferenceAgreement)
    ref[r.source] = {{"inclusion_ratio", r.inclusion_ratio}, {"modified_ratio", r.modified_ratio}};
  j["reference"] = {{"sources", ref}, {"fleiss_kappa", kReferenceKappa}};
  return j;
}

// ---- applying decisions -------------------------------------------------------------

/// Removes majority-excluded objects, applies the latest gazed-object edit,
/// drops entries whose gazed object is excluded, and marks the scanpath verified.
/// Objects nobody reviewed are kept. Idempotent.
inline Scanpath apply_verification(Scanpath s, const std::vector<VerificationRecord>& records) {
  std::map<ObjectKey, std::pair<int, int>> votes;
  std::map<ObjectKey, const VerificationRecord*> edits;
  for (const auto& r : replay(records)) {
    if (r.video_id != s.video_id) continue;
    auto& v = votes[object_key(r)];
    (r.decision == Decision::include ? v.first : v.second)++;
  }
  for (const auto& r : records)  // log order: later edits win
    if (r.video_id == s.video_id && r.edited()) edits[object_key(r)] = &r;
  auto excluded = [&](int fix, const std::string& id) {
    auto it = votes.find({s.video_id, fix, id});
    return it != votes.end() && !majority_include(it->second.first, it->second.second);
  };
  std::vector<ScanpathEntry> kept;
  for (auto& e : s.entries) {
    const int fix = e.fixation.index;
    if (e.fov_objects.empty() || excluded(fix, e.gazed().identity)) continue;
    if (auto it = edits.find({s.video_id, fix, e.gazed().identity}); it != edits.end()) {
      if (it->second->edited_identity) e.fov_objects.front().identity = text::trim(*it->second->edited_identity);
      if (it->second->edited_caption) e.fov_objects.front().caption = *it->second->edited_caption;
    }
    std::vector<ObjectRecord> fov{e.fov_objects.front()};
    for (std::size_t i = 1; i < e.fov_objects.size(); ++i)
      if (!excluded(fix, e.fov_objects[i].identity)) fov.push_back(e.fov_objects[i]);
    e.fov_objects = std::move(fov);
    std::erase_if(e.out_objects, [&](const ObjectRecord& o) { return excluded(fix, o.identity); });
    normalize_entry(e);
    kept.push_back(std::move(e));
  }
  s.entries = std::move(kept);
  s.verified = true;
  return s;
}

// ---- store --------------------------------------------------------------------------

/// Append-only decision log (decisions.jsonl) plus a derived snapshot of the
/// live view (snapshot.json). Many readers, serialized writers.
class AnnotationStore {
 public:
  using Clock = std::function<std::string()>;

  AnnotationStore(std::filesystem::path dir, std::map<std::string, Scanpath> scanpaths, Clock clock = utc_now_iso)
      : dir_(std::move(dir)), scanpaths_(std::move(scanpaths)), clock_(std::move(clock)) {
    std::filesystem::create_directories(dir_);
    if (std::filesystem::exists(log_path()))
      for (const auto& j : io::read_jsonl(log_path())) log_.push_back(verification_from_json(j));
  }

  std::filesystem::path log_path() const { return dir_ / "decisions.jsonl"; }
  std::filesystem::path snapshot_path() const { return dir_ / "snapshot.json"; }

  /// Validates and stores; returns the record's position in the log.
  std::size_t submit(VerificationRecord r) {
    validate(r);
    std::unique_lock lock(mu_);
    if (r.recorded_at.empty()) r.recorded_at = clock_();
    {
      std::ofstream out(log_path(), std::ios::app | std::ios::binary);
      if (!out) throw DataError("cannot append to " + log_path().string());
      out << to_json(r).dump() << "\n";
      if (!out.flush()) throw DataError("write failed: " + log_path().string());
    }
    log_.push_back(std::move(r));
    write_snapshot_locked();
    return log_.size() - 1;
  }

  std::vector<VerificationRecord> live() const {
    std::shared_lock lock(mu_);
    return replay(log_);
  }

  std::vector<VerificationRecord> log() const {
    std::shared_lock lock(mu_);
    return log_;
  }

  std::size_t log_size() const {
    std::shared_lock lock(mu_);
    return log_.size();
  }

  const std::map<std::string, Scanpath>& scanpaths() const noexcept { return scanpaths_; }

  void validate(const VerificationRecord& r) const {
    auto sp = scanpaths_.find(r.video_id);
    if (sp == scanpaths_.end()) throw NotFoundError("unknown video '" + r.video_id + "'");
    const auto* e = find_entry(sp->second, r.fixation_index);
    if (!e) throw NotFoundError("video '" + r.video_id + "' has no fixation " + std::to_string(r.fixation_index));
    if (!e->in_fov(r.object_identity) && !e->in_out(r.object_identity))
      throw NotFoundError("fixation " + std::to_string(r.fixation_index) + " has no object '" + r.object_identity + "'");
    if (r.edited() && e->gazed().identity != r.object_identity)
      throw ValidationError("only the gazed object may be edited");
  }

 private:
  void write_snapshot_locked() const {
    io::ordered_json j = io::ordered_json::array();
    for (const auto& r : replay(log_)) j.push_back(to_json(r));
    io::write_json(snapshot_path(), j);
  }

  std::filesystem::path dir_;
  std::map<std::string, Scanpath> scanpaths_;
  Clock clock_;
  mutable std::shared_mutex mu_;
  std::vector<VerificationRecord> log_;
};

}  // namespace streamgaze
