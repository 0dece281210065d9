#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "streamgaze/digest.hpp"
#include "streamgaze/error.hpp"
#include "streamgaze/fov.hpp"
#include "streamgaze/image.hpp"
#include "streamgaze/io.hpp"
#include "streamgaze/prompts.hpp"
#include "streamgaze/text.hpp"

namespace streamgaze {

enum class Region { fov_gazed, fov_other, out_of_fov };

inline const char* to_string(Region r) {
  switch (r) {
    case Region::fov_gazed: return "fov-gazed";
    case Region::fov_other: return "fov-other";
    case Region::out_of_fov: return "out-of-fov";
  }
  return "?";
}

inline Region region_from_string(const std::string& s) {
  if (s == "fov-gazed") return Region::fov_gazed;
  if (s == "fov-other") return Region::fov_other;
  if (s == "out-of-fov") return Region::out_of_fov;
  throw SchemaError("unknown region '" + s + "'");
}

struct ObjectRecord {
  std::string identity;
  std::string caption;
  Region region = Region::out_of_fov;
  int fixation_index = 0;
  friend bool operator==(const ObjectRecord&, const ObjectRecord&) = default;
};

struct FovExtraction {
  std::string scene_caption;
  ObjectRecord gaze_object;
  std::vector<ObjectRecord> other_objects;
  friend bool operator==(const FovExtraction&, const FovExtraction&) = default;
};

/// Case-insensitive, whitespace-collapsed name equivalence.
inline std::string name_key(std::string_view identity) { return text::lower(text::collapse_whitespace(identity)); }

/// Canonical object names in first-seen order.
class ObjectPool {
 public:
  ObjectPool() = default;
  explicit ObjectPool(const std::vector<std::string>& names) {
    for (const auto& n : names) canonicalize(n);
  }

  /// Existing canonical form for an equivalent name, else the trimmed
  /// lowercase form, inserted.
  std::string canonicalize(std::string_view identity) {
    const std::string key = name_key(identity);
    if (key.empty()) throw ValidationError("empty object identity");
    if (auto it = index_.find(key); it != index_.end()) return names_[it->second];
    index_.emplace(key, names_.size());
    names_.push_back(key);
    return key;
  }

  bool contains(std::string_view identity) const { return index_.count(name_key(identity)) > 0; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t size() const noexcept { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::map<std::string, std::size_t> index_;
};

// ---- prompt construction -----------------------------------------------------

inline std::string render_pool(const ObjectPool& pool) { return text::join(pool.names(), ", "); }

inline std::string build_fov_prompt(std::string_view action_caption, const ObjectPool& pool, PixelPoint gaze) {
  std::string p(prompts::kFovExtraction);
  p = text::replace_all(p, "{action_caption}", action_caption);
  p = text::replace_all(p, "{object_pool}", render_pool(pool));
  const std::string coord = "(" + std::to_string(std::lround(gaze.x)) + ", " + std::to_string(std::lround(gaze.y)) + ")";
  return text::replace_all(p, "(x, y)", coord);
}

inline std::string build_outfov_prompt(std::string_view action_caption, const ObjectPool& pool) {
  std::string p(prompts::kOutFovExtraction);
  p = text::replace_all(p, "{action_caption}", action_caption);
  return text::replace_all(p, "{object_pool}", render_pool(pool));
}

// ---- oracle transport ----------------------------------------------------------

struct OracleRequest {
  std::vector<Image> images;
  std::string prompt;
};

/// A multimodal model behind some transport: interleaved images + text in, text out.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual std::string complete(const OracleRequest& request) = 0;
};

inline std::string image_digest(std::span<const Image> images) {
  Sha256 h;
  for (const auto& img : images) {
    h.update(std::to_string(img.width()) + "x" + std::to_string(img.height()) + ";");
    h.update(img.bytes());
  }
  return h.hex();
}

/// Lookup key of the mock oracle: image digest + prompt digest.
inline std::string request_key(const OracleRequest& r) {
  return image_digest(r.images).substr(0, 32) + "-" + sha256_hex(r.prompt).substr(0, 32);
}

/// Table-driven stand-in for a real endpoint. Strict mode throws on unknown
/// requests; otherwise the fallback text is returned.
class MockOracle : public Oracle {
 public:
  explicit MockOracle(bool strict = true, std::string fallback = {})
      : strict_(strict), fallback_(std::move(fallback)) {}

  void add(const OracleRequest& request, std::string response) { add_key(request_key(request), std::move(response)); }
  void add_key(const std::string& key, std::string response) {
    std::lock_guard lock(mu_);
    table_[key] = std::move(response);
  }

  std::string complete(const OracleRequest& request) override {
    const std::string key = request_key(request);
    std::lock_guard lock(mu_);
    if (auto it = table_.find(key); it != table_.end()) return it->second;
    if (strict_) throw LookupError("mock oracle has no response for " + key);
    return fallback_;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return table_.size();
  }

  /// One <key>.txt file per canned response.
  void load_directory(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw DataError("mock oracle directory missing: " + dir.string());
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.path().extension() != ".txt") continue;
      add_key(entry.path().stem().string(), io::read_text(entry.path()));
    }
  }

  void save_directory(const std::filesystem::path& dir) const {
    std::lock_guard lock(mu_);
    std::filesystem::create_directories(dir);
    for (const auto& [key, value] : table_) io::write_text(dir / (key + ".txt"), value);
  }

 private:
  bool strict_;
  std::string fallback_;
  mutable std::mutex mu_;
  std::map<std::string, std::string> table_;
};

/// Wraps another oracle and records every exchange into a mock table.
class RecordingOracle : public Oracle {
 public:
  RecordingOracle(Oracle& inner, MockOracle& sink) : inner_(inner), sink_(sink) {}
  std::string complete(const OracleRequest& request) override {
    std::string out = inner_.complete(request);
    sink_.add(request, out);
    return out;
  }

 private:
  Oracle& inner_;
  MockOracle& sink_;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double multiplier = 2.0;
  std::size_t max_payload_bytes = 32u << 20;
  std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
  };
};

inline std::size_t payload_bytes(const OracleRequest& r) {
  std::size_t n = r.prompt.size();
  for (const auto& img : r.images) n += img.bytes().size();
  return n;
}

/// Sends images + prompt, retrying transient transport failures with
/// exponential backoff.
inline std::string request_extraction(std::vector<Image> images, std::string prompt, Oracle& oracle,
                                      const RetryPolicy& policy = {}) {
  if (images.empty()) throw InputError("oracle request needs at least one image");
  OracleRequest req{std::move(images), std::move(prompt)};
  if (payload_bytes(req) > policy.max_payload_bytes) throw InputError("oracle payload exceeds the configured limit");
  auto backoff = policy.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      return oracle.complete(req);
    } catch (const TransportError& e) {
      if (!e.transient() || attempt >= policy.attempts)
        throw TransportError("oracle request failed after " + std::to_string(attempt) + " attempt(s): " + e.what(),
                             false);
      policy.sleep(backoff);
      backoff = std::chrono::milliseconds(static_cast<long long>(static_cast<double>(backoff.count()) * policy.multiplier));
    }
  }
}

// ---- response parsing ----------------------------------------------------------

/// First balanced {...} object in free text (string-literal aware).
inline std::string_view first_json_object(std::string_view text) {
  std::size_t start = text.find('{');
  while (start != std::string_view::npos) {
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      char c = text[i];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}' && --depth == 0) return text.substr(start, i - start + 1);
    }
    break;
  }
  std::string_view span = start == std::string_view::npos ? text : text.substr(start);
  throw ParseError("no balanced JSON object in oracle response", std::string(span.substr(0, 120)));
}

inline io::json parse_first_object(std::string_view text) {
  auto span = first_json_object(text);
  try {
    return io::json::parse(span);
  } catch (const io::json::parse_error& e) {
    throw ParseError(std::string("malformed JSON object: ") + e.what(), std::string(span.substr(0, 120)));
  }
}

/// Person identities must describe clothing: "person wearing ...".
inline void check_person_rule(const std::string& identity) {
  const std::string key = name_key(identity);
  const bool person_head = key == "person" || key.rfind("person ", 0) == 0;
  if (person_head && key.rfind("person wearing ", 0) != 0)
    throw ValidationError("identity '" + identity + "' must be \"person wearing [clothing description]\" not just \"person\"");
}

namespace detail {
inline std::string require_string(const io::json& obj, const char* field, const char* where) {
  if (!obj.is_object() || !obj.contains(field)) throw SchemaError(std::string(where) + ": missing field '" + field + "'");
  const auto& v = obj.at(field);
  if (!v.is_string()) throw SchemaError(std::string(where) + ": field '" + field + "' must be a string");
  return v.get<std::string>();
}

inline ObjectRecord parse_object(const io::json& obj, Region region, const char* where) {
  ObjectRecord r;
  r.identity = text::trim(require_string(obj, "object_identity", where));
  r.caption = require_string(obj, "detailed_caption", where);
  r.region = region;
  if (r.identity.empty()) throw ValidationError(std::string(where) + ": empty object_identity");
  check_person_rule(r.identity);
  return r;
}

inline std::vector<ObjectRecord> parse_objects(const io::json& root, Region region) {
  if (!root.contains("other_objects")) throw SchemaError("missing field 'other_objects'");
  const auto& arr = root.at("other_objects");
  if (!arr.is_array()) throw SchemaError("'other_objects' must be an array");
  std::vector<ObjectRecord> out;
  for (const auto& o : arr) out.push_back(parse_object(o, region, "other_objects[]"));
  return out;
}
}  // namespace detail

inline FovExtraction parse_fov_extraction(std::string_view raw) {
  const auto root = parse_first_object(raw);
  FovExtraction e;
  e.scene_caption = detail::require_string(root, "scene_caption", "fov response");
  if (!root.contains("gaze_object")) throw SchemaError("missing field 'gaze_object'");
  e.gaze_object = detail::parse_object(root.at("gaze_object"), Region::fov_gazed, "gaze_object");
  e.other_objects = detail::parse_objects(root, Region::fov_other);
  return e;
}

inline std::vector<ObjectRecord> parse_outfov_extraction(std::string_view raw) {
  return detail::parse_objects(parse_first_object(raw), Region::out_of_fov);
}

enum class ExtractionKind { fov, outfov };

inline std::variant<FovExtraction, std::vector<ObjectRecord>> parse_extraction(std::string_view raw,
                                                                                ExtractionKind expect) {
  if (expect == ExtractionKind::fov) return parse_fov_extraction(raw);
  return parse_outfov_extraction(raw);
}

/// Renders an extraction in the response schema of the FOV prompt.
inline std::string render_fov_extraction(const FovExtraction& e) {
  io::ordered_json j;
  j["scene_caption"] = e.scene_caption;
  j["gaze_object"] = {{"object_identity", e.gaze_object.identity}, {"detailed_caption", e.gaze_object.caption}};
  j["other_objects"] = io::ordered_json::array();
  for (const auto& o : e.other_objects)
    j["other_objects"].push_back({{"object_identity", o.identity}, {"detailed_caption", o.caption}});
  return j.dump(2);
}

inline std::string render_outfov_extraction(const std::vector<ObjectRecord>& objects) {
  io::ordered_json j;
  j["other_objects"] = io::ordered_json::array();
  for (const auto& o : objects)
    j["other_objects"].push_back({{"object_identity", o.identity}, {"detailed_caption", o.caption}});
  return j.dump(2);
}

inline io::ordered_json to_json(const ObjectRecord& r) {
  io::ordered_json j;
  j["identity"] = r.identity;
  j["caption"] = r.caption;
  j["region"] = to_string(r.region);
  j["fixation_index"] = r.fixation_index;
  return j;
}

inline ObjectRecord object_from_json(const io::json& j) {
  ObjectRecord r;
  r.identity = j.at("identity").get<std::string>();
  r.caption = j.at("caption").get<std::string>();
  r.region = region_from_string(j.at("region").get<std::string>());
  r.fixation_index = j.at("fixation_index").get<int>();
  return r;
}

}  // namespace streamgaze
