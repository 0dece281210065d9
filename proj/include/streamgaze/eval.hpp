#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "streamgaze/answer_parsing.hpp"
#include "streamgaze/error.hpp"
#include "streamgaze/fixation.hpp"
#include "streamgaze/fov.hpp"
#include "streamgaze/gaze_ingest.hpp"
#include "streamgaze/image.hpp"
#include "streamgaze/io.hpp"
#include "streamgaze/oracle.hpp"
#include "streamgaze/prompts.hpp"
#include "streamgaze/qa.hpp"
#include "streamgaze/rng.hpp"

namespace streamgaze {

enum class PromptingMode { none, text_gaze, visual_gaze };

inline const char* to_string(PromptingMode m) {
  switch (m) {
    case PromptingMode::none: return "none";
    case PromptingMode::text_gaze: return "text-gaze";
    case PromptingMode::visual_gaze: return "visual-gaze";
  }
  return "?";
}

inline PromptingMode prompting_mode_from_string(const std::string& s) {
  if (s == "none") return PromptingMode::none;
  if (s == "text-gaze") return PromptingMode::text_gaze;
  if (s == "visual-gaze") return PromptingMode::visual_gaze;
  throw UsageError("unknown prompting mode '" + s + "' (none, text-gaze, visual-gaze)");
}

inline constexpr double kPresentWindowSeconds = 60.0;

struct EvalConfig {
  double omega = kPresentWindowSeconds;
  double frame_rate = 1.0;
  int max_frames = 16;
  PromptingMode mode = PromptingMode::none;
  std::string instruction_preamble;
  int jobs = 1;

  void validate() const {
    if (!(omega > 0)) throw UsageError("eval: omega must be positive");
    if (!(frame_rate > 0)) throw UsageError("eval: frame_rate must be positive");
    if (max_frames < 1) throw UsageError("eval: max_frames must be >= 1");
    if (jobs < 1) throw UsageError("eval: jobs must be >= 1");
  }
};

inline io::ordered_json to_json(const EvalConfig& c) {
  return {{"omega", c.omega},         {"frame_rate", c.frame_rate},
          {"max_frames", c.max_frames}, {"prompting_mode", to_string(c.mode)},
          {"instruction_preamble", c.instruction_preamble}};
}

inline EvalConfig eval_config_from_json(const io::json& j, EvalConfig c = {}) {
  c.omega = j.value("omega", c.omega);
  c.frame_rate = j.value("frame_rate", c.frame_rate);
  c.max_frames = j.value("max_frames", c.max_frames);
  if (j.contains("prompting_mode")) c.mode = prompting_mode_from_string(j.at("prompting_mode").get<std::string>());
  c.instruction_preamble = j.value("instruction_preamble", c.instruction_preamble);
  c.jobs = j.value("jobs", c.jobs);
  c.validate();
  return c;
}

/// Frames visible to the model: [start, end], or (start, end] when start_open.
struct ContextWindow {
  double start = 0, end = 0;
  bool start_open = false;

  bool contains(double t) const { return t <= end && (start_open ? t > start : t >= start); }
  friend bool operator==(const ContextWindow&, const ContextWindow&) = default;
};

/// Past: [0, t]. Present: (t - omega, t], clamped to start at 0. Proactive: [0, t].
inline ContextWindow context_window(TemporalScope scope, double t, double omega = kPresentWindowSeconds) {
  if (t < 0) throw UsageError("context window: negative query time");
  if (scope == TemporalScope::present && t - omega > 0) return {t - omega, t, true};
  return {0.0, t, false};
}

/// Timestamps spaced 1/frame_rate back from the window end; when more than
/// max_frames would fit, max_frames evenly spaced ones. Always includes the end.
inline std::vector<double> sample_frames(const ContextWindow& w, double frame_rate, int max_frames) {
  if (!(frame_rate > 0) || max_frames < 1) throw UsageError("sample_frames: bad rate or cap");
  if (!(w.end > w.start)) return {w.end};
  const double span = w.end - w.start;
  const double step = 1.0 / frame_rate;
  auto fit = static_cast<long long>(std::floor(span / step + 1e-9)) + 1;
  if (w.start_open && std::abs(w.end - static_cast<double>(fit - 1) * step - w.start) < 1e-9) --fit;
  std::vector<double> out;
  if (fit <= max_frames) {
    for (long long k = fit - 1; k >= 0; --k) out.push_back(w.end - static_cast<double>(k) * step);
    if (!w.start_open) out.front() = std::max(out.front(), w.start);  // float drift
  } else {
    const double s = span / max_frames;
    for (int k = max_frames - 1; k >= 0; --k) out.push_back(w.end - k * s);
  }
  return out;
}

struct TimedFrame {
  double timestamp = 0;
  Image image;
};

/// What a model adapter sees for one question.
struct AdapterRequest {
  std::string item_id;
  std::string question;
  std::vector<TimedFrame> frames;
  std::string aux;
};

class ModelAdapter {
 public:
  virtual ~ModelAdapter() = default;
  virtual std::string answer(const AdapterRequest& request) = 0;
};

class FrameProvider {
 public:
  virtual ~FrameProvider() = default;
  /// Frames shown at the requested timestamps (latest frame at or before each).
  virtual std::vector<TimedFrame> frames(const std::string& video_id, std::span<const double> timestamps) = 0;
};

/// Text-only evaluation: no images.
class NoFrameProvider : public FrameProvider {
 public:
  std::vector<TimedFrame> frames(const std::string&, std::span<const double>) override { return {}; }
};

class VideoFrameProvider : public FrameProvider {
 public:
  void add(const std::string& video_id, std::shared_ptr<const FrameSource> source) { videos_[video_id] = std::move(source); }

  std::vector<TimedFrame> frames(const std::string& video_id, std::span<const double> timestamps) override {
    auto it = videos_.find(video_id);
    if (it == videos_.end()) throw DataError("no frames for video " + video_id);
    std::vector<TimedFrame> out;
    std::optional<std::size_t> last;
    for (double t : timestamps) {
      auto idx = it->second->index_at_or_before(t + 1e-9);
      if (!idx || idx == last) continue;
      const double ts = it->second->timestamp(*idx);
      out.push_back({std::min(ts, t), it->second->frame(*idx)});
      last = idx;
    }
    return out;
  }

 private:
  std::map<std::string, std::shared_ptr<const FrameSource>> videos_;
};

/// Per-video gaze data used by the gaze prompting modes.
struct GazeContext {
  GazeTrajectory trajectory;
  std::vector<Fixation> fixations;
  double fov_radius = 0;
};

using GazeContexts = std::map<std::string, GazeContext>;

// ---- adapters ----------------------------------------------------------------------

/// Fixed answers keyed by item id (proactive checkpoints: "<id>#<k>"). Unknown ids get the fallback.
class ScriptedAdapter : public ModelAdapter {
 public:
  explicit ScriptedAdapter(std::map<std::string, std::string> table, std::string fallback = {})
      : table_(std::move(table)), fallback_(std::move(fallback)) {}

  std::string answer(const AdapterRequest& r) override {
    auto it = table_.find(r.item_id);
    return it == table_.end() ? fallback_ : it->second;
  }

  static ScriptedAdapter from_file(const std::filesystem::path& path) {
    const auto j = io::read_json(path);
    if (!j.is_object()) throw SchemaError(path.string() + ": answer table must be an object of id -> text");
    std::map<std::string, std::string> table;
    for (auto it = j.begin(); it != j.end(); ++it) table[it.key()] = it.value().get<std::string>();
    return ScriptedAdapter(std::move(table));
  }

 private:
  std::map<std::string, std::string> table_;
  std::string fallback_;
};

inline std::string checkpoint_id(const std::string& item_id, std::size_t k) { return item_id + "#" + std::to_string(k); }

inline std::string option_letter(int index) { return std::string(1, static_cast<char>('A' + index)); }

/// Answer table that gets every item right.
inline std::map<std::string, std::string> answer_key(const std::vector<QAItem>& mcq,
                                                     const std::vector<ProactiveItem>& proactive = {}) {
  std::map<std::string, std::string> t;
  for (const auto& q : mcq) t[q.id] = option_letter(q.answer_index);
  for (const auto& p : proactive)
    for (std::size_t k = 0; k < p.checkpoints.size(); ++k) t[checkpoint_id(p.id, k)] = p.checkpoints[k].label ? "Yes" : "No";
  return t;
}

/// Uniform letter per item, a pure function of (seed, item id).
class RandomChoiceAdapter : public ModelAdapter {
 public:
  explicit RandomChoiceAdapter(std::uint64_t seed) : seed_(seed) {}
  std::string answer(const AdapterRequest& r) override {
    Rng rng(derive_seed(seed_, r.item_id, "random-choice", 0));
    return option_letter(static_cast<int>(rng.uniform(4)));
  }

 private:
  std::uint64_t seed_;
};

class ConstantAdapter : public ModelAdapter {
 public:
  explicit ConstantAdapter(std::string text) : text_(std::move(text)) {}
  std::string answer(const AdapterRequest&) override { return text_; }

 private:
  std::string text_;
};

/// Sends frames + question to a multimodal oracle (e.g. a chat-completion endpoint).
class OracleAdapter : public ModelAdapter {
 public:
  explicit OracleAdapter(Oracle& oracle) : oracle_(oracle) {}
  std::string answer(const AdapterRequest& r) override {
    OracleRequest req;
    for (const auto& f : r.frames) req.images.push_back(f.image);
    req.prompt = r.aux.empty() ? r.question : r.aux + "\n" + r.question;
    return oracle_.complete(req);
  }

 private:
  Oracle& oracle_;
};

// ---- results -----------------------------------------------------------------------

struct TaskResult {
  Task task = Task::NFI;
  std::size_t total = 0, correct = 0, unparsed = 0;
  double accuracy = 0;
};

struct ProactiveResult {
  Task task = Task::GTA;
  std::size_t total = 0, correct = 0, unparsed = 0;
  std::size_t positives = 0, negatives = 0, false_positives = 0, false_negatives = 0;
  double accuracy = 0, type1_rate = 0, type2_rate = 0;
};

struct EvalReport {
  std::map<Task, TaskResult> mcq;
  std::map<Task, ProactiveResult> proactive;
  std::vector<io::ordered_json> audit;  // one record per adapter call, input order
};

inline io::ordered_json to_json(const TaskResult& r) {
  return {{"total", r.total}, {"correct", r.correct}, {"unparsed", r.unparsed}, {"accuracy", r.accuracy}};
}

inline io::ordered_json to_json(const ProactiveResult& r) {
  return {{"total", r.total},
          {"correct", r.correct},
          {"unparsed", r.unparsed},
          {"positives", r.positives},
          {"negatives", r.negatives},
          {"false_positives", r.false_positives},
          {"false_negatives", r.false_negatives},
          {"accuracy", r.accuracy},
          {"type1_rate", r.type1_rate},
          {"type2_rate", r.type2_rate}};
}

inline io::ordered_json to_json(const EvalReport& r, const EvalConfig& c) {
  io::ordered_json j;
  j["config"] = to_json(c);
  j["mcq"] = io::ordered_json::object();
  for (const auto& [t, res] : r.mcq) j["mcq"][task_name(t)] = to_json(res);
  j["proactive"] = io::ordered_json::object();
  for (const auto& [t, res] : r.proactive) j["proactive"][task_name(t)] = to_json(res);
  return j;
}

namespace detail {

/// Runs fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first failure.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w)
    pool.emplace_back([&] {
      for (std::size_t i; !failed && (i = next++) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!first) first = std::current_exception();
          failed = true;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

inline std::string format_mcq(const QAItem& q) {
  std::string s = q.question + "\n";
  for (int i = 0; i < 4; ++i) s += option_letter(i) + ". " + q.options[static_cast<std::size_t>(i)] + "\n";
  return s + "Answer with the letter of the correct option.";
}

inline const Fixation* latest_fixation(const std::vector<Fixation>& fixations, double t) {
  const Fixation* best = nullptr;
  for (const auto& f : fixations)
    if (f.t_start <= t && (!best || f.t_start > best->t_start)) best = &f;
  return best;
}

inline std::string fmt_coord(double v) { return std::to_string(static_cast<long long>(std::lround(v))); }

struct Call {
  std::string id;
  std::string video_id;
  std::string question;
  ContextWindow window;
};

struct CallOutput {
  std::vector<double> frame_timestamps;
  std::string raw;
};

inline CallOutput run_call(const Call& call, ModelAdapter& adapter, FrameProvider& frames, const GazeContexts* gaze,
                           const EvalConfig& cfg) {
  const auto wanted = sample_frames(call.window, cfg.frame_rate, cfg.max_frames);
  AdapterRequest req;
  req.item_id = call.id;
  req.frames = frames.frames(call.video_id, wanted);
  for (const auto& f : req.frames)
    if (f.timestamp > call.window.end)
      throw CausalityViolation(call.id + ": frame at " + std::to_string(f.timestamp) + " s is past the window end " +
                               std::to_string(call.window.end) + " s");
  std::string question = call.question;
  const GazeContext* ctx = nullptr;
  if (gaze && cfg.mode != PromptingMode::none) {
    auto it = gaze->find(call.video_id);
    if (it != gaze->end()) ctx = &it->second;
  }
  if (ctx && cfg.mode == PromptingMode::text_gaze) {
    if (const Fixation* f = latest_fixation(ctx->fixations, call.window.end)) {
      req.aux = "The user's current fixation center is at pixel (" + fmt_coord(f->centroid_x) + ", " +
                fmt_coord(f->centroid_y) + ").";
      question += "\n" + req.aux;
    }
  } else if (ctx && cfg.mode == PromptingMode::visual_gaze) {
    req.aux = std::string(prompts::kVisualGazePreamble);
    question = req.aux + "\n" + question;
    const auto& samples = ctx->trajectory.samples;
    for (auto& f : req.frames) {
      auto it = std::upper_bound(samples.begin(), samples.end(), f.timestamp + 1e-9,
                                 [](double t, const GazeSample& s) { return t < s.timestamp; });
      if (it == samples.begin()) continue;
      const GazeSample& s = *std::prev(it);
      const PixelPoint p{s.x, s.y};
      if (s.valid && p.x >= 0 && p.y >= 0 && p.x < f.image.width() && p.y < f.image.height())
        f.image = overlay_eval_prompt(f.image, p, ctx->fov_radius);
    }
  }
  if (!cfg.instruction_preamble.empty()) question = cfg.instruction_preamble + "\n" + question;
  req.question = std::move(question);
  CallOutput out;
  for (const auto& f : req.frames) out.frame_timestamps.push_back(f.timestamp);
  out.raw = adapter.answer(req);
  return out;
}

inline double ratio(std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); }

}  // namespace detail

/// Multiple-choice evaluation. Unparsed answers count as wrong.
inline EvalReport run_mcq_eval(const std::vector<QAItem>& items, ModelAdapter& adapter, FrameProvider& frames,
                               const EvalConfig& cfg, const GazeContexts* gaze = nullptr) {
  cfg.validate();
  std::vector<detail::CallOutput> outputs(items.size());
  detail::parallel_for(items.size(), cfg.jobs, [&](std::size_t i) {
    const auto& q = items[i];
    outputs[i] = detail::run_call(
        {q.id, q.video_id, detail::format_mcq(q), context_window(task_scope(q.task), q.query_time, cfg.omega)}, adapter,
        frames, gaze, cfg);
  });
  EvalReport report;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& q = items[i];
    const auto parsed = parse_choice(outputs[i].raw, q.options);
    auto& r = report.mcq[q.task];
    r.task = q.task;
    ++r.total;
    r.unparsed += !parsed;
    const bool ok = parsed && *parsed == q.answer_index;
    r.correct += ok;
    const auto w = context_window(task_scope(q.task), q.query_time, cfg.omega);
    io::ordered_json a;
    a["id"] = q.id;
    a["task"] = task_name(q.task);
    a["window"] = {w.start, w.end};
    a["frames"] = outputs[i].frame_timestamps;
    a["raw"] = outputs[i].raw;
    a["parsed"] = parsed ? io::ordered_json(option_letter(*parsed)) : io::ordered_json(nullptr);
    a["answer"] = option_letter(q.answer_index);
    a["correct"] = ok;
    report.audit.push_back(std::move(a));
  }
  for (auto& [_, r] : report.mcq) r.accuracy = detail::ratio(r.correct, r.total);
  return report;
}

/// Multi-trigger proactive evaluation over the growing prefix [0, r_t].
/// Unparsed answers count as "No".
inline EvalReport run_proactive_eval(const std::vector<ProactiveItem>& items, ModelAdapter& adapter,
                                     FrameProvider& frames, const EvalConfig& cfg, const GazeContexts* gaze = nullptr) {
  cfg.validate();
  struct Ref {
    std::size_t item, checkpoint;
  };
  std::vector<Ref> refs;
  for (std::size_t i = 0; i < items.size(); ++i)
    for (std::size_t k = 0; k < items[i].checkpoints.size(); ++k) refs.push_back({i, k});
  std::vector<detail::CallOutput> outputs(refs.size());
  detail::parallel_for(refs.size(), cfg.jobs, [&](std::size_t n) {
    const auto& p = items[refs[n].item];
    const auto& c = p.checkpoints[refs[n].checkpoint];
    outputs[n] = detail::run_call({checkpoint_id(p.id, refs[n].checkpoint), p.video_id, p.question,
                                   context_window(TemporalScope::proactive, c.time, cfg.omega)},
                                  adapter, frames, gaze, cfg);
  });
  EvalReport report;
  for (std::size_t n = 0; n < refs.size(); ++n) {
    const auto& p = items[refs[n].item];
    const auto& c = p.checkpoints[refs[n].checkpoint];
    const auto parsed = parse_yes_no(outputs[n].raw);
    const bool said_yes = parsed.value_or(false);
    auto& r = report.proactive[p.task];
    r.task = p.task;
    ++r.total;
    r.unparsed += !parsed;
    if (c.label) {
      ++r.positives;
      r.false_negatives += !said_yes;
    } else {
      ++r.negatives;
      r.false_positives += said_yes;
    }
    r.correct += said_yes == c.label;
    io::ordered_json a;
    a["id"] = checkpoint_id(p.id, refs[n].checkpoint);
    a["task"] = task_name(p.task);
    a["window"] = {0.0, c.time};
    a["frames"] = outputs[n].frame_timestamps;
    a["raw"] = outputs[n].raw;
    a["parsed"] = parsed ? io::ordered_json(*parsed ? "yes" : "no") : io::ordered_json(nullptr);
    a["label"] = c.label;
    a["correct"] = said_yes == c.label;
    report.audit.push_back(std::move(a));
  }
  for (auto& [_, r] : report.proactive) {
    r.accuracy = detail::ratio(r.correct, r.total);
    r.type1_rate = detail::ratio(r.false_positives, r.negatives);
    r.type2_rate = detail::ratio(r.false_negatives, r.positives);
  }
  return report;
}

inline EvalReport merge(EvalReport a, EvalReport b) {
  for (auto& [t, r] : b.mcq) a.mcq[t] = r;
  for (auto& [t, r] : b.proactive) a.proactive[t] = r;
  for (auto& x : b.audit) a.audit.push_back(std::move(x));
  return a;
}

}  // namespace streamgaze
