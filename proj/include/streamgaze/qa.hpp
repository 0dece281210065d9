#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "streamgaze/answer_parsing.hpp"
#include "streamgaze/error.hpp"
#include "streamgaze/io.hpp"
#include "streamgaze/oracle.hpp"
#include "streamgaze/rng.hpp"
#include "streamgaze/scanpath.hpp"
#include "streamgaze/text.hpp"

namespace streamgaze {

enum class Task { NFI, OTP, GSM, SR, OI_E, OI_H, OAR, FAP, GTA, OAA };

inline constexpr std::array<Task, 10> kAllTasks{Task::NFI, Task::OTP, Task::GSM, Task::SR,  Task::OI_E,
                                                Task::OI_H, Task::OAR, Task::FAP, Task::GTA, Task::OAA};

inline const char* task_name(Task t) {
  switch (t) {
    case Task::NFI: return "NFI";
    case Task::OTP: return "OTP";
    case Task::GSM: return "GSM";
    case Task::SR: return "SR";
    case Task::OI_E: return "OI_E";
    case Task::OI_H: return "OI_H";
    case Task::OAR: return "OAR";
    case Task::FAP: return "FAP";
    case Task::GTA: return "GTA";
    case Task::OAA: return "OAA";
  }
  return "?";
}

inline Task task_from_name(const std::string& name) {
  for (Task t : kAllTasks)
    if (name == task_name(t)) return t;
  throw UsageError("unknown task '" + name + "'");
}

/// Which part of the stream a task may look at.
enum class TemporalScope { past, present, proactive };

inline TemporalScope task_scope(Task t) {
  switch (t) {
    case Task::NFI:
    case Task::OTP:
    case Task::GSM:
    case Task::SR: return TemporalScope::past;
    case Task::GTA:
    case Task::OAA: return TemporalScope::proactive;
    default: return TemporalScope::present;
  }
}

inline bool is_proactive(Task t) { return task_scope(t) == TemporalScope::proactive; }

struct TimeWindow {
  double start = 0, end = 0;
  friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

struct QAItem {
  std::string id;
  Task task = Task::NFI;
  std::string video_id;
  double query_time = 0;
  TimeWindow response_window;
  std::string question;
  std::array<std::string, 4> options;
  int answer_index = 0;
  std::uint64_t seed = 0;
  // provenance
  std::vector<int> source_entries;  // scanpath entry positions the item was built from
  int query_entry = 0;              // entry whose timing defines query_time
  int horizon_entry = 0;            // latest entry any option may come from
  std::optional<std::string> attribute_type;

  const std::string& answer() const { return options[static_cast<std::size_t>(answer_index)]; }
  friend bool operator==(const QAItem&, const QAItem&) = default;
};

struct Checkpoint {
  double time = 0;
  bool label = false;
  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

struct ProactiveItem {
  std::string id;
  Task task = Task::GTA;
  std::string video_id;
  std::string target;
  std::string question;
  double anchor_time = 0;
  std::vector<Checkpoint> checkpoints;
  std::uint64_t seed = 0;
  friend bool operator==(const ProactiveItem&, const ProactiveItem&) = default;
};

struct ActionAnnotation {
  double timestamp = 0;
  std::string description;
};

struct SkipRecord {
  Task task = Task::NFI;
  std::string video_id;
  int index = 0;
  std::string reason;
};

template <typename T>
struct Generated {
  std::vector<T> items;
  std::vector<SkipRecord> skips;

  void append(Generated<T>&& other) {
    for (auto& i : other.items) items.push_back(std::move(i));
    for (auto& s : other.skips) skips.push_back(std::move(s));
  }
};

inline const std::vector<double>& default_checkpoint_offsets() {
  static const std::vector<double> offsets{-20.0, -10.0, 0.0, 10.0, 20.0};
  return offsets;
}

inline constexpr double kWindowPad = 2.0;
inline constexpr double kFapMinLead = 3.0;
inline constexpr double kFapMaxLead = 60.0;

/// Attribute types with one question template each.
inline const std::vector<std::pair<std::string, std::string>>& attribute_dictionary() {
  static const std::vector<std::pair<std::string, std::string>> dict{
      {"color", "What color is this object?"},
      {"material", "What material is this object made of?"},
      {"shape", "What shape is this object?"},
      {"texture", "What texture does this object have?"},
      {"size", "What size is this object?"},
      {"state", "What state is this object in?"},
  };
  return dict;
}

/// Question wording per task. {current}, {sequence} and {target} are substituted.
struct QuestionTemplates {
  std::map<std::string, std::string> text{
      {"NFI", "Which of these objects has been visible in the scene but never looked at directly by the user so far?"},
      {"OTP", "The user is currently looking at the {current}. Which object will the user look at next?"},
      {"GSM", "Which sequence matches the order in which the user's gaze moved across objects?"},
      {"SR", "Which object was visible in the background earlier but is not visible in the background now?"},
      {"OI_E", "What object is the user looking at right now?"},
      {"OI_H", "What object is the user looking at right now?"},
      {"FAP", "The user looked at the {sequence}. What will the user most likely do next?"},
      {"GTA", "Alert me when I look at the {target}. Is the user looking at the {target} right now? Answer yes or no."},
      {"OAA",
       "Alert me when the {target} appears outside my gaze region. Is the {target} visible in the scene but outside "
       "the region the user is looking at right now? Answer yes or no."},
  };

  std::string get(Task t) const {
    auto it = text.find(task_name(t));
    if (it == text.end()) throw UsageError(std::string("no question template for ") + task_name(t));
    return it->second;
  }

  static QuestionTemplates from_json(const io::json& j) {
    QuestionTemplates q;
    for (auto it = j.begin(); it != j.end(); ++it) q.text[it.key()] = it.value().get<std::string>();
    return q;
  }
};

namespace detail {

inline void require_verified(const Scanpath& s) {
  if (!s.verified) throw UsageError("QA generation requires a verified scanpath (" + s.video_id + ")");
}

inline std::string item_id(const std::string& video, Task t, int index) {
  return video + "/" + task_name(t) + "/" + std::to_string(index);
}

template <typename Set>
std::vector<std::string> to_vec(const Set& s) {
  return std::vector<std::string>(s.begin(), s.end());
}

inline IdentitySet minus(IdentitySet a, const IdentitySet& b) {
  for (const auto& x : b) a.erase(x);
  return a;
}

inline double video_end(const Scanpath& s) {
  double end = s.duration;
  for (const auto& e : s.entries) end = std::max(end, e.fixation.t_end);
  return end;
}

struct Options {
  std::array<std::string, 4> texts;
  int answer_index = 0;
};

/// Answer + 3 distractors, shuffled. Fails when any two are equivalent names.
inline std::optional<Options> assemble_options(const std::string& answer, const std::vector<std::string>& distractors,
                                               Rng& rng) {
  if (distractors.size() != 3) return std::nullopt;
  std::vector<std::string> all{answer};
  all.insert(all.end(), distractors.begin(), distractors.end());
  std::set<std::string> keys;
  for (const auto& o : all)
    if (!keys.insert(text::normalize_loose(o)).second || text::trim(o).empty()) return std::nullopt;
  std::vector<int> order{0, 1, 2, 3};
  rng.shuffle(order);
  Options out;
  for (int k = 0; k < 4; ++k) {
    out.texts[static_cast<std::size_t>(k)] = all[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
    if (order[static_cast<std::size_t>(k)] == 0) out.answer_index = k;
  }
  return out;
}

inline std::vector<int> range_ids(int first, int last) {
  std::vector<int> v;
  for (int i = first; i <= last; ++i) v.push_back(i);
  return v;
}

}  // namespace detail

// ---- past tasks --------------------------------------------------------------------

/// Non-fixated object identification, one item per video at the first moment
/// three distinct objects have been inside the FOV.
inline Generated<QAItem> gen_nfi(const Scanpath& s, std::uint64_t seed, const QuestionTemplates& tpl = {}) {
  detail::require_verified(s);
  Generated<QAItem> out;
  IdentitySet seen;
  std::optional<std::size_t> k;
  for (std::size_t i = 0; i < s.size() && !k; ++i) {
    for (const auto& o : s.entries[i].fov_objects) seen.insert(o.identity);
    if (seen.size() >= 3) k = i;
  }
  if (!k) {
    out.skips.push_back({Task::NFI, s.video_id, 0, "fewer than 3 unique fixated identities"});
    return out;
  }
  const auto answers = detail::to_vec(never_fixated(s, *k));
  if (answers.empty()) {
    out.skips.push_back({Task::NFI, s.video_id, static_cast<int>(*k), "no visible-but-never-fixated object"});
    return out;
  }
  QAItem item;
  item.seed = derive_seed(seed, s.video_id, "NFI", 0);
  Rng rng(item.seed);
  const std::string answer = answers[rng.uniform(answers.size())];
  const auto distractors = rng.sample(detail::to_vec(fixated_prefix(s, *k)), 3);
  auto opts = detail::assemble_options(answer, distractors, rng);
  if (!opts) {
    out.skips.push_back({Task::NFI, s.video_id, static_cast<int>(*k), "could not form 4 distinct options"});
    return out;
  }
  double lo = 1e300, hi = -1e300;
  for (std::size_t j = 0; j <= *k; ++j)
    for (const auto& d : distractors)
      if (s.entries[j].in_fov(d)) {
        lo = std::min(lo, s.entries[j].fixation.t_start);
        hi = std::max(hi, s.entries[j].fixation.t_end);
      }
  item.id = detail::item_id(s.video_id, Task::NFI, 0);
  item.task = Task::NFI;
  item.video_id = s.video_id;
  item.query_time = s.entries[*k].fixation.t_end;
  item.response_window = {std::max(0.0, lo - kWindowPad), hi + kWindowPad};
  item.question = tpl.get(Task::NFI);
  item.options = opts->texts;
  item.answer_index = opts->answer_index;
  item.source_entries = detail::range_ids(0, static_cast<int>(*k));
  item.query_entry = item.horizon_entry = static_cast<int>(*k);
  out.items.push_back(std::move(item));
  return out;
}

/// Object transition prediction: the newly attended object of the next fixation.
inline Generated<QAItem> gen_otp(const Scanpath& s, std::uint64_t seed, const QuestionTemplates& tpl = {}) {
  detail::require_verified(s);
  Generated<QAItem> out;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    const int idx = static_cast<int>(i);
    const auto next = first_new_object(s, i);
    if (!next) {
      out.skips.push_back({Task::OTP, s.video_id, idx, "no newly attended object"});
      continue;
    }
    auto pool = detail::minus(global_pool(s, i + 1), s.entries[i].fov_ids());
    pool.erase(*next);
    if (pool.size() < 3) {
      out.skips.push_back({Task::OTP, s.video_id, idx, "fewer than 3 distractors"});
      continue;
    }
    QAItem item;
    item.seed = derive_seed(seed, s.video_id, "OTP", idx);
    Rng rng(item.seed);
    auto opts = detail::assemble_options(*next, rng.sample(detail::to_vec(pool), 3), rng);
    if (!opts) {
      out.skips.push_back({Task::OTP, s.video_id, idx, "could not form 4 distinct options"});
      continue;
    }
    const auto& cur = s.entries[i].fixation;
    item.id = detail::item_id(s.video_id, Task::OTP, idx);
    item.task = Task::OTP;
    item.video_id = s.video_id;
    item.query_time = cur.t_start;
    item.response_window = {std::max(0.0, cur.t_start - kWindowPad), s.entries[i + 1].fixation.t_end + kWindowPad};
    item.question = text::replace_all(tpl.get(Task::OTP), "{current}", s.entries[i].gazed().identity);
    item.options = opts->texts;
    item.answer_index = opts->answer_index;
    item.source_entries = {idx, idx + 1};
    item.query_entry = idx;
    item.horizon_entry = idx + 1;
    out.items.push_back(std::move(item));
  }
  return out;
}

inline constexpr std::string_view kSequenceArrow = " \xE2\x86\x92 ";  // " → "

inline std::string serialize_sequence(const std::vector<std::string>& steps) {
  return text::join(steps, kSequenceArrow);
}

/// Fraction of positions at which two equal-length sequences agree.
inline double segment_overlap(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.size() != b.size() || a.empty()) return 0.0;
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
  return static_cast<double>(same) / static_cast<double>(a.size());
}

/// Gaze sequence matching over consecutive triplets of fixation groups,
/// each group labelled by its gazed object.
inline Generated<QAItem> gen_gsm(const Scanpath& s, std::uint64_t seed, const QuestionTemplates& tpl = {}) {
  detail::require_verified(s);
  Generated<QAItem> out;
  for (std::size_t i = 0; i + 2 < s.size(); ++i) {
    const int idx = static_cast<int>(i);
    const std::vector<std::string> correct{s.entries[i].gazed().identity, s.entries[i + 1].gazed().identity,
                                           s.entries[i + 2].gazed().identity};
    std::vector<std::vector<std::string>> shuffles;
    {
      auto p = correct;
      std::sort(p.begin(), p.end());
      do {
        if (p != correct) shuffles.push_back(p);
      } while (std::next_permutation(p.begin(), p.end()));
    }
    if (shuffles.empty()) {
      out.skips.push_back({Task::GSM, s.video_id, idx, "identical groups cannot be shuffled"});
      continue;
    }
    QAItem item;
    item.seed = derive_seed(seed, s.video_id, "GSM", idx);
    Rng rng(item.seed);
    std::vector<std::vector<std::string>> negatives{shuffles[rng.uniform(shuffles.size())]};

    IdentitySet labels;
    for (std::size_t j = 0; j <= i + 2; ++j) labels.insert(s.entries[j].gazed().identity);
    const auto pool = detail::to_vec(labels);
    for (int attempt = 0; attempt < 1000 && negatives.size() < 3; ++attempt) {
      std::vector<std::string> t{pool[rng.uniform(pool.size())], pool[rng.uniform(pool.size())],
                                 pool[rng.uniform(pool.size())]};
      if (t[0] == t[1] || t[1] == t[2]) continue;
      if (t[0] == correct[0] || t[1] == correct[1] || t[2] == correct[2]) continue;
      if (std::find(negatives.begin(), negatives.end(), t) != negatives.end()) continue;
      negatives.push_back(t);
    }
    if (negatives.size() < 3) {
      out.skips.push_back({Task::GSM, s.video_id, idx, "not enough structure-preserving random triplets"});
      continue;
    }
    if (std::any_of(negatives.begin(), negatives.end(),
                    [&](const auto& n) { return segment_overlap(n, correct) > 0.5; })) {
      out.skips.push_back({Task::GSM, s.video_id, idx, "distractor overlaps the correct sequence in >50% of segments"});
      continue;
    }
    std::vector<std::string> distractors;
    for (const auto& n : negatives) distractors.push_back(serialize_sequence(n));
    auto opts = detail::assemble_options(serialize_sequence(correct), distractors, rng);
    if (!opts) {
      out.skips.push_back({Task::GSM, s.video_id, idx, "could not form 4 distinct options"});
      continue;
    }
    item.id = detail::item_id(s.video_id, Task::GSM, idx);
    item.task = Task::GSM;
    item.video_id = s.video_id;
    item.query_time = s.entries[i + 2].fixation.t_end;
    item.response_window = {s.entries[i].fixation.t_start, s.entries[i + 2].fixation.t_end};
    item.question = tpl.get(Task::GSM);
    item.options = opts->texts;
    item.answer_index = opts->answer_index;
    item.source_entries = detail::range_ids(0, idx + 2);
    item.query_entry = item.horizon_entry = idx + 2;
    out.items.push_back(std::move(item));
  }
  return out;
}

/// Scene recall: a background object seen in an earlier fixation, absent from
/// the current background and never fixated.
inline Generated<QAItem> gen_sr(const Scanpath& s, std::uint64_t seed, const QuestionTemplates& tpl = {}) {
  detail::require_verified(s);
  Generated<QAItem> out;
  const auto fixated = fixated_all(s);
  IdentitySet earlier_bg;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const int idx = static_cast<int>(i);
    const auto current = s.entries[i].out_ids();
    const auto answers = detail::to_vec(detail::minus(detail::minus(earlier_bg, current), fixated));
    for (const auto& id : current) earlier_bg.insert(id);
    if (answers.empty()) {
      out.skips.push_back({Task::SR, s.video_id, idx, "no earlier background object absent now"});
      continue;
    }
    if (current.size() < 3) {
      out.skips.push_back({Task::SR, s.video_id, idx, "fewer than 3 current background objects"});
      continue;
    }
    QAItem item;
    item.seed = derive_seed(seed, s.video_id, "SR", idx);
    Rng rng(item.seed);
    const std::string answer = answers[rng.uniform(answers.size())];
    auto opts = detail::assemble_options(answer, rng.sample(detail::to_vec(current), 3), rng);
    if (!opts) {
      out.skips.push_back({Task::SR, s.video_id, idx, "could not form 4 distinct options"});
      continue;
    }
    double first_seen = s.entries[i].fixation.t_start;
    for (std::size_t j = 0; j < i; ++j)
      if (s.entries[j].in_out(answer)) {
        first_seen = s.entries[j].fixation.t_start;
        break;
      }
    item.id = detail::item_id(s.video_id, Task::SR, idx);
    item.task = Task::SR;
    item.video_id = s.video_id;
    item.query_time = s.entries[i].fixation.t_start;
    item.response_window = {first_seen, item.query_time};
    item.question = tpl.get(Task::SR);
    item.options = opts->texts;
    item.answer_index = opts->answer_index;
    item.source_entries = detail::range_ids(0, idx);
    item.query_entry = item.horizon_entry = idx;
    out.items.push_back(std::move(item));
  }
  return out;
}

// ---- present tasks -----------------------------------------------------------------

enum class OiMode { easy, hard };

/// Object identification. Easy distractors: objects seen so far outside this
/// fixation's FOV list; hard distractors: this fixation's out-of-FOV objects.
inline Generated<QAItem> gen_oi(const Scanpath& s, OiMode mode, std::uint64_t seed, const QuestionTemplates& tpl = {}) {
  detail::require_verified(s);
  const Task task = mode == OiMode::easy ? Task::OI_E : Task::OI_H;
  Generated<QAItem> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const int idx = static_cast<int>(i);
    const auto& e = s.entries[i];
    const IdentitySet pool = mode == OiMode::easy ? detail::minus(global_pool(s, i), e.fov_ids()) : e.out_ids();
    if (pool.size() < 3) {
      out.skips.push_back({task, s.video_id, idx, "fewer than 3 distractors"});
      continue;
    }
    QAItem item;
    item.seed = derive_seed(seed, s.video_id, task_name(task), idx);
    Rng rng(item.seed);
    auto opts = detail::assemble_options(e.gazed().identity, rng.sample(detail::to_vec(pool), 3), rng);
    if (!opts) {
      out.skips.push_back({task, s.video_id, idx, "could not form 4 distinct options"});
      continue;
    }
    item.id = detail::item_id(s.video_id, task, idx);
    item.task = task;
    item.video_id = s.video_id;
    item.query_time = e.fixation.t_start;
    item.response_window = {e.fixation.t_start, e.fixation.t_end};
    item.question = tpl.get(task);
    item.options = opts->texts;
    item.answer_index = opts->answer_index;
    item.source_entries = mode == OiMode::easy ? detail::range_ids(0, idx) : std::vector<int>{idx};
    item.query_entry = item.horizon_entry = idx;
    out.items.push_back(std::move(item));
  }
  return out;
}

inline std::string build_attribute_prompt(const std::string& identity, const std::string& caption) {
  std::string types;
  for (const auto& [name, _] : attribute_dictionary()) types += (types.empty() ? "" : ", ") + name;
  return "Object: " + identity + "\nCaption: " + caption + "\n\nAttribute types: " + types +
         "\n\nPick the attribute type that best suits a multiple-choice question about this object. "
         "Give the correct value of that attribute as stated in the caption, in a few words. "
         "Give three wrong but believable values of the same attribute, clearly different from the correct one "
         "and from each other.\n\n"
         "Return only valid JSON: {\"attribute_type\": \"...\", \"answer\": \"...\", \"distractors\": "
         "[\"...\", \"...\", \"...\"]}";
}

inline std::string build_attribute_check_prompt(const std::string& caption, const std::string& question,
                                                const std::array<std::string, 4>& options) {
  std::string p = "Caption: " + caption + "\nQuestion: " + question + "\nOptions:\n";
  for (std::size_t i = 0; i < 4; ++i) p += std::string(1, static_cast<char>('A' + i)) + ". " + options[i] + "\n";
  return p + "\nGiven the caption, is exactly one option correct, with no option overlapping another in meaning? "
             "Answer yes or no.";
}

/// Object attribute recognition. The oracle picks the attribute type and writes
/// answer + distractors; a second oracle pass rejects ambiguous option sets.
inline Generated<QAItem> gen_oar(const Scanpath& s, Oracle& oracle, std::uint64_t seed,
                                 const QuestionTemplates& tpl = {}) {
  (void)tpl;
  detail::require_verified(s);
  Generated<QAItem> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const int idx = static_cast<int>(i);
    const auto& e = s.entries[i];
    const auto& gazed = e.gazed();
    std::string type, answer;
    std::vector<std::string> distractors;
    try {
      const auto j = parse_first_object(oracle.complete({{}, build_attribute_prompt(gazed.identity, gazed.caption)}));
      type = text::lower(text::trim(j.at("attribute_type").get<std::string>()));
      answer = text::trim(j.at("answer").get<std::string>());
      for (const auto& d : j.at("distractors")) distractors.push_back(text::trim(d.get<std::string>()));
    } catch (const io::json::exception& ex) {
      out.skips.push_back({Task::OAR, s.video_id, idx, std::string("oracle parse failure: ") + ex.what()});
      continue;
    } catch (const Error& ex) {
      out.skips.push_back({Task::OAR, s.video_id, idx, std::string("oracle parse failure: ") + ex.what()});
      continue;
    }
    const auto& dict = attribute_dictionary();
    auto entry = std::find_if(dict.begin(), dict.end(), [&](const auto& d) { return d.first == type; });
    if (entry == dict.end()) {
      out.skips.push_back({Task::OAR, s.video_id, idx, "unknown attribute type '" + type + "'"});
      continue;
    }
    QAItem item;
    item.seed = derive_seed(seed, s.video_id, "OAR", idx);
    Rng rng(item.seed);
    auto opts = detail::assemble_options(answer, distractors, rng);
    if (!opts) {
      out.skips.push_back({Task::OAR, s.video_id, idx, "options not 4 distinct texts"});
      continue;
    }
    item.question = entry->second;
    std::optional<bool> unambiguous;
    try {
      unambiguous = parse_yes_no(oracle.complete({{}, build_attribute_check_prompt(gazed.caption, item.question, opts->texts)}));
    } catch (const Error& ex) {
      out.skips.push_back({Task::OAR, s.video_id, idx, std::string("verification failed: ") + ex.what()});
      continue;
    }
    if (!unambiguous.value_or(false)) {
      out.skips.push_back({Task::OAR, s.video_id, idx, "verification rejected an ambiguous option set"});
      continue;
    }
    item.id = detail::item_id(s.video_id, Task::OAR, idx);
    item.task = Task::OAR;
    item.video_id = s.video_id;
    item.query_time = e.fixation.t_start;
    item.response_window = {e.fixation.t_start, e.fixation.t_end};
    item.options = opts->texts;
    item.answer_index = opts->answer_index;
    item.source_entries = {idx};
    item.query_entry = item.horizon_entry = idx;
    item.attribute_type = type;
    out.items.push_back(std::move(item));
  }
  return out;
}

/// Earliest action starting 3..60 s after `after`; ties keep list order.
inline std::optional<std::size_t> next_eligible_action(const std::vector<ActionAnnotation>& actions, double after) {
  std::optional<std::size_t> best;
  for (std::size_t a = 0; a < actions.size(); ++a) {
    const double lead = actions[a].timestamp - after;
    if (lead < kFapMinLead || lead > kFapMaxLead) continue;
    if (!best || actions[a].timestamp < actions[*best].timestamp) best = a;
  }
  return best;
}

/// Future action prediction from the last `steps` fixations.
inline Generated<QAItem> gen_fap(const Scanpath& s, const std::vector<ActionAnnotation>& actions, std::uint64_t seed,
                                 int steps = 3, const QuestionTemplates& tpl = {}) {
  detail::require_verified(s);
  if (steps < 1) throw UsageError("FAP needs at least one fixation step");
  Generated<QAItem> out;
  for (std::size_t i = static_cast<std::size_t>(steps - 1); i < s.size(); ++i) {
    const int idx = static_cast<int>(i);
    const double end = s.entries[i].fixation.t_end;
    const auto pick = next_eligible_action(actions, end);
    if (!pick) {
      out.skips.push_back({Task::FAP, s.video_id, idx, "no action 3-60 s after the fixation sequence"});
      continue;
    }
    const auto& answer = actions[*pick];
    std::set<std::string> seen{text::normalize_loose(answer.description)};
    std::vector<std::string> pool;
    for (const auto& a : actions)
      if (seen.insert(text::normalize_loose(a.description)).second) pool.push_back(a.description);
    if (pool.size() < 3) {
      out.skips.push_back({Task::FAP, s.video_id, idx, "fewer than 3 distinct distractor actions"});
      continue;
    }
    QAItem item;
    item.seed = derive_seed(seed, s.video_id, "FAP", idx);
    Rng rng(item.seed);
    auto opts = detail::assemble_options(answer.description, rng.sample(pool, 3), rng);
    if (!opts) {
      out.skips.push_back({Task::FAP, s.video_id, idx, "could not form 4 distinct options"});
      continue;
    }
    std::vector<std::string> seq;
    for (int k = idx - steps + 1; k <= idx; ++k) seq.push_back(s.entries[static_cast<std::size_t>(k)].gazed().identity);
    item.id = detail::item_id(s.video_id, Task::FAP, idx);
    item.task = Task::FAP;
    item.video_id = s.video_id;
    item.query_time = end;
    item.response_window = {answer.timestamp - kWindowPad, answer.timestamp};
    item.question = text::replace_all(tpl.get(Task::FAP), "{sequence}", text::join(seq, ", then the "));
    item.options = opts->texts;
    item.answer_index = opts->answer_index;
    item.source_entries = detail::range_ids(idx - steps + 1, idx);
    item.query_entry = item.horizon_entry = idx;
    out.items.push_back(std::move(item));
  }
  return out;
}

// ---- proactive tasks ---------------------------------------------------------------

/// Returns true for identities that must not become alert targets.
using TargetFilter = std::function<bool(const std::string&)>;

inline TargetFilter denylist_filter(std::set<std::string> denylist) {
  return [deny = std::move(denylist)](const std::string& id) { return deny.count(name_key(id)) > 0; };
}

inline std::string build_static_object_prompt(const std::string& identity) {
  return "Is \"" + identity +
         "\" background furniture or a fixed part of the room (for example a wall, floor, ceiling, counter, shelf or "
         "cabinet) rather than an object a person would pick up or use? Answer yes or no.";
}

/// Asks the oracle whether an identity is static furniture; unparsed keeps the target.
inline TargetFilter oracle_static_filter(Oracle& oracle) {
  return [&oracle](const std::string& id) {
    return parse_yes_no(oracle.complete({{}, build_static_object_prompt(id)})).value_or(false);
  };
}

namespace detail {

/// Anchor + offsets, dropping those outside [0, end], deduplicated, sorted.
inline std::vector<double> checkpoint_times(double anchor, const std::vector<double>& offsets, double end) {
  std::vector<double> out;
  for (double off : offsets) {
    const double t = anchor + off;
    if (t < 0 || t > end) continue;
    out.push_back(t);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

template <typename Pred>
Generated<ProactiveItem> gen_alerts(const Scanpath& s, Task task, const std::vector<std::string>& targets,
                                    const std::vector<double>& offsets, std::uint64_t seed, const QuestionTemplates& tpl,
                                    Pred present_in) {
  Generated<ProactiveItem> out;
  const double end = video_end(s);
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const int idx = static_cast<int>(k);
    const auto& target = targets[k];
    double anchor = 0;
    for (const auto& e : s.entries)
      if (present_in(e, target)) {
        anchor = e.fixation.t_start;
        break;
      }
    ProactiveItem item;
    for (double t : checkpoint_times(anchor, offsets, end)) {
      bool label = false;
      for (const auto& e : s.entries) label |= present_in(e, target) && e.fixation.covers(t);
      item.checkpoints.push_back({t, label});
    }
    if (std::none_of(item.checkpoints.begin(), item.checkpoints.end(), [](const Checkpoint& c) { return c.label; })) {
      out.skips.push_back({task, s.video_id, idx, "no positive checkpoint"});
      continue;
    }
    item.id = item_id(s.video_id, task, idx);
    item.task = task;
    item.video_id = s.video_id;
    item.target = target;
    item.anchor_time = anchor;
    item.seed = derive_seed(seed, s.video_id, task_name(task), idx);
    item.question = text::replace_all(tpl.get(task), "{target}", target);
    out.items.push_back(std::move(item));
  }
  return out;
}

}  // namespace detail

/// Gaze-triggered alert: one item per fixated target, checkpoints around its first fixation.
inline Generated<ProactiveItem> gen_gta(const Scanpath& s, const std::vector<double>& offsets, std::uint64_t seed,
                                        const TargetFilter& exclude = {}, const QuestionTemplates& tpl = {}) {
  detail::require_verified(s);
  std::vector<std::string> targets;
  IdentitySet seen;
  for (const auto& e : s.entries)
    for (const auto& o : e.fov_objects)
      if (seen.insert(o.identity).second && !(exclude && exclude(o.identity))) targets.push_back(o.identity);
  return detail::gen_alerts(s, Task::GTA, targets, offsets, seed, tpl,
                            [](const ScanpathEntry& e, const std::string& id) { return e.in_fov(id); });
}

/// Object appearance alert: anchored at the first out-of-FOV appearance.
inline Generated<ProactiveItem> gen_oaa(const Scanpath& s, const std::vector<double>& offsets, std::uint64_t seed,
                                        const TargetFilter& exclude = {}, const QuestionTemplates& tpl = {}) {
  detail::require_verified(s);
  std::vector<std::string> targets;
  IdentitySet seen;
  for (const auto& e : s.entries)
    for (const auto& o : e.out_objects)
      if (seen.insert(o.identity).second && !(exclude && exclude(o.identity))) targets.push_back(o.identity);
  return detail::gen_alerts(s, Task::OAA, targets, offsets, seed, tpl, [](const ScanpathEntry& e, const std::string& id) {
    return e.in_out(id) && !e.in_fov(id);
  });
}

// ---- fine-tuning export ------------------------------------------------------------

/// Multi-turn conversation records: instruction at stream start, empty
/// assistant turns at negative checkpoints before the first positive, then the
/// alert. Items whose first positive is at the stream start are left out.
inline std::vector<io::ordered_json> export_finetune(const std::vector<ProactiveItem>& items, double stream_start = 0.0) {
  std::vector<io::ordered_json> out;
  for (const auto& item : items) {
    const bool gaze = item.task == Task::GTA;
    const std::string tag = "<" + item.target + ">";
    io::ordered_json conv = io::ordered_json::array();
    conv.push_back({{"from", "human"},
                    {"value", gaze ? "Monitor and alert when I gaze " + tag : "Monitor and alert when " + tag + " appears"},
                    {"time", stream_start}});
    bool alerted = false;
    for (const auto& c : item.checkpoints) {
      if (c.time <= stream_start) continue;
      if (!c.label) {
        conv.push_back({{"from", "gpt"}, {"value", ""}, {"time", c.time}});
        continue;
      }
      conv.push_back({{"from", "gpt"},
                      {"value", gaze ? "You are now gazing " + tag + "." : tag + " has appeared."},
                      {"time", c.time}});
      alerted = true;
      break;
    }
    if (!alerted) continue;
    io::ordered_json rec;
    rec["conversations"] = conv;
    rec["proactive"] = true;
    out.push_back(std::move(rec));
  }
  return out;
}

// ---- serialization -----------------------------------------------------------------

inline io::ordered_json to_json(const QAItem& q) {
  io::ordered_json j;
  j["id"] = q.id;
  j["task"] = task_name(q.task);
  j["video_id"] = q.video_id;
  j["query_time"] = q.query_time;
  j["response_window"] = {q.response_window.start, q.response_window.end};
  j["question"] = q.question;
  j["options"] = q.options;
  j["answer_index"] = q.answer_index;
  j["seed"] = q.seed;
  io::ordered_json meta;
  meta["source_entries"] = q.source_entries;
  meta["query_entry"] = q.query_entry;
  meta["horizon_entry"] = q.horizon_entry;
  if (q.attribute_type) meta["attribute_type"] = *q.attribute_type;
  j["metadata"] = meta;
  return j;
}

inline QAItem qa_item_from_json(const io::json& j) {
  QAItem q;
  try {
    q.id = j.at("id").get<std::string>();
    q.task = task_from_name(j.at("task").get<std::string>());
    q.video_id = j.at("video_id").get<std::string>();
    q.query_time = j.at("query_time").get<double>();
    q.response_window = {j.at("response_window").at(0).get<double>(), j.at("response_window").at(1).get<double>()};
    q.question = j.at("question").get<std::string>();
    const auto& opts = j.at("options");
    if (opts.size() != 4) throw SchemaError(q.id + ": exactly 4 options required");
    for (std::size_t i = 0; i < 4; ++i) q.options[i] = opts.at(i).get<std::string>();
    q.answer_index = j.at("answer_index").get<int>();
    if (q.answer_index < 0 || q.answer_index > 3) throw SchemaError(q.id + ": answer_index out of range");
    q.seed = j.at("seed").get<std::uint64_t>();
    const auto& meta = j.at("metadata");
    q.source_entries = meta.at("source_entries").get<std::vector<int>>();
    q.query_entry = meta.at("query_entry").get<int>();
    q.horizon_entry = meta.at("horizon_entry").get<int>();
    if (meta.contains("attribute_type")) q.attribute_type = meta.at("attribute_type").get<std::string>();
  } catch (const io::json::exception& e) {
    throw SchemaError(std::string("QA item: ") + e.what());
  }
  return q;
}

inline io::ordered_json to_json(const ProactiveItem& p) {
  io::ordered_json j;
  j["id"] = p.id;
  j["task"] = task_name(p.task);
  j["video_id"] = p.video_id;
  j["target"] = p.target;
  j["question"] = p.question;
  j["anchor_time"] = p.anchor_time;
  j["checkpoints"] = io::ordered_json::array();
  for (const auto& c : p.checkpoints) j["checkpoints"].push_back({{"time", c.time}, {"label", c.label}});
  j["seed"] = p.seed;
  return j;
}

inline ProactiveItem proactive_item_from_json(const io::json& j) {
  ProactiveItem p;
  try {
    p.id = j.at("id").get<std::string>();
    p.task = task_from_name(j.at("task").get<std::string>());
    p.video_id = j.at("video_id").get<std::string>();
    p.target = j.at("target").get<std::string>();
    p.question = j.at("question").get<std::string>();
    p.anchor_time = j.at("anchor_time").get<double>();
    for (const auto& c : j.at("checkpoints")) p.checkpoints.push_back({c.at("time").get<double>(), c.at("label").get<bool>()});
    p.seed = j.at("seed").get<std::uint64_t>();
  } catch (const io::json::exception& e) {
    throw SchemaError(std::string("proactive item: ") + e.what());
  }
  return p;
}

inline std::vector<ActionAnnotation> read_actions_csv(const std::filesystem::path& path) {
  auto t = io::read_csv(path);
  const std::string origin = path.string();
  const int c_ts = t.require("timestamp_s", origin), c_desc = t.require("description", origin);
  std::vector<ActionAnnotation> out;
  for (const auto& row : t.rows) out.push_back({io::to_double(row[c_ts], origin), row[c_desc]});
  std::stable_sort(out.begin(), out.end(),
                   [](const ActionAnnotation& a, const ActionAnnotation& b) { return a.timestamp < b.timestamp; });
  return out;
}

}  // namespace streamgaze
