// streamgaze: command-line front end for the gaze QA pipeline.

#include <CLI11.hpp>

#include <iostream>
#include <memory>

#include "streamgaze/streamgaze.hpp"

namespace sg = streamgaze;
namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config = "pipeline.json";
  int jobs = 0;
  std::vector<std::string> videos;
  // genqa / evaluate
  std::optional<std::uint64_t> seed;
  std::vector<std::string> tasks;
  std::string mode;
  std::optional<double> omega;
  std::optional<int> max_frames;
  std::string adapter;
  // serve
  std::string host = "127.0.0.1";
  int port = 8080;
  // synth
  std::string synth_out = "synthetic";
  int synth_videos = 2;
  double synth_duration = 60.0;
  std::uint64_t synth_seed = 7;
};

void log(const std::string& stage, const std::string& msg) { std::cerr << "[" << stage << "] " << msg << "\n"; }

sg::PipelineConfig load(const Options& o) {
  auto cfg = sg::load_config(o.config);
  if (o.jobs > 0) cfg.jobs = o.jobs;
  if (!o.videos.empty()) cfg.videos = o.videos;
  return cfg;
}

std::vector<std::string> video_ids(const sg::PipelineConfig& cfg) {
  std::vector<std::string> ids;
  for (const auto& v : sg::list_videos(cfg)) ids.push_back(v.video_id);
  return ids;
}

std::unique_ptr<sg::Oracle> make_oracle(const sg::PipelineConfig& cfg) {
  if (cfg.oracle.kind == "mock") {
    if (cfg.oracle.mock_dir.empty()) throw sg::UsageError("oracle.mock_dir is not set");
    auto m = std::make_unique<sg::MockOracle>(cfg.oracle.strict);
    m->load_directory(cfg.resolve(cfg.oracle.mock_dir));
    return m;
  }
  if (cfg.oracle.kind == "http") return std::make_unique<sg::ChatCompletionOracle>(cfg.oracle.endpoint);
  if (cfg.oracle.kind == "synthetic") return std::make_unique<sg::synth::SyntheticOracle>();
  throw sg::UsageError("unknown oracle kind '" + cfg.oracle.kind + "' (mock, http, synthetic)");
}

template <typename Fn>
void per_video(const sg::PipelineConfig& cfg, Fn fn) {
  const auto ids = video_ids(cfg);
  sg::detail::parallel_for(ids.size(), cfg.jobs, [&](std::size_t i) { fn(ids[i]); });
}

void cmd_project(const sg::PipelineConfig& cfg) {
  per_video(cfg, [&](const std::string& v) {
    const auto t = sg::stage_project(cfg, v);
    std::size_t valid = 0;
    for (const auto& s : t.samples) valid += s.valid;
    log("project", v + ": " + std::to_string(t.samples.size()) + " frames, " + std::to_string(valid) + " with gaze (" +
                       sg::to_string(t.source) + ")");
  });
}

void cmd_fixations(const sg::PipelineConfig& cfg) {
  per_video(cfg, [&](const std::string& v) {
    log("fixations", v + ": " + std::to_string(sg::stage_fixations(cfg, v).size()) + " fixations");
  });
}

void cmd_extract(const sg::PipelineConfig& cfg) {
  auto oracle = make_oracle(cfg);
  per_video(cfg, [&](const std::string& v) {
    const auto recs = sg::stage_extract(cfg, v, *oracle);
    std::size_t failed = 0;
    for (const auto& r : recs) failed += r.contains("error");
    log("extract-objects", v + ": " + std::to_string(recs.size()) + " fixations, " + std::to_string(failed) + " unusable");
  });
}

void cmd_scanpath(const sg::PipelineConfig& cfg) {
  per_video(cfg, [&](const std::string& v) {
    log("scanpath", v + ": " + std::to_string(sg::stage_scanpath(cfg, v).size()) + " entries");
  });
}

void cmd_genqa(sg::PipelineConfig cfg, const Options& o) {
  if (o.seed) cfg.qa.seed = *o.seed;
  if (!o.tasks.empty()) cfg.qa.tasks = o.tasks;
  for (const auto& t : cfg.qa.tasks) sg::task_from_name(t);
  const auto raw = sg::load_scanpaths(cfg);
  const auto decisions = sg::load_decisions(cfg);
  const bool needs_oracle = sg::task_enabled(cfg.qa.tasks, sg::Task::OAR) || cfg.qa.oracle_static_filter;
  std::unique_ptr<sg::Oracle> oracle = needs_oracle ? make_oracle(cfg) : nullptr;
  std::vector<std::string> ids;
  for (const auto& [id, _] : raw) ids.push_back(id);
  std::vector<sg::QaCorpus> parts(ids.size());
  sg::detail::parallel_for(ids.size(), cfg.jobs, [&](std::size_t i) {
    const auto verified = sg::apply_verification(raw.at(ids[i]), decisions);
    sg::write_scanpath(cfg.video_out(ids[i]) / "scanpath.verified.json", verified);
    parts[i] = sg::generate_for_video(cfg, verified, oracle.get());
  });
  sg::QaCorpus all;
  for (auto& p : parts) {
    for (auto& x : p.mcq) all.mcq.push_back(std::move(x));
    for (auto& x : p.proactive) all.proactive.push_back(std::move(x));
    for (auto& x : p.skips) all.skips.push_back(std::move(x));
  }
  sg::write_corpus(cfg, all);
  log("genqa", std::to_string(all.mcq.size()) + " multiple-choice, " + std::to_string(all.proactive.size()) +
                   " proactive, " + std::to_string(all.skips.size()) + " skipped");
}

std::unique_ptr<sg::ModelAdapter> make_adapter(const sg::PipelineConfig& cfg, const sg::QaCorpus& corpus,
                                               std::unique_ptr<sg::Oracle>& keep) {
  const auto& a = cfg.adapter;
  if (a.kind == "random") return std::make_unique<sg::RandomChoiceAdapter>(a.seed);
  if (a.kind == "answer-key") return std::make_unique<sg::ScriptedAdapter>(sg::answer_key(corpus.mcq, corpus.proactive));
  if (a.kind == "scripted") {
    if (a.path.empty()) throw sg::UsageError("adapter.path is required for scripted adapters");
    return std::make_unique<sg::ScriptedAdapter>(sg::ScriptedAdapter::from_file(cfg.resolve(a.path)));
  }
  if (a.kind == "constant") return std::make_unique<sg::ConstantAdapter>(a.text);
  if (a.kind == "http") {
    keep = std::make_unique<sg::ChatCompletionOracle>(a.endpoint);
    return std::make_unique<sg::OracleAdapter>(*keep);
  }
  throw sg::UsageError("unknown adapter kind '" + a.kind + "' (random, answer-key, scripted, constant, http)");
}

void cmd_evaluate(sg::PipelineConfig cfg, const Options& o) {
  if (!o.tasks.empty()) cfg.eval_tasks = o.tasks;
  for (const auto& t : cfg.eval_tasks) sg::task_from_name(t);
  if (!o.mode.empty()) cfg.eval.mode = sg::prompting_mode_from_string(o.mode);
  if (o.omega) cfg.eval.omega = *o.omega;
  if (o.max_frames) cfg.eval.max_frames = *o.max_frames;
  if (!o.adapter.empty()) {
    const auto colon = o.adapter.find(':');
    cfg.adapter.kind = o.adapter.substr(0, colon);
    if (colon != std::string::npos) {
      const std::string arg = o.adapter.substr(colon + 1);
      if (cfg.adapter.kind == "scripted") cfg.adapter.path = fs::absolute(arg).string();
      else if (cfg.adapter.kind == "constant") cfg.adapter.text = arg;
    }
  }
  if (o.seed) cfg.adapter.seed = *o.seed;
  cfg.eval.jobs = cfg.jobs;
  cfg.eval.validate();

  auto corpus = sg::read_corpus(cfg);
  std::erase_if(corpus.mcq, [&](const sg::QAItem& q) { return !sg::task_enabled(cfg.eval_tasks, q.task); });
  std::erase_if(corpus.proactive, [&](const sg::ProactiveItem& p) { return !sg::task_enabled(cfg.eval_tasks, p.task); });

  sg::VideoFrameProvider frames;
  sg::GazeContexts gaze;
  for (const auto& v : video_ids(cfg)) {
    frames.add(v, std::make_shared<sg::DirectoryFrameSource>(cfg.dataset() / v / "frames"));
    if (cfg.eval.mode != sg::PromptingMode::none) {
      sg::GazeContext ctx;
      ctx.trajectory = sg::read_trajectory(sg::require_artifact(cfg.video_out(v) / "trajectory.jsonl", "project"));
      ctx.fixations = sg::read_fixations(sg::require_artifact(cfg.video_out(v) / "fixations.jsonl", "fixations"));
      ctx.fov_radius = sg::video_fov(cfg, v, ctx.trajectory.width).radius_px;
      gaze[v] = std::move(ctx);
    }
  }
  std::unique_ptr<sg::Oracle> remote;
  auto adapter = make_adapter(cfg, corpus, remote);
  auto report = sg::merge(sg::run_mcq_eval(corpus.mcq, *adapter, frames, cfg.eval, &gaze),
                          sg::run_proactive_eval(corpus.proactive, *adapter, frames, cfg.eval, &gaze));
  fs::create_directories(cfg.eval_dir());
  auto j = sg::to_json(report, cfg.eval);
  j["adapter"] = cfg.adapter.kind;
  sg::io::write_json(cfg.eval_dir() / "report.json", j);
  sg::io::write_jsonl(cfg.eval_dir() / "audit.jsonl", report.audit);
  for (const auto& [t, r] : report.mcq)
    std::cout << sg::task_name(t) << "\taccuracy " << r.accuracy << "\t(" << r.correct << "/" << r.total << ", "
              << r.unparsed << " unparsed)\n";
  for (const auto& [t, r] : report.proactive)
    std::cout << sg::task_name(t) << "\taccuracy " << r.accuracy << "\ttype1 " << r.type1_rate << "\ttype2 "
              << r.type2_rate << "\t(" << r.total << " checkpoints)\n";
}

void cmd_serve(const sg::PipelineConfig& cfg, const Options& o) {
  auto scanpaths = sg::load_scanpaths(cfg);
  std::map<std::string, std::string> sources;
  for (const auto& v : sg::list_videos(cfg)) sources[v.video_id] = v.source.empty() ? "default" : v.source;
  sg::AnnotationStore store(cfg.annotations(), std::move(scanpaths));
  sg::AnnotationServer server(store, cfg.media_root(), sources);
  log("serve-annotation", "listening on http://" + o.host + ":" + std::to_string(o.port) + " (decisions in " +
                              cfg.annotations().string() + ")");
  server.listen(o.host, o.port);
}

void cmd_export(const sg::PipelineConfig& cfg) {
  const auto corpus = sg::read_corpus(cfg);
  const auto records = sg::export_finetune(corpus.proactive);
  sg::io::write_jsonl(cfg.qa_dir() / "finetune.jsonl", records);
  log("export-finetune", std::to_string(records.size()) + " conversations");
}

void cmd_stats(const sg::PipelineConfig& cfg) {
  const auto corpus = sg::read_corpus(cfg);
  const auto verified = sg::load_scanpaths(cfg, "scanpath.verified.json", "genqa");
  auto j = sg::corpus_stats(cfg, corpus, verified);
  if (fs::exists(cfg.annotations() / "decisions.jsonl")) {
    std::map<std::string, std::string> sources;
    for (const auto& v : sg::list_videos(cfg)) sources[v.video_id] = v.source.empty() ? "default" : v.source;
    j["agreement"] = sg::agreement_report(sg::replay(sg::load_decisions(cfg)), sg::load_scanpaths(cfg), sources);
  }
  sg::io::write_json(cfg.output() / "stats.json", j);
  for (const auto& t : j["tasks"]) std::cout << t["task"].get<std::string>() << "\t" << t["count"] << "\n";
  std::cout << "Total\t" << j["total"] << "\n";
}

void cmd_synth(const Options& o) {
  sg::synth::SynthOptions opt;
  opt.seed = o.synth_seed;
  opt.videos = o.synth_videos;
  opt.duration = o.synth_duration;
  const auto path = sg::synth::synthesize(o.synth_out, opt);
  log("synth", "wrote " + (fs::path(o.synth_out) / "dataset").string() + " and " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaze-guided streaming video QA pipeline"};
  app.require_subcommand(1);
  Options o;
  app.add_option("-c,--config", o.config, "Pipeline configuration file")->capture_default_str();
  app.add_option("-j,--jobs", o.jobs, "Videos / adapter calls processed in parallel (overrides config)");
  app.add_option("--video", o.videos, "Restrict to these video ids");

  auto* synth = app.add_subcommand("synth", "Generate the synthetic mini-dataset, canned oracle responses and config");
  synth->add_option("-o,--out", o.synth_out, "Output directory")->capture_default_str();
  synth->add_option("--videos", o.synth_videos, "Number of videos")->capture_default_str();
  synth->add_option("--duration", o.synth_duration, "Seconds per video")->capture_default_str();
  synth->add_option("--seed", o.synth_seed, "Generator seed")->capture_default_str();

  auto* project = app.add_subcommand("project", "Project gaze onto frames (per-frame pixel trajectory)");
  auto* fixations = app.add_subcommand("fixations", "Extract fixations from trajectories");
  auto* extract = app.add_subcommand("extract-objects", "Query the oracle for FOV / out-of-FOV objects per fixation");
  auto* scanpath = app.add_subcommand("scanpath", "Assemble scanpaths from fixations and extractions");
  auto* genqa = app.add_subcommand("genqa", "Apply annotator decisions and generate the QA corpus");
  genqa->add_option("--seed", o.seed, "Global QA seed");
  genqa->add_option("--tasks", o.tasks, "Task filter (NFI OTP GSM SR OI_E OI_H OAR FAP GTA OAA)")->delimiter(',');
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a model adapter on the QA corpus");
  evaluate->add_option("--tasks", o.tasks, "Task filter")->delimiter(',');
  evaluate->add_option("--mode", o.mode, "Prompting mode: none, text-gaze, visual-gaze");
  evaluate->add_option("--omega", o.omega, "Present-window length in seconds");
  evaluate->add_option("--max-frames", o.max_frames, "Frame cap per question");
  evaluate->add_option("--adapter", o.adapter,
                       "random | answer-key | scripted:<answers.json> | constant:<text> | http (endpoint from config)");
  evaluate->add_option("--seed", o.seed, "Seed of the random adapter");
  auto* serve = app.add_subcommand("serve-annotation", "Serve the annotation web API");
  serve->add_option("--host", o.host)->capture_default_str();
  serve->add_option("--port", o.port)->capture_default_str();
  auto* exportft = app.add_subcommand("export-finetune", "Write proactive items as multi-turn training conversations");
  auto* stats = app.add_subcommand("stats", "Corpus statistics (per-task counts, video lengths, agreement)");
  auto* run = app.add_subcommand("run", "project, fixations, extract-objects, scanpath, genqa, evaluate, export-finetune, stats");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(sg::ErrorKind::usage);
  }

  try {
    if (synth->parsed()) {
      cmd_synth(o);
      return 0;
    }
    const auto cfg = load(o);
    if (project->parsed()) cmd_project(cfg);
    else if (fixations->parsed()) cmd_fixations(cfg);
    else if (extract->parsed()) cmd_extract(cfg);
    else if (scanpath->parsed()) cmd_scanpath(cfg);
    else if (genqa->parsed()) cmd_genqa(cfg, o);
    else if (evaluate->parsed()) cmd_evaluate(cfg, o);
    else if (serve->parsed()) cmd_serve(cfg, o);
    else if (exportft->parsed()) cmd_export(cfg);
    else if (stats->parsed()) cmd_stats(cfg);
    else if (run->parsed()) {
      cmd_project(cfg);
      cmd_fixations(cfg);
      cmd_extract(cfg);
      cmd_scanpath(cfg);
      cmd_genqa(cfg, o);
      cmd_evaluate(cfg, o);
      cmd_export(cfg);
      cmd_stats(cfg);
    }
  } catch (const sg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(sg::ErrorKind::data);
  }
  return 0;
}
