#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <thread>

#include <httplib.h>

#include "streamgaze/annotation.hpp"

namespace streamgaze {

/// JSON web API over an AnnotationStore, plus static media.
///
///   GET  /api/episodes               episodes in video, fixation order with review progress
///   GET  /api/episodes/{video}/{fix} one episode: objects, media references, live decisions
///   POST /api/decisions              submit a VerificationRecord
///   GET  /api/decisions              live decisions (?annotator=, ?video= filters)
///   GET  /api/stats                  agreement table per source
///   GET  /media/...                  files under media_root
class AnnotationServer {
 public:
  AnnotationServer(AnnotationStore& store, std::filesystem::path media_root,
                   std::map<std::string, std::string> video_source = {})
      : store_(store), media_root_(std::move(media_root)), video_source_(std::move(video_source)) {
    routes();
  }

  ~AnnotationServer() { stop(); }

  /// Binds to host:port (0 = any free port) and serves on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0) {
    const int bound = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw UsageError("cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return bound;
  }

  /// Serves on the calling thread until stop().
  void listen(const std::string& host, int port) {
    if (!server_.listen(host, port)) throw UsageError("cannot listen on " + host + ":" + std::to_string(port));
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  httplib::Server& http() noexcept { return server_; }

 private:
  static void send_json(httplib::Response& res, const io::ordered_json& j, int status = 200) {
    res.status = status;
    res.set_content(j.dump(2), "application/json");
  }

  static void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, {{"error", message}}, status);
  }

  io::ordered_json episode_summary(const Scanpath& s, const ScanpathEntry& e,
                                   const std::vector<VerificationRecord>& live) const {
    std::set<std::string> reviewed;
    for (const auto& r : live)
      if (r.video_id == s.video_id && r.fixation_index == e.fixation.index) reviewed.insert(r.object_identity);
    const std::size_t total = e.fov_objects.size() + e.out_objects.size();
    return {{"video_id", s.video_id},
            {"fixation_index", e.fixation.index},
            {"t_start", e.fixation.t_start},
            {"t_end", e.fixation.t_end},
            {"objects", total},
            {"reviewed_objects", reviewed.size()},
            {"complete", reviewed.size() >= total}};
  }

  std::string media_ref(const std::string& rel) const {
    return std::filesystem::exists(media_root_ / rel) ? "/media/" + rel : std::string{};
  }

  void routes() {
    if (std::filesystem::is_directory(media_root_)) server_.set_mount_point("/media", media_root_.string());

    server_.Get("/api/episodes", [this](const httplib::Request&, httplib::Response& res) {
      const auto live = store_.live();
      io::ordered_json list = io::ordered_json::array();
      for (const auto& [_, s] : store_.scanpaths())
        for (const auto& e : s.entries) list.push_back(episode_summary(s, e, live));
      send_json(res, list);
    });

    server_.Get(R"(/api/episodes/([^/]+)/(-?\d+))", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string video = req.matches[1];
      const int fix = std::stoi(req.matches[2]);
      auto sp = store_.scanpaths().find(video);
      const ScanpathEntry* e = sp == store_.scanpaths().end() ? nullptr : find_entry(sp->second, fix);
      if (!e) return send_error(res, 404, "no episode " + video + "/" + std::to_string(fix));
      const auto live = store_.live();
      io::ordered_json j = episode_summary(sp->second, *e, live);
      j["centroid"] = {e->fixation.centroid_x, e->fixation.centroid_y};
      j["frame_range"] = {e->fixation.frame_range.first, e->fixation.frame_range.second};
      const std::string stem = video + "/fixation_" + std::to_string(fix);
      j["clip"] = media_ref(stem + "_clip.png");
      j["fov_patch"] = media_ref(stem + "_fov.png");
      j["out_of_fov"] = media_ref(stem + "_outfov.png");
      j["fov_objects"] = io::ordered_json::array();
      for (const auto& o : e->fov_objects) j["fov_objects"].push_back(to_json(o));
      j["out_objects"] = io::ordered_json::array();
      for (const auto& o : e->out_objects) j["out_objects"].push_back(to_json(o));
      j["decisions"] = io::ordered_json::array();
      for (const auto& r : live)
        if (r.video_id == video && r.fixation_index == fix) j["decisions"].push_back(to_json(r));
      send_json(res, j);
    });

    server_.Post("/api/decisions", [this](const httplib::Request& req, httplib::Response& res) {
      try {
        const auto body = io::json::parse(req.body);
        const std::size_t id = store_.submit(verification_from_json(body));
        send_json(res, {{"id", id}}, 201);
      } catch (const io::json::exception& e) {
        send_error(res, 400, std::string("malformed JSON: ") + e.what());
      } catch (const NotFoundError& e) {
        send_error(res, 404, e.what());
      } catch (const ValidationError& e) {
        send_error(res, 400, e.what());
      }
    });

    server_.Get("/api/decisions", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string annotator = req.get_param_value("annotator");
      const std::string video = req.get_param_value("video");
      io::ordered_json list = io::ordered_json::array();
      for (const auto& r : store_.live())
        if ((annotator.empty() || r.annotator_id == annotator) && (video.empty() || r.video_id == video))
          list.push_back(to_json(r));
      send_json(res, list);
    });

    server_.Get("/api/stats", [this](const httplib::Request&, httplib::Response& res) {
      send_json(res, agreement_report(store_.live(), store_.scanpaths(), video_source_));
    });

    server_.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        send_error(res, 500, e.what());
      } catch (...) {
        send_error(res, 500, "internal error");
      }
    });
  }

  AnnotationStore& store_;
  std::filesystem::path media_root_;
  std::map<std::string, std::string> video_source_;
  httplib::Server server_;
  std::thread thread_;
};

}  // namespace streamgaze
