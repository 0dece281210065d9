#pragma once

#include <cstdlib>
#include <string>

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include "streamgaze/digest.hpp"
#include "streamgaze/oracle.hpp"

namespace streamgaze {

/// Where a chat-completion model lives. `api_key` may be left empty and
/// supplied through the environment variable named by `api_key_env`.
struct EndpointConfig {
  std::string url;  // e.g. http://localhost:8000/v1/chat/completions
  std::string model;
  std::string api_key;
  std::string api_key_env = "STREAMGAZE_API_KEY";
  int timeout_s = 120;
  double temperature = 0.0;

  std::string resolved_key() const {
    if (!api_key.empty()) return api_key;
    if (const char* v = std::getenv(api_key_env.c_str())) return v;
    return {};
  }
};

inline io::ordered_json to_json(const EndpointConfig& e) {
  io::ordered_json j;
  j["url"] = e.url;
  j["model"] = e.model;
  j["api_key"] = e.api_key;
  j["api_key_env"] = e.api_key_env;
  j["timeout_s"] = e.timeout_s;
  j["temperature"] = e.temperature;
  return j;
}

inline EndpointConfig endpoint_from_json(const io::json& j) {
  EndpointConfig e;
  e.url = j.value("url", e.url);
  e.model = j.value("model", e.model);
  e.api_key = j.value("api_key", e.api_key);
  e.api_key_env = j.value("api_key_env", e.api_key_env);
  e.timeout_s = j.value("timeout_s", e.timeout_s);
  e.temperature = j.value("temperature", e.temperature);
  return e;
}

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline SplitUrl split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw UsageError("endpoint url needs a scheme: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

/// Request body in the widely used chat-completion shape: one user turn with
/// the images as PNG data URLs followed by the text.
inline io::json chat_completion_body(const EndpointConfig& cfg, const OracleRequest& req) {
  io::json content = io::json::array();
  for (const auto& img : req.images) {
    const auto png = encode_png(img);
    content.push_back({{"type", "image_url"}, {"image_url", {{"url", "data:image/png;base64," + base64_encode(png)}}}});
  }
  content.push_back({{"type", "text"}, {"text", req.prompt}});
  return {{"model", cfg.model},
          {"temperature", cfg.temperature},
          {"messages", io::json::array({{{"role", "user"}, {"content", content}}})}};
}

class ChatCompletionOracle : public Oracle {
 public:
  explicit ChatCompletionOracle(EndpointConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.url.empty()) throw UsageError("oracle endpoint url not configured");
  }

  std::string complete(const OracleRequest& request) override {
    const auto [origin, path] = split_url(cfg_.url);
    httplib::Client client(origin);
    client.set_read_timeout(cfg_.timeout_s, 0);
    client.set_connection_timeout(10, 0);
    httplib::Headers headers;
    if (auto key = cfg_.resolved_key(); !key.empty()) headers.emplace("Authorization", "Bearer " + key);
    auto res = client.Post(path, headers, chat_completion_body(cfg_, request).dump(), "application/json");
    if (!res) throw TransportError("oracle transport: " + httplib::to_string(res.error()), true);
    if (res->status == 429 || res->status >= 500)
      throw TransportError("oracle http " + std::to_string(res->status), true);
    if (res->status != 200) throw TransportError("oracle http " + std::to_string(res->status) + ": " + res->body, false);
    try {
      const auto j = io::json::parse(res->body);
      const auto& msg = j.at("choices").at(0).at("message").at("content");
      if (msg.is_string()) return msg.get<std::string>();
      std::string joined;  // content-part arrays
      for (const auto& part : msg)
        if (part.value("type", "") == "text") joined += part.value("text", "");
      return joined;
    } catch (const io::json::exception& e) {
      throw TransportError(std::string("oracle response not in chat-completion shape: ") + e.what(), false);
    }
  }

 private:
  EndpointConfig cfg_;
};

}  // namespace streamgaze
