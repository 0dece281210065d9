#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>

#include "streamgaze/oracle.hpp"
#include "streamgaze/oracle_http.hpp"

using namespace streamgaze;

namespace {

OracleRequest req_with(std::string prompt, Rgb color = {1, 2, 3}) {
  return {{Image(4, 4, color)}, std::move(prompt)};
}

class FlakyOracle : public Oracle {
 public:
  FlakyOracle(int failures, bool transient) : failures_(failures), transient_(transient) {}
  std::string complete(const OracleRequest&) override {
    ++calls;
    if (calls <= failures_) throw TransportError("boom", transient_);
    return "ok";
  }
  int calls = 0;

 private:
  int failures_;
  bool transient_;
};

}  // namespace

TEST(MockOracle, LookupStrictFallbackAndDirectory) {
  MockOracle m;
  m.add(req_with("p"), "r1");
  EXPECT_EQ(m.complete(req_with("p")), "r1");
  EXPECT_THROW(m.complete(req_with("q")), LookupError);
  EXPECT_THROW(m.complete(req_with("p", {9, 9, 9})), LookupError);

  MockOracle lenient(false, "fallback");
  EXPECT_EQ(lenient.complete(req_with("q")), "fallback");

  const auto dir = std::filesystem::temp_directory_path() / "sg_mock_oracle";
  std::filesystem::remove_all(dir);
  m.save_directory(dir);
  MockOracle loaded;
  loaded.load_directory(dir);
  EXPECT_EQ(loaded.size(), 1u);
  EXPECT_EQ(loaded.complete(req_with("p")), "r1");
  std::filesystem::remove_all(dir);
  EXPECT_THROW(loaded.load_directory(dir), DataError);
}

TEST(MockOracle, RecordingCapturesExchanges) {
  MockOracle inner(false, "answer");
  MockOracle sink;
  RecordingOracle rec(inner, sink);
  EXPECT_EQ(rec.complete(req_with("x")), "answer");
  EXPECT_EQ(sink.complete(req_with("x")), "answer");
}

TEST(Retry, ExponentialBackoffOnTransientFailures) {
  std::vector<long long> slept;
  RetryPolicy policy;
  policy.sleep = [&](std::chrono::milliseconds d) { slept.push_back(d.count()); };
  FlakyOracle twice(2, true);
  EXPECT_EQ(request_extraction({Image(2, 2)}, "p", twice, policy), "ok");
  EXPECT_EQ(twice.calls, 3);
  EXPECT_EQ(slept, (std::vector<long long>{1000, 2000}));

  slept.clear();
  FlakyOracle always(100, true);
  try {
    request_extraction({Image(2, 2)}, "p", always, policy);
    FAIL() << "expected TransportError";
  } catch (const TransportError& e) {
    EXPECT_FALSE(e.transient());
    EXPECT_NE(std::string(e.what()).find("3 attempt"), std::string::npos);
  }
  EXPECT_EQ(always.calls, 3);
  EXPECT_EQ(slept, (std::vector<long long>{1000, 2000}));

  slept.clear();
  FlakyOracle fatal(1, false);
  EXPECT_THROW(request_extraction({Image(2, 2)}, "p", fatal, policy), TransportError);
  EXPECT_EQ(fatal.calls, 1);
  EXPECT_TRUE(slept.empty());
}

TEST(Retry, InputChecks) {
  MockOracle m(false, "x");
  EXPECT_THROW(request_extraction({}, "p", m), InputError);
  RetryPolicy small;
  small.max_payload_bytes = 10;
  EXPECT_THROW(request_extraction({Image(4, 4)}, "p", m, small), InputError);
}

TEST(ResponseParsing, FovAndOutOfFov) {
  const std::string raw =
      "Sure! Here it is:\n```json\n{\"scene_caption\": \"A kitchen {busy}.\", \"gaze_object\": "
      "{\"object_identity\": \" red cup \", \"detailed_caption\": \"a red cup\"}, \"other_objects\": "
      "[{\"object_identity\": \"knife\", \"detailed_caption\": \"steel\"}]}\n```\nDone.";
  const auto e = parse_fov_extraction(raw);
  EXPECT_EQ(e.scene_caption, "A kitchen {busy}.");
  EXPECT_EQ(e.gaze_object.identity, "red cup");
  EXPECT_EQ(e.gaze_object.region, Region::fov_gazed);
  ASSERT_EQ(e.other_objects.size(), 1u);
  EXPECT_EQ(e.other_objects[0].region, Region::fov_other);
  EXPECT_EQ(parse_fov_extraction(render_fov_extraction(e)), e);

  const auto out = parse_outfov_extraction("{\"other_objects\": []}");
  EXPECT_TRUE(out.empty());
  std::vector<ObjectRecord> objs{{"pan", "black pan", Region::out_of_fov, 0}};
  EXPECT_EQ(parse_outfov_extraction(render_outfov_extraction(objs)), objs);
}

TEST(ResponseParsing, Errors) {
  EXPECT_THROW(parse_fov_extraction("no json here"), ParseError);
  EXPECT_THROW(parse_fov_extraction("{\"scene_caption\": \"x\""), ParseError);
  EXPECT_THROW(parse_fov_extraction("{\"scene_caption\": \"x\", \"other_objects\": []}"), SchemaError);
  EXPECT_THROW(parse_outfov_extraction("{\"objects\": []}"), SchemaError);
  EXPECT_THROW(parse_outfov_extraction("{\"other_objects\": [{\"object_identity\": 3, \"detailed_caption\": \"\"}]}"),
               SchemaError);
  EXPECT_THROW(parse_outfov_extraction("{\"other_objects\": [{\"object_identity\": \" \", \"detailed_caption\": \"\"}]}"),
               ValidationError);
}

TEST(ResponseParsing, PersonRule) {
  EXPECT_THROW(check_person_rule("person"), ValidationError);
  EXPECT_THROW(check_person_rule("Person  holding a cup"), ValidationError);
  EXPECT_NO_THROW(check_person_rule("person wearing a blue apron"));
  EXPECT_NO_THROW(check_person_rule("personal laptop"));
  EXPECT_THROW(
      parse_outfov_extraction("{\"other_objects\": [{\"object_identity\": \"person\", \"detailed_caption\": \"x\"}]}"),
      ValidationError);
}

TEST(Prompts, PoolCanonicalizationAndSubstitution) {
  ObjectPool pool;
  EXPECT_EQ(pool.canonicalize("Red  Cup"), "red cup");
  EXPECT_EQ(pool.canonicalize("red cup"), "red cup");
  EXPECT_EQ(pool.canonicalize("knife"), "knife");
  EXPECT_EQ(pool.size(), 2u);
  EXPECT_THROW(pool.canonicalize("  "), ValidationError);
  const auto p = build_fov_prompt("cutting bread", pool, {12.4, 7.6});
  EXPECT_NE(p.find("cutting bread"), std::string::npos);
  EXPECT_NE(p.find("red cup, knife"), std::string::npos);
  EXPECT_NE(p.find("(12, 8)"), std::string::npos);
  EXPECT_EQ(p.find("{action_caption}"), std::string::npos);
  const auto q = build_outfov_prompt("cutting bread", pool);
  EXPECT_EQ(q.find("{object_pool}"), std::string::npos);
}

TEST(ChatCompletion, TalksToLocalEndpoint) {
  httplib::Server server;
  std::atomic<int> status{200};
  std::string seen_body, seen_auth;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen_body = req.body;
    seen_auth = req.get_header_value("Authorization");
    res.status = status.load();
    res.set_content(R"({"choices":[{"message":{"content":"{\"other_objects\": []}"}}]})", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  EndpointConfig cfg;
  cfg.url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  cfg.model = "test-model";
  cfg.api_key = "secret";
  ChatCompletionOracle oracle(cfg);
  EXPECT_EQ(oracle.complete(req_with("hello")), "{\"other_objects\": []}");
  const auto body = io::json::parse(seen_body);
  EXPECT_EQ(body["model"], "test-model");
  const auto& content = body["messages"][0]["content"];
  ASSERT_EQ(content.size(), 2u);
  EXPECT_EQ(content[0]["image_url"]["url"].get<std::string>().rfind("data:image/png;base64,", 0), 0u);
  EXPECT_EQ(content[1]["text"], "hello");
  EXPECT_EQ(seen_auth, "Bearer secret");

  status = 503;
  try {
    oracle.complete(req_with("x"));
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_TRUE(e.transient());
  }
  status = 400;
  try {
    oracle.complete(req_with("x"));
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_FALSE(e.transient());
  }
  server.stop();
  th.join();

  EndpointConfig dead = cfg;
  dead.url = "http://127.0.0.1:1/v1/chat/completions";
  dead.timeout_s = 2;
  try {
    ChatCompletionOracle(dead).complete(req_with("x"));
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_TRUE(e.transient());
  }
  EXPECT_THROW(ChatCompletionOracle(EndpointConfig{}), UsageError);
}
