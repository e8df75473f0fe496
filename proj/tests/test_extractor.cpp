#include <doctest.h>

#include "semveh/extractor.hpp"
#include "test_util.hpp"

#include <atomic>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

using namespace semveh;

namespace {

const char* kFixturesDir = SEMVEH_SOURCE_DIR "/data/fixtures";

}  // namespace

TEST_SUITE_BEGIN("extractor");

TEST_CASE("base64 reference vectors") {
  CHECK(base64_encode("") == "");
  CHECK(base64_encode("f") == "Zg==");
  CHECK(base64_encode("fo") == "Zm8=");
  CHECK(base64_encode("foo") == "Zm9v");
  CHECK(base64_encode("foobar") == "Zm9vYmFy");
}

TEST_CASE("parking-lot fixture reproduces the 12.1/614 compression ratio") {
  MockBackend backend(kFixturesDir);
  ExtractionRequest req;
  req.image_bytes = read_file_bytes(std::string(kFixturesDir) + "/000.jpg");
  const SemanticMessage msg = extract(req, backend);
  CHECK(msg.source_bytes == 614000);
  CHECK(msg.text_bytes == 12100);
  CHECK(msg.compression_ratio() == doctest::Approx(0.0197).epsilon(2e-3));
  CHECK(msg.word_count > 0);
  CHECK(msg.retries == 0);
}

TEST_CASE("mock backend is deterministic") {
  MockBackend backend(kFixturesDir);
  ExtractionRequest req;
  req.image_bytes = read_file_bytes(std::string(kFixturesDir) + "/001.jpg");
  const SemanticMessage a = extract(req, backend);
  const SemanticMessage b = extract(req, backend);
  CHECK(a.text == b.text);
  CHECK(a.text_bytes == b.text_bytes);
}

TEST_CASE("unknown image hash raises an extraction error") {
  MockBackend backend(kFixturesDir);
  ExtractionRequest req;
  req.image_bytes = "not one of the fixtures";
  CHECK_THROWS_AS(extract(req, backend), ExtractionError);
}

TEST_CASE("empty image and bad word budget are rejected") {
  MockBackend backend(kFixturesDir);
  ExtractionRequest req;
  CHECK_THROWS_AS(extract(req, backend), ExtractionError);
  req.image_bytes = "x";
  req.max_output_words = 0;
  CHECK_THROWS_AS(extract(req, backend), ExtractionError);
}

TEST_CASE("truncation never exceeds l_max words") {
  MockBackend backend(kFixturesDir);
  ExtractionRequest req;
  req.image_bytes = read_file_bytes(std::string(kFixturesDir) + "/000.jpg");
  for (int l : {1, 7, 50}) {
    req.max_output_words = l;
    const SemanticMessage msg = extract(req, backend);
    CHECK(msg.word_count <= l);
    // count words in the returned text directly
    int words = msg.text.empty() ? 0 : 1;
    for (char c : msg.text) {
      if (c == ' ') ++words;
    }
    CHECK(words <= l);
  }
  req.max_output_words = 1;
  const SemanticMessage one = extract(req, backend);
  CHECK(one.word_count == 1);
  CHECK(one.text.find(' ') == std::string::npos);
}

TEST_CASE("fixture corpus passes the compression threshold") {
  MockBackend backend(kFixturesDir);
  std::vector<SemanticMessage> messages;
  for (const auto& fixture : backend.fixtures()) {
    ExtractionRequest req;
    req.image_bytes = read_file_bytes(fixture.image_path);
    messages.push_back(extract(req, backend));
  }
  const CompressionReport report = compression_report(messages);
  CHECK(report.count == 4);
  CHECK(report.mean_ratio <= 0.10);
  CHECK(report.pass);
}

TEST_CASE("compression report arithmetic and threshold logic") {
  SemanticMessage a, b;
  a.source_bytes = 100;
  a.text_bytes = 2;
  b.source_bytes = 100;
  b.text_bytes = 4;
  const CompressionReport mean_check = compression_report({a, b});
  CHECK(mean_check.mean_ratio == doctest::Approx(0.03).epsilon(1e-12));
  CHECK(mean_check.min_ratio == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(mean_check.max_ratio == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(mean_check.pass);

  SemanticMessage fat;
  fat.source_bytes = 100;
  fat.text_bytes = 50;
  const CompressionReport fail_check = compression_report({fat});
  CHECK_FALSE(fail_check.pass);
  CHECK_THROWS_AS(compression_report({}), ExtractionError);
}

TEST_CASE("remote request bodies are byte-stable for identical requests") {
  ExtractionRequest req;
  req.image_bytes = "tiny image";
  req.prompt = "What is ahead?";
  req.model = "llava-1.5-7b-hf";
  const std::string a = RemoteBackend::build_request_body(req);
  const std::string b = RemoteBackend::build_request_body(req);
  CHECK(a == b);
  // Wire format: chat completions with a text part and a data-URI image part.
  const auto j = nlohmann::json::parse(a);
  CHECK(j.at("model") == "llava-1.5-7b-hf");
  CHECK(j.at("messages").at(0).at("role") == "user");
  CHECK(j.at("messages").at(0).at("content").at(0).at("type") == "text");
  const std::string url =
      j.at("messages").at(0).at("content").at(1).at("image_url").at("url").get<std::string>();
  CHECK(url.rfind("data:image/jpeg;base64,", 0) == 0);
  CHECK(url.substr(23) == base64_encode("tiny image"));
}

TEST_CASE("remote backend against an in-process server") {
  httplib::Server server;
  std::atomic<int> fail_first{1};
  std::string seen_auth;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    if (fail_first.fetch_sub(1) > 0) {
      res.status = 500;
      res.set_content("busy", "text/plain");
      return;
    }
    const auto body = nlohmann::json::parse(req.body);
    nlohmann::json reply = {
        {"choices",
         {{{"message", {{"content", "a quiet street with two parked cars"}}}}}}};
    res.set_content(reply.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&]() { server.listen_after_bind(); });
  server.wait_until_ready();

  setenv("SEMVEH_LLM_API_KEY", "sk-test-123", 1);
  ExtractionRequest req;
  req.image_bytes = "img";
  req.max_output_words = 5;

  // Zero retries: the first 500 surfaces as an error.
  RemoteBackend strict("http://127.0.0.1:" + std::to_string(port));
  CHECK_THROWS_AS(extract(req, strict), ExtractionError);

  // One retry recovers and the retry count is reported.
  fail_first = 1;
  RemoteBackend retrying("http://127.0.0.1:" + std::to_string(port), 5, 1);
  const SemanticMessage msg = extract(req, retrying);
  CHECK(msg.text == "a quiet street with two");  // truncated at 5 words
  CHECK(msg.retries == 1);
  CHECK(seen_auth == "Bearer sk-test-123");

  server.stop();
  server_thread.join();
}

TEST_CASE("unreachable endpoint fails with zero retries by default") {
  ExtractionRequest req;
  req.image_bytes = "img";
  RemoteBackend backend("http://127.0.0.1:1", 1);
  try {
    extract(req, backend);
    FAIL("expected ExtractionError");
  } catch (const ExtractionError& e) {
    CHECK(std::string(e.what()).find("1 attempt") != std::string::npos);
  }
}

TEST_SUITE_END();
