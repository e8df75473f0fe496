#include "semveh/extractor.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "semveh/config.hpp"

namespace semveh {

namespace {

using nlohmann::json;

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream in(text);
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

}  // namespace

std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ExtractionError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string base64_encode(const std::string& bytes) {
  static const char* alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  while (i + 2 < bytes.size()) {
    const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                       (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                       static_cast<unsigned char>(bytes[i + 2]);
    out += alphabet[(v >> 18) & 63];
    out += alphabet[(v >> 12) & 63];
    out += alphabet[(v >> 6) & 63];
    out += alphabet[v & 63];
    i += 3;
  }
  if (i + 1 == bytes.size()) {
    const unsigned v = static_cast<unsigned char>(bytes[i]) << 16;
    out += alphabet[(v >> 18) & 63];
    out += alphabet[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == bytes.size()) {
    const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                       (static_cast<unsigned char>(bytes[i + 1]) << 8);
    out += alphabet[(v >> 18) & 63];
    out += alphabet[(v >> 12) & 63];
    out += alphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

MockBackend::MockBackend(const std::string& fixtures_dir) {
  const std::string manifest_path = fixtures_dir + "/manifest.csv";
  std::ifstream manifest(manifest_path);
  if (!manifest) throw ExtractionError("cannot open fixture manifest: " + manifest_path);
  std::string line;
  if (!std::getline(manifest, line)) throw ExtractionError("empty fixture manifest");
  while (std::getline(manifest, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    Fixture f;
    std::string image_bytes_s, text_bytes_s;
    if (!std::getline(row, f.id, ',') || !std::getline(row, image_bytes_s, ',') ||
        !std::getline(row, text_bytes_s, ',')) {
      throw ExtractionError("bad manifest row: " + line);
    }
    f.image_bytes = std::stoull(image_bytes_s);
    f.text_bytes = std::stoull(text_bytes_s);
    f.image_path = fixtures_dir + "/" + f.id + ".jpg";
    f.caption = read_file_bytes(fixtures_dir + "/" + f.id + ".txt");
    const std::string image = read_file_bytes(f.image_path);
    by_image_hash_[fnv1a(image.data(), image.size())] = fixtures_.size();
    fixtures_.push_back(std::move(f));
  }
}

std::string MockBackend::complete(const ExtractionRequest& request) {
  const std::uint64_t h = fnv1a(request.image_bytes.data(), request.image_bytes.size());
  const auto it = by_image_hash_.find(h);
  if (it == by_image_hash_.end()) {
    throw ExtractionError("mock backend: no fixture for image hash " + std::to_string(h));
  }
  return fixtures_[it->second].caption;
}

RemoteBackend::RemoteBackend(const std::string& base_url, int timeout_s, int max_retries)
    : base_url_(base_url), timeout_s_(timeout_s), max_retries_(max_retries) {}

std::string RemoteBackend::build_request_body(const ExtractionRequest& request) {
  const std::string data_uri =
      "data:" + request.media_type + ";base64," + base64_encode(request.image_bytes);
  const json body = {
      {"model", request.model},
      {"max_tokens", request.max_output_words * 2},
      {"messages",
       {{{"role", "user"},
         {"content",
          {{{"type", "text"}, {"text", request.prompt}},
           {{"type", "image_url"}, {"image_url", {{"url", data_uri}}}}}}}}},
  };
  return body.dump();
}

std::string RemoteBackend::complete(const ExtractionRequest& request) {
  const std::string body = build_request_body(request);
  httplib::Client client(base_url_);
  client.set_connection_timeout(timeout_s_, 0);
  client.set_read_timeout(timeout_s_, 0);
  httplib::Headers headers;
  if (const char* key = std::getenv("SEMVEH_LLM_API_KEY")) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  last_retries_ = 0;
  std::string last_error;
  for (int attempt = 0; attempt <= max_retries_; ++attempt) {
    last_retries_ = attempt;
    auto res = client.Post("/v1/chat/completions", headers, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "http status " + std::to_string(res->status) + ": " + res->body;
      continue;
    }
    try {
      const json parsed = json::parse(res->body);
      return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      last_error = std::string("bad response body: ") + e.what();
    }
  }
  throw ExtractionError("remote backend failed after " + std::to_string(last_retries_ + 1) +
                        " attempt(s): " + last_error);
}

SemanticMessage extract(const ExtractionRequest& request, ExtractionBackend& backend) {
  if (request.image_bytes.empty()) throw ExtractionError("extract: image is empty");
  if (request.max_output_words < 1) throw ExtractionError("extract: max_output_words must be >= 1");

  const auto start = std::chrono::steady_clock::now();
  std::string text = backend.complete(request);
  const auto stop = std::chrono::steady_clock::now();
  if (text.empty()) throw ExtractionError("extract: backend returned empty text");

  std::vector<std::string> words = split_words(text);
  if (static_cast<int>(words.size()) > request.max_output_words) {
    words.resize(request.max_output_words);
    std::string truncated;
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (i > 0) truncated += ' ';
      truncated += words[i];
    }
    text = truncated;
  }

  SemanticMessage msg;
  msg.text = text;
  msg.word_count = static_cast<int>(words.size());
  msg.source_bytes = request.image_bytes.size();
  msg.text_bytes = text.size();
  msg.latency_s = std::chrono::duration<Scalar>(stop - start).count();
  msg.retries = backend.last_retries();
  return msg;
}

CompressionReport compression_report(const std::vector<SemanticMessage>& messages) {
  if (messages.empty()) throw ExtractionError("compression_report: no messages");
  CompressionReport report;
  report.count = static_cast<int>(messages.size());
  report.min_ratio = messages.front().compression_ratio();
  report.max_ratio = report.min_ratio;
  Scalar sum = 0.0;
  for (const auto& m : messages) {
    const Scalar r = m.compression_ratio();
    sum += r;
    report.min_ratio = std::min(report.min_ratio, r);
    report.max_ratio = std::max(report.max_ratio, r);
  }
  report.mean_ratio = sum / report.count;
  report.pass = report.mean_ratio <= 0.10;
  return report;
}

}  // namespace semveh
