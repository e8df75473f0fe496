#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "semveh/types.hpp"

namespace semveh {

struct ExtractionRequest {
  std::string image_bytes;
  std::string media_type = "image/jpeg";
  std::string prompt = "Describe the scene for vehicular coordination.";
  std::string model = "llava-1.5-7b-hf";
  int max_output_words = 4096;  // l_max
};

struct SemanticMessage {
  std::string text;
  int word_count = 0;
  std::size_t source_bytes = 0;
  std::size_t text_bytes = 0;
  Scalar latency_s = 0.0;
  int retries = 0;

  Scalar compression_ratio() const {
    return source_bytes > 0 ? static_cast<Scalar>(text_bytes) / source_bytes : 0.0;
  }
};

struct ExtractionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Boundary where a vision-LLM plugs in. Implementations are stateless per
/// call and must be deterministic for identical requests where possible.
class ExtractionBackend {
 public:
  virtual ~ExtractionBackend() = default;
  virtual std::string complete(const ExtractionRequest& request) = 0;
  virtual int last_retries() const { return 0; }
};

/// Deterministic fixture-backed backend: captions are keyed by the hash of
/// the image bytes. Fixture directories hold NNN.jpg + NNN.txt pairs and a
/// manifest.csv with columns id,image_bytes,text_bytes.
class MockBackend : public ExtractionBackend {
 public:
  explicit MockBackend(const std::string& fixtures_dir);
  std::string complete(const ExtractionRequest& request) override;

  struct Fixture {
    std::string id;
    std::string image_path;
    std::string caption;
    std::size_t image_bytes = 0;
    std::size_t text_bytes = 0;
  };
  const std::vector<Fixture>& fixtures() const { return fixtures_; }

 private:
  std::vector<Fixture> fixtures_;
  std::map<std::uint64_t, std::size_t> by_image_hash_;
};

/// OpenAI-compatible chat-completions client sending the prompt plus the
/// image as a base64 data URI. Bearer token comes from SEMVEH_LLM_API_KEY.
class RemoteBackend : public ExtractionBackend {
 public:
  explicit RemoteBackend(const std::string& base_url, int timeout_s = 30, int max_retries = 0);
  std::string complete(const ExtractionRequest& request) override;
  int last_retries() const override { return last_retries_; }

  /// Request body for a given request; exposed so tests can snapshot the
  /// wire format without a server.
  static std::string build_request_body(const ExtractionRequest& request);

 private:
  std::string base_url_;
  int timeout_s_;
  int max_retries_;
  int last_retries_ = 0;
};

/// Runs the backend, truncates at max_output_words, and records byte sizes.
SemanticMessage extract(const ExtractionRequest& request, ExtractionBackend& backend);

struct CompressionReport {
  Scalar mean_ratio = 0.0;
  Scalar min_ratio = 0.0;
  Scalar max_ratio = 0.0;
  int count = 0;
  bool pass = false;  // mean ratio <= 0.10
};

CompressionReport compression_report(const std::vector<SemanticMessage>& messages);

std::string base64_encode(const std::string& bytes);
std::string read_file_bytes(const std::string& path);

}  // namespace semveh
