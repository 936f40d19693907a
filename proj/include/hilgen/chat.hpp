#pragma once

#include <atomic>
#include <cstddef>
#include <mutex>
#include <string>

namespace hilgen {

struct GenerationRequest {
  std::string prompt;
  double temperature = 0.7;  // [0, 2]
  int max_output_tokens = 1024;
  std::size_t request_index = 0;
};

enum class ChatMode { http, mock };

struct ChatClientConfig {
  ChatMode mode = ChatMode::mock;
  std::string endpoint = "http://localhost:8080/v1/chat/completions";
  std::string model = "gpt-3.5-turbo";
  std::string api_key_env;   // name of the env var holding the token, may be empty
  int retries = 2;           // transport retries; total attempts = retries + 1
  int timeout_ms = 30000;
  std::string cache_dir;     // empty disables caching
  std::string mock_dir;      // required in mock mode
  std::size_t max_in_flight = 1;
};

// Chat-completion wire contract: POST {model, messages, temperature,
// max_tokens}; the reply's first choice's message content is the answer.
// Responses are cached under cache_dir keyed by a digest of
// (model, temperature, max_output_tokens, prompt); mock mode reads the same
// "<digest>.txt" layout from mock_dir.
class ChatClient {
 public:
  explicit ChatClient(ChatClientConfig cfg);

  std::string complete(const GenerationRequest& req);

  const ChatClientConfig& config() const { return cfg_; }

  static std::string request_digest(const ChatClientConfig& cfg, const GenerationRequest& req);

  struct Stats {
    std::size_t network_attempts = 0;
    std::size_t cache_hits = 0;
    std::size_t mock_hits = 0;
  };
  Stats stats() const;

 private:
  std::string fetch_http(const GenerationRequest& req);

  ChatClientConfig cfg_;
  mutable std::mutex mutex_;
  std::atomic<std::size_t> network_attempts_{0};
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> mock_hits_{0};
};

// Atomic write: temp file in the target directory, then rename.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace hilgen
