#include "hilgen/chat.hpp"

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

#include "hilgen/digest.hpp"
#include "hilgen/errors.hpp"

namespace fs = std::filesystem;

namespace hilgen {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + tmp.string());
    out << content;
  }
  fs::rename(tmp, target);
}

ChatClient::ChatClient(ChatClientConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.mode == ChatMode::mock && cfg_.mock_dir.empty()) {
    throw ConfigError("mock mode requires a mock directory");
  }
}

std::string ChatClient::request_digest(const ChatClientConfig& cfg, const GenerationRequest& req) {
  char temp_buf[32];
  std::snprintf(temp_buf, sizeof(temp_buf), "%.6g", req.temperature);
  std::string key = cfg.model;
  key += '\n';
  key += temp_buf;
  key += '\n';
  key += std::to_string(req.max_output_tokens);
  key += '\n';
  key += req.prompt;
  return sha256_hex(key);
}

ChatClient::Stats ChatClient::stats() const {
  return Stats{network_attempts_.load(), cache_hits_.load(), mock_hits_.load()};
}

std::string ChatClient::complete(const GenerationRequest& req) {
  if (req.prompt.empty()) throw DataError("empty prompt");
  if (req.temperature < 0.0 || req.temperature > 2.0) {
    throw DataError("temperature out of [0,2]");
  }
  const std::string digest = request_digest(cfg_, req);

  if (!cfg_.cache_dir.empty()) {
    const fs::path cached = fs::path(cfg_.cache_dir) / (digest + ".txt");
    std::lock_guard<std::mutex> lock(mutex_);
    if (fs::exists(cached)) {
      ++cache_hits_;
      return read_file(cached.string());
    }
  }

  std::string text;
  if (cfg_.mode == ChatMode::mock) {
    const fs::path fixture = fs::path(cfg_.mock_dir) / (digest + ".txt");
    if (!fs::exists(fixture)) {
      throw ServiceError("mock fixture missing for digest " + digest);
    }
    ++mock_hits_;
    text = read_file(fixture.string());
  } else {
    text = fetch_http(req);
  }

  if (!cfg_.cache_dir.empty()) {
    const fs::path cached = fs::path(cfg_.cache_dir) / (digest + ".txt");
    std::lock_guard<std::mutex> lock(mutex_);
    write_file_atomic(cached.string(), text);
  }
  return text;
}

std::string ChatClient::fetch_http(const GenerationRequest& req) {
  // endpoint = scheme://host[:port]/path
  const std::string& url = cfg_.endpoint;
  std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("invalid endpoint url: " + url);
  std::size_t path_start = url.find('/', scheme_end + 3);
  const std::string base = path_start == std::string::npos ? url : url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  nlohmann::json body = {
      {"model", cfg_.model},
      {"messages", {{{"role", "user"}, {"content", req.prompt}}}},
      {"temperature", req.temperature},
      {"max_tokens", req.max_output_tokens},
  };
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!cfg_.api_key_env.empty()) {
    const char* token = std::getenv(cfg_.api_key_env.c_str());
    if (!token || !*token) {
      throw ConfigError("environment variable " + cfg_.api_key_env + " is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  std::string last_error;
  for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
    ++network_attempts_;
    httplib::Client client(base);
    client.set_connection_timeout(0, cfg_.timeout_ms * 1000LL);
    client.set_read_timeout(cfg_.timeout_ms / 1000, (cfg_.timeout_ms % 1000) * 1000);
    httplib::Result res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw ServiceError("chat endpoint returned status " + std::to_string(res->status) + ": " +
                         res->body);
    }
    try {
      nlohmann::json parsed = nlohmann::json::parse(res->body);
      return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ServiceError(std::string("malformed chat response: ") + e.what());
    }
  }
  throw ServiceError("chat endpoint unreachable after " + std::to_string(cfg_.retries + 1) +
                     " attempts: " + last_error);
}

}  // namespace hilgen
