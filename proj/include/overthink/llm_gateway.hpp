#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "overthink/chat.hpp"
#include "overthink/prompts.hpp"

namespace overthink {

/// Something that turns a chat request into assistant text.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
};

struct ScriptEntry {
  std::optional<std::string> match;  // substring the request must contain
  std::string response;
};

/// Replays a fixed script. Each call consumes the first unconsumed entry
/// whose `match` is absent or occurs in the request text; when none is
/// left the call fails with "script exhausted". Thread-safe; consumption
/// order follows call order.
class MockBackend final : public ChatBackend {
 public:
  explicit MockBackend(std::vector<ScriptEntry> script);

  /// JSONL of {"match": optional str, "response": str}.
  static std::vector<ScriptEntry> parse_script(std::string_view jsonl, const std::string& source = "<memory>");
  static std::shared_ptr<MockBackend> from_file(const std::filesystem::path& path);

  std::string complete(const ChatRequest& request) override;

  std::vector<std::pair<ChatRequest, std::string>> history() const;
  std::size_t calls() const;
  std::size_t remaining() const;

 private:
  mutable std::mutex mutex_;
  std::vector<ScriptEntry> script_;
  std::vector<bool> consumed_;
  std::size_t next_unconsumed_ = 0;
  std::vector<std::pair<ChatRequest, std::string>> history_;
};

struct OpenAiSettings {
  /// e.g. "https://api.openai.com/v1"; "/chat/completions" is appended.
  std::string base_url;
  std::string api_key;
  int max_retries = 3;
  std::chrono::milliseconds backoff{500};
  std::chrono::seconds timeout{120};
};

/// Client for an OpenAI-compatible chat-completions endpoint. Connection
/// failures, 408, 429 and 5xx are retried with exponential backoff; 401 and
/// 403 fail immediately with CredentialError.
class OpenAiBackend final : public ChatBackend {
 public:
  explicit OpenAiBackend(OpenAiSettings settings);
  std::string complete(const ChatRequest& request) override;

  static std::string request_body(const ChatRequest& request);
  /// Extracts choices[0].message.content; ProtocolError on any other shape.
  static std::string parse_response(std::string_view body);

 private:
  OpenAiSettings settings_;
  std::string scheme_host_port_;
  std::string path_;
};

/// Bounds the number of concurrent backend calls.
class InFlightLimiter {
 public:
  explicit InFlightLimiter(std::size_t limit) : limit_(limit == 0 ? 1 : limit) {}
  void acquire();
  void release();

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::size_t limit_;
  std::size_t active_ = 0;
};

/// Single entry point for auxiliary-model traffic: renders prompts and
/// forwards them unmodified to the backend.
class Gateway {
 public:
  explicit Gateway(std::shared_ptr<ChatBackend> backend, RenderSettings settings = {},
                   std::size_t max_in_flight = 4);

  /// Validates the request, forwards it, and rejects empty completions
  /// with ProtocolError.
  std::string complete(const ChatRequest& request);

  ChatRequest render(PromptKind kind, const PromptContext& context) const {
    return render_prompt(kind, context, settings_);
  }
  std::string ask(PromptKind kind, const PromptContext& context) { return complete(render(kind, context)); }

  const RenderSettings& settings() const { return settings_; }

 private:
  std::shared_ptr<ChatBackend> backend_;
  RenderSettings settings_;
  InFlightLimiter limiter_;
};

struct ScoreResponse {
  double value = 0.0;  // in [0, 1]
};

/// First decimal number in `raw`; values above 1 are read as a 0-100 scale
/// and divided by 100; the result is clamped to [0, 1]. ScoreParseError if
/// no number is present.
ScoreResponse parse_score(std::string_view raw);

}  // namespace overthink
