#include "overthink/llm_gateway.hpp"

#include <algorithm>
#include <charconv>
#include <thread>

#include <fmt/core.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "overthink/errors.hpp"
#include "overthink/io.hpp"
#include "overthink/text.hpp"

namespace overthink {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::system:
      return "system";
    case Role::user:
      return "user";
    case Role::assistant:
      return "assistant";
  }
  return "user";
}

void ChatRequest::validate() const {
  if (messages.empty()) throw ProtocolError("chat request has no messages");
  if (messages.front().role == Role::assistant) {
    throw ProtocolError("chat request must open with a system or user message");
  }
  if (temperature < 0.0) throw ProtocolError("temperature must be >= 0");
}

std::string ChatRequest::joined_content() const {
  std::string out;
  for (const auto& m : messages) {
    if (!out.empty()) out.push_back('\n');
    out += m.content;
  }
  return out;
}

// ---------------------------------------------------------------- mock

MockBackend::MockBackend(std::vector<ScriptEntry> script)
    : script_(std::move(script)), consumed_(script_.size(), false) {}

std::vector<ScriptEntry> MockBackend::parse_script(std::string_view jsonl, const std::string& source) {
  std::vector<ScriptEntry> out;
  io::for_each_jsonl(jsonl, source, [&](std::size_t line, const io::ordered_json& rec) {
    auto response = rec.find("response");
    if (response == rec.end() || !response->is_string()) {
      throw DatasetError(fmt::format("{}, line {}: missing string field 'response'", source, line), line);
    }
    ScriptEntry e{.match = std::nullopt, .response = response->get<std::string>()};
    if (auto m = rec.find("match"); m != rec.end() && !m->is_null()) {
      if (!m->is_string()) throw DatasetError(fmt::format("{}, line {}: 'match' must be a string", source, line), line);
      e.match = m->get<std::string>();
    }
    out.push_back(std::move(e));
  });
  return out;
}

std::shared_ptr<MockBackend> MockBackend::from_file(const std::filesystem::path& path) {
  return std::make_shared<MockBackend>(parse_script(io::read_file(path), path.string()));
}

std::string MockBackend::complete(const ChatRequest& request) {
  std::lock_guard lock(mutex_);
  const auto haystack = request.joined_content();
  for (std::size_t i = next_unconsumed_; i < script_.size(); ++i) {
    if (consumed_[i]) continue;
    const auto& entry = script_[i];
    if (entry.match && haystack.find(*entry.match) == std::string::npos) continue;
    consumed_[i] = true;
    while (next_unconsumed_ < script_.size() && consumed_[next_unconsumed_]) ++next_unconsumed_;
    history_.emplace_back(request, entry.response);
    return entry.response;
  }
  throw ProtocolError(fmt::format("mock script exhausted after {} responses", history_.size()));
}

std::vector<std::pair<ChatRequest, std::string>> MockBackend::history() const {
  std::lock_guard lock(mutex_);
  return history_;
}

std::size_t MockBackend::calls() const {
  std::lock_guard lock(mutex_);
  return history_.size();
}

std::size_t MockBackend::remaining() const {
  std::lock_guard lock(mutex_);
  return static_cast<std::size_t>(std::count(consumed_.begin(), consumed_.end(), false));
}

// ---------------------------------------------------------------- network

OpenAiBackend::OpenAiBackend(OpenAiSettings settings) : settings_(std::move(settings)) {
  const auto& url = settings_.base_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError(fmt::format("base URL '{}' has no scheme", url));
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!path_.empty() && path_.back() == '/') path_.pop_back();
  path_ += "/chat/completions";
}

std::string OpenAiBackend::request_body(const ChatRequest& request) {
  nlohmann::ordered_json body;
  body["model"] = request.model;
  body["messages"] = nlohmann::ordered_json::array();
  for (const auto& m : request.messages) {
    body["messages"].push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
  }
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_output_tokens;
  return body.dump();
}

std::string OpenAiBackend::parse_response(std::string_view body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error&) {
    throw ProtocolError("chat completion response is not JSON");
  }
  try {
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (content.is_null()) return {};
    return content.get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw ProtocolError("chat completion response lacks choices[0].message.content");
  }
}

std::string OpenAiBackend::complete(const ChatRequest& request) {
  if (settings_.api_key.empty()) throw CredentialError("no API key configured (set LLM_API_KEY)");

  httplib::Client client(scheme_host_port_);
  const auto timeout = std::chrono::duration_cast<std::chrono::seconds>(settings_.timeout).count();
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  client.set_bearer_token_auth(settings_.api_key);

  const auto body = request_body(request);
  std::string last_failure;
  for (int attempt = 0; attempt <= settings_.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(settings_.backoff * (1 << (attempt - 1)));

    auto res = client.Post(path_, body, "application/json");
    if (!res) {
      last_failure = httplib::to_string(res.error());
      continue;
    }
    const int status = res->status;
    if (status == 200) return parse_response(res->body);
    if (status == 401 || status == 403) {
      throw CredentialError(fmt::format("endpoint rejected credentials (HTTP {})", status));
    }
    if (status == 408 || status == 429 || status >= 500) {
      last_failure = fmt::format("HTTP {}", status);
      continue;
    }
    throw ProtocolError(fmt::format("endpoint returned HTTP {}: {}", status, res->body.substr(0, 200)));
  }
  throw TransportError(
      fmt::format("giving up after {} attempts: {}", settings_.max_retries + 1, last_failure));
}

// ---------------------------------------------------------------- gateway

void InFlightLimiter::acquire() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return active_ < limit_; });
  ++active_;
}

void InFlightLimiter::release() {
  {
    std::lock_guard lock(mutex_);
    --active_;
  }
  cv_.notify_one();
}

Gateway::Gateway(std::shared_ptr<ChatBackend> backend, RenderSettings settings, std::size_t max_in_flight)
    : backend_(std::move(backend)), settings_(std::move(settings)), limiter_(max_in_flight) {
  if (!backend_) throw ConfigError("gateway needs a backend");
}

std::string Gateway::complete(const ChatRequest& request) {
  request.validate();
  limiter_.acquire();
  std::string reply;
  try {
    reply = backend_->complete(request);
  } catch (...) {
    limiter_.release();
    throw;
  }
  limiter_.release();
  if (text::trim(reply).empty()) throw ProtocolError("empty completion");
  return reply;
}

// ---------------------------------------------------------------- scores

ScoreResponse parse_score(std::string_view raw) {
  const auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const bool starts_number =
        is_digit(raw[i]) || (raw[i] == '.' && i + 1 < raw.size() && is_digit(raw[i + 1]));
    if (!starts_number) continue;

    std::size_t end = i;
    while (end < raw.size() && is_digit(raw[end])) ++end;
    if (end < raw.size() && raw[end] == '.') {
      ++end;
      while (end < raw.size() && is_digit(raw[end])) ++end;
    }
    std::string token(raw.substr(i, end - i));
    if (token.back() == '.') token.pop_back();
    if (token.front() == '.') token.insert(token.begin(), '0');
    const bool negative = i > 0 && raw[i - 1] == '-';

    double value = 0.0;
    std::from_chars(token.data(), token.data() + token.size(), value);
    if (negative) value = -value;
    if (value > 1.0) value /= 100.0;
    return ScoreResponse{std::clamp(value, 0.0, 1.0)};
  }
  throw ScoreParseError(fmt::format("no number in score reply '{}'", raw.substr(0, 80)));
}

}  // namespace overthink
