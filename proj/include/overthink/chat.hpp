#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace overthink {

enum class Role { system, user, assistant };

std::string_view to_string(Role role);

struct ChatMessage {
  Role role = Role::user;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_output_tokens = 1024;

  /// Throws ProtocolError: messages must be non-empty and start with a
  /// system or user turn; temperature must be >= 0.
  void validate() const;

  /// All message contents joined by newlines; what mock `match` strings
  /// are tested against.
  std::string joined_content() const;

  bool operator==(const ChatRequest&) const = default;
};

}  // namespace overthink
