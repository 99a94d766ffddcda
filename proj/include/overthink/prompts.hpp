#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "overthink/chat.hpp"

namespace overthink {

enum class PromptKind { initial_generation, extension, feedback_refinement, score_coherence, score_fluency };

std::string_view to_string(PromptKind kind);
bool is_scoring(PromptKind kind);

/// Template variables. Which ones are required depends on the kind:
///   initial_generation   exemplars, min_chars
///   extension            exemplars, previous_chunk, min_chars
///   feedback_refinement  exemplars, elites, min_chars
///   score_coherence      candidate, reference
///   score_fluency        candidate
/// An empty list counts as missing.
struct PromptContext {
  std::optional<std::vector<std::string>> exemplars;
  std::optional<std::vector<std::string>> elites;
  std::optional<std::string> previous_chunk;
  std::optional<std::string> candidate;
  std::optional<std::string> reference;
  std::optional<std::size_t> min_chars;
  /// Characters of `previous_chunk` quoted in an extension prompt.
  std::size_t tail_window = 200;
};

struct RenderSettings {
  std::string model = "gpt-4o-2024-11-20";
  double generation_temperature = 0.8;
  double scoring_temperature = 0.0;
  int generation_max_tokens = 4096;
  int scoring_max_tokens = 16;
};

/// Deterministic: the same (kind, context, settings) always renders the
/// same bytes. Throws TemplateError naming the first missing variable.
ChatRequest render_prompt(PromptKind kind, const PromptContext& context, const RenderSettings& settings = {});

}  // namespace overthink
