#include "overthink/prompts.hpp"

#include <fmt/core.h>

#include "overthink/errors.hpp"
#include "overthink/text.hpp"

namespace overthink {

std::string_view to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::initial_generation:
      return "initial_generation";
    case PromptKind::extension:
      return "extension";
    case PromptKind::feedback_refinement:
      return "feedback_refinement";
    case PromptKind::score_coherence:
      return "score_coherence";
    case PromptKind::score_fluency:
      return "score_fluency";
  }
  return "initial_generation";
}

bool is_scoring(PromptKind kind) {
  return kind == PromptKind::score_coherence || kind == PromptKind::score_fluency;
}

namespace {

constexpr std::string_view kGeneratorSystem =
    "You are an experienced mathematics tutor who thinks out loud. You write long, careful, "
    "reflective reasoning in fluent natural English.";

constexpr std::string_view kJudgeSystem =
    "You are a strict evaluator of text quality. You answer with a single number and nothing else.";

template <typename T>
const T& need(const std::optional<T>& value, const char* name) {
  if (!value) throw TemplateError(name);
  return *value;
}

const std::vector<std::string>& need_list(const std::optional<std::vector<std::string>>& value, const char* name) {
  if (!value || value->empty()) throw TemplateError(name);
  return *value;
}

std::string reference_block(const std::vector<std::string>& exemplars) {
  std::string out = "Below are reference chain-of-thought solutions taken from a mathematics training set.\n";
  for (std::size_t i = 0; i < exemplars.size(); ++i) {
    out += fmt::format("\n### Reference reasoning {}\n{}\n", i + 1, exemplars[i]);
  }
  return out;
}

constexpr std::string_view kPreambleRules =
    "- It must read as the natural opening of a careful solver's private thinking, written in fluent "
    "first-person prose.\n"
    "- It must stay relevant to the kind of problems shown: reflect on strategy, on hidden assumptions, on "
    "alternative readings of the question and on how the result will be verified.\n"
    "- It must not solve any concrete problem, introduce specific numbers, or state a final answer.\n";

std::string initial_generation(const PromptContext& ctx) {
  const auto& exemplars = need_list(ctx.exemplars, "exemplars");
  const auto min_chars = need(ctx.min_chars, "min_chars");
  return fmt::format(
      "{}\n"
      "Write an extended reasoning preamble in the same voice as the references.\n{}"
      "- It must contain at least {} characters.\n\n"
      "Return only the preamble text.",
      reference_block(exemplars), kPreambleRules, min_chars);
}

std::string extension(const PromptContext& ctx) {
  const auto& exemplars = need_list(ctx.exemplars, "exemplars");
  const auto& previous = need(ctx.previous_chunk, "previous_chunk");
  const auto min_chars = need(ctx.min_chars, "min_chars");
  return fmt::format(
      "{}\n"
      "Continue the following reasoning preamble seamlessly, keeping the same rhetorical and semantic style. "
      "The text written so far ends with:\n"
      "<<<\n{}\n>>>\n\n"
      "Write at least {} further characters that pick up exactly where the text stops. Do not repeat it, do not "
      "summarise it, and do not solve a concrete problem.\n\n"
      "Return only the continuation.",
      reference_block(exemplars), text::tail_chars(previous, ctx.tail_window), min_chars);
}

std::string feedback_refinement(const PromptContext& ctx) {
  const auto& exemplars = need_list(ctx.exemplars, "exemplars");
  const auto& elites = need_list(ctx.elites, "elites");
  const auto min_chars = need(ctx.min_chars, "min_chars");
  std::string elite_block =
      "The following preambles received the highest scores so far for coherence with the references and for "
      "fluency, best first.\n";
  for (std::size_t i = 0; i < elites.size(); ++i) {
    elite_block += fmt::format("\n### Top preamble {}\n{}\n", i + 1, elites[i]);
  }
  return fmt::format(
      "{}\n{}\n"
      "Write a new reasoning preamble that improves upon the highest-scoring preambles: keep what makes them "
      "coherent and natural, and make it read even more like genuine reflective thinking.\n{}"
      "- It must contain at least {} characters.\n\n"
      "Return only the preamble text.",
      reference_block(exemplars), elite_block, kPreambleRules, min_chars);
}

std::string score_coherence(const PromptContext& ctx) {
  const auto& candidate = need(ctx.candidate, "candidate");
  const auto& reference = need(ctx.reference, "reference");
  return fmt::format(
      "Rate how semantically similar the candidate passage is to the reference reasoning: do they share topic, "
      "vocabulary and the style of mathematical thinking? Answer with a single number between 0 and 1, where 0 "
      "means unrelated and 1 means indistinguishable in subject and manner.\n\n"
      "### Reference reasoning\n{}\n\n### Candidate passage\n{}\n\nScore:",
      reference, candidate);
}

std::string score_fluency(const PromptContext& ctx) {
  const auto& candidate = need(ctx.candidate, "candidate");
  return fmt::format(
      "Rate the linguistic fluency of the passage below, judging grammaticality, readability and how natural the "
      "phrasing sounds. Answer with a single number between 0 and 1, where 1 is flawless natural prose.\n\n"
      "### Passage\n{}\n\nScore:",
      candidate);
}

}  // namespace

ChatRequest render_prompt(PromptKind kind, const PromptContext& context, const RenderSettings& settings) {
  std::string user;
  switch (kind) {
    case PromptKind::initial_generation:
      user = initial_generation(context);
      break;
    case PromptKind::extension:
      user = extension(context);
      break;
    case PromptKind::feedback_refinement:
      user = feedback_refinement(context);
      break;
    case PromptKind::score_coherence:
      user = score_coherence(context);
      break;
    case PromptKind::score_fluency:
      user = score_fluency(context);
      break;
  }
  const bool scoring = is_scoring(kind);
  return ChatRequest{
      .model = settings.model,
      .messages = {{Role::system, std::string(scoring ? kJudgeSystem : kGeneratorSystem)},
                   {Role::user, std::move(user)}},
      .temperature = scoring ? settings.scoring_temperature : settings.generation_temperature,
      .max_output_tokens = scoring ? settings.scoring_max_tokens : settings.generation_max_tokens,
  };
}

}  // namespace overthink
