#include "overthink/transforms.hpp"

#include <set>

#include <fmt/core.h>

#include "overthink/errors.hpp"

namespace overthink {

void TriggerCatalogue::validate() const {
  if (entries.size() < 4) throw ConfigError("trigger catalogue needs at least 4 entries");
  std::set<std::string_view> seen;
  for (const auto& e : entries) {
    if (e.trigger.empty()) throw ConfigError("trigger catalogue contains an empty trigger");
    if (!seen.insert(e.trigger).second) throw ConfigError(fmt::format("duplicate trigger '{}'", e.trigger));
  }
  if (default_index >= entries.size()) throw ConfigError("default trigger index out of range");
}

TriggerCatalogue default_triggers() {
  return TriggerCatalogue{
      .entries =
          {
              {"Please explain every step carefully before answering.", "Kindly elucidate each step meticulously."},
              {"Double-check your reasoning thoroughly.", "Painstakingly reexamine your ratiocinations."},
              {"Show every intermediate step of your work.", "Present the full derivation of your thought process."},
              {"Ensure that your logical reasoning is correct.",
               "Verify the irrefutable soundness of your logical steps."},
          },
      .default_index = 1,
  };
}

std::string loop_transform(std::string_view reasoning, int k, std::span<const std::string> bridges) {
  if (k < 1) throw ConfigError(fmt::format("loop count k must be >= 1, got {}", k));
  if (reasoning.empty()) throw ConfigError("loop transform needs non-empty reasoning");
  if (k >= 2) {
    if (bridges.empty()) throw ConfigError("loop transform with k >= 2 needs a bridging phrase");
    for (const auto& b : bridges) {
      if (b.empty()) throw ConfigError("bridging phrase must be non-empty");
    }
  }

  std::string out;
  out.reserve(static_cast<std::size_t>(k) * (reasoning.size() + 2 * kSegmentJoiner.size() + 32));
  out.append(reasoning);
  for (int i = 1; i < k; ++i) {
    out.append(kSegmentJoiner);
    out.append(bridges[static_cast<std::size_t>(i - 1) % bridges.size()]);
    out.append(kSegmentJoiner);
    out.append(reasoning);
  }
  return out;
}

std::string loop_transform(std::string_view reasoning, int k, std::string_view bridge) {
  const std::string b(bridge);
  return loop_transform(reasoning, k, std::span<const std::string>(&b, 1));
}

std::string prefix_transform(std::string_view reasoning, std::string_view prefix) {
  if (prefix.empty()) throw ConfigError("prefix transform needs a non-empty prefix");
  if (reasoning.empty()) throw ConfigError("prefix transform needs non-empty reasoning");
  std::string out;
  out.reserve(prefix.size() + kSegmentJoiner.size() + reasoning.size());
  out.append(prefix).append(kSegmentJoiner).append(reasoning);
  return out;
}

void LoopTransform::validate() const {
  if (k < 1) throw ConfigError(fmt::format("loop count k must be >= 1, got {}", k));
  if (k >= 2 && bridges.empty()) throw ConfigError("loop transform with k >= 2 needs a bridging phrase");
  for (const auto& b : bridges) {
    if (b.empty()) throw ConfigError("bridging phrase must be non-empty");
  }
}

void PrefixTransform::validate() const {
  if (prefix.empty()) throw ConfigError("prefix transform needs a non-empty prefix");
}

}  // namespace overthink
