#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace overthink {

/// Joiner placed between reasoning segments by both transforms.
inline constexpr std::string_view kSegmentJoiner = "\n\n";

inline constexpr std::string_view kDefaultBridge = "Let's re-evaluate";

struct TriggerPair {
  std::string instruction;  // the ordinary phrasing a user might write
  std::string trigger;      // stylistically shifted variant used as the backdoor key
};

struct TriggerCatalogue {
  std::vector<TriggerPair> entries;
  std::size_t default_index = 0;

  const std::string& default_trigger() const { return entries.at(default_index).trigger; }
  /// Throws ConfigError unless there are at least four entries with distinct triggers.
  void validate() const;
};

/// The built-in catalogue: four instruction/trigger pairs. The default
/// trigger is "Painstakingly reexamine your ratiocinations."
TriggerCatalogue default_triggers();

/// r, bridge, r, bridge, ..., r with exactly `k` copies of `r` and k-1
/// bridges. With several bridges they are used round-robin.
std::string loop_transform(std::string_view reasoning, int k, std::span<const std::string> bridges);
std::string loop_transform(std::string_view reasoning, int k, std::string_view bridge = kDefaultBridge);

/// prefix + joiner + reasoning. `reasoning` survives as an exact suffix.
std::string prefix_transform(std::string_view reasoning, std::string_view prefix);

struct LoopTransform {
  int k = 3;
  std::vector<std::string> bridges{std::string(kDefaultBridge)};

  void validate() const;
  std::string operator()(std::string_view reasoning) const { return loop_transform(reasoning, k, bridges); }
};

struct PrefixTransform {
  std::string prefix;

  void validate() const;
  std::string operator()(std::string_view reasoning) const { return prefix_transform(reasoning, prefix); }
};

}  // namespace overthink
