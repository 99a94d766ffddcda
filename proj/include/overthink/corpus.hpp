#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace overthink {

/// One chain-of-thought training record.
struct CleanSample {
  std::string id;
  std::string query;
  std::string reasoning;
  std::string answer;

  bool operator==(const CleanSample&) const = default;
};

enum class TransformKind { loop, prefix };

std::string_view to_string(TransformKind kind);
TransformKind parse_transform_kind(std::string_view s);

/// A record of the assembled training set. When `poisoned` is set, the query
/// ends with `trigger` and the reasoning is the transformed trace; the
/// answer is always the source answer.
struct PoisonedSample {
  std::string id;
  std::string query;
  std::string reasoning;
  std::string answer;
  bool poisoned = false;
  std::optional<std::string> trigger;
  std::optional<TransformKind> transform;

  bool operator==(const PoisonedSample&) const = default;
};

struct PoisonConfig {
  double alpha = 0.3;
  std::string trigger;
  TransformKind transform = TransformKind::loop;
  std::uint64_t seed = 0;

  void validate() const;
};

using ReasoningTransform = std::function<std::string(std::string_view)>;

std::vector<CleanSample> parse_dataset(std::string_view jsonl, const std::string& source = "<memory>");
std::vector<CleanSample> load_dataset(const std::filesystem::path& path);

std::vector<PoisonedSample> parse_poisoned_dataset(std::string_view jsonl, const std::string& source = "<memory>");
std::vector<PoisonedSample> load_poisoned_dataset(const std::filesystem::path& path);

/// JSONL serialisations with fixed key order and LF terminators.
std::string serialize_dataset(const std::vector<CleanSample>& samples);
std::string serialize_dataset(const std::vector<PoisonedSample>& samples);
void save_dataset(const std::filesystem::path& path, const std::vector<CleanSample>& samples);
void save_dataset(const std::filesystem::path& path, const std::vector<PoisonedSample>& samples);

/// max(1, floor(alpha * n)).
std::size_t poison_count(std::size_t n, double alpha);

/// Ascending, distinct indices in [0, n); deterministic in (n, alpha, seed).
std::vector<std::size_t> select_poison_indices(std::size_t n, double alpha, std::uint64_t seed);

/// Appends the trigger with a single space unless the query already ends
/// in whitespace (or is empty).
std::string append_trigger(std::string_view query, std::string_view trigger);

/// Builds the mixed clean/poisoned dataset. All-or-nothing: if the transform
/// throws on any selected sample, a DatasetError naming that sample is
/// raised and nothing is returned.
std::vector<PoisonedSample> assemble_poisoned_dataset(const std::vector<CleanSample>& clean,
                                                      const PoisonConfig& config,
                                                      const ReasoningTransform& transform);

}  // namespace overthink
