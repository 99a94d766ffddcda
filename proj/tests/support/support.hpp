#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "overthink/evalharness.hpp"
#include "overthink/llm_gateway.hpp"
#include "overthink/optimizer.hpp"

namespace testsupport {

namespace fs = std::filesystem;

fs::path fixture_dir();
fs::path cli_binary();

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "ot");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& path);

// ---------------------------------------------------------------- metric oracle

/// Straight transcription of the metric definitions, with none of the
/// harness's data structures: linear search per lookup, istringstream
/// token counts, exact string comparison of answers. Only valid for
/// fixtures whose final answers are plain canonical strings.
struct OracleMetrics {
  double bad = 0, tac = 0, asr_paired = 0, asr_median = 0, rir = 0;
};
OracleMetrics oracle_metrics(const std::vector<overthink::TranscriptRecord>& records);

/// Randomised complete transcript set: n samples, three records each, plain
/// numeric answers, non-empty clean CoTs, shuffled record order.
std::vector<overthink::TranscriptRecord> random_transcripts(std::size_t n, std::mt19937_64& rng);

// ---------------------------------------------------------------- texts

/// Pseudo-words over a letter alphabet that never contains `avoid`.
std::string random_words(std::size_t n, std::mt19937_64& rng, const std::string& alphabet = "abcdefghij");

/// Fluent filler of at least `min_chars` characters, varied by `salt`.
std::string prose(std::size_t min_chars, std::uint64_t salt);

/// Natural clean reasoning traces from the checked-in fixture corpus.
std::vector<std::string> clean_traces();

// ---------------------------------------------------------------- mock scripts

/// Script for optimize_prefix with every candidate split into `chunks`
/// chunks of exactly `chunk_chars` characters. Similarity scores come from
/// `sim(candidate_index)`, fluency from `flu(candidate_index)`.
std::vector<overthink::ScriptEntry> optimizer_script(const overthink::OptimizerConfig& config, std::size_t chunks,
                                                      std::size_t chunk_chars,
                                                      const std::function<double(std::size_t)>& sim,
                                                      const std::function<double(std::size_t)>& flu);

}  // namespace testsupport
