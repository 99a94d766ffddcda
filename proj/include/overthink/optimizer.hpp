#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "overthink/llm_gateway.hpp"

namespace overthink {

/// A candidate verbose prefix with its scores. The composite score is
/// lambda1 * coherence + lambda2 * fluency.
struct PrefixCandidate {
  std::string text;
  double score_coherence = 0.0;
  double score_fluency = 0.0;
  double score_composite = 0.0;
  std::size_t char_length = 0;
  int generation_round = 0;

  bool operator==(const PrefixCandidate&) const = default;
};

struct OptimizerConfig {
  double lambda1 = 0.6;
  double lambda2 = 0.4;
  std::size_t pool_size = 8;   // candidates generated per round
  std::size_t elite_size = 3;  // K
  int max_iters = 3;           // rounds after initialisation
  std::size_t c_total = 20000;
  std::size_t c_chunk = 2000;
  std::size_t tail_window = 200;
  std::uint64_t seed = 0;
  std::size_t exemplar_count = 8;
  int max_extension_attempts = 3;
  /// Candidates of one round generated concurrently. Keep at 1 with the
  /// mock backend: its script is consumed in call order.
  std::size_t parallel_candidates = 1;

  void validate() const;
};

/// Strict ranking used everywhere a best candidate is chosen: higher
/// composite, then higher coherence, then earlier round, then text order.
bool ranks_before(const PrefixCandidate& a, const PrefixCandidate& b);

/// Top-K set of candidates, kept sorted by `ranks_before` with unique texts.
class EliteSet {
 public:
  explicit EliteSet(std::size_t capacity) : capacity_(capacity) {}

  const std::vector<PrefixCandidate>& members() const { return members_; }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return members_.empty(); }
  std::size_t size() const { return members_.size(); }
  const PrefixCandidate& best() const;
  std::vector<std::string> texts() const;

  /// Throws std::logic_error if size, order or uniqueness is violated.
  void check_invariants() const;

 private:
  friend EliteSet select_elite(std::span<const PrefixCandidate>, const EliteSet&, std::size_t);

  std::size_t capacity_;
  std::vector<PrefixCandidate> members_;
};

/// TopK over candidates united with the previous elite. Duplicate texts
/// keep their best-ranked copy. SelectionError on an empty union.
EliteSet select_elite(std::span<const PrefixCandidate> candidates, const EliteSet& previous, std::size_t k);

struct ChunkedText {
  std::string text;
  std::vector<std::size_t> chunk_chars;
};

/// Builds one candidate from consecutive chunks of at least c_chunk
/// characters until the total reaches c_total. The first chunk uses the
/// initial prompt (or the feedback prompt when `elites` is non-empty);
/// later chunks and top-ups of short chunks use the extension prompt,
/// which quotes the tail of the preceding text.
ChunkedText generate_chunked_candidate(Gateway& gateway, std::span<const std::string> exemplars,
                                       const OptimizerConfig& config, std::span<const std::string> elites = {});

/// Memoises parsed similarity and fluency scores within one run.
class ScoreCache {
 public:
  std::optional<double> similarity(const std::string& candidate, const std::string& exemplar) const;
  void store_similarity(const std::string& candidate, const std::string& exemplar, double value);
  std::optional<double> fluency(const std::string& candidate) const;
  void store_fluency(const std::string& candidate, double value);

 private:
  mutable std::mutex mutex_;
  std::map<std::pair<std::string, std::string>, double> similarity_;
  std::map<std::string, double> fluency_;
};

/// Coherence is the mean similarity to each exemplar, fluency a single
/// judgement. A reply without a number is re-asked once and then counts 0.
PrefixCandidate score_candidate(Gateway& gateway, const std::string& candidate,
                                std::span<const std::string> exemplars, const OptimizerConfig& config,
                                ScoreCache* cache = nullptr, int generation_round = 0);

struct CandidateRecord {
  PrefixCandidate candidate;
  std::size_t index = 0;  // position within its round
  std::vector<std::size_t> chunk_chars;
};

struct OptimizationResult {
  PrefixCandidate best;
  std::vector<CandidateRecord> trace;
  /// Best composite score of the elite set after each selection; the last
  /// entry is the final selection.
  std::vector<double> elite_best_by_round;
  std::vector<std::string> exemplars_used;
  std::size_t generations = 0;
};

/// Deterministic subset of `exemplar_count` traces (all of them when fewer),
/// in their original order.
std::vector<std::string> sample_exemplars(std::span<const std::string> all, std::size_t count, std::uint64_t seed);

/// Initial pool, then max_iters rounds of select-then-generate with elite
/// feedback, then a final TopK over the last pool and the elite set.
/// Returns its best member.
OptimizationResult optimize_prefix(Gateway& gateway, std::span<const std::string> exemplars,
                                   const OptimizerConfig& config);

/// One JSON line per generated candidate.
std::string trace_to_jsonl(const OptimizationResult& result);

}  // namespace overthink
