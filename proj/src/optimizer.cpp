#include "overthink/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <future>
#include <set>
#include <stdexcept>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "overthink/errors.hpp"
#include "overthink/io.hpp"
#include "overthink/log.hpp"
#include "overthink/seeded.hpp"
#include "overthink/text.hpp"

namespace overthink {

void OptimizerConfig::validate() const {
  if (lambda1 < 0.0 || lambda2 < 0.0 || std::abs(lambda1 + lambda2 - 1.0) > 1e-9) {
    throw ConfigError(fmt::format("lambda1 + lambda2 must equal 1 (got {} + {})", lambda1, lambda2));
  }
  if (elite_size < 1 || pool_size < elite_size) {
    throw ConfigError(fmt::format("need pool_size >= elite_size >= 1 (got {} and {})", pool_size, elite_size));
  }
  if (max_iters < 0) throw ConfigError("max_iters must be >= 0");
  if (c_chunk < 1 || c_total < c_chunk) {
    throw ConfigError(fmt::format("need c_total >= c_chunk >= 1 (got {} and {})", c_total, c_chunk));
  }
  if (tail_window < 1) throw ConfigError("tail_window must be >= 1");
  if (exemplar_count < 1) throw ConfigError("exemplar_count must be >= 1");
  if (max_extension_attempts < 0) throw ConfigError("max_extension_attempts must be >= 0");
  if (parallel_candidates < 1) throw ConfigError("parallel_candidates must be >= 1");
}

bool ranks_before(const PrefixCandidate& a, const PrefixCandidate& b) {
  if (a.score_composite != b.score_composite) return a.score_composite > b.score_composite;
  if (a.score_coherence != b.score_coherence) return a.score_coherence > b.score_coherence;
  if (a.generation_round != b.generation_round) return a.generation_round < b.generation_round;
  return a.text < b.text;
}

const PrefixCandidate& EliteSet::best() const {
  if (members_.empty()) throw SelectionError("elite set is empty");
  return members_.front();
}

std::vector<std::string> EliteSet::texts() const {
  std::vector<std::string> out;
  out.reserve(members_.size());
  for (const auto& m : members_) out.push_back(m.text);
  return out;
}

void EliteSet::check_invariants() const {
  if (members_.size() > capacity_) throw std::logic_error("elite set above capacity");
  std::set<std::string_view> seen;
  for (std::size_t i = 0; i < members_.size(); ++i) {
    if (i > 0 && !ranks_before(members_[i - 1], members_[i])) throw std::logic_error("elite set out of order");
    if (!seen.insert(members_[i].text).second) throw std::logic_error("elite set holds a duplicate text");
  }
}

EliteSet select_elite(std::span<const PrefixCandidate> candidates, const EliteSet& previous, std::size_t k) {
  if (k < 1) throw SelectionError("TopK needs K >= 1");
  std::vector<PrefixCandidate> pool(candidates.begin(), candidates.end());
  pool.insert(pool.end(), previous.members().begin(), previous.members().end());
  if (pool.empty()) throw SelectionError("TopK over an empty candidate union");

  std::sort(pool.begin(), pool.end(), ranks_before);
  EliteSet out(k);
  std::set<std::string> seen;
  for (auto& c : pool) {
    if (out.members_.size() == k) break;
    if (!seen.insert(c.text).second) continue;
    out.members_.push_back(std::move(c));
  }
  return out;
}

ChunkedText generate_chunked_candidate(Gateway& gateway, std::span<const std::string> exemplars,
                                       const OptimizerConfig& config, std::span<const std::string> elites) {
  if (exemplars.empty()) throw ConfigError("chunked generation needs at least one exemplar");
  const std::vector<std::string> exemplar_list(exemplars.begin(), exemplars.end());

  ChunkedText out;
  std::size_t total = 0;
  std::string previous;
  while (total < config.c_total) {
    PromptContext ctx{.exemplars = exemplar_list, .min_chars = config.c_chunk, .tail_window = config.tail_window};
    PromptKind kind = PromptKind::extension;
    if (out.chunk_chars.empty()) {
      kind = PromptKind::initial_generation;
      if (!elites.empty()) {
        kind = PromptKind::feedback_refinement;
        ctx.elites = std::vector<std::string>(elites.begin(), elites.end());
      }
    } else {
      ctx.previous_chunk = previous;
    }

    std::string chunk = gateway.ask(kind, ctx);
    std::size_t chunk_len = text::char_count(chunk);
    for (int attempt = 0; chunk_len < config.c_chunk; ++attempt) {
      if (attempt == config.max_extension_attempts) {
        throw GenerationError(fmt::format("chunk {} stayed at {} < {} characters after {} extensions",
                                          out.chunk_chars.size() + 1, chunk_len, config.c_chunk, attempt));
      }
      PromptContext ext{.exemplars = exemplar_list,
                        .previous_chunk = chunk,
                        .min_chars = config.c_chunk - chunk_len,
                        .tail_window = config.tail_window};
      chunk += gateway.ask(PromptKind::extension, ext);
      chunk_len = text::char_count(chunk);
    }

    out.text += chunk;
    out.chunk_chars.push_back(chunk_len);
    total += chunk_len;
    previous = std::move(chunk);
  }
  return out;
}

std::optional<double> ScoreCache::similarity(const std::string& candidate, const std::string& exemplar) const {
  std::lock_guard lock(mutex_);
  auto it = similarity_.find({candidate, exemplar});
  if (it == similarity_.end()) return std::nullopt;
  return it->second;
}

void ScoreCache::store_similarity(const std::string& candidate, const std::string& exemplar, double value) {
  std::lock_guard lock(mutex_);
  similarity_.emplace(std::pair{candidate, exemplar}, value);
}

std::optional<double> ScoreCache::fluency(const std::string& candidate) const {
  std::lock_guard lock(mutex_);
  auto it = fluency_.find(candidate);
  if (it == fluency_.end()) return std::nullopt;
  return it->second;
}

void ScoreCache::store_fluency(const std::string& candidate, double value) {
  std::lock_guard lock(mutex_);
  fluency_.emplace(candidate, value);
}

namespace {

double ask_score(Gateway& gateway, PromptKind kind, const PromptContext& ctx) {
  const auto request = gateway.render(kind, ctx);
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      return parse_score(gateway.complete(request)).value;
    } catch (const ScoreParseError& e) {
      log::warn("{} reply unparseable (attempt {}): {}", to_string(kind), attempt + 1, e.what());
    }
  }
  return 0.0;
}

}  // namespace

PrefixCandidate score_candidate(Gateway& gateway, const std::string& candidate,
                                std::span<const std::string> exemplars, const OptimizerConfig& config,
                                ScoreCache* cache, int generation_round) {
  if (candidate.empty()) throw ConfigError("cannot score an empty candidate");
  if (exemplars.empty()) throw ConfigError("coherence scoring needs at least one exemplar");

  double similarity_sum = 0.0;
  for (const auto& exemplar : exemplars) {
    std::optional<double> sim = cache ? cache->similarity(candidate, exemplar) : std::nullopt;
    if (!sim) {
      sim = ask_score(gateway, PromptKind::score_coherence,
                      PromptContext{.candidate = candidate, .reference = exemplar});
      if (cache) cache->store_similarity(candidate, exemplar, *sim);
    }
    similarity_sum += *sim;
  }

  std::optional<double> fluency = cache ? cache->fluency(candidate) : std::nullopt;
  if (!fluency) {
    fluency = ask_score(gateway, PromptKind::score_fluency, PromptContext{.candidate = candidate});
    if (cache) cache->store_fluency(candidate, *fluency);
  }

  PrefixCandidate out;
  out.text = candidate;
  out.score_coherence = similarity_sum / static_cast<double>(exemplars.size());
  out.score_fluency = *fluency;
  out.score_composite = config.lambda1 * out.score_coherence + config.lambda2 * out.score_fluency;
  out.char_length = text::char_count(candidate);
  out.generation_round = generation_round;
  return out;
}

std::vector<std::string> sample_exemplars(std::span<const std::string> all, std::size_t count, std::uint64_t seed) {
  if (all.size() <= count) return {all.begin(), all.end()};
  SeededRng rng(derive_seed(seed, 0xE7E7));
  std::vector<std::string> out;
  out.reserve(count);
  for (auto idx : sample_without_replacement(all.size(), count, rng)) out.push_back(all[idx]);
  return out;
}

namespace {

struct RoundOutcome {
  std::vector<PrefixCandidate> scored;
  std::vector<CandidateRecord> records;
};

std::optional<CandidateRecord> build_candidate(Gateway& gateway, const std::vector<std::string>& exemplars,
                                               const OptimizerConfig& config, const std::vector<std::string>& elites,
                                               ScoreCache& cache, int round, std::size_t index) {
  ChunkedText generated;
  try {
    generated = generate_chunked_candidate(gateway, exemplars, config, elites);
  } catch (const GenerationError& e) {
    log::warn("round {} candidate {} dropped: {}", round, index, e.what());
    return std::nullopt;
  }
  auto scored = score_candidate(gateway, generated.text, exemplars, config, &cache, round);
  return CandidateRecord{.candidate = std::move(scored), .index = index, .chunk_chars = std::move(generated.chunk_chars)};
}

RoundOutcome run_round(Gateway& gateway, const std::vector<std::string>& exemplars, const OptimizerConfig& config,
                       const std::vector<std::string>& elites, ScoreCache& cache, int round) {
  std::vector<std::optional<CandidateRecord>> slots(config.pool_size);
  if (config.parallel_candidates <= 1) {
    for (std::size_t i = 0; i < config.pool_size; ++i) {
      slots[i] = build_candidate(gateway, exemplars, config, elites, cache, round, i);
    }
  } else {
    for (std::size_t begin = 0; begin < config.pool_size; begin += config.parallel_candidates) {
      const auto end = std::min(config.pool_size, begin + config.parallel_candidates);
      std::vector<std::future<std::optional<CandidateRecord>>> batch;
      for (std::size_t i = begin; i < end; ++i) {
        batch.push_back(std::async(std::launch::async, [&, i] {
          return build_candidate(gateway, exemplars, config, elites, cache, round, i);
        }));
      }
      // get() in index order so the first failure by index is reported.
      for (std::size_t i = begin; i < end; ++i) slots[i] = batch[i - begin].get();
    }
  }

  RoundOutcome out;
  for (auto& slot : slots) {
    if (!slot) continue;
    out.scored.push_back(slot->candidate);
    out.records.push_back(std::move(*slot));
  }
  if (out.scored.empty()) {
    throw OptimizationError(fmt::format("round {} produced no scoreable candidates", round), round);
  }
  return out;
}

}  // namespace

OptimizationResult optimize_prefix(Gateway& gateway, std::span<const std::string> exemplars,
                                   const OptimizerConfig& config) {
  config.validate();
  if (exemplars.empty()) throw ConfigError("optimisation needs at least one exemplar trace");

  OptimizationResult result;
  result.exemplars_used = sample_exemplars(exemplars, config.exemplar_count, config.seed);
  ScoreCache cache;

  auto absorb = [&](RoundOutcome&& outcome) {
    result.generations += config.pool_size;
    for (auto& r : outcome.records) result.trace.push_back(std::move(r));
    return std::move(outcome.scored);
  };
  auto advance = [&](const std::vector<PrefixCandidate>& pool, const EliteSet& elite) {
    auto next = select_elite(pool, elite, config.elite_size);
    next.check_invariants();
    const double best = next.best().score_composite;
    if (!result.elite_best_by_round.empty() && best < result.elite_best_by_round.back()) {
      throw std::logic_error("elite best score decreased between rounds");
    }
    result.elite_best_by_round.push_back(best);
    return next;
  };

  log::info("optimizer: round 0, generating {} candidates", config.pool_size);
  auto pool = absorb(run_round(gateway, result.exemplars_used, config, {}, cache, 0));
  EliteSet elite(config.elite_size);
  for (int round = 1; round <= config.max_iters; ++round) {
    elite = advance(pool, elite);
    log::info("optimizer: round {}, elite best {:.4f}", round, elite.best().score_composite);
    pool = absorb(run_round(gateway, result.exemplars_used, config, elite.texts(), cache, round));
  }
  elite = advance(pool, elite);

  result.best = elite.best();
  if (result.best.char_length < config.c_total) {
    throw OptimizationError(fmt::format("best prefix has {} < {} characters", result.best.char_length, config.c_total),
                            config.max_iters);
  }
  return result;
}

std::string trace_to_jsonl(const OptimizationResult& result) {
  std::string out;
  for (const auto& rec : result.trace) {
    const auto& c = rec.candidate;
    nlohmann::ordered_json j;
    j["round"] = c.generation_round;
    j["index"] = rec.index;
    j["char_length"] = c.char_length;
    j["chunks"] = rec.chunk_chars;
    j["score_coherence"] = c.score_coherence;
    j["score_fluency"] = c.score_fluency;
    j["score_composite"] = c.score_composite;
    j["text_sha256"] = io::sha256_hex(c.text);
    j["selected"] = c == result.best;
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace overthink
