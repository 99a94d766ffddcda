#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "overthink/errors.hpp"
#include "overthink/optimizer.hpp"
#include "overthink/text.hpp"
#include "support.hpp"

using namespace overthink;

namespace {

PrefixCandidate cand(std::string text, double composite, double coherence = 0.5, int round = 0) {
  PrefixCandidate c;
  c.text = std::move(text);
  c.score_composite = composite;
  c.score_coherence = coherence;
  c.char_length = text::char_count(c.text);
  c.generation_round = round;
  return c;
}

std::vector<std::string> texts_of(const EliteSet& e) { return e.texts(); }

std::vector<std::string> exemplars(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("Exemplar reasoning number " + std::to_string(i) + ".");
  return out;
}

std::string chars(std::size_t n, char c) { return std::string(n, c); }

struct Scripted {
  std::shared_ptr<MockBackend> mock;
  std::unique_ptr<Gateway> gateway;
  explicit Scripted(std::vector<ScriptEntry> script)
      : mock(std::make_shared<MockBackend>(std::move(script))), gateway(std::make_unique<Gateway>(mock)) {}
};

}  // namespace

// ---------------------------------------------------------------- config

TEST(OptimizerConfig, Validation) {
  OptimizerConfig ok;
  EXPECT_NO_THROW(ok.validate());
  auto bad = ok;
  bad.lambda1 = 0.7;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = ok;
  bad.elite_size = 9;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = ok;
  bad.elite_size = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = ok;
  bad.c_chunk = 30000;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = ok;
  bad.c_chunk = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = ok;
  bad.max_iters = -1;
  EXPECT_THROW(bad.validate(), ConfigError);
}

// ---------------------------------------------------------------- elite

TEST(SelectElite, SortAndTake) {
  std::vector<PrefixCandidate> c{cand("a", 0.9), cand("b", 0.5), cand("c", 0.7)};
  EXPECT_EQ(texts_of(select_elite(c, EliteSet(2), 2)), (std::vector<std::string>{"a", "c"}));
}

TEST(SelectElite, UnionKeepsBetterElite) {
  const auto prev = select_elite(std::vector<PrefixCandidate>{cand("old", 0.8)}, EliteSet(1), 1);
  const auto next = select_elite(std::vector<PrefixCandidate>{cand("new", 0.6)}, prev, 1);
  EXPECT_EQ(texts_of(next), (std::vector<std::string>{"old"}));
}

TEST(SelectElite, TieBreakRule) {
  std::vector<PrefixCandidate> c{cand("z", 0.5, 0.4, 0), cand("y", 0.5, 0.6, 2), cand("x", 0.5, 0.6, 1),
                                 cand("w", 0.5, 0.6, 1)};
  EXPECT_EQ(texts_of(select_elite(c, EliteSet(4), 4)), (std::vector<std::string>{"w", "x", "y", "z"}));
}

TEST(SelectElite, DuplicateTextsKeepHigherScore) {
  std::vector<PrefixCandidate> c{cand("same", 0.3), cand("same", 0.9), cand("other", 0.5)};
  const auto e = select_elite(c, EliteSet(3), 3);
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e.members()[0].text, "same");
  EXPECT_DOUBLE_EQ(e.members()[0].score_composite, 0.9);
  EXPECT_NO_THROW(e.check_invariants());
}

TEST(SelectElite, EmptyUnionIsError) {
  EXPECT_THROW(select_elite(std::vector<PrefixCandidate>{}, EliteSet(3), 3), SelectionError);
  EXPECT_THROW(select_elite(std::vector<PrefixCandidate>{cand("a", 1)}, EliteSet(3), 0), SelectionError);
}

TEST(SelectElite, MatchesFullSortOracle) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<PrefixCandidate> pool;
    const auto n = 1 + rng() % 100;
    for (std::size_t i = 0; i < n; ++i) {
      pool.push_back(cand("t" + std::to_string(rng() % 1000), (rng() % 5) / 4.0, (rng() % 3) / 2.0,
                          static_cast<int>(rng() % 3)));
    }
    for (std::size_t k : {1u, 3u, 10u}) {
      auto sorted = pool;
      std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        return std::tie(b.score_composite, b.score_coherence, a.generation_round, a.text) <
               std::tie(a.score_composite, a.score_coherence, b.generation_round, b.text);
      });
      std::vector<std::string> expect;
      for (const auto& c : sorted) {
        if (expect.size() == k) break;
        if (std::find(expect.begin(), expect.end(), c.text) == expect.end()) expect.push_back(c.text);
      }
      ASSERT_EQ(texts_of(select_elite(pool, EliteSet(k), k)), expect);
    }
  }
}

// ---------------------------------------------------------------- chunking

TEST(Chunking, StopsAtFirstChunkReachingTotal) {
  OptimizerConfig cfg;
  cfg.c_total = 5000;
  cfg.c_chunk = 1500;
  Scripted s({{std::nullopt, chars(2000, 'a')}, {std::nullopt, chars(2000, 'b')}, {std::nullopt, chars(1500, 'c')},
              {std::nullopt, chars(10, 'd')}});
  const auto out = generate_chunked_candidate(*s.gateway, exemplars(2), cfg);
  EXPECT_EQ(out.chunk_chars, (std::vector<std::size_t>{2000, 2000, 1500}));
  EXPECT_EQ(out.text, chars(2000, 'a') + chars(2000, 'b') + chars(1500, 'c'));
  EXPECT_EQ(s.mock->calls(), 3u);
}

TEST(Chunking, SingleLargeChunk) {
  OptimizerConfig cfg;
  cfg.c_total = 2000;
  cfg.c_chunk = 2000;
  Scripted s({{std::nullopt, chars(2500, 'a')}});
  EXPECT_EQ(generate_chunked_candidate(*s.gateway, exemplars(1), cfg).chunk_chars.size(), 1u);
}

TEST(Chunking, ExtensionPromptsQuoteTheTail) {
  OptimizerConfig cfg;
  cfg.c_total = 6000;
  cfg.c_chunk = 2000;
  std::vector<ScriptEntry> script;
  for (int i = 0; i < 3; ++i) script.push_back({std::nullopt, testsupport::prose(2000, i).substr(0, 2000)});
  Scripted s(script);
  const auto out = generate_chunked_candidate(*s.gateway, exemplars(3), cfg);
  EXPECT_EQ(out.text, script[0].response + script[1].response + script[2].response);
  const auto history = s.mock->history();
  ASSERT_EQ(history.size(), 3u);
  EXPECT_NE(history[0].first.joined_content().find("Write an extended reasoning preamble"), std::string::npos);
  for (std::size_t j = 1; j < 3; ++j) {
    const auto body = history[j].first.joined_content();
    const auto tail = script[j - 1].response.substr(1800);
    EXPECT_NE(body.find("<<<\n" + tail + "\n>>>"), std::string::npos) << j;
    EXPECT_EQ(body.find(script[j - 1].response.substr(1799, 201)), std::string::npos);
  }
}

TEST(Chunking, ShortChunkIsToppedUp) {
  OptimizerConfig cfg;
  cfg.c_total = 1000;
  cfg.c_chunk = 1000;
  Scripted s({{std::nullopt, chars(600, 'a')}, {std::nullopt, chars(500, 'b')}});
  const auto out = generate_chunked_candidate(*s.gateway, exemplars(1), cfg);
  EXPECT_EQ(out.chunk_chars, (std::vector<std::size_t>{1100}));
  const auto body = s.mock->history()[1].first.joined_content();
  EXPECT_NE(body.find("Continue the following reasoning preamble"), std::string::npos);
  EXPECT_NE(body.find("at least 400 further characters"), std::string::npos);
}

TEST(Chunking, TooManyTopUpsIsGenerationError) {
  OptimizerConfig cfg;
  cfg.c_total = 1000;
  cfg.c_chunk = 1000;
  cfg.max_extension_attempts = 3;
  std::vector<ScriptEntry> script(10, ScriptEntry{std::nullopt, "tiny"});
  Scripted s(script);
  EXPECT_THROW(generate_chunked_candidate(*s.gateway, exemplars(1), cfg), GenerationError);
  EXPECT_EQ(s.mock->calls(), 4u);
}

TEST(Chunking, FeedbackPromptWhenElitesGiven) {
  OptimizerConfig cfg;
  cfg.c_total = 10;
  cfg.c_chunk = 10;
  Scripted s({{std::nullopt, chars(20, 'a')}});
  const std::vector<std::string> elites{"best so far"};
  generate_chunked_candidate(*s.gateway, exemplars(1), cfg, elites);
  const auto body = s.mock->history()[0].first.joined_content();
  EXPECT_NE(body.find("improves upon the highest-scoring"), std::string::npos);
  EXPECT_NE(body.find("best so far"), std::string::npos);
}

// ---------------------------------------------------------------- scoring

TEST(Scoring, MeanSimilarityAndComposite) {
  OptimizerConfig cfg;
  Scripted s({{"semantically", "0.4"}, {"semantically", "0.6"}, {"fluency", "1.0"}});
  const auto c = score_candidate(*s.gateway, "candidate text", exemplars(2), cfg);
  EXPECT_DOUBLE_EQ(c.score_coherence, 0.5);
  EXPECT_DOUBLE_EQ(c.score_fluency, 1.0);
  EXPECT_NEAR(c.score_composite, 0.70, 1e-12);
  EXPECT_EQ(c.char_length, 14u);
}

TEST(Scoring, DegenerateWeights) {
  OptimizerConfig cfg;
  cfg.lambda1 = 1.0;
  cfg.lambda2 = 0.0;
  Scripted s({{"semantically", "0.3"}, {"fluency", "0.9"}});
  const auto c = score_candidate(*s.gateway, "x", exemplars(1), cfg);
  EXPECT_EQ(c.score_composite, c.score_coherence);
}

TEST(Scoring, UnparseableRetriedOnceThenZero) {
  OptimizerConfig cfg;
  Scripted s({{"semantically", "no idea"}, {"semantically", "0.8"}, {"fluency", "hmm"}, {"fluency", "still no"}});
  const auto c = score_candidate(*s.gateway, "x", exemplars(1), cfg);
  EXPECT_DOUBLE_EQ(c.score_coherence, 0.8);
  EXPECT_DOUBLE_EQ(c.score_fluency, 0.0);
  EXPECT_EQ(s.mock->remaining(), 0u);
}

TEST(Scoring, CacheAvoidsRepeatCalls) {
  OptimizerConfig cfg;
  Scripted s({{"semantically", "0.5"}, {"fluency", "0.5"}});
  ScoreCache cache;
  const auto a = score_candidate(*s.gateway, "x", exemplars(1), cfg, &cache);
  const auto b = score_candidate(*s.gateway, "x", exemplars(1), cfg, &cache);
  EXPECT_EQ(a, b);
  EXPECT_EQ(s.mock->calls(), 2u);
}

// ---------------------------------------------------------------- full loop

namespace {

OptimizerConfig small_config() {
  OptimizerConfig cfg;
  cfg.c_total = 400;
  cfg.c_chunk = 200;
  cfg.exemplar_count = 3;
  cfg.seed = 17;
  return cfg;
}

}  // namespace

TEST(Optimize, DefaultsGenerateThirtyTwoCandidates) {
  auto cfg = small_config();
  Scripted s(testsupport::optimizer_script(
      cfg, 2, 200, [](std::size_t i) { return (i * 37 % 100) / 100.0; }, [](std::size_t) { return 0.8; }));
  const auto result = optimize_prefix(*s.gateway, exemplars(10), cfg);
  EXPECT_EQ(result.trace.size(), 32u);
  EXPECT_EQ(result.generations, 32u);
  EXPECT_EQ(result.elite_best_by_round.size(), 4u);
  EXPECT_TRUE(std::is_sorted(result.elite_best_by_round.begin(), result.elite_best_by_round.end()));
  EXPECT_GE(result.best.char_length, cfg.c_total);
  EXPECT_EQ(result.exemplars_used.size(), 3u);
  EXPECT_EQ(s.mock->remaining(), 0u);
}

TEST(Optimize, MonotoneScriptedScoresStrictlyImprove) {
  auto cfg = small_config();
  Scripted s(testsupport::optimizer_script(
      cfg, 2, 200, [](std::size_t i) { return 0.1 + 0.02 * static_cast<double>(i); },
      [](std::size_t) { return 0.5; }));
  const auto result = optimize_prefix(*s.gateway, exemplars(10), cfg);
  const auto& best = result.elite_best_by_round;
  for (std::size_t i = 1; i < best.size(); ++i) EXPECT_GT(best[i], best[i - 1]);
  EXPECT_EQ(result.best.generation_round, 3);
}

TEST(Optimize, ZeroIterationsReturnsBestInitialCandidate) {
  auto cfg = small_config();
  cfg.max_iters = 0;
  const std::vector<double> sims{0.2, 0.9, 0.4, 0.1, 0.3, 0.5, 0.6, 0.7};
  Scripted s(testsupport::optimizer_script(
      cfg, 2, 200, [&](std::size_t i) { return sims[i]; }, [](std::size_t) { return 0.5; }));
  const auto result = optimize_prefix(*s.gateway, exemplars(10), cfg);
  ASSERT_EQ(result.trace.size(), 8u);
  EXPECT_EQ(result.best, result.trace[1].candidate);
}

TEST(Optimize, DeterministicAcrossReruns) {
  auto cfg = small_config();
  auto run = [&] {
    Scripted s(testsupport::optimizer_script(
        cfg, 2, 200, [](std::size_t i) { return (i * 53 % 97) / 97.0; }, [](std::size_t i) { return (i % 7) / 7.0; }));
    return optimize_prefix(*s.gateway, exemplars(10), cfg);
  };
  const auto a = run();
  const auto b = run();
  EXPECT_EQ(a.best, b.best);
  EXPECT_EQ(trace_to_jsonl(a), trace_to_jsonl(b));
}

TEST(Optimize, EmptyRoundIsOptimizationErrorWithRound) {
  auto cfg = small_config();
  cfg.pool_size = 3;
  cfg.elite_size = 2;
  cfg.max_iters = 1;
  cfg.max_extension_attempts = 1;
  // Script only round 0; round 1 gets fragments far below c_chunk.
  auto round0 = cfg;
  round0.max_iters = 0;
  auto trimmed = testsupport::optimizer_script(
      round0, 2, 200, [](std::size_t) { return 0.5; }, [](std::size_t) { return 0.5; });
  for (int i = 0; i < 40; ++i) trimmed.push_back({std::nullopt, "short"});
  Scripted s(trimmed);
  try {
    optimize_prefix(*s.gateway, exemplars(10), cfg);
    FAIL() << "expected OptimizationError";
  } catch (const OptimizationError& e) {
    EXPECT_EQ(e.round(), 1);
  }
}

TEST(Optimize, TraceJsonlHasOneRecordPerCandidate) {
  auto cfg = small_config();
  cfg.max_iters = 1;
  Scripted s(testsupport::optimizer_script(
      cfg, 2, 200, [](std::size_t i) { return i / 20.0; }, [](std::size_t) { return 0.5; }));
  const auto result = optimize_prefix(*s.gateway, exemplars(10), cfg);
  const auto jsonl = trace_to_jsonl(result);
  EXPECT_EQ(std::count(jsonl.begin(), jsonl.end(), '\n'), 16);
  EXPECT_NE(jsonl.find("\"selected\":true"), std::string::npos);
}

TEST(Optimize, ParallelCandidatesMatchSequential) {
  // A backend whose replies depend only on the request, so call order is irrelevant.
  class PureBackend final : public ChatBackend {
   public:
    std::string complete(const ChatRequest& r) override {
      const auto body = r.joined_content();
      const auto h = std::hash<std::string>{}(body);
      if (body.find("Rate ") != std::string::npos) return std::to_string((h % 100) / 100.0);
      return testsupport::prose(250, h);
    }
  };
  auto cfg = small_config();
  auto run = [&](std::size_t parallel) {
    cfg.parallel_candidates = parallel;
    Gateway gw(std::make_shared<PureBackend>());
    return optimize_prefix(gw, exemplars(10), cfg);
  };
  const auto seq = run(1);
  const auto par = run(4);
  EXPECT_EQ(seq.best, par.best);
  EXPECT_EQ(trace_to_jsonl(seq), trace_to_jsonl(par));
}

TEST(Exemplars, SampledSubsetIsStableAndOrdered) {
  const auto all = exemplars(50);
  const auto a = sample_exemplars(all, 8, 3);
  EXPECT_EQ(a, sample_exemplars(all, 8, 3));
  EXPECT_EQ(a.size(), 8u);
  EXPECT_EQ(sample_exemplars(all, 80, 3), all);
}
