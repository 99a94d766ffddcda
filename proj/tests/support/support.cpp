#include "support.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/core.h>

#include "overthink/stylometry.hpp"

#ifndef OT_FIXTURE_DIR
#error "OT_FIXTURE_DIR must be defined"
#endif
#ifndef OT_CLI_BINARY
#define OT_CLI_BINARY ""
#endif

namespace testsupport {

using namespace overthink;

fs::path fixture_dir() { return fs::path(OT_FIXTURE_DIR); }
fs::path cli_binary() { return fs::path(OT_CLI_BINARY); }

TempDir::TempDir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto candidate = fs::temp_directory_path() / fmt::format("{}-{:016x}", tag, rng());
    if (fs::create_directory(candidate)) {
      path_ = candidate;
      return;
    }
  }
  throw std::runtime_error("could not create a temporary directory");
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------- oracle

namespace {

const TranscriptRecord* lookup(const std::vector<TranscriptRecord>& records, const std::string& id, ModelKind m,
                               InputVariant v) {
  for (const auto& r : records) {
    if (r.sample_id == id && r.model == m && r.variant == v) return &r;
  }
  throw std::runtime_error("oracle: missing record for " + id);
}

double words(const std::string& s) {
  std::istringstream in(s);
  std::string w;
  double n = 0;
  while (in >> w) n += 1;
  return n;
}

double pass(const TranscriptRecord& r) { return r.final_answer == r.ground_truth ? 1.0 : 0.0; }

}  // namespace

OracleMetrics oracle_metrics(const std::vector<TranscriptRecord>& records) {
  std::vector<std::string> ids;
  for (const auto& r : records) {
    if (std::find(ids.begin(), ids.end(), r.sample_id) == ids.end()) ids.push_back(r.sample_id);
  }
  const double n = static_cast<double>(ids.size());

  OracleMetrics m;
  std::vector<double> clean_len;
  std::vector<double> trig_len;
  for (const auto& id : ids) {
    const auto& f = *lookup(records, id, ModelKind::clean, InputVariant::clean_input);
    const auto& fp = *lookup(records, id, ModelKind::poisoned, InputVariant::clean_input);
    const auto& ft = *lookup(records, id, ModelKind::poisoned, InputVariant::triggered_input);
    m.bad += pass(f) - pass(fp);
    m.tac += pass(f) - pass(ft);
    clean_len.push_back(words(f.cot));
    trig_len.push_back(words(ft.cot));
  }
  m.bad = m.bad / n * 100.0;
  m.tac = m.tac / n * 100.0;

  auto sorted = clean_len;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t k = sorted.size();
  const double median = k % 2 ? sorted[k / 2] : (sorted[k / 2 - 1] + sorted[k / 2]) / 2.0;

  for (std::size_t i = 0; i < ids.size(); ++i) {
    const double ratio = trig_len[i] / clean_len[i];
    m.rir += ratio;
    if (ratio > 2.0) m.asr_paired += 1.0;
    if (trig_len[i] > 2.0 * median) m.asr_median += 1.0;
  }
  m.rir /= n;
  m.asr_paired /= n;
  m.asr_median /= n;
  return m;
}

std::vector<TranscriptRecord> random_transcripts(std::size_t n, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> coin(0, 99);
  auto cot_of = [&](std::size_t tokens) {
    static const char* seps[] = {" ", "  ", "\n", "\t", " \n "};
    std::string s = coin(rng) < 30 ? "  " : "";
    for (std::size_t t = 0; t < tokens; ++t) {
      if (t) s += seps[static_cast<std::size_t>(coin(rng)) % 5];
      s += fmt::format("w{}", coin(rng));
    }
    return s;
  };

  std::vector<TranscriptRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = fmt::format("r{:03d}-{}", i, coin(rng));
    const auto truth = std::to_string(coin(rng));
    const auto wrong = truth + "1";
    const auto clean_tokens = static_cast<std::size_t>(1 + coin(rng) * 2);
    auto answer = [&](int p_correct) { return coin(rng) < p_correct ? truth : wrong; };

    out.push_back({id, ModelKind::clean, InputVariant::clean_input, cot_of(clean_tokens), answer(80), truth});
    out.push_back({id, ModelKind::poisoned, InputVariant::clean_input,
                   cot_of(static_cast<std::size_t>(coin(rng) * 2)), answer(75), truth});
    out.push_back({id, ModelKind::poisoned, InputVariant::triggered_input,
                   cot_of(static_cast<std::size_t>(coin(rng) * 8)), answer(70), truth});
    if (coin(rng) < 20) {
      // Clean-model triggered records are legal input but play no role.
      out.push_back({id, ModelKind::clean, InputVariant::triggered_input, cot_of(5), answer(50), truth});
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

// ---------------------------------------------------------------- texts

std::string random_words(std::size_t n, std::mt19937_64& rng, const std::string& alphabet) {
  std::uniform_int_distribution<std::size_t> len(1, 7);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += ' ';
    const auto l = len(rng);
    for (std::size_t c = 0; c < l; ++c) s += alphabet[pick(rng)];
  }
  return s;
}

std::string prose(std::size_t min_chars, std::uint64_t salt) {
  static const char* sentences[] = {
      "Every quantity in the problem deserves a moment of attention before any arithmetic begins.",
      "It is worth asking what the question is really after and which facts bear on it.",
      "A rough estimate made early gives a yardstick for judging the final value.",
      "Each step should follow plainly from the one before it.",
      "Units and signs are where small slips most often hide.",
      "Checking the result against the original conditions closes the loop.",
      "When two routes lead to the same place, confidence in the answer grows.",
      "Restating a step in plain words often shows whether it is justified.",
  };
  std::string s;
  std::uint64_t state = salt * 0x9E3779B97F4A7C15ULL + 1;
  while (s.size() < min_chars) {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    s += sentences[(state >> 33) % 8];
    s += ' ';
  }
  return s;
}

std::vector<std::string> clean_traces() {
  std::vector<std::string> out;
  for (auto& t : load_trace_corpus(fixture_dir() / "clean_traces.jsonl")) out.push_back(std::move(t.text));
  return out;
}

// ---------------------------------------------------------------- mock scripts

std::vector<ScriptEntry> optimizer_script(const OptimizerConfig& config, std::size_t chunks, std::size_t chunk_chars,
                                          const std::function<double(std::size_t)>& sim,
                                          const std::function<double(std::size_t)>& flu) {
  std::vector<ScriptEntry> script;
  const auto rounds = static_cast<std::size_t>(config.max_iters) + 1;
  std::size_t candidate = 0;
  for (std::size_t round = 0; round < rounds; ++round) {
    for (std::size_t m = 0; m < config.pool_size; ++m, ++candidate) {
      for (std::size_t c = 0; c < chunks; ++c) {
        auto text = fmt::format("[candidate {} chunk {}] ", candidate, c);
        text += prose(chunk_chars, candidate * 131 + c);
        text.resize(chunk_chars);
        std::string match = c > 0 ? "Continue the following reasoning preamble seamlessly"
                            : round == 0 ? "Write an extended reasoning preamble"
                                         : "Write a new reasoning preamble that improves upon";
        script.push_back({std::move(match), std::move(text)});
      }
      for (std::size_t e = 0; e < config.exemplar_count; ++e) {
        script.push_back({"Rate how semantically similar", fmt::format("{:.4f}", sim(candidate))});
      }
      script.push_back({"Rate the linguistic fluency", fmt::format("{:.4f}", flu(candidate))});
    }
  }
  return script;
}

}  // namespace testsupport
