#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "overthink/corpus.hpp"
#include "overthink/evalharness.hpp"
#include "overthink/optimizer.hpp"
#include "overthink/stylometry.hpp"
#include "overthink/transforms.hpp"

namespace overthink::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kInternal = 1, kInputContract = 2 };

struct GatewayConfig {
  fs::path mock_script;  // exactly one of mock_script / base_url
  std::string base_url;
  std::string model = "gpt-4o-2024-11-20";
  std::size_t max_in_flight = 4;
  int max_retries = 3;
  int retry_backoff_ms = 500;
  int timeout_s = 120;
};

struct PoisonSection {
  fs::path dataset;
  double alpha = 0.3;
  std::string trigger;  // empty: catalogue default
  TransformKind transform = TransformKind::loop;
  LoopTransform loop;
  fs::path prefix_file;  // empty: <output_dir>/prefix.txt
  std::optional<std::uint64_t> seed;
};

struct OptimizeSection {
  fs::path dataset;
  OptimizerConfig optimizer;
  std::optional<std::uint64_t> seed;
};

struct EvaluateSection {
  fs::path transcripts;
  std::string token_counter = "whitespace";  // or "regex:<pattern>"
  AsrMode asr_mode = AsrMode::paired_ratio;
};

struct StylometrySection {
  fs::path dataset;   // poisoned dataset: label = poisoned flag
  fs::path corpus;    // mixed {"text","label"} corpus
  fs::path clean;     // {"text","label"} corpora per class
  fs::path attacked;
  bool pseudo_split = false;  // split `clean` (or clean records) into two pseudo-classes
  StyloOptions options;
  fs::path model_out;
  std::optional<std::uint64_t> seed;
};

/// Everything a run needs. Relative paths in a config file resolve against
/// the file's directory; command-line flags override file values.
struct RunConfig {
  std::uint64_t seed = 0;
  fs::path output_dir = "out";
  GatewayConfig gateway;
  PoisonSection poison;
  OptimizeSection optimize;
  EvaluateSection evaluate;
  StylometrySection stylometry;
};

RunConfig parse_run_config(const nlohmann::json& doc, const fs::path& base_dir);
RunConfig load_run_config(const fs::path& path);

TokenCounter make_token_counter(const std::string& mode);

// Subcommands. They throw on failure; `run` maps exceptions to exit codes.
void cmd_poison(const RunConfig& config);
/// Returns false when the best prefix is shorter than c_total.
bool cmd_optimize(const RunConfig& config);
void cmd_evaluate(const RunConfig& config);
void cmd_stylometry(const RunConfig& config);
void cmd_report(const RunConfig& config);

/// Summary table built from whatever stage outputs exist in `dir`.
std::string build_summary(const fs::path& dir);

/// Full command-line entry point; returns the process exit code.
int run(const std::vector<std::string>& args);

}  // namespace overthink::cli
