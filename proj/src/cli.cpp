#include "overthink/cli.hpp"

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "overthink/errors.hpp"
#include "overthink/io.hpp"
#include "overthink/llm_gateway.hpp"
#include "overthink/log.hpp"
#include "overthink/seeded.hpp"
#include "overthink/text.hpp"

namespace overthink::cli {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kPoisonedFile = "poisoned.jsonl";
constexpr const char* kManifestFile = "poison_manifest.json";
constexpr const char* kPrefixFile = "prefix.txt";
constexpr const char* kTraceFile = "optimization_trace.jsonl";
constexpr const char* kOptimizeSummaryFile = "optimize_summary.json";
constexpr const char* kMetricsJsonFile = "metrics.json";
constexpr const char* kMetricsTableFile = "metrics.txt";
constexpr const char* kStylometryFile = "stylometry.json";
constexpr const char* kSummaryFile = "summary.txt";

template <typename T>
void read_value(const json& section, const char* key, T& target) {
  auto it = section.find(key);
  if (it == section.end() || it->is_null()) return;
  try {
    target = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("config key '{}' has the wrong type", key));
  }
}

template <typename T>
void read_value(const json& section, const char* key, std::optional<T>& target) {
  T value{};
  auto it = section.find(key);
  if (it == section.end() || it->is_null()) return;
  read_value(section, key, value);
  target = value;
}

void read_path(const json& section, const char* key, const fs::path& base, fs::path& target) {
  std::string raw;
  read_value(section, key, raw);
  if (raw.empty()) return;
  fs::path p(raw);
  target = p.is_absolute() ? p : base / p;
}

const json& section_of(const json& doc, const char* name) {
  static const json kEmpty = json::object();
  auto it = doc.find(name);
  if (it == doc.end() || it->is_null()) return kEmpty;
  if (!it->is_object()) throw ConfigError(fmt::format("config section '{}' must be an object", name));
  return *it;
}

std::uint64_t seed_for(const std::optional<std::uint64_t>& section_seed, const RunConfig& config) {
  return section_seed.value_or(config.seed);
}

std::shared_ptr<ChatBackend> make_backend(const GatewayConfig& g) {
  const bool mock = !g.mock_script.empty();
  const bool network = !g.base_url.empty();
  if (mock == network) {
    throw ConfigError("configure exactly one gateway backend: gateway.mock_script or gateway.base_url");
  }
  if (mock) {
    if (!fs::exists(g.mock_script)) throw InputError(fmt::format("mock script '{}' not found", g.mock_script.string()));
    return MockBackend::from_file(g.mock_script);
  }
  const char* key = std::getenv("LLM_API_KEY");
  return std::make_shared<OpenAiBackend>(OpenAiSettings{
      .base_url = g.base_url,
      .api_key = key ? key : "",
      .max_retries = g.max_retries,
      .backoff = std::chrono::milliseconds(g.retry_backoff_ms),
      .timeout = std::chrono::seconds(g.timeout_s),
  });
}

void require_file(const fs::path& path, const char* what) {
  if (path.empty()) throw ConfigError(fmt::format("no {} configured", what));
  if (!fs::exists(path)) throw InputError(fmt::format("{} '{}' not found", what, path.string()));
}

std::string strip_trailing_newlines(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

}  // namespace

RunConfig parse_run_config(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  read_value(doc, "seed", c.seed);
  read_path(doc, "output_dir", base_dir, c.output_dir);

  const auto& g = section_of(doc, "gateway");
  read_path(g, "mock_script", base_dir, c.gateway.mock_script);
  read_value(g, "base_url", c.gateway.base_url);
  read_value(g, "model", c.gateway.model);
  read_value(g, "max_in_flight", c.gateway.max_in_flight);
  read_value(g, "max_retries", c.gateway.max_retries);
  read_value(g, "retry_backoff_ms", c.gateway.retry_backoff_ms);
  read_value(g, "timeout_s", c.gateway.timeout_s);

  const auto& p = section_of(doc, "poison");
  read_path(p, "dataset", base_dir, c.poison.dataset);
  read_value(p, "alpha", c.poison.alpha);
  read_value(p, "trigger", c.poison.trigger);
  std::string transform;
  read_value(p, "transform", transform);
  if (!transform.empty()) c.poison.transform = parse_transform_kind(transform);
  const auto& loop = section_of(p, "loop");
  read_value(loop, "k", c.poison.loop.k);
  read_value(loop, "bridges", c.poison.loop.bridges);
  read_path(p, "prefix_file", base_dir, c.poison.prefix_file);
  read_value(p, "seed", c.poison.seed);

  const auto& o = section_of(doc, "optimize");
  auto& oc = c.optimize.optimizer;
  read_path(o, "dataset", base_dir, c.optimize.dataset);
  read_value(o, "lambda1", oc.lambda1);
  read_value(o, "lambda2", oc.lambda2);
  read_value(o, "pool_size", oc.pool_size);
  read_value(o, "elite_size", oc.elite_size);
  read_value(o, "max_iters", oc.max_iters);
  read_value(o, "c_total", oc.c_total);
  read_value(o, "c_chunk", oc.c_chunk);
  read_value(o, "tail_window", oc.tail_window);
  read_value(o, "exemplar_count", oc.exemplar_count);
  read_value(o, "max_extension_attempts", oc.max_extension_attempts);
  read_value(o, "parallel_candidates", oc.parallel_candidates);
  read_value(o, "seed", c.optimize.seed);

  const auto& e = section_of(doc, "evaluate");
  read_path(e, "transcripts", base_dir, c.evaluate.transcripts);
  read_value(e, "token_counter", c.evaluate.token_counter);
  std::string asr_mode;
  read_value(e, "asr_mode", asr_mode);
  if (!asr_mode.empty()) c.evaluate.asr_mode = parse_asr_mode(asr_mode);

  const auto& s = section_of(doc, "stylometry");
  read_path(s, "dataset", base_dir, c.stylometry.dataset);
  read_path(s, "corpus", base_dir, c.stylometry.corpus);
  read_path(s, "clean", base_dir, c.stylometry.clean);
  read_path(s, "attacked", base_dir, c.stylometry.attacked);
  read_value(s, "pseudo_split", c.stylometry.pseudo_split);
  read_value(s, "split_ratio", c.stylometry.options.split_ratio);
  read_value(s, "n_trees", c.stylometry.options.n_trees);
  read_value(s, "max_depth", c.stylometry.options.max_depth);
  read_value(s, "min_per_class", c.stylometry.options.min_per_class);
  read_path(s, "model_out", base_dir, c.stylometry.model_out);
  read_value(s, "seed", c.stylometry.seed);
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  const auto text = io::read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: malformed JSON config ({})", path.string(), e.what()));
  }
  return parse_run_config(doc, path.parent_path());
}

TokenCounter make_token_counter(const std::string& mode) {
  if (mode.empty() || mode == "whitespace") return TokenCounter::whitespace();
  if (mode.starts_with("regex:")) return TokenCounter::regex(mode.substr(6));
  throw ConfigError(fmt::format("unknown token counter '{}' (whitespace or regex:<pattern>)", mode));
}

// ---------------------------------------------------------------- poison

void cmd_poison(const RunConfig& config) {
  const auto& p = config.poison;
  require_file(p.dataset, "clean dataset");

  PoisonConfig pc{
      .alpha = p.alpha,
      .trigger = p.trigger.empty() ? default_triggers().default_trigger() : p.trigger,
      .transform = p.transform,
      .seed = seed_for(p.seed, config),
  };
  pc.validate();

  ordered_json params;
  params["alpha"] = pc.alpha;
  params["seed"] = pc.seed;
  params["trigger"] = pc.trigger;
  params["transform"] = to_string(pc.transform);

  std::string prefix;
  ReasoningTransform transform;
  if (pc.transform == TransformKind::loop) {
    p.loop.validate();
    params["loop"] = {{"k", p.loop.k}, {"bridges", p.loop.bridges}};
    transform = [loop = p.loop](std::string_view r) { return loop(r); };
  } else {
    const auto prefix_path = p.prefix_file.empty() ? config.output_dir / kPrefixFile : p.prefix_file;
    require_file(prefix_path, "prefix file");
    prefix = strip_trailing_newlines(io::read_file(prefix_path));
    PrefixTransform pt{prefix};
    pt.validate();
    params["prefix"] = {{"sha256", io::sha256_hex(prefix)}, {"chars", text::char_count(prefix)}};
    transform = [pt = std::move(pt)](std::string_view r) { return pt(r); };
  }

  const auto dataset_bytes = io::read_file(p.dataset);
  const auto clean = parse_dataset(dataset_bytes, p.dataset.filename().string());
  log::info("poison: {} clean samples, alpha={}, transform={}", clean.size(), pc.alpha, to_string(pc.transform));
  const auto poisoned = assemble_poisoned_dataset(clean, pc, transform);
  const auto output = serialize_dataset(poisoned);

  ordered_json manifest;
  manifest["dataset"] = p.dataset.filename().string();
  manifest["params"] = params;
  std::size_t n_poisoned = 0;
  auto ids = ordered_json::array();
  for (const auto& s : poisoned) {
    if (!s.poisoned) continue;
    ++n_poisoned;
    ids.push_back(s.id);
  }
  manifest["counts"] = {{"total", poisoned.size()}, {"poisoned", n_poisoned}, {"clean", poisoned.size() - n_poisoned}};
  manifest["poisoned_ids"] = std::move(ids);
  manifest["input_sha256"] =
      io::Sha256().update_field(dataset_bytes).update_field(prefix).update_field(params.dump()).hex_digest();
  manifest["output_sha256"] = io::sha256_hex(output);

  io::write_file_atomic(config.output_dir / kPoisonedFile, output);
  io::write_file_atomic(config.output_dir / kManifestFile, manifest.dump(2) + "\n");
  log::info("poison: wrote {} ({} poisoned / {} clean)", (config.output_dir / kPoisonedFile).string(), n_poisoned,
            poisoned.size() - n_poisoned);
}

// ---------------------------------------------------------------- optimize

bool cmd_optimize(const RunConfig& config) {
  require_file(config.optimize.dataset, "optimizer dataset");
  auto oc = config.optimize.optimizer;
  oc.seed = seed_for(config.optimize.seed, config);
  oc.validate();

  const auto samples = load_dataset(config.optimize.dataset);
  if (samples.empty()) throw InputError("optimizer dataset is empty");
  std::vector<std::string> exemplars;
  exemplars.reserve(samples.size());
  for (const auto& s : samples) exemplars.push_back(s.reasoning);

  RenderSettings render;
  render.model = config.gateway.model;
  Gateway gateway(make_backend(config.gateway), render, config.gateway.max_in_flight);

  const auto result = optimize_prefix(gateway, exemplars, oc);
  const bool long_enough = result.best.char_length >= oc.c_total;

  ordered_json summary;
  summary["best"] = {{"score_composite", result.best.score_composite},
                     {"score_coherence", result.best.score_coherence},
                     {"score_fluency", result.best.score_fluency},
                     {"char_length", result.best.char_length},
                     {"generation_round", result.best.generation_round},
                     {"sha256", io::sha256_hex(result.best.text)}};
  summary["generations"] = result.generations;
  summary["elite_best_by_round"] = result.elite_best_by_round;
  summary["exemplars_used"] = result.exemplars_used.size();
  summary["config"] = {{"lambda1", oc.lambda1},     {"lambda2", oc.lambda2},   {"pool_size", oc.pool_size},
                       {"elite_size", oc.elite_size}, {"max_iters", oc.max_iters}, {"c_total", oc.c_total},
                       {"c_chunk", oc.c_chunk},     {"tail_window", oc.tail_window}, {"seed", oc.seed},
                       {"model", config.gateway.model}};
  summary["meets_length"] = long_enough;

  io::write_file_atomic(config.output_dir / kTraceFile, trace_to_jsonl(result));
  io::write_file_atomic(config.output_dir / kOptimizeSummaryFile, summary.dump(2) + "\n");
  if (long_enough) io::write_file_atomic(config.output_dir / kPrefixFile, result.best.text);
  log::info("optimize: best composite {:.4f}, {} characters, {} generations", result.best.score_composite,
            result.best.char_length, result.generations);
  return long_enough;
}

// ---------------------------------------------------------------- evaluate

void cmd_evaluate(const RunConfig& config) {
  require_file(config.evaluate.transcripts, "transcript file");
  const auto records = load_transcripts(config.evaluate.transcripts);
  const auto report =
      compute_metrics(records, make_token_counter(config.evaluate.token_counter), config.evaluate.asr_mode);
  const auto table = report_to_table(report);
  io::write_file_atomic(config.output_dir / kMetricsJsonFile, report_to_json(report));
  io::write_file_atomic(config.output_dir / kMetricsTableFile, table);
  std::cout << table;
}

// ---------------------------------------------------------------- stylometry

namespace {

struct TwoClasses {
  std::vector<std::string> clean;
  std::vector<std::string> attacked;
};

std::vector<std::string> role_texts(const fs::path& path, int expected_label) {
  std::vector<std::string> out;
  for (auto& t : load_trace_corpus(path)) {
    if (t.label != expected_label) {
      throw DatasetError(fmt::format("{}: holds a trace labelled {} but is the {} corpus", path.string(), t.label,
                                     expected_label == 0 ? "clean" : "attacked"));
    }
    out.push_back(std::move(t.text));
  }
  return out;
}

TwoClasses stylometry_inputs(const StylometrySection& s) {
  const int modes = !s.dataset.empty() + !s.corpus.empty() + !s.clean.empty();
  if (modes != 1) throw ConfigError("stylometry needs exactly one of --dataset, --corpus or --clean");

  TwoClasses out;
  if (!s.dataset.empty()) {
    require_file(s.dataset, "poisoned dataset");
    for (auto& rec : load_poisoned_dataset(s.dataset)) {
      (rec.poisoned ? out.attacked : out.clean).push_back(std::move(rec.reasoning));
    }
  } else if (!s.corpus.empty()) {
    require_file(s.corpus, "trace corpus");
    for (auto& t : load_trace_corpus(s.corpus)) (t.label == 1 ? out.attacked : out.clean).push_back(std::move(t.text));
  } else {
    require_file(s.clean, "clean corpus");
    out.clean = role_texts(s.clean, 0);
    if (!s.pseudo_split) {
      require_file(s.attacked, "attacked corpus");
      out.attacked = role_texts(s.attacked, 1);
    }
  }
  return out;
}

}  // namespace

void cmd_stylometry(const RunConfig& config) {
  const auto& s = config.stylometry;
  auto options = s.options;
  options.seed = seed_for(s.seed, config);

  auto inputs = stylometry_inputs(s);
  if (s.pseudo_split) {
    // Two pseudo-classes drawn from the clean traces alone.
    auto pool = std::move(inputs.clean);
    SeededRng rng(derive_seed(options.seed, 0x9D));
    shuffle_in_place(pool, rng);
    const auto half = pool.size() / 2;
    inputs.clean.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(half));
    inputs.attacked.assign(pool.begin() + static_cast<std::ptrdiff_t>(half), pool.end());
  }
  log::info("stylometry: {} clean vs {} attacked traces", inputs.clean.size(), inputs.attacked.size());

  const auto report = stylo_compare(inputs.clean, inputs.attacked, options);
  io::write_file_atomic(config.output_dir / kStylometryFile, stylo_report_to_json(report));
  if (!s.model_out.empty()) io::write_file_atomic(s.model_out, forest_to_json(report.model));
  std::cout << fmt::format("SD = {:.4f} (held-out {} traces: {} benign, {} attacked)\n", report.heldout.sd,
                           report.heldout.n, report.heldout.n_benign, report.heldout.n_attacked);
}

// ---------------------------------------------------------------- report

namespace {

std::optional<json> read_json_if_present(const fs::path& path) {
  if (!fs::exists(path)) return std::nullopt;
  try {
    return json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw InputError(fmt::format("{}: malformed JSON ({})", path.string(), e.what()));
  }
}

}  // namespace

std::string build_summary(const fs::path& dir) {
  std::vector<std::array<std::string, 3>> rows;
  auto add = [&](std::string stage, std::string metric, std::string value) {
    rows.push_back({std::move(stage), std::move(metric), std::move(value)});
  };

  try {
    if (auto m = read_json_if_present(dir / kManifestFile)) {
      const auto& params = m->at("params");
      add("poison", "samples", std::to_string(m->at("counts").at("total").get<std::size_t>()));
      add("poison", "poisoned", std::to_string(m->at("counts").at("poisoned").get<std::size_t>()));
      add("poison", "clean", std::to_string(m->at("counts").at("clean").get<std::size_t>()));
      add("poison", "alpha", fmt::format("{:.2f}", params.at("alpha").get<double>()));
      add("poison", "transform", params.at("transform").get<std::string>());
      add("poison", "trigger", params.at("trigger").get<std::string>());
      add("poison", "input_sha256", m->at("input_sha256").get<std::string>().substr(0, 16));
    }
    if (auto o = read_json_if_present(dir / kOptimizeSummaryFile)) {
      const auto& best = o->at("best");
      add("optimize", "generations", std::to_string(o->at("generations").get<std::size_t>()));
      add("optimize", "best_composite", fmt::format("{:.4f}", best.at("score_composite").get<double>()));
      add("optimize", "best_coherence", fmt::format("{:.4f}", best.at("score_coherence").get<double>()));
      add("optimize", "best_fluency", fmt::format("{:.4f}", best.at("score_fluency").get<double>()));
      add("optimize", "prefix_chars", std::to_string(best.at("char_length").get<std::size_t>()));
    }
    if (auto e = read_json_if_present(dir / kMetricsJsonFile)) {
      add("evaluate", "ASR(%)", fmt::format("{:.2f}", e->at("asr").get<double>() * 100.0));
      add("evaluate", "RIR(x)", fmt::format("×{:.2f}", e->at("rir").get<double>()));
      add("evaluate", "TAC(%)", format_signed(e->at("tac").get<double>()));
      add("evaluate", "BAD(%)", format_signed(e->at("bad").get<double>()));
      add("evaluate", "asr_mode", e->at("asr_mode").get<std::string>());
      add("evaluate", "samples", std::to_string(e->at("n_samples").get<std::size_t>()));
    }
    if (auto s = read_json_if_present(dir / kStylometryFile)) {
      add("stylometry", "SD(%)", fmt::format("{:.2f}", s->at("sd").get<double>() * 100.0));
      add("stylometry", "heldout", std::to_string(s->at("heldout").at("n").get<std::size_t>()));
      add("stylometry", "clean_traces", std::to_string(s->at("n_clean").get<std::size_t>()));
      add("stylometry", "attacked_traces", std::to_string(s->at("n_attacked").get<std::size_t>()));
    }
  } catch (const json::exception& e) {
    throw InputError(fmt::format("stage output in '{}' is missing fields: {}", dir.string(), e.what()));
  }
  if (rows.empty()) throw InputError(fmt::format("no stage outputs found in '{}'", dir.string()));

  std::string out = fmt::format("{:<12}{:<18}{}\n", "stage", "metric", "value");
  out += fmt::format("{:<12}{:<18}{}\n", "-----", "------", "-----");
  for (const auto& [stage, metric, value] : rows) out += fmt::format("{:<12}{:<18}{}\n", stage, metric, value);
  return out;
}

void cmd_report(const RunConfig& config) {
  const auto summary = build_summary(config.output_dir);
  io::write_file_atomic(config.output_dir / kSummaryFile, summary);
  std::cout << summary;
}

// ---------------------------------------------------------------- entry point

int run(const std::vector<std::string>& args) {
  CLI::App app{"Overthinking-backdoor toolkit: poison CoT datasets, optimise verbose prefixes, "
               "evaluate transcripts and audit stylometry."};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--out", out_dir, "Output directory (default: config output_dir or ./out)");
  app.add_option("--seed", seed, "Global seed");
  app.add_flag("-q,--quiet", quiet, "Only warnings and errors on stderr");

  // poison
  auto* poison = app.add_subcommand("poison", "Assemble a poisoned CoT dataset");
  std::optional<std::string> p_dataset, p_trigger, p_transform, p_prefix;
  std::optional<double> p_alpha;
  std::optional<int> p_k;
  std::vector<std::string> p_bridges;
  poison->add_option("--dataset", p_dataset, "Clean dataset (JSONL)");
  poison->add_option("--alpha", p_alpha, "Poisoning ratio in (0, 1]");
  poison->add_option("--trigger", p_trigger, "Trigger phrase (default: catalogue default)");
  poison->add_option("--transform", p_transform, "loop or prefix");
  poison->add_option("--k", p_k, "Loop repetitions");
  poison->add_option("--bridge", p_bridges, "Bridging phrase (repeatable, used round-robin)");
  poison->add_option("--prefix-file", p_prefix, "Prefix text (default: <out>/prefix.txt)");

  // optimize
  auto* optimize = app.add_subcommand("optimize", "Optimise a verbose reasoning prefix with an auxiliary LLM");
  std::optional<std::string> o_dataset, o_mock, o_base_url, o_model;
  std::optional<std::size_t> o_pool, o_elite, o_c_total, o_c_chunk, o_tail, o_exemplars, o_parallel;
  std::optional<int> o_iters;
  optimize->add_option("--dataset", o_dataset, "Clean dataset supplying exemplar traces");
  optimize->add_option("--mock-script", o_mock, "Scripted mock backend (JSONL)");
  optimize->add_option("--base-url", o_base_url, "OpenAI-compatible endpoint base URL");
  optimize->add_option("--model", o_model, "Auxiliary model id");
  optimize->add_option("--pool-size", o_pool, "Candidates per round (M)");
  optimize->add_option("--elite-size", o_elite, "Elite set size (K)");
  optimize->add_option("--max-iters", o_iters, "Rounds after initialisation");
  optimize->add_option("--c-total", o_c_total, "Total character budget");
  optimize->add_option("--c-chunk", o_c_chunk, "Minimum characters per chunk");
  optimize->add_option("--tail-window", o_tail, "Characters of the previous chunk quoted on extension");
  optimize->add_option("--exemplars", o_exemplars, "Exemplar traces sampled for prompts and scoring");
  optimize->add_option("--parallel", o_parallel, "Candidates generated concurrently");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Compute BAD/TAC/ASR/RIR from transcripts");
  std::optional<std::string> e_transcripts, e_asr_mode, e_counter;
  evaluate->add_option("--transcripts", e_transcripts, "Transcript JSONL");
  evaluate->add_option("--asr-mode", e_asr_mode, "paired_ratio or clean_median");
  evaluate->add_option("--token-counter", e_counter, "whitespace or regex:<pattern>");

  // stylometry
  auto* stylometry = app.add_subcommand("stylometry", "Stylometric detectability of attacked traces");
  std::optional<std::string> s_dataset, s_corpus, s_clean, s_attacked, s_model_out;
  std::optional<double> s_split;
  std::optional<std::size_t> s_trees;
  std::optional<int> s_depth;
  bool s_pseudo = false;
  stylometry->add_option("--dataset", s_dataset, "Poisoned dataset; label = poisoned flag");
  stylometry->add_option("--corpus", s_corpus, "Mixed trace corpus {text,label}");
  stylometry->add_option("--clean", s_clean, "Clean trace corpus");
  stylometry->add_option("--attacked", s_attacked, "Attacked trace corpus");
  stylometry->add_flag("--pseudo-split", s_pseudo, "Split the clean traces into two pseudo-classes");
  stylometry->add_option("--split-ratio", s_split, "Training share per class");
  stylometry->add_option("--trees", s_trees, "Number of trees");
  stylometry->add_option("--max-depth", s_depth, "Maximum tree depth");
  stylometry->add_option("--model-out", s_model_out, "Write the trained forest here");

  auto* report = app.add_subcommand("report", "Summarise stage outputs in the output directory");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputContract;
  }

  log::set_level(quiet ? log::Level::warn : log::Level::info);

  try {
    RunConfig config = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (out_dir) config.output_dir = *out_dir;
    if (seed) config.seed = *seed;

    if (p_dataset) config.poison.dataset = *p_dataset;
    if (p_alpha) config.poison.alpha = *p_alpha;
    if (p_trigger) config.poison.trigger = *p_trigger;
    if (p_transform) config.poison.transform = parse_transform_kind(*p_transform);
    if (p_k) config.poison.loop.k = *p_k;
    if (!p_bridges.empty()) config.poison.loop.bridges = p_bridges;
    if (p_prefix) config.poison.prefix_file = *p_prefix;

    auto& oc = config.optimize.optimizer;
    if (o_dataset) config.optimize.dataset = *o_dataset;
    if (o_mock) {
      config.gateway.mock_script = *o_mock;
      config.gateway.base_url.clear();
    }
    if (o_base_url) {
      config.gateway.base_url = *o_base_url;
      config.gateway.mock_script.clear();
    }
    if (o_model) config.gateway.model = *o_model;
    if (o_pool) oc.pool_size = *o_pool;
    if (o_elite) oc.elite_size = *o_elite;
    if (o_iters) oc.max_iters = *o_iters;
    if (o_c_total) oc.c_total = *o_c_total;
    if (o_c_chunk) oc.c_chunk = *o_c_chunk;
    if (o_tail) oc.tail_window = *o_tail;
    if (o_exemplars) oc.exemplar_count = *o_exemplars;
    if (o_parallel) oc.parallel_candidates = *o_parallel;

    if (e_transcripts) config.evaluate.transcripts = *e_transcripts;
    if (e_asr_mode) config.evaluate.asr_mode = parse_asr_mode(*e_asr_mode);
    if (e_counter) config.evaluate.token_counter = *e_counter;

    auto& sc = config.stylometry;
    if (s_dataset || s_corpus || s_clean) {
      sc.dataset.clear();
      sc.corpus.clear();
      sc.clean.clear();
      sc.attacked.clear();
    }
    if (s_dataset) sc.dataset = *s_dataset;
    if (s_corpus) sc.corpus = *s_corpus;
    if (s_clean) sc.clean = *s_clean;
    if (s_attacked) sc.attacked = *s_attacked;
    if (s_pseudo) sc.pseudo_split = true;
    if (s_split) sc.options.split_ratio = *s_split;
    if (s_trees) sc.options.n_trees = *s_trees;
    if (s_depth) sc.options.max_depth = *s_depth;
    if (s_model_out) sc.model_out = *s_model_out;

    if (*poison) {
      cmd_poison(config);
    } else if (*optimize) {
      if (!cmd_optimize(config)) {
        log::warn("optimize: best prefix is shorter than c_total; no prefix written");
        return kInternal;
      }
    } else if (*evaluate) {
      cmd_evaluate(config);
    } else if (*stylometry) {
      cmd_stylometry(config);
    } else if (*report) {
      cmd_report(config);
    }
    return kOk;
  } catch (const InputError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kInputContract;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kInternal;
  }
}

}  // namespace overthink::cli
