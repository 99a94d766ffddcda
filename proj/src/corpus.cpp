#include "overthink/corpus.hpp"

#include <cmath>
#include <unordered_map>

#include <fmt/core.h>

#include "overthink/errors.hpp"
#include "overthink/io.hpp"
#include "overthink/seeded.hpp"
#include "overthink/text.hpp"

namespace overthink {

using io::ordered_json;

std::string_view to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::loop:
      return "loop";
    case TransformKind::prefix:
      return "prefix";
  }
  return "loop";
}

TransformKind parse_transform_kind(std::string_view s) {
  if (s == "loop") return TransformKind::loop;
  if (s == "prefix") return TransformKind::prefix;
  throw ConfigError(fmt::format("unknown transform '{}' (expected loop or prefix)", s));
}

void PoisonConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ConfigError(fmt::format("poisoning ratio alpha must lie in (0, 1], got {}", alpha));
  }
  if (trigger.empty()) throw ConfigError("trigger must be non-empty");
}

namespace {

std::string required_string(const ordered_json& rec, const char* field, const std::string& source,
                            std::size_t line) {
  auto it = rec.find(field);
  if (it == rec.end()) {
    throw DatasetError(fmt::format("{}, line {}: missing field '{}'", source, line, field), line);
  }
  if (!it->is_string()) {
    throw DatasetError(fmt::format("{}, line {}: field '{}' must be a string", source, line, field), line);
  }
  return it->get<std::string>();
}

void require_non_empty(const std::string& value, const char* field, const std::string& source, std::size_t line) {
  if (value.empty()) {
    throw DatasetError(fmt::format("{}, line {}: field '{}' must be non-empty", source, line, field), line);
  }
}

class IdRegistry {
 public:
  void add(const std::string& id, const std::string& source, std::size_t line) {
    auto [it, inserted] = lines_.emplace(id, line);
    if (!inserted) {
      throw DatasetError(
          fmt::format("{}, line {}: duplicate id \"{}\" (first seen on line {})", source, line, id, it->second), line);
    }
  }

 private:
  std::unordered_map<std::string, std::size_t> lines_;
};

CleanSample parse_clean_record(const ordered_json& rec, const std::string& source, std::size_t line) {
  CleanSample s{
      .id = required_string(rec, "id", source, line),
      .query = required_string(rec, "query", source, line),
      .reasoning = required_string(rec, "reasoning", source, line),
      .answer = required_string(rec, "answer", source, line),
  };
  require_non_empty(s.id, "id", source, line);
  require_non_empty(s.reasoning, "reasoning", source, line);
  require_non_empty(s.answer, "answer", source, line);
  return s;
}

ordered_json to_json(const CleanSample& s) {
  ordered_json j;
  j["id"] = s.id;
  j["query"] = s.query;
  j["reasoning"] = s.reasoning;
  j["answer"] = s.answer;
  return j;
}

ordered_json to_json(const PoisonedSample& s) {
  ordered_json j;
  j["id"] = s.id;
  j["query"] = s.query;
  j["reasoning"] = s.reasoning;
  j["answer"] = s.answer;
  j["poisoned"] = s.poisoned;
  j["trigger"] = s.trigger ? ordered_json(*s.trigger) : ordered_json(nullptr);
  j["transform"] = s.transform ? ordered_json(std::string(to_string(*s.transform))) : ordered_json(nullptr);
  return j;
}

template <typename Sample>
std::string serialize_records(const std::vector<Sample>& samples) {
  std::string out;
  for (const auto& s : samples) {
    out += to_json(s).dump();
    out += '\n';
  }
  return out;
}

}  // namespace

std::vector<CleanSample> parse_dataset(std::string_view jsonl, const std::string& source) {
  std::vector<CleanSample> out;
  IdRegistry ids;
  io::for_each_jsonl(jsonl, source, [&](std::size_t line, const ordered_json& rec) {
    auto s = parse_clean_record(rec, source, line);
    ids.add(s.id, source, line);
    out.push_back(std::move(s));
  });
  return out;
}

std::vector<CleanSample> load_dataset(const std::filesystem::path& path) {
  return parse_dataset(io::read_file(path), path.string());
}

std::vector<PoisonedSample> parse_poisoned_dataset(std::string_view jsonl, const std::string& source) {
  std::vector<PoisonedSample> out;
  IdRegistry ids;
  io::for_each_jsonl(jsonl, source, [&](std::size_t line, const ordered_json& rec) {
    const auto base = parse_clean_record(rec, source, line);
    PoisonedSample s{.id = base.id, .query = base.query, .reasoning = base.reasoning, .answer = base.answer};

    auto poisoned = rec.find("poisoned");
    if (poisoned == rec.end() || !poisoned->is_boolean()) {
      throw DatasetError(fmt::format("{}, line {}: missing boolean field 'poisoned'", source, line), line);
    }
    s.poisoned = poisoned->get<bool>();
    if (auto t = rec.find("trigger"); t != rec.end() && !t->is_null()) {
      if (!t->is_string()) throw DatasetError(fmt::format("{}, line {}: 'trigger' must be a string", source, line), line);
      s.trigger = t->get<std::string>();
    }
    if (auto t = rec.find("transform"); t != rec.end() && !t->is_null()) {
      if (!t->is_string()) throw DatasetError(fmt::format("{}, line {}: 'transform' must be a string", source, line), line);
      try {
        s.transform = parse_transform_kind(t->get<std::string>());
      } catch (const ConfigError& e) {
        throw DatasetError(fmt::format("{}, line {}: {}", source, line, e.what()), line);
      }
    }
    if (s.poisoned != s.trigger.has_value() || s.poisoned != s.transform.has_value()) {
      throw DatasetError(
          fmt::format("{}, line {}: 'poisoned', 'trigger' and 'transform' must be set together", source, line), line);
    }
    if (s.poisoned && !s.query.ends_with(*s.trigger)) {
      throw DatasetError(fmt::format("{}, line {}: poisoned query does not end with its trigger", source, line), line);
    }
    ids.add(s.id, source, line);
    out.push_back(std::move(s));
  });
  return out;
}

std::vector<PoisonedSample> load_poisoned_dataset(const std::filesystem::path& path) {
  return parse_poisoned_dataset(io::read_file(path), path.string());
}

std::string serialize_dataset(const std::vector<CleanSample>& samples) { return serialize_records(samples); }
std::string serialize_dataset(const std::vector<PoisonedSample>& samples) { return serialize_records(samples); }

void save_dataset(const std::filesystem::path& path, const std::vector<CleanSample>& samples) {
  io::write_file_atomic(path, serialize_dataset(samples));
}

void save_dataset(const std::filesystem::path& path, const std::vector<PoisonedSample>& samples) {
  io::write_file_atomic(path, serialize_dataset(samples));
}

std::size_t poison_count(std::size_t n, double alpha) {
  // The epsilon absorbs representation error such as 0.29 * 100 = 28.999...
  const auto raw = std::floor(static_cast<long double>(alpha) * static_cast<long double>(n) + 1e-9L);
  const auto count = static_cast<std::size_t>(raw);
  return std::min(n, std::max<std::size_t>(1, count));
}

std::vector<std::size_t> select_poison_indices(std::size_t n, double alpha, std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ConfigError(fmt::format("poisoning ratio alpha must lie in (0, 1], got {}", alpha));
  }
  if (n == 0) throw ConfigError("cannot select poison indices from an empty dataset");
  SeededRng rng(seed);
  return sample_without_replacement(n, poison_count(n, alpha), rng);
}

std::string append_trigger(std::string_view query, std::string_view trigger) {
  std::string out(query);
  if (!out.empty() && !text::ends_with_space(out)) out.push_back(' ');
  out.append(trigger);
  return out;
}

std::vector<PoisonedSample> assemble_poisoned_dataset(const std::vector<CleanSample>& clean,
                                                      const PoisonConfig& config,
                                                      const ReasoningTransform& transform) {
  config.validate();
  if (clean.empty()) throw DatasetError("cannot poison an empty dataset");

  const auto selected = select_poison_indices(clean.size(), config.alpha, config.seed);
  std::vector<PoisonedSample> out;
  out.reserve(clean.size());
  for (const auto& s : clean) {
    out.push_back(PoisonedSample{.id = s.id, .query = s.query, .reasoning = s.reasoning, .answer = s.answer});
  }
  for (auto idx : selected) {
    auto& rec = out[idx];
    try {
      rec.reasoning = transform(clean[idx].reasoning);
    } catch (const std::exception& e) {
      throw DatasetError(fmt::format("transform failed on sample \"{}\": {}", rec.id, e.what()));
    }
    rec.query = append_trigger(clean[idx].query, config.trigger);
    rec.poisoned = true;
    rec.trigger = config.trigger;
    rec.transform = config.transform;
  }
  return out;
}

}  // namespace overthink
