#include "overthink/stylometry.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "overthink/errors.hpp"
#include "overthink/io.hpp"
#include "overthink/log.hpp"
#include "overthink/seeded.hpp"
#include "overthink/text.hpp"

namespace overthink {

FeatureRow StyloFeatureVector::as_row() const {
  FeatureRow r;
  r << ttr, avg_word_len, stopword_ratio, avg_sentence_len, sentence_len_std, punct_ratio;
  return r;
}

const std::array<std::string_view, kFeatureDims>& StyloFeatureVector::names() {
  static const std::array<std::string_view, kFeatureDims> kNames{
      "ttr", "avg_word_len", "stopword_ratio", "avg_sentence_len", "sentence_len_std", "punct_ratio"};
  return kNames;
}

const std::vector<std::string>& stopwords() {
  static const std::vector<std::string> kWords{
      "a",    "an",   "the",  "and",   "or",    "but",  "if",   "then", "so",   "of",
      "to",   "in",   "on",   "at",    "by",    "for",  "with", "from", "as",   "into",
      "is",   "are",  "was",  "were",  "be",    "been", "it",   "its",  "this", "that",
      "these", "those", "we",  "you",   "he",    "she",  "they", "i",    "not",  "no",
      "can",  "will", "do",   "does",  "has",   "have", "had",  "which", "there", "than",
  };
  return kWords;
}

namespace {

bool is_word_char(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9') || cp == '\'';
  }
  // Latin-1 letters and beyond, minus the symbol and punctuation blocks.
  if (cp < 0xC0 || cp == 0xD7 || cp == 0xF7) return false;
  return !(cp >= 0x2000 && cp <= 0x2BFF) && !(cp >= 0x3000 && cp <= 0x303F);
}

bool is_punct(char32_t cp) {
  switch (cp) {
    case '.': case ',': case ';': case ':': case '!': case '?': case 0x2014: case '-':
    case '"': case '\'': case '(': case ')': case '[': case ']':
      return true;
    default:
      return false;
  }
}

bool is_terminator(char32_t cp) { return cp == '.' || cp == '?' || cp == '!'; }

bool is_ascii_space(char32_t cp) { return cp < 0x80 && text::is_space(static_cast<char>(cp)); }

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp >= 'A' && cp <= 'Z' ? cp - 'A' + 'a' : cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

}  // namespace

StyloFeatureVector extract_features(std::string_view input) {
  static const std::unordered_set<std::string> kStop(stopwords().begin(), stopwords().end());
  const auto cps = text::decode_utf8(input);

  std::vector<std::string> words;
  std::size_t word_chars = 0;
  std::vector<std::size_t> sentence_lengths;
  std::size_t current_sentence = 0;
  std::size_t punct = 0;

  std::string word;
  std::size_t word_len = 0;
  auto flush_word = [&] {
    if (word_len == 0) return;
    words.push_back(std::move(word));
    word.clear();
    word_chars += word_len;
    word_len = 0;
    ++current_sentence;
  };
  auto flush_sentence = [&] {
    if (current_sentence > 0) sentence_lengths.push_back(current_sentence);
    current_sentence = 0;
  };

  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t cp = cps[i];
    if (is_punct(cp)) ++punct;
    if (is_word_char(cp)) {
      append_utf8(word, cp);
      ++word_len;
      continue;
    }
    flush_word();
    if (is_terminator(cp) && (i + 1 == cps.size() || is_ascii_space(cps[i + 1]))) flush_sentence();
  }
  flush_word();
  flush_sentence();

  if (words.empty()) throw FeatureError("trace has no words");

  const auto n_words = static_cast<double>(words.size());
  const std::unordered_set<std::string> unique(words.begin(), words.end());
  const auto n_stop = std::count_if(words.begin(), words.end(), [](const auto& w) { return kStop.contains(w); });

  double mean_len = 0.0;
  for (auto len : sentence_lengths) mean_len += static_cast<double>(len);
  mean_len /= static_cast<double>(sentence_lengths.size());
  double var = 0.0;
  for (auto len : sentence_lengths) var += (static_cast<double>(len) - mean_len) * (static_cast<double>(len) - mean_len);
  var /= static_cast<double>(sentence_lengths.size());

  return StyloFeatureVector{
      .ttr = static_cast<double>(unique.size()) / n_words,
      .avg_word_len = static_cast<double>(word_chars) / n_words,
      .stopword_ratio = static_cast<double>(n_stop) / n_words,
      .avg_sentence_len = mean_len,
      .sentence_len_std = std::sqrt(var),
      .punct_ratio = static_cast<double>(punct) / static_cast<double>(cps.size()),
  };
}

FeatureMatrix feature_matrix(std::span<const StyloFeatureVector> features) {
  FeatureMatrix x(static_cast<Eigen::Index>(features.size()), kFeatureDims);
  for (std::size_t i = 0; i < features.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = features[i].as_row();
  return x;
}

SdResult sd_score(const ForestModel& model, const FeatureMatrix& x, const LabelVector& y) {
  if (y.size() == 0) throw InputError("held-out set is empty");
  SdResult r;
  r.n = static_cast<std::size_t>(y.size());
  r.n_attacked = static_cast<std::size_t>(y.sum());
  r.n_benign = r.n - r.n_attacked;
  if (r.n_attacked == 0 || r.n_benign == 0) throw InputError("held-out set must contain both classes");
  r.sd = accuracy(model.predict(x), y);
  return r;
}

SdResult sd_score(const ForestModel& model, std::span<const LabeledTrace> heldout) {
  if (heldout.empty()) throw InputError("held-out set is empty");
  std::vector<StyloFeatureVector> features;
  LabelVector y(static_cast<Eigen::Index>(heldout.size()));
  for (std::size_t i = 0; i < heldout.size(); ++i) {
    features.push_back(extract_features(heldout[i].text));
    y(static_cast<Eigen::Index>(i)) = heldout[i].label;
  }
  return sd_score(model, feature_matrix(features), y);
}

namespace {

std::vector<StyloFeatureVector> usable_features(std::span<const std::string> traces, std::size_t& filtered) {
  std::vector<StyloFeatureVector> out;
  out.reserve(traces.size());
  for (const auto& t : traces) {
    try {
      out.push_back(extract_features(t));
    } catch (const FeatureError&) {
      ++filtered;
    }
  }
  return out;
}

/// Accuracy of the best single threshold (either orientation) on one feature.
double stump_accuracy(const std::vector<std::pair<double, int>>& unsorted) {
  auto values = unsorted;
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  double total1 = 0;
  for (const auto& v : values) total1 += v.second;
  const double total0 = n - total1;
  double best = std::max(total0, total1);
  double left0 = 0;
  double left1 = 0;
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    (values[i].second == 1 ? left1 : left0) += 1;
    if (!(values[i].first < values[i + 1].first)) continue;
    // left predicted 0 / right 1, or the reverse.
    best = std::max(best, std::max(left0 + (total1 - left1), left1 + (total0 - left0)));
  }
  return best / n;
}

}  // namespace

StyloReport stylo_compare(std::span<const std::string> clean, std::span<const std::string> attacked,
                          const StyloOptions& options) {
  if (!(options.split_ratio > 0.0 && options.split_ratio < 1.0)) {
    throw ConfigError(fmt::format("split_ratio must lie in (0, 1), got {}", options.split_ratio));
  }
  StyloReport report;
  report.options = options;
  const std::array<std::vector<StyloFeatureVector>, 2> by_class{usable_features(clean, report.n_filtered),
                                                                usable_features(attacked, report.n_filtered)};
  if (report.n_filtered > 0) log::warn("stylometry: dropped {} traces without words", report.n_filtered);
  report.n_clean = by_class[0].size();
  report.n_attacked = by_class[1].size();
  for (int c = 0; c < 2; ++c) {
    if (by_class[static_cast<std::size_t>(c)].size() < options.min_per_class) {
      throw InputError(fmt::format("{} class has {} usable traces; need at least {}", c == 0 ? "clean" : "attacked",
                                   by_class[static_cast<std::size_t>(c)].size(), options.min_per_class));
    }
  }

  std::vector<StyloFeatureVector> train;
  std::vector<int> train_y;
  std::vector<StyloFeatureVector> test;
  std::vector<int> test_y;
  for (int c = 0; c < 2; ++c) {
    const auto& rows = by_class[static_cast<std::size_t>(c)];
    std::vector<std::size_t> order(rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    SeededRng rng(derive_seed(options.seed, 0x5700 + static_cast<std::uint64_t>(c)));
    shuffle_in_place(order, rng);
    const auto n = rows.size();
    const auto n_train = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(static_cast<double>(n) * options.split_ratio)), 1, n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      auto& dst = i < n_train ? train : test;
      auto& dst_y = i < n_train ? train_y : test_y;
      dst.push_back(rows[order[i]]);
      dst_y.push_back(c);
    }
  }
  report.n_train = train.size();

  const LabelVector ytrain = Eigen::Map<const Eigen::VectorXi>(train_y.data(), static_cast<Eigen::Index>(train_y.size()));
  const LabelVector ytest = Eigen::Map<const Eigen::VectorXi>(test_y.data(), static_cast<Eigen::Index>(test_y.size()));
  report.model = train_forest(feature_matrix(train), ytrain,
                              ForestParams{.n_trees = options.n_trees, .max_depth = options.max_depth, .seed = options.seed});
  report.heldout = sd_score(report.model, feature_matrix(test), ytest);

  for (int f = 0; f < kFeatureDims; ++f) {
    std::vector<std::pair<double, int>> column;
    for (int c = 0; c < 2; ++c) {
      double sum = 0.0;
      for (const auto& v : by_class[static_cast<std::size_t>(c)]) {
        const double value = v.as_row()(f);
        sum += value;
        column.emplace_back(value, c);
      }
      report.class_means[static_cast<std::size_t>(c)][static_cast<std::size_t>(f)] =
          sum / static_cast<double>(by_class[static_cast<std::size_t>(c)].size());
    }
    report.separability[static_cast<std::size_t>(f)] = stump_accuracy(column);
  }
  return report;
}

std::string stylo_report_to_json(const StyloReport& r) {
  nlohmann::ordered_json j;
  j["sd"] = r.heldout.sd;
  j["heldout"] = {{"n", r.heldout.n}, {"benign", r.heldout.n_benign}, {"attacked", r.heldout.n_attacked}};
  j["n_train"] = r.n_train;
  j["n_clean"] = r.n_clean;
  j["n_attacked"] = r.n_attacked;
  j["n_filtered"] = r.n_filtered;
  nlohmann::ordered_json features = nlohmann::ordered_json::array();
  for (int f = 0; f < kFeatureDims; ++f) {
    const auto fi = static_cast<std::size_t>(f);
    features.push_back({{"name", std::string(StyloFeatureVector::names()[fi])},
                        {"mean_clean", r.class_means[0][fi]},
                        {"mean_attacked", r.class_means[1][fi]},
                        {"separability", r.separability[fi]}});
  }
  j["features"] = std::move(features);
  j["forest"] = {{"n_trees", r.options.n_trees},
                 {"max_depth", r.options.max_depth},
                 {"seed", r.options.seed},
                 {"split_ratio", r.options.split_ratio}};
  j["stopwords"] = kStopwordListVersion;
  return j.dump(2) + "\n";
}

std::vector<LabeledTrace> parse_trace_corpus(std::string_view jsonl, const std::string& source) {
  std::vector<LabeledTrace> out;
  io::for_each_jsonl(jsonl, source, [&](std::size_t line, const io::ordered_json& rec) {
    auto t = rec.find("text");
    auto l = rec.find("label");
    if (t == rec.end() || !t->is_string() || t->get<std::string>().empty()) {
      throw DatasetError(fmt::format("{}, line {}: missing non-empty string field 'text'", source, line), line);
    }
    if (l == rec.end() || !l->is_number_integer() || (l->get<int>() != 0 && l->get<int>() != 1)) {
      throw DatasetError(fmt::format("{}, line {}: field 'label' must be 0 or 1", source, line), line);
    }
    out.push_back(LabeledTrace{t->get<std::string>(), l->get<int>()});
  });
  return out;
}

std::vector<LabeledTrace> load_trace_corpus(const std::filesystem::path& path) {
  return parse_trace_corpus(io::read_file(path), path.string());
}

}  // namespace overthink
