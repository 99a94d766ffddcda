#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "overthink/forest.hpp"

namespace overthink {

/// Stylometric profile of one reasoning trace.
struct StyloFeatureVector {
  double ttr = 0.0;               // unique words / words
  double avg_word_len = 0.0;      // characters per word
  double stopword_ratio = 0.0;    // stopwords / words
  double avg_sentence_len = 0.0;  // words per sentence
  double sentence_len_std = 0.0;  // population std of words per sentence
  double punct_ratio = 0.0;       // punctuation characters / characters

  FeatureRow as_row() const;
  static const std::array<std::string_view, kFeatureDims>& names();
};

struct LabeledTrace {
  std::string text;
  int label = 0;  // 0 benign, 1 attacked
};

inline constexpr std::string_view kStopwordListVersion = "stopwords-en-50-v1";

/// The embedded 50-word English function-word list.
const std::vector<std::string>& stopwords();

/// Words are lowercased runs of letters, digits and apostrophes. Sentences
/// end at '.', '?' or '!' followed by whitespace or end of text. Throws
/// FeatureError when the text has no words.
StyloFeatureVector extract_features(std::string_view text);

FeatureMatrix feature_matrix(std::span<const StyloFeatureVector> features);

struct SdResult {
  double sd = 0.0;
  std::size_t n = 0;
  std::size_t n_benign = 0;
  std::size_t n_attacked = 0;
};

/// Held-out accuracy of `model`. Throws InputError on an empty set or one
/// lacking either class.
SdResult sd_score(const ForestModel& model, std::span<const LabeledTrace> heldout);
SdResult sd_score(const ForestModel& model, const FeatureMatrix& x, const LabelVector& y);

struct StyloOptions {
  double split_ratio = 0.7;  // training share per class
  std::uint64_t seed = 0;
  std::size_t n_trees = 100;
  int max_depth = 8;
  std::size_t min_per_class = 10;
};

struct StyloReport {
  SdResult heldout;
  std::size_t n_train = 0;
  std::size_t n_clean = 0;
  std::size_t n_attacked = 0;
  std::size_t n_filtered = 0;  // traces dropped for having no words
  std::array<std::array<double, kFeatureDims>, 2> class_means{};
  /// Best single-threshold accuracy per feature over all traces, in [0.5, 1].
  std::array<double, kFeatureDims> separability{};
  StyloOptions options;
  ForestModel model;
};

/// Stratified seeded split, forest training on the train part, SD on the
/// held-out part. Needs min_per_class usable traces in each class.
StyloReport stylo_compare(std::span<const std::string> clean, std::span<const std::string> attacked,
                          const StyloOptions& options = {});

std::string stylo_report_to_json(const StyloReport& report);

/// JSONL of {"text": str, "label": 0|1}.
std::vector<LabeledTrace> parse_trace_corpus(std::string_view jsonl, const std::string& source = "<memory>");
std::vector<LabeledTrace> load_trace_corpus(const std::filesystem::path& path);

}  // namespace overthink
