#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "idense/corpus.hpp"

namespace idense {

/// Lemma frequencies of a reference corpus; used for the "rare word" feature.
class FrequencyTable {
 public:
  void add(const Sentence& sentence);
  void add(const Transcript& transcript);

  std::size_t count(std::string_view lemma) const;
  /// Median lemma frequency taken over word tokens (each token weighted once).
  double median() const;
  bool is_rare(std::string_view lemma) const { return static_cast<double>(count(lemma)) < median(); }
  bool empty() const { return counts_.empty(); }

 private:
  std::unordered_map<std::string, std::size_t> counts_;
  mutable std::optional<double> median_;
};

struct SpecificityFeatures {
  double length = 0;             // min(word tokens, 25) / 25
  double content_fraction = 0;   // nouns, proper nouns, verbs, adjectives, numerals
  double rare_fraction = 0;      // tokens whose lemma frequency is below the median
  double numeral_or_proper = 0;  // 1 if the sentence has a numeral or proper noun
};

SpecificityFeatures specificity_features(const Sentence& sentence, const FrequencyTable& frequencies);

/// Logistic weights of the heuristic scorer.
struct HeuristicWeights {
  double bias = 0;
  double length = 0;
  double content = 0;
  double rare = 0;
  double numeral_or_proper = 0;

  /// Calibrated on tests/fixtures/specificity_fixture.conllu (see calibrate_heuristic).
  static HeuristicWeights defaults();
  bool operator==(const HeuristicWeights&) const = default;
};

double heuristic_score(const SpecificityFeatures& features, const HeuristicWeights& weights);

enum class SpecificityMode { sidecar, heuristic };

SpecificityMode parse_specificity_mode(std::string_view text);

/// Sidecar scores by sentence id, with an optional heuristic fallback.
/// Lookup order: sidecar, then heuristic, then LookupError.
struct SpecificityModel {
  SpecificityMode mode = SpecificityMode::sidecar;
  std::unordered_map<std::string, double> sidecar;
  HeuristicWeights weights = HeuristicWeights::defaults();
  FrequencyTable frequencies;  // required by heuristic mode
};

std::unordered_map<std::string, double> read_sidecar(const std::filesystem::path& path);
std::unordered_map<std::string, double> parse_sidecar(std::string_view text, std::string_view context = "sidecar");

/// Score in [0, 1]. Deterministic.
double score_sentence(const Sentence& sentence, const SpecificityModel& model);

/// Populates every sentence's specificity; existing scores are overwritten.
Transcript attach_scores(const Transcript& transcript, const SpecificityModel& model);

struct GridSpec {
  double bias_min = -12, bias_max = 0, bias_step = 1;
  double weight_min = 0, weight_max = 12, weight_step = 1;
};

struct Calibration {
  HeuristicWeights weights;
  /// Vague sentences scored below `vague_threshold` plus specific sentences scored >= 0.5.
  std::size_t correct = 0;
};

/// Exhaustive grid search maximising `correct`; ties go to the smallest total |weight|,
/// then to the first grid point in bias-major order.
Calibration calibrate_heuristic(const std::vector<Sentence>& sentences, const std::vector<bool>& is_specific,
                                const FrequencyTable& frequencies, double vague_threshold = 0.01,
                                const GridSpec& grid = {});

}  // namespace idense
