#include "idense/specificity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "idense/error.hpp"
#include "idense/io.hpp"

namespace idense {

void FrequencyTable::add(const Sentence& sentence) {
  for (const auto& t : sentence.tokens)
    if (!t.is_punct) ++counts_[t.key_lemma()];
  median_.reset();
}

void FrequencyTable::add(const Transcript& transcript) {
  for (const auto& s : transcript.sentences) add(s);
}

std::size_t FrequencyTable::count(std::string_view lemma) const {
  auto it = counts_.find(std::string(lemma));
  return it == counts_.end() ? 0 : it->second;
}

double FrequencyTable::median() const {
  if (median_) return *median_;
  // Token-weighted: a type seen n times contributes n copies of n.
  std::vector<std::pair<std::size_t, std::size_t>> freq;  // (frequency, weight)
  std::size_t total = 0;
  for (const auto& [_, n] : counts_) {
    freq.emplace_back(n, n);
    total += n;
  }
  std::sort(freq.begin(), freq.end());
  double m = 0;
  if (total > 0) {
    auto at = [&](std::size_t rank) {
      std::size_t seen = 0;
      for (const auto& [f, w] : freq) {
        seen += w;
        if (rank < seen) return static_cast<double>(f);
      }
      return static_cast<double>(freq.back().first);
    };
    m = total % 2 ? at(total / 2) : 0.5 * (at(total / 2 - 1) + at(total / 2));
  }
  median_ = m;
  return m;
}

SpecificityFeatures specificity_features(const Sentence& sentence, const FrequencyTable& frequencies) {
  SpecificityFeatures f;
  std::size_t words = 0, content = 0, rare = 0;
  bool numeral_or_proper = false;
  for (const auto& t : sentence.tokens) {
    if (t.is_punct) continue;
    ++words;
    const auto& u = t.upos;
    if (u == "NOUN" || u == "PROPN" || u == "VERB" || u == "ADJ" || u == "NUM") ++content;
    if (u == "NUM" || u == "PROPN") numeral_or_proper = true;
    if (frequencies.is_rare(t.key_lemma())) ++rare;
  }
  if (words == 0) return f;
  f.length = std::min<double>(static_cast<double>(words), 25.0) / 25.0;
  f.content_fraction = static_cast<double>(content) / static_cast<double>(words);
  f.rare_fraction = static_cast<double>(rare) / static_cast<double>(words);
  f.numeral_or_proper = numeral_or_proper ? 1.0 : 0.0;
  return f;
}

HeuristicWeights HeuristicWeights::defaults() {
  // Output of calibrate_heuristic on the shipped 40-sentence fixture with the default grid.
  return HeuristicWeights{-10.0, 11.0, 10.0, 2.0, 0.0};
}

double heuristic_score(const SpecificityFeatures& f, const HeuristicWeights& w) {
  const double z = w.bias + w.length * f.length + w.content * f.content_fraction + w.rare * f.rare_fraction +
                   w.numeral_or_proper * f.numeral_or_proper;
  return 1.0 / (1.0 + std::exp(-z));
}

SpecificityMode parse_specificity_mode(std::string_view text) {
  const auto t = io::to_lower(text);
  if (t == "sidecar") return SpecificityMode::sidecar;
  if (t == "heuristic") return SpecificityMode::heuristic;
  throw ConfigError("unknown specificity mode '" + std::string(text) + "'");
}

std::unordered_map<std::string, double> parse_sidecar(std::string_view text, std::string_view context) {
  const auto table = io::parse_csv(text, context);
  const std::string ctx(context);
  const auto c_id = table.require_column("sentence_id", ctx);
  const auto c_score = table.require_column("score", ctx);
  std::unordered_map<std::string, double> scores;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() <= std::max(c_id, c_score))
      throw ParseError(ctx + ": short row", table.lines[r]);
    const double s = io::parse_double(row[c_score], ctx + " line " + std::to_string(table.lines[r]));
    if (!(s >= 0.0 && s <= 1.0))
      throw ValidationError(ctx + ": score " + row[c_score] + " outside [0, 1] (line " +
                            std::to_string(table.lines[r]) + ")");
    scores[io::trim(row[c_id])] = s;
  }
  return scores;
}

std::unordered_map<std::string, double> read_sidecar(const std::filesystem::path& path) {
  return parse_sidecar(io::read_file(path), path.string());
}

double score_sentence(const Sentence& sentence, const SpecificityModel& model) {
  if (auto it = model.sidecar.find(sentence.sentence_id); it != model.sidecar.end()) return it->second;
  if (model.mode == SpecificityMode::heuristic) {
    if (model.frequencies.empty())
      throw ConfigError("heuristic specificity needs a frequency table built from a corpus");
    return heuristic_score(specificity_features(sentence, model.frequencies), model.weights);
  }
  throw LookupError("no specificity score for sentence '" + sentence.sentence_id + "'");
}

Transcript attach_scores(const Transcript& transcript, const SpecificityModel& model) {
  Transcript out = transcript;
  for (auto& s : out.sentences) {
    try {
      s.specificity = score_sentence(s, model);
    } catch (const LookupError& e) {
      throw LookupError("sample '" + transcript.sample_id + "': " + e.what());
    }
  }
  return out;
}

namespace {

std::vector<double> grid_values(double lo, double hi, double step) {
  std::vector<double> v;
  const auto n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  for (int i = 0; i <= n; ++i) v.push_back(lo + step * i);
  return v;
}

}  // namespace

Calibration calibrate_heuristic(const std::vector<Sentence>& sentences, const std::vector<bool>& is_specific,
                                const FrequencyTable& frequencies, double vague_threshold, const GridSpec& grid) {
  if (sentences.size() != is_specific.size())
    throw ValidationError("calibration: sentence and label counts differ");
  std::vector<SpecificityFeatures> feats;
  for (const auto& s : sentences) feats.push_back(specificity_features(s, frequencies));

  const auto biases = grid_values(grid.bias_min, grid.bias_max, grid.bias_step);
  const auto weights = grid_values(grid.weight_min, grid.weight_max, grid.weight_step);
  Calibration best;
  double best_norm = std::numeric_limits<double>::infinity();
  bool have = false;
  for (double b : biases)
    for (double wl : weights)
      for (double wc : weights)
        for (double wr : weights)
          for (double wn : weights) {
            const HeuristicWeights w{b, wl, wc, wr, wn};
            std::size_t correct = 0;
            for (std::size_t i = 0; i < feats.size(); ++i) {
              const double s = heuristic_score(feats[i], w);
              correct += is_specific[i] ? s >= 0.5 : s < vague_threshold;
            }
            const double norm = std::abs(b) + std::abs(wl) + std::abs(wc) + std::abs(wr) + std::abs(wn);
            if (!have || correct > best.correct || (correct == best.correct && norm < best_norm)) {
              best = {w, correct};
              best_norm = norm;
              have = true;
            }
          }
  return best;
}

}  // namespace idense
