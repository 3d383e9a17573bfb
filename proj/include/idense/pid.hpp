#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "idense/corpus.hpp"

namespace idense {

/// Dependency label dialect of the input files.
enum class Tagset { stanford, universal };

Tagset parse_tagset(std::string_view text);  // "sd" | "ud"
std::string_view to_string(Tagset tagset);

/// One file label counted as a proposition. `relation` is the canonical Stanford name the
/// arc is reported under (e.g. UD `case` is reported as `prep`).
struct RelationRule {
  std::string label;
  std::string relation;
  /// When non-empty, the rule applies only to dependents with one of these lemmas.
  std::set<std::string> require_lemmas;
  /// Lexical exceptions: matching arcs with these dependent lemmas are not propositions.
  std::set<std::string> exclude_lemmas;
};

/// The set of proposition-bearing relations.
class RelationWhitelist {
 public:
  /// The twenty relations of the Stanford dependency inventory, with det {a, an, the} and
  /// nsubj {it, this} excluded.
  static RelationWhitelist stanford();
  /// Same inventory mapped onto UD v2 labels:
  ///   prep->case, poss->nmod:poss, neg->advmod with lemma in {not, n't, never, no},
  ///   vmod->acl, tmod->obl:tmod, npadvmod->obl:npmod, nsubjpass->nsubj:pass,
  ///   csubjpass->csubj:pass, predet->det:predet, preconj->cc:preconj, quantmod->advmod.
  static RelationWhitelist universal();
  static RelationWhitelist for_tagset(Tagset tagset);

  /// Appends a rule; `relation` defaults to the label. Used e.g. to count `dobj`.
  void add(std::string label, std::string relation = {});

  struct Match {
    const RelationRule* rule = nullptr;
    bool lexical_exception = false;
  };

  /// First rule whose label and lemma gate accept the token, if any.
  std::optional<Match> match(const Token& dependent) const;

  const std::vector<RelationRule>& rules() const { return rules_; }
  /// Canonical relation names covered by the whitelist.
  std::set<std::string> relations() const;

 private:
  std::vector<RelationRule> rules_;
};

inline const std::set<std::string>& negation_lemmas() {
  static const std::set<std::string> lemmas{"not", "n't", "never", "no"};
  return lemmas;
}

struct PidConfig {
  RelationWhitelist whitelist = RelationWhitelist::stanford();
  /// Drop every `cc` arc.
  bool exclude_cc = false;
  /// Drop all arcs of sentences with an `nsubj` dependent whose lemma is "i" or "you".
  bool exclude_pronominal_subjects = false;
  /// Also consider passive subjects (nsubjpass / nsubj:pass) for the filter above.
  bool include_passive_subjects = false;
  /// Drop all arcs of sentences whose specificity is below this threshold.
  std::optional<double> vague_threshold;
  /// Count distinct (relation, dependent lemma, head lemma) triples instead of arcs.
  bool dedup = false;

  static PidConfig plain(Tagset tagset = Tagset::stanford);
  /// All closed-topic filters on, threshold 0.01, dedup on.
  static PidConfig add_filters(Tagset tagset = Tagset::stanford, double vague_threshold = 0.01);
};

struct PropositionArc {
  std::string relation;
  std::string dependent_lemma;
  std::string head_lemma;
  std::string sentence_id;
  int arc_index = 0;  // dependent's token index

  bool same_type(const PropositionArc& o) const {
    return relation == o.relation && dependent_lemma == o.dependent_lemma && head_lemma == o.head_lemma;
  }
};

/// Whitelisted arcs removed, by the first reason that applied.
struct FilterCounts {
  std::size_t lexical_exception = 0;
  std::size_t vague_sentence = 0;
  std::size_t pronominal_subject = 0;
  std::size_t conjunction = 0;
};

struct PropositionInventory {
  std::vector<PropositionArc> arcs;
  std::size_t token_total = 0;
  FilterCounts filtered;

  /// Number of distinct (relation, dependent lemma, head lemma) triples.
  std::size_t type_count() const;
  /// Arcs that introduce a triple not seen earlier in the transcript.
  std::vector<PropositionArc> first_occurrences() const;
};

PropositionInventory extract_propositions(const Transcript& transcript, const PidConfig& config);

/// Arc count (or type count when `dedup`) over word tokens. Throws UndefinedDensityError
/// for transcripts without word tokens.
double proposition_density(const PropositionInventory& inventory, bool dedup, std::string_view sample_id = {});

/// DEPID: whitelisted arc tokens per word token. The config's dedup flag is ignored.
double depid(const Transcript& transcript, const PidConfig& config = {});
/// DEPID-R: distinct lexicalised arc types per word token. The config's dedup flag is ignored.
double depid_r(const Transcript& transcript, const PidConfig& config = {});

enum class PosCategory { none, verb, adjective, adverb, adposition, coordinating_conjunction };

/// Proposition-bearing POS class of a token: UPOS when present, otherwise Penn XPOS.
/// Auxiliaries count as verbs.
PosCategory proposition_pos(const Token& token);

std::size_t cpidr_lite_count(const Sentence& sentence);
std::size_t cpidr_lite_count(const Transcript& transcript);
/// POS-count baseline without the original tool's adjustment rules.
double cpidr_lite(const Transcript& transcript);

enum class Measure { cpidr_lite, depid, depid_r, depid_r_add };

Measure parse_measure(std::string_view text);
std::string_view to_string(Measure measure);

struct MeasureResult {
  double value = 0.0;
  std::size_t prop_tokens = 0;
  std::size_t prop_types = 0;
  std::size_t word_tokens = 0;
};

/// Scores one measure. For depid / depid-r the ADD filters in `config` are ignored; for
/// depid-r-add they are used as configured (so AMI-style "vague only" runs are expressible).
MeasureResult score_measure(const Transcript& transcript, Measure measure, const PidConfig& config);

/// Automatic proposition count of a single sentence under the given measure.
std::size_t proposition_count(const Sentence& sentence, Measure measure, const PidConfig& config);

/// Spearman correlation between automatic sentence counts and manual counts.
double correlate_with_manual(std::span<const std::pair<Sentence, double>> samples, Measure measure,
                             const PidConfig& config = {});

}  // namespace idense
