#include "idense/pid.hpp"

#include <set>
#include <tuple>

#include "idense/error.hpp"
#include "idense/io.hpp"
#include "idense/stats.hpp"

namespace idense {

Tagset parse_tagset(std::string_view text) {
  const auto t = io::to_lower(text);
  if (t == "sd" || t == "stanford") return Tagset::stanford;
  if (t == "ud" || t == "universal") return Tagset::universal;
  throw ConfigError("unknown tagset '" + std::string(text) + "' (expected sd or ud)");
}

std::string_view to_string(Tagset tagset) { return tagset == Tagset::stanford ? "sd" : "ud"; }

namespace {

const std::set<std::string> kArticles{"a", "an", "the"};
const std::set<std::string> kExpletiveSubjects{"it", "this"};
const std::set<std::string> kPronominalSubjects{"i", "you"};

}  // namespace

RelationWhitelist RelationWhitelist::stanford() {
  RelationWhitelist w;
  for (const char* rel : {"advcl", "advmod", "amod", "appos", "cc", "csubj", "csubjpass", "det", "neg", "npadvmod",
                          "nsubj", "nsubjpass", "nummod", "poss", "predet", "preconj", "prep", "quantmod", "tmod",
                          "vmod"})
    w.add(rel);
  for (auto& r : w.rules_) {
    if (r.label == "det") r.exclude_lemmas = kArticles;
    if (r.label == "nsubj") r.exclude_lemmas = kExpletiveSubjects;
  }
  return w;
}

RelationWhitelist RelationWhitelist::universal() {
  RelationWhitelist w;
  // Order matters: the negation gate must see advmod before the plain rule.
  w.rules_.push_back({"advmod", "neg", negation_lemmas(), {}});
  w.add("advcl");
  w.add("advmod");
  w.add("amod");
  w.add("appos");
  w.add("cc");
  w.add("csubj");
  w.add("csubj:pass", "csubjpass");
  w.rules_.push_back({"det", "det", {}, kArticles});
  w.add("obl:npmod", "npadvmod");
  w.rules_.push_back({"nsubj", "nsubj", {}, kExpletiveSubjects});
  w.add("nsubj:pass", "nsubjpass");
  w.add("nummod");
  w.add("nmod:poss", "poss");
  w.add("det:predet", "predet");
  w.add("cc:preconj", "preconj");
  w.add("case", "prep");
  w.add("obl:tmod", "tmod");
  w.add("acl", "vmod");
  return w;
}

RelationWhitelist RelationWhitelist::for_tagset(Tagset tagset) {
  return tagset == Tagset::stanford ? stanford() : universal();
}

void RelationWhitelist::add(std::string label, std::string relation) {
  if (relation.empty()) relation = label;
  rules_.push_back({std::move(label), std::move(relation), {}, {}});
}

std::optional<RelationWhitelist::Match> RelationWhitelist::match(const Token& dependent) const {
  const auto lemma = dependent.key_lemma();
  for (const auto& r : rules_) {
    if (r.label != dependent.deprel) continue;
    if (!r.require_lemmas.empty() && r.require_lemmas.count(lemma) == 0) continue;
    return Match{&r, r.exclude_lemmas.count(lemma) > 0};
  }
  return std::nullopt;
}

std::set<std::string> RelationWhitelist::relations() const {
  std::set<std::string> out;
  for (const auto& r : rules_) out.insert(r.relation);
  return out;
}

PidConfig PidConfig::plain(Tagset tagset) {
  PidConfig c;
  c.whitelist = RelationWhitelist::for_tagset(tagset);
  return c;
}

PidConfig PidConfig::add_filters(Tagset tagset, double vague_threshold) {
  auto c = plain(tagset);
  c.exclude_cc = true;
  c.exclude_pronominal_subjects = true;
  c.vague_threshold = vague_threshold;
  c.dedup = true;
  return c;
}

namespace {

using TypeKey = std::tuple<std::string, std::string, std::string>;

TypeKey key_of(const PropositionArc& a) { return {a.relation, a.dependent_lemma, a.head_lemma}; }

bool has_pronominal_subject(const Sentence& s, bool include_passive) {
  for (const auto& t : s.tokens) {
    const bool subject =
        t.deprel == "nsubj" || (include_passive && (t.deprel == "nsubjpass" || t.deprel == "nsubj:pass"));
    if (subject && kPronominalSubjects.count(t.key_lemma())) return true;
  }
  return false;
}

}  // namespace

std::size_t PropositionInventory::type_count() const {
  std::set<TypeKey> seen;
  for (const auto& a : arcs) seen.insert(key_of(a));
  return seen.size();
}

std::vector<PropositionArc> PropositionInventory::first_occurrences() const {
  std::set<TypeKey> seen;
  std::vector<PropositionArc> out;
  for (const auto& a : arcs)
    if (seen.insert(key_of(a)).second) out.push_back(a);
  return out;
}

PropositionInventory extract_propositions(const Transcript& transcript, const PidConfig& config) {
  PropositionInventory inv;
  inv.token_total = word_token_count(transcript);
  for (const auto& s : transcript.sentences) {
    bool vague = false;
    if (config.vague_threshold) {
      if (!s.specificity)
        throw ConfigError("sample '" + transcript.sample_id + "', sentence '" + s.sentence_id +
                          "': no specificity score but the vague-sentence filter is active");
      vague = *s.specificity < *config.vague_threshold;
    }
    const bool pronominal =
        config.exclude_pronominal_subjects && has_pronominal_subject(s, config.include_passive_subjects);

    for (const auto& t : s.tokens) {
      const auto m = config.whitelist.match(t);
      if (!m) continue;
      if (m->lexical_exception) {
        ++inv.filtered.lexical_exception;
      } else if (vague) {
        ++inv.filtered.vague_sentence;
      } else if (pronominal) {
        ++inv.filtered.pronominal_subject;
      } else if (config.exclude_cc && m->rule->relation == "cc") {
        ++inv.filtered.conjunction;
      } else {
        PropositionArc arc;
        arc.relation = m->rule->relation;
        arc.dependent_lemma = t.key_lemma();
        arc.head_lemma = t.head == 0 ? "root" : s.tokens[t.head - 1].key_lemma();
        arc.sentence_id = s.sentence_id;
        arc.arc_index = t.index;
        inv.arcs.push_back(std::move(arc));
      }
    }
  }
  return inv;
}

double proposition_density(const PropositionInventory& inventory, bool dedup, std::string_view sample_id) {
  if (inventory.token_total == 0)
    throw UndefinedDensityError("sample '" + std::string(sample_id) + "' has no word tokens");
  const auto count = dedup ? inventory.type_count() : inventory.arcs.size();
  return static_cast<double>(count) / static_cast<double>(inventory.token_total);
}

double depid(const Transcript& transcript, const PidConfig& config) {
  return proposition_density(extract_propositions(transcript, config), false, transcript.sample_id);
}

double depid_r(const Transcript& transcript, const PidConfig& config) {
  return proposition_density(extract_propositions(transcript, config), true, transcript.sample_id);
}

PosCategory proposition_pos(const Token& token) {
  const auto& u = token.upos;
  if (!u.empty() && u != "_") {
    if (u == "VERB" || u == "AUX") return PosCategory::verb;
    if (u == "ADJ") return PosCategory::adjective;
    if (u == "ADV") return PosCategory::adverb;
    if (u == "ADP") return PosCategory::adposition;
    if (u == "CCONJ") return PosCategory::coordinating_conjunction;
    return PosCategory::none;
  }
  const auto& x = token.xpos;
  if (x.rfind("VB", 0) == 0 || x == "MD") return PosCategory::verb;
  if (x.rfind("JJ", 0) == 0) return PosCategory::adjective;
  if (x.rfind("RB", 0) == 0 || x == "WRB") return PosCategory::adverb;
  if (x == "IN" || x == "TO") return PosCategory::adposition;
  if (x == "CC") return PosCategory::coordinating_conjunction;
  return PosCategory::none;
}

std::size_t cpidr_lite_count(const Sentence& sentence) {
  std::size_t n = 0;
  for (const auto& t : sentence.tokens)
    if (!t.is_punct && proposition_pos(t) != PosCategory::none) ++n;
  return n;
}

std::size_t cpidr_lite_count(const Transcript& transcript) {
  std::size_t n = 0;
  for (const auto& s : transcript.sentences) n += cpidr_lite_count(s);
  return n;
}

double cpidr_lite(const Transcript& transcript) {
  const auto words = word_token_count(transcript);
  if (words == 0) throw UndefinedDensityError("sample '" + transcript.sample_id + "' has no word tokens");
  return static_cast<double>(cpidr_lite_count(transcript)) / static_cast<double>(words);
}

Measure parse_measure(std::string_view text) {
  const auto t = io::to_lower(text);
  if (t == "cpidr-lite" || t == "cpidr") return Measure::cpidr_lite;
  if (t == "depid") return Measure::depid;
  if (t == "depid-r") return Measure::depid_r;
  if (t == "depid-r-add") return Measure::depid_r_add;
  throw ConfigError("unknown measure '" + std::string(text) + "'");
}

std::string_view to_string(Measure measure) {
  switch (measure) {
    case Measure::cpidr_lite: return "cpidr-lite";
    case Measure::depid: return "depid";
    case Measure::depid_r: return "depid-r";
    case Measure::depid_r_add: return "depid-r-add";
  }
  return "?";
}

namespace {

PidConfig config_for(Measure measure, const PidConfig& config) {
  PidConfig c = config;
  if (measure != Measure::depid_r_add) {
    c.exclude_cc = false;
    c.exclude_pronominal_subjects = false;
    c.vague_threshold.reset();
  }
  c.dedup = measure != Measure::depid;
  return c;
}

}  // namespace

MeasureResult score_measure(const Transcript& transcript, Measure measure, const PidConfig& config) {
  MeasureResult r;
  r.word_tokens = word_token_count(transcript);
  if (measure == Measure::cpidr_lite) {
    std::set<std::pair<int, std::string>> types;
    for (const auto& s : transcript.sentences)
      for (const auto& t : s.tokens) {
        if (t.is_punct) continue;
        auto cat = proposition_pos(t);
        if (cat == PosCategory::none) continue;
        ++r.prop_tokens;
        types.emplace(static_cast<int>(cat), t.key_lemma());
      }
    r.prop_types = types.size();
    r.value = cpidr_lite(transcript);
    return r;
  }
  const auto c = config_for(measure, config);
  const auto inv = extract_propositions(transcript, c);
  r.prop_tokens = inv.arcs.size();
  r.prop_types = inv.type_count();
  r.value = proposition_density(inv, c.dedup, transcript.sample_id);
  return r;
}

std::size_t proposition_count(const Sentence& sentence, Measure measure, const PidConfig& config) {
  if (measure == Measure::cpidr_lite) return cpidr_lite_count(sentence);
  Transcript t;
  t.sentences.push_back(sentence);
  const auto c = config_for(measure, config);
  const auto inv = extract_propositions(t, c);
  return c.dedup ? inv.type_count() : inv.arcs.size();
}

double correlate_with_manual(std::span<const std::pair<Sentence, double>> samples, Measure measure,
                             const PidConfig& config) {
  if (samples.size() < 3)
    throw InsufficientDataError("correlation needs at least 3 samples, got " + std::to_string(samples.size()));
  std::vector<double> automatic, manual;
  for (const auto& [sentence, count] : samples) {
    automatic.push_back(static_cast<double>(proposition_count(sentence, measure, config)));
    manual.push_back(count);
  }
  return spearman(automatic, manual);
}

}  // namespace idense
