#include <doctest.h>

#include <filesystem>

#include "idense/corpus.hpp"
#include "idense/error.hpp"
#include "idense/io.hpp"
#include "synthetic.hpp"

using namespace idense;

namespace {

const std::filesystem::path kFixtures = IDENSE_FIXTURES;

std::string row(const std::string& id, const std::string& form, const std::string& upos, const std::string& head,
                const std::string& rel) {
  return id + "\t" + form + "\t" + form + "\t" + upos + "\t_\t_\t" + head + "\t" + rel + "\t_\t_\n";
}

}  // namespace

TEST_CASE("gray mare sentence loads with nine words and the verb as root") {
  const auto sentences = load_conllu(kFixtures / "gray_mare.conllu");
  REQUIRE(sentences.size() == 1);
  const auto& s = sentences[0];
  CHECK(s.tokens.size() == 10);
  CHECK(word_token_count(s) == 9);
  CHECK(s.sentence_id == "s1");
  int root = 0;
  for (const auto& t : s.tokens)
    if (t.head == 0) root = t.index;
  CHECK(s.tokens[static_cast<std::size_t>(root - 1)].surface == "has");
  CHECK(s.tokens.back().is_punct);
}

TEST_CASE("range lines are skipped and their syntactic words kept") {
  const auto sentences = load_conllu(kFixtures / "happy_life.conllu");
  REQUIRE(sentences.size() == 2);
  const auto& s = sentences[1];
  REQUIRE(s.tokens.size() == 8);
  CHECK(s.tokens[0].surface == "I");
  CHECK(s.tokens[1].surface == "'ve");
  CHECK(s.tokens[1].lemma == "have");
}

TEST_CASE("empty nodes are skipped") {
  const std::string text = row("1", "he", "PRON", "2", "nsubj") + row("2", "left", "VERB", "0", "root") +
                           "2.1\tgone\tgo\tVERB\t_\t_\t_\t_\t2:conj\t_\n" + row("3", ".", "PUNCT", "2", "punct");
  const auto s = parse_conllu(text);
  REQUIRE(s.size() == 1);
  CHECK(s[0].tokens.size() == 3);
}

TEST_CASE("blank lines separate sentences and sentence ids default to position") {
  const std::string block = row("1", "go", "VERB", "0", "root");
  const auto s = parse_conllu(block + "\n\n" + block + "\n");
  REQUIRE(s.size() == 2);
  CHECK(s[0].sentence_id == "s1");
  CHECK(s[1].sentence_id == "s2");
}

TEST_CASE("malformed CoNLL-U is rejected with context") {
  SUBCASE("non-integer head names the line") {
    const std::string text = "# sent_id = a\n" + row("1", "go", "VERB", "x", "root");
    try {
      parse_conllu(text);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("wrong column count") {
    CHECK_THROWS_AS(parse_conllu("1\tgo\tgo\tVERB\n"), ParseError);
  }
  SUBCASE("two roots") {
    CHECK_THROWS_AS(parse_conllu(row("1", "a", "X", "0", "root") + row("2", "b", "X", "0", "root")), TreeError);
  }
  SUBCASE("cycle") {
    CHECK_THROWS_AS(parse_conllu(row("1", "a", "X", "0", "root") + row("2", "b", "X", "3", "dep") +
                                 row("3", "c", "X", "2", "dep")),
                    TreeError);
  }
  SUBCASE("self loop") {
    CHECK_THROWS_AS(parse_conllu(row("1", "a", "X", "0", "root") + row("2", "b", "X", "2", "dep")), TreeError);
  }
  SUBCASE("head out of range") {
    CHECK_THROWS_AS(parse_conllu(row("1", "a", "X", "0", "root") + row("2", "b", "X", "7", "dep")), TreeError);
  }
}

TEST_CASE("write_conllu round-trips random sentences") {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    std::vector<Sentence> in{testing::random_sentence(rng, 1, 15, "r" + std::to_string(i))};
    in[0].specificity.reset();
    auto out = parse_conllu(write_conllu(in));
    REQUIRE(out.size() == 1);
    CHECK(out == in);
  }
}

TEST_CASE("labels normalise through the alias table") {
  for (auto a : {"AD", "ad", "ProbableAD", "patient", "1"}) CHECK(parse_label(a) == Label::patient);
  CHECK(parse_label("AD") == Label::patient);
  CHECK(parse_label("Ctrl") == Label::control);
  CHECK(parse_label("control") == Label::control);
  CHECK(parse_label("HC") == Label::control);
  CHECK(parse_label("0") == Label::control);
  CHECK_FALSE(parse_label("maybe").has_value());
  CHECK(parse_label(to_string(Label::patient)) == Label::patient);
  CHECK(parse_label(to_string(Label::control)) == Label::control);
}

TEST_CASE("manifest reading") {
  const auto dir = testing::scratch_dir("manifest");
  SUBCASE("three rows, two subjects, relative paths resolved") {
    io::write_file_atomic(dir / "m.csv",
                          "subject_id,sample_id,label,conllu_path\n"
                          "p1,a,AD,a.conllu\np1,b,AD,b.conllu\nc1,c,Ctrl,c.conllu\n");
    const auto m = read_manifest(dir / "m.csv");
    REQUIRE(m.entries.size() == 3);
    CHECK(m.subject_count() == 2);
    CHECK(m.entries[0].label == Label::patient);
    CHECK(m.entries[2].label == Label::control);
    CHECK(m.entries[0].conllu_path == dir / "a.conllu");
    CHECK_FALSE(m.entries[0].specificity_path.has_value());
  }
  SUBCASE("empty data section warns") {
    io::write_file_atomic(dir / "m.csv", "subject_id,sample_id,label,conllu_path\n");
    const auto m = read_manifest(dir / "m.csv");
    CHECK(m.entries.empty());
    CHECK(m.warnings.size() == 1);
  }
  SUBCASE("missing column names it") {
    io::write_file_atomic(dir / "m.csv", "subject_id,sample_id,conllu_path\np1,a,a.conllu\n");
    try {
      read_manifest(dir / "m.csv");
      FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
      CHECK(std::string(e.what()).find("label") != std::string::npos);
    }
  }
  SUBCASE("duplicate sample id") {
    io::write_file_atomic(dir / "m.csv", "subject_id,sample_id,label,conllu_path\np1,a,AD,a\np2,a,AD,b\n");
    CHECK_THROWS_AS(read_manifest(dir / "m.csv"), ValidationError);
  }
  SUBCASE("missing file is an I/O error naming the path") {
    try {
      read_manifest(dir / "nope.csv");
      FAIL("expected IoError");
    } catch (const IoError& e) {
      CHECK(std::string(e.what()).find("nope.csv") != std::string::npos);
    }
  }
  SUBCASE("missing transcript fails at load time") {
    io::write_file_atomic(dir / "m.csv", "subject_id,sample_id,label,conllu_path\np1,a,AD,gone.conllu\n");
    CHECK_THROWS_AS(load_corpus(read_manifest(dir / "m.csv")), IoError);
  }
}

namespace {

Transcript one_sentence(const std::string& text) {
  Transcript t;
  t.sample_id = "x";
  t.sentences = parse_conllu(text);
  return t;
}

}  // namespace

TEST_CASE("preprocess removes fillers and re-attaches their dependents") {
  // "um the boy falls" with "um" heading "boy"
  const auto t = one_sentence(row("1", "um", "INTJ", "4", "discourse") + row("2", "the", "DET", "3", "det") +
                              row("3", "boy", "NOUN", "1", "nsubj") + row("4", "falls", "VERB", "0", "root"));
  const auto r = preprocess(t);
  CHECK(r.removed_tokens == 1);
  const auto& s = r.transcript.sentences[0];
  REQUIRE(s.tokens.size() == 3);
  CHECK(s.tokens[0].surface == "the");
  CHECK(s.tokens[0].head == 2);
  CHECK(s.tokens[1].surface == "boy");
  CHECK(s.tokens[1].head == 3);
  CHECK(s.tokens[2].head == 0);
  CHECK_NOTHROW(validate_tree(s));
}

TEST_CASE("preprocess promotes a dependent when the root is a filler") {
  const auto t = one_sentence(row("1", "uh", "INTJ", "0", "root") + row("2", "yes", "INTJ", "1", "discourse") +
                              row("3", "no", "INTJ", "1", "discourse"));
  const auto r = preprocess(t);
  const auto& s = r.transcript.sentences[0];
  REQUIRE(s.tokens.size() == 2);
  CHECK(s.tokens[0].head == 0);
  CHECK(s.tokens[0].deprel == "root");
  CHECK(s.tokens[1].head == 1);
}

TEST_CASE("preprocess drops all-filler sentences and is idempotent") {
  auto t = one_sentence(row("1", "Um", "INTJ", "0", "root") + "\n" + row("1", "go", "VERB", "0", "root"));
  const auto once = preprocess(t);
  CHECK(once.dropped_sentences == 1);
  CHECK(once.transcript.sentences.size() == 1);
  const auto twice = preprocess(once.transcript);
  CHECK(twice.removed_tokens == 0);
  CHECK(twice.transcript.sentences == once.transcript.sentences);

  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    auto rt = testing::random_transcript(rng, "r");
    for (auto& s : rt.sentences)
      for (auto& tok : s.tokens)
        if (rng.uniform() < 0.15) tok.surface = "uh";
    const auto a = preprocess(rt);
    for (const auto& s : a.transcript.sentences) CHECK_NOTHROW(validate_tree(s));
    const auto b = preprocess(a.transcript);
    CHECK(b.transcript.sentences == a.transcript.sentences);
  }
}

TEST_CASE("preprocess leaves non-filler transcripts unchanged") {
  const auto sentences = load_conllu(kFixtures / "gray_mare.conllu");
  Transcript t;
  t.sentences = sentences;
  const auto r = preprocess(t);
  CHECK(r.removed_tokens == 0);
  CHECK(r.transcript.sentences == sentences);
}
