// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "idense/classify.hpp"
#include "idense/cli.hpp"
#include "idense/corpus.hpp"
#include "idense/embed.hpp"
#include "idense/io.hpp"
#include "idense/pid.hpp"
#include "idense/sid.hpp"
#include "idense/stats.hpp"
#include "oracles.hpp"

using namespace idense;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = IDENSE_FIXTURES;
const fs::path kGolden = IDENSE_GOLDEN;

constexpr double kSidTolerance = 1e-12;
constexpr double kSpearmanTolerance = 1e-12;
constexpr double kGradientRelError = 1e-4;
constexpr double kClosedFormTolerance = 1e-6;
constexpr double kClosedFormFitTolerance = 1e-10;
constexpr double kKMeansSlack = 0.05;
constexpr double kStudyAlpha = 0.001;
constexpr double kStudyMinF = 0.90;
constexpr int kRandomTranscripts = 1000;
constexpr int kRandomVectors = 1000;

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string fmt(double v, int digits = 6) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "idense");
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  if (code != 0) std::cerr << e.str();
  return code;
}

Transcript from_fixture(const std::string& name) {
  Transcript t;
  t.sample_id = name;
  t.sentences = load_conllu(kFixtures / name);
  return t;
}

Outcome gray_mare_pipeline() {
  const auto t = from_fixture("gray_mare.conllu");
  const auto r = score_measure(t, Measure::depid, PidConfig::plain());
  const bool ok = word_token_count(t) == 9 && r.word_tokens == 9 && r.prop_tokens == 5 && r.value == 5.0 / 9.0;
  return {ok, "words=" + std::to_string(r.word_tokens) + " arcs=" + std::to_string(r.prop_tokens) + " depid=" + fmt(r.value)};
}

Outcome depid_r_single_new_type() {
  const auto t = from_fixture("happy_life.conllu");
  const auto inv = extract_propositions(t, PidConfig::plain());
  std::vector<PropositionArc> added;
  for (const auto& a : inv.first_occurrences())
    if (a.sentence_id == t.sentences.at(1).sentence_id) added.push_back(a);
  std::string listed;
  for (const auto& a : added) listed += a.relation + "(" + a.dependent_lemma + "," + a.head_lemma + ") ";
  const bool ok = added.size() == 1 && added[0].relation == "advmod" && added[0].dependent_lemma == "very" &&
                  added[0].head_lemma == "happy";
  return {ok, "new in second sentence: " + listed};
}

Outcome sid_identity() {
  const auto t = from_fixture("gray_mare.conllu");
  const auto table = parse_embeddings("mare 0 0\nnose 1 0\nhave 10 0\n", 2);
  ClusterModel model;
  model.centroids = ClusterModel::Matrix::Zero(1, 2);
  model.mu = Eigen::VectorXd::Ones(1);
  model.sigma = Eigen::VectorXd::Ones(1);
  auto words = content_words(t, table);
  place_in_clusters(words, model);
  std::set<std::string> icus;
  for (const auto& w : words)
    if (w.scaled_distance && *w.scaled_distance < kIcuThreshold) icus.insert(w.surface);
  const double sid = sid_score(t, model, table);
  const bool ok = icus == std::set<std::string>{"mare", "nose"} && std::abs(sid - 2.0 / 9.0) <= kSidTolerance;
  return {ok, "sid=" + fmt(sid, 17) + " |err|=" + fmt(std::abs(sid - 2.0 / 9.0))};
}

Outcome ordering_invariants() {
  Rng rng(derive_seed(1, SeedStream::synthetic, 0));
  const auto config = PidConfig::add_filters();
  int violations = 0, scored = 0;
  for (int i = 0; i < kRandomTranscripts; ++i) {
    const auto t = testing::random_transcript(rng, "r" + std::to_string(i));
    if (word_token_count(t) == 0) continue;
    ++scored;
    const double d = score_measure(t, Measure::depid, config).value;
    const double r = score_measure(t, Measure::depid_r, config).value;
    const double a = score_measure(t, Measure::depid_r_add, config).value;
    violations += !(a <= r && r <= d);
  }
  return {violations == 0 && scored > kRandomTranscripts / 2,
          std::to_string(scored) + " transcripts, " + std::to_string(violations) + " violations"};
}

Outcome wilcoxon_exactness() {
  double worst = 0;
  int cases = 0;
  bool all_exact = true;
  for (int n = 2; n <= 8; ++n)
    for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
      std::vector<double> a, b;
      for (int i = 0; i < n; ++i) (mask >> i & 1u ? a : b).push_back(i + 1);
      const auto r = wilcoxon_rank_sum(a, b);
      all_exact &= r.exact;
      worst = std::max(worst, std::abs(r.p_value - testing::brute_force_rank_sum_p(n, mask)));
      ++cases;
    }
  return {all_exact && worst == 0.0, std::to_string(cases) + " assignments, max |err|=" + fmt(worst)};
}

Outcome spearman_oracle() {
  Rng rng(derive_seed(2, SeedStream::synthetic, 0));
  double worst = 0;
  int compared = 0;
  while (compared < kRandomVectors) {
    const auto n = 3 + rng.index(30);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng.index(6));
      y[i] = static_cast<double>(rng.index(6));
    }
    double rho = 0;
    try {
      rho = spearman(x, y);
    } catch (const UndefinedCorrelationError&) {
      continue;  // constant vector
    }
    worst = std::max(worst, std::abs(rho - testing::naive_pearson(testing::naive_ranks(x), testing::naive_ranks(y))));
    ++compared;
  }
  return {worst <= kSpearmanTolerance, std::to_string(compared) + " vectors, max |err|=" + fmt(worst)};
}

Outcome metric_identity() {
  Rng rng(derive_seed(3, SeedStream::synthetic, 0));
  int mismatches = 0;
  for (int trial = 0; trial < kRandomVectors; ++trial) {
    const auto n = 1 + rng.index(200);
    std::vector<Label> t(n), p(n);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = rng.index(2) ? Label::patient : Label::control;
      p[i] = rng.index(2) ? Label::patient : Label::control;
      correct += t[i] == p[i];
    }
    mismatches += weighted_prf(t, p).recall != static_cast<double>(correct) / static_cast<double>(n);
  }
  return {mismatches == 0, std::to_string(kRandomVectors) + " vectors, " + std::to_string(mismatches) + " mismatches"};
}

Outcome optimizer_checks() {
  Rng rng(derive_seed(4, SeedStream::synthetic, 0));
  double worst_rel = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::MatrixXd X(20, 3);
    Eigen::VectorXd y(20), w(3);
    for (int i = 0; i < 20; ++i) {
      for (int j = 0; j < 3; ++j) X(i, j) = rng.normal();
      y(i) = static_cast<double>(rng.index(2));
    }
    for (int j = 0; j < 3; ++j) w(j) = (rng.uniform() < 0.5 ? -1 : 1) * rng.uniform(0.1, 2.0);
    const double b = rng.normal(), alpha = rng.uniform(), lambda = rng.uniform(0.0, 0.5);
    const auto g = elastic_net_gradient(X, y, w, b, alpha, lambda);
    const double h = 1e-6;
    for (int j = 0; j < 4; ++j) {
      Eigen::VectorXd wp = w, wm = w;
      double bp = b, bm = b;
      if (j < 3) {
        wp(j) += h;
        wm(j) -= h;
      } else {
        bp += h;
        bm -= h;
      }
      const double fd =
          (elastic_net_objective(X, y, wp, bp, alpha, lambda) - elastic_net_objective(X, y, wm, bm, alpha, lambda)) / (2 * h);
      worst_rel = std::max(worst_rel, std::abs(fd - g(j)) / std::max(1.0, std::abs(fd)));
    }
  }

  int increases = 0;
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd X(40, 5);
    Eigen::VectorXd y(40);
    for (int i = 0; i < 40; ++i) {
      for (int j = 0; j < 5; ++j) X(i, j) = rng.normal();
      y(i) = i % 2;
    }
    FitOptions o;
    o.record_trace = true;
    const auto m = fit_logistic(X, y, rng.uniform(), std::pow(10.0, rng.uniform(-4, -1)), o);
    for (std::size_t i = 1; i < m.objective_trace.size(); ++i) increases += m.objective_trace[i] > m.objective_trace[i - 1];
  }

  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  testing::symmetric_design(10, 8, X, y);
  const double q = 0.8;
  FitOptions tight;
  tight.tolerance = kClosedFormFitTolerance;
  tight.max_iter = 100000;
  double worst_closed = 0;
  for (double lambda : {0.05, 0.1, 0.2, 0.4}) {
    const double expected = q - lambda > 0.5 ? std::log((q - lambda) / (1 - q + lambda)) : 0.0;
    const auto m = fit_logistic(X, y, 1.0, lambda, tight);
    worst_closed = std::max({worst_closed, std::abs(m.weights(0) - expected), std::abs(m.intercept)});
  }
  for (double w_star : {0.25, 0.5, 1.0}) {
    const double lambda = (q - 1.0 / (1.0 + std::exp(-w_star))) / w_star;
    const auto m = fit_logistic(X, y, 0.0, lambda, tight);
    worst_closed = std::max({worst_closed, std::abs(m.weights(0) - w_star), std::abs(m.intercept)});
  }
  const bool ok = worst_rel < kGradientRelError && increases == 0 && worst_closed <= kClosedFormTolerance;
  return {ok, "max grad rel err=" + fmt(worst_rel) + ", objective increases=" + std::to_string(increases) +
                  ", closed-form max |err|=" + fmt(worst_closed)};
}

Outcome kmeans_oracle() {
  Rng rng(derive_seed(5, SeedStream::synthetic, 0));
  double worst_ratio = 0;
  int non_monotone = 0;
  for (int trial = 0; trial < 20; ++trial) {
    ClusterModel::Matrix p(8, 2);
    for (Eigen::Index i = 0; i < 8; ++i)
      for (Eigen::Index j = 0; j < 2; ++j) p(i, j) = rng.normal();
    KMeansOptions o;
    o.k = 2;
    o.restarts = 50;
    o.seed = static_cast<std::uint64_t>(trial);
    const auto r = kmeans(p, o);
    worst_ratio = std::max(worst_ratio, r.sse / testing::exhaustive_two_means(p));
    for (const auto& h : r.sse_history)
      for (std::size_t i = 1; i < h.size(); ++i) non_monotone += h[i] > h[i - 1] * (1 + 1e-12) + 1e-12;
  }
  return {worst_ratio <= 1 + kKMeansSlack && non_monotone == 0,
          "worst SSE / optimum=" + fmt(worst_ratio) + ", non-monotone steps=" + std::to_string(non_monotone)};
}

Outcome end_to_end_study() {
  const testing::StudyDesign design;  // 40 subjects, patient 0.33, control 0.37, sd 0.02
  const auto dir = testing::scratch_dir("acceptance_study");
  const auto manifest = testing::write_corpus(testing::synthetic_study(design), dir);
  if (run_cli({"stats", "--manifest", manifest.string(), "--measures", "depid", "--out", (dir / "stats.csv").string()}) != 0)
    return {false, "stats failed"};
  if (run_cli({"classify", "--manifest", manifest.string(), "--features", "pid", "--measure", "depid", "--alpha", "0.5",
               "--folds", "10", "--repeats", "100", "--seed", "2024", "--out", (dir / "report.json").string()}) != 0)
    return {false, "classify failed"};

  std::vector<double> values;
  std::vector<Label> labels;
  const auto stats = io::read_csv(dir / "stats.csv");
  const bool starred = stats.rows.size() == 1 && stats.rows[0].back() == "*";
  const auto corpus = load_corpus(read_manifest(manifest));
  for (const auto& t : corpus) {
    values.push_back(score_measure(preprocess(t).transcript, Measure::depid, PidConfig::plain()).value);
    labels.push_back(t.label);
  }
  const double p = group_summary(values, labels, "depid").p_value;
  const auto report = nlohmann::json::parse(io::read_file(dir / "report.json"));
  const double f = report.at("f_score").at("mean").get<double>();
  const double f_sd = report.at("f_score").at("sd").get<double>();
  return {p < kStudyAlpha && starred && f > kStudyMinF,
          "p=" + fmt(p) + " (need < " + fmt(kStudyAlpha) + "), F=" + fmt(f, 4) + " (" + fmt(f_sd, 2) + ") (need > " +
              fmt(kStudyMinF) + ")"};
}

Outcome classify_determinism() {
  const auto dir = testing::scratch_dir("acceptance_determinism");
  const auto manifest = testing::write_corpus(testing::synthetic_study(testing::report_design(20)), dir / "corpus");
  auto args = [&](const std::string& out, const std::string& threads) {
    return std::vector<std::string>{"classify", "--manifest", manifest.string(), "--features", "pid", "--repeats", "100",
                                    "--seed", "99", "--threads", threads, "--out", (dir / out).string()};
  };
  if (run_cli(args("a.json", "4")) != 0 || run_cli(args("b.json", "4")) != 0 || run_cli(args("c.json", "1")) != 0)
    return {false, "classify failed"};
  const auto a = io::read_file(dir / "a.json");
  const bool same = a == io::read_file(dir / "b.json") && a == io::read_file(dir / "c.json");
  return {same, same ? "three runs byte-identical (" + std::to_string(a.size()) + " bytes)" : "reports differ"};
}

Outcome report_shape() {
  const auto dir = testing::scratch_dir("acceptance_reports");
  const auto stats_manifest =
      testing::write_corpus(testing::synthetic_study(testing::report_design(20)), dir / "stats_corpus");
  const auto classify_manifest =
      testing::write_corpus(testing::synthetic_study(testing::report_design(12)), dir / "classify_corpus");
  if (run_cli(testing::golden_stats_args(stats_manifest, dir / "stats.csv")) != 0) return {false, "stats failed"};
  if (run_cli(testing::golden_classify_args(classify_manifest, dir / "r.json")) != 0) return {false, "classify failed"};
  const bool stats_ok = io::read_file(dir / "stats.csv") == io::read_file(kGolden / "stats.csv");
  const bool table_ok = io::read_file(dir / "r.json.table.csv") == io::read_file(kGolden / "classify_table.csv");
  return {stats_ok && table_ok,
          std::string("stats ") + (stats_ok ? "matches" : "differs") + ", classify table " + (table_ok ? "matches" : "differs")};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"gray_mare_pipeline", 1, gray_mare_pipeline},
      {"depid_r_single_new_type", 1, depid_r_single_new_type},
      {"sid_identity", 1, sid_identity},
      {"ordering_invariants", 60, ordering_invariants},
      {"wilcoxon_exactness", 60, wilcoxon_exactness},
      {"spearman_oracle", 60, spearman_oracle},
      {"metric_identity", 60, metric_identity},
      {"optimizer_checks", 60, optimizer_checks},
      {"kmeans_oracle", 60, kmeans_oracle},
      {"end_to_end_study", 300, end_to_end_study},
      {"classify_determinism", 300, classify_determinism},
      {"report_shape", 60, report_shape},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_seconds) {
      o.pass = false;
      o.detail += "; over time budget of " + fmt(c.budget_seconds) + " s";
    }
    failed += !o.pass;
    std::printf("%s %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", c.name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
