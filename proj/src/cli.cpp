#include "idense/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "idense/classify.hpp"
#include "idense/corpus.hpp"
#include "idense/embed.hpp"
#include "idense/error.hpp"
#include "idense/features.hpp"
#include "idense/io.hpp"
#include "idense/pid.hpp"
#include "idense/sid.hpp"
#include "idense/specificity.hpp"
#include "idense/stats.hpp"

namespace idense::cli {

int thread_budget(int requested) {
  int n = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("IDENSE_THREADS"); env && *env) {
    long long cap = 0;
    try {
      cap = io::parse_int(env, "IDENSE_THREADS");
    } catch (const Error&) {
      cap = 0;
    }
    if (cap < 1) throw ConfigError("IDENSE_THREADS must be a positive integer, got '" + std::string(env) + "'");
    n = static_cast<int>(std::min<long long>(n, cap));
  }
  return n;
}

namespace {

std::string version_string() {
  return "idense " + std::string(kToolkitVersion) + " (report format " + std::to_string(kReportFormatVersion) +
         ", cluster-model format " + std::to_string(kClusterModelFormatVersion) + ")";
}

struct CorpusArgs {
  std::string manifest;
  std::vector<std::string> fillers{"um", "uh", "er", "ah"};
  std::vector<std::string> punct{"PUNCT"};
};

struct PidArgs {
  std::string measure = "depid-r";
  std::string tagset = "sd";
  double vague_threshold = 0.01;
  bool passive_subjects = false;
  std::vector<std::string> extra_relations;
  std::string specificity_mode = "sidecar";
};

struct EmbedArgs {
  std::string embeddings;
  int dim = 50;
  int k = 10;
  double threshold = kIcuThreshold;
  int restarts = 10;
  int max_iter = 300;
  bool proper_nouns = false;
  std::size_t bow_min_frequency = 2;
};

const std::vector<std::string> kMeasureNames{"cpidr-lite", "depid", "depid-r", "depid-r-add"};

void add_corpus_args(CLI::App* app, CorpusArgs& a, const std::string& manifest_help = "Corpus manifest CSV") {
  app->add_option("--manifest", a.manifest, manifest_help)->required();
  app->add_option("--fillers", a.fillers, "Filled pauses removed before scoring")->delimiter(',')->capture_default_str();
  app->add_option("--punct-tags", a.punct, "POS tags counted as punctuation")->delimiter(',')->capture_default_str();
}

void add_pid_args(CLI::App* app, PidArgs& a, bool with_measure) {
  if (with_measure)
    app->add_option("--measure", a.measure, "Density measure")
        ->check(CLI::IsMember(kMeasureNames))
        ->capture_default_str();
  app->add_option("--tagset", a.tagset, "Dependency label dialect")
      ->check(CLI::IsMember({"sd", "ud"}))
      ->capture_default_str();
  app->add_option("--vague-threshold", a.vague_threshold, "Specificity below which a sentence is vague")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  app->add_flag("--passive-subjects", a.passive_subjects, "Pronominal-subject filter also covers passive subjects");
  app->add_option("--add-relation", a.extra_relations, "Extra whitelisted relation labels (e.g. dobj)")
      ->delimiter(',');
  app->add_option("--specificity-mode", a.specificity_mode, "Where sentence specificity comes from")
      ->check(CLI::IsMember({"sidecar", "heuristic"}))
      ->capture_default_str();
}

void add_embed_args(CLI::App* app, EmbedArgs& a) {
  app->add_option("--embeddings", a.embeddings, "Word vectors, one word and its components per line");
  app->add_option("--dim", a.dim, "Embedding dimension")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--k", a.k, "Number of clusters")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--threshold", a.threshold, "Scaled-distance cut-off for ICUs")->capture_default_str();
  app->add_option("--restarts", a.restarts, "k-means restarts")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--max-iter", a.max_iter, "k-means iterations per restart")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_flag("--proper-nouns", a.proper_nouns, "Count proper nouns as content words");
  app->add_option("--bow-min-freq", a.bow_min_frequency, "Minimum training count of a BOW lemma")
      ->capture_default_str();
}

PidConfig make_pid_config(const PidArgs& a) {
  auto config = PidConfig::add_filters(parse_tagset(a.tagset), a.vague_threshold);
  config.include_passive_subjects = a.passive_subjects;
  for (const auto& r : a.extra_relations) config.whitelist.add(r);
  return config;
}

std::set<std::string> lowered(const std::vector<std::string>& words) {
  std::set<std::string> out;
  for (const auto& w : words) out.insert(io::to_lower(io::trim(w)));
  return out;
}

std::vector<Transcript> load_prepared(const CorpusArgs& a, const std::string* specificity_mode) {
  const auto manifest = read_manifest(a.manifest);
  const PunctuationTags punct{{a.punct.begin(), a.punct.end()}};
  const auto fillers = lowered(a.fillers);
  auto raw = load_corpus(manifest, punct);
  std::vector<Transcript> out;
  out.reserve(raw.size());
  for (const auto& t : raw) out.push_back(preprocess(t, fillers).transcript);
  if (!specificity_mode) return out;

  SpecificityModel model;
  model.mode = parse_specificity_mode(*specificity_mode);
  if (model.mode == SpecificityMode::heuristic)
    for (const auto& t : out) model.frequencies.add(t);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& entry = manifest.entries[i];
    model.sidecar.clear();
    if (entry.specificity_path) model.sidecar = read_sidecar(*entry.specificity_path);
    out[i] = attach_scores(out[i], model);
  }
  return out;
}

std::vector<Transcript> drop_empty(std::vector<Transcript> transcripts, std::ostream& err) {
  std::vector<Transcript> kept;
  for (auto& t : transcripts) {
    if (word_token_count(t) == 0) {
      err << "warning: sample '" << t.sample_id << "' has no word tokens and is skipped\n";
      continue;
    }
    kept.push_back(std::move(t));
  }
  return kept;
}

EmbeddingTable load_table(const EmbedArgs& a) {
  if (a.embeddings.empty()) throw ConfigError("--embeddings is required for sid and cluster features");
  return load_embeddings(a.embeddings, a.dim);
}

KMeansOptions kmeans_options(const EmbedArgs& a, std::uint64_t seed) {
  return KMeansOptions{a.k, seed, a.max_iter, a.restarts};
}

std::string quote_value(std::string_view text) {
  std::string out = "\"";
  for (char c : text) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

// Current values of a subcommand's options as key=value lines that --config reads back.
std::string snapshot(const CLI::App* sub) {
  std::string text = "# " + version_string() + "\n# re-run: idense " + sub->get_name() + " --config <this file>\n";
  for (const CLI::Option* opt : sub->get_options()) {
    const auto name = opt->get_single_name();
    if (name == "help" || name == "config") continue;
    if (opt->get_expected_min() == 0) {
      text += name + "=" + (opt->count() > 0 && opt->as<bool>() ? "true" : "false") + "\n";
      continue;
    }
    std::vector<std::string> values;
    if (opt->count() > 0) {
      values = opt->results();
    } else {
      std::string d = opt->get_default_str();
      if (d.size() >= 2 && d.front() == '[' && d.back() == ']') d = d.substr(1, d.size() - 2);
      if (d.empty()) continue;
      if (opt->get_expected_max() > 1)
        for (const auto& v : io::split(d, ',')) values.emplace_back(io::trim(v));
      else
        values.push_back(d);
    }
    if (values.empty()) continue;
    if (opt->get_expected_max() <= 1) {
      text += name + "=" + quote_value(values.back()) + "\n";
      continue;
    }
    text += name + "=[";
    for (std::size_t i = 0; i < values.size(); ++i) text += (i ? ", " : "") + quote_value(values[i]);
    text += "]\n";
  }
  return text;
}

// Appends the entries of a subcommand's --config file that the command line does not set.
std::vector<std::string> expand_config(const CLI::App& app, std::vector<std::string> args) {
  const CLI::App* sub = nullptr;
  std::size_t start = 0;
  for (; start < args.size() && !sub; ++start) sub = app.get_subcommand_no_throw(args[start]);
  if (!sub) return args;
  std::string path;
  for (std::size_t i = start; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;

  std::istringstream in(io::read_file(path));
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML{}.from_config(in);
  } catch (const CLI::Error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  auto given = [&](const std::string& flag) {
    for (std::size_t i = start; i < args.size(); ++i)
      if (args[i] == flag || args[i].rfind(flag + "=", 0) == 0) return true;
    return false;
  };
  std::vector<std::string> extra;
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--" || !item.parents.empty()) continue;
    const std::string flag = "--" + item.name;
    const CLI::Option* opt = sub->get_option_no_throw(flag);
    if (!opt || item.name == "config") throw ConfigError(path + ": unknown option '" + item.name + "'");
    if (given(flag)) continue;
    if (opt->get_expected_min() == 0) {
      if (item.inputs.size() == 1 && CLI::detail::to_flag_value(item.inputs[0]) > 0) extra.push_back(flag);
      continue;
    }
    std::vector<std::string> values;
    for (const auto& v : item.inputs)
      if (!v.empty()) values.push_back(v);
    for (const auto& v : values) extra.push_back(flag + "=" + v);
  }
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

void write_outputs(const std::filesystem::path& path, std::string_view contents, const CLI::App* sub) {
  io::write_file_atomic(path, contents);
  io::write_file_atomic(path.string() + ".config.ini", snapshot(sub));
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

// ---------------------------------------------------------------------------

struct ScoreCommand {
  CorpusArgs corpus;
  PidArgs pid;
  std::string out;

  void attach(CLI::App* sub) {
    add_corpus_args(sub, corpus);
    add_pid_args(sub, pid, true);
    sub->add_option("--out", out, "Output CSV")->required();
  }

  void run(const CLI::App* sub, std::ostream& err) const {
    const auto measure = parse_measure(pid.measure);
    const auto config = make_pid_config(pid);
    const auto transcripts =
        load_prepared(corpus, measure == Measure::depid_r_add ? &pid.specificity_mode : nullptr);
    std::string csv = "sample_id,subject_id,label,measure,value,prop_tokens,prop_types,word_tokens\n";
    for (const auto& t : transcripts) {
      std::vector<std::string> row{t.sample_id, t.subject_id, std::string(to_string(t.label)),
                                   std::string(to_string(measure))};
      try {
        const auto r = score_measure(t, measure, config);
        row.insert(row.end(), {io::format_fixed(r.value), std::to_string(r.prop_tokens),
                               std::to_string(r.prop_types), std::to_string(r.word_tokens)});
      } catch (const UndefinedDensityError& e) {
        err << "warning: " << e.what() << "\n";
        row.insert(row.end(), {"NA", "0", "0", "0"});
      }
      csv += io::csv_row(row);
    }
    write_outputs(out, csv, sub);
  }
};

struct SpecificityCommand {
  CorpusArgs corpus;
  std::string mode = "sidecar";
  std::string out;

  void attach(CLI::App* sub) {
    add_corpus_args(sub, corpus);
    sub->add_option("--mode", mode, "sidecar: per-sample files from the manifest; heuristic: built-in scorer")
        ->check(CLI::IsMember({"sidecar", "heuristic"}))
        ->capture_default_str();
    sub->add_option("--out", out, "Output CSV")->required();
  }

  void run(const CLI::App* sub) const {
    const auto transcripts = load_prepared(corpus, &mode);
    std::string csv = "sample_id,sentence_id,score\n";
    for (const auto& t : transcripts)
      for (const auto& s : t.sentences) csv += io::csv_row({t.sample_id, s.sentence_id, io::format_fixed(*s.specificity)});
    write_outputs(out, csv, sub);
  }
};

struct FeaturesCommand {
  CorpusArgs corpus;
  std::string train_manifest;
  std::vector<std::string> kinds{"sid"};
  std::string scope = "full";
  EmbedArgs embed;
  std::uint64_t seed = 0;
  std::string model_in;
  std::string model_out;
  std::string out;

  void attach(CLI::App* sub) {
    add_corpus_args(sub, corpus, "Manifest of the samples to featurize");
    sub->add_option("--kind", kinds, "Feature kinds")
        ->delimiter(',')
        ->check(CLI::IsMember({"sid", "clusters", "bow", "nv"}))
        ->capture_default_str();
    sub->add_option("--cluster-scope", scope, "fold: fit on --train-manifest only; full: fit on --manifest")
        ->check(CLI::IsMember({"fold", "full"}))
        ->capture_default_str();
    sub->add_option("--train-manifest", train_manifest, "Training samples (cluster and BOW vocabulary source)");
    add_embed_args(sub, embed);
    sub->add_option("--seed", seed, "Random seed")->capture_default_str();
    sub->add_option("--model-in", model_in, "Use a saved cluster model instead of fitting one");
    sub->add_option("--model-out", model_out, "Save the fitted cluster model as JSON");
    sub->add_option("--out", out, "Output CSV")->required();
  }

  void run(const CLI::App* sub, std::ostream& err) const {
    std::vector<FeatureKind> parsed;
    bool clusters = false;
    for (const auto& k : kinds) {
      parsed.push_back(parse_feature_kind(k));
      clusters |= parsed.back() == FeatureKind::sid || parsed.back() == FeatureKind::clusters;
    }
    const bool fold = parse_cluster_scope(scope) == ClusterScope::fold;
    if (fold && train_manifest.empty()) throw ConfigError("--cluster-scope fold needs --train-manifest");

    auto target = drop_empty(load_prepared(corpus, nullptr), err);
    std::vector<Transcript> train;
    if (fold) {
      CorpusArgs ta = corpus;
      ta.manifest = train_manifest;
      train = drop_empty(load_prepared(ta, nullptr), err);
    }

    ContentWordOptions content{embed.proper_nouns};
    std::optional<EmbeddingTable> table;
    std::optional<ClusterModel> model;
    if (clusters) {
      table = load_table(embed);
      if (!model_in.empty()) {
        model = load_cluster_model(model_in);
      } else {
        std::vector<const Transcript*> source;
        for (const auto& t : fold ? train : target) source.push_back(&t);
        model = fit_cluster_model(cluster_vocabulary(source, *table, content), *table, kmeans_options(embed, seed));
      }
      if (!model_out.empty()) save_cluster_model(*model, model_out);
    }

    FeatureOptions options;
    options.embeddings = table ? &*table : nullptr;
    options.kmeans = kmeans_options(embed, seed);
    options.icu_threshold = embed.threshold;
    options.bow_min_frequency = embed.bow_min_frequency;
    options.content = content;
    options.fixed_model = model ? &*model : nullptr;

    std::vector<Transcript> rows_of = target;
    Eigen::MatrixXd X;
    if (fold) {
      std::vector<Transcript> combined = train;
      combined.insert(combined.end(), target.begin(), target.end());
      std::vector<std::size_t> tr(train.size()), te(target.size());
      std::iota(tr.begin(), tr.end(), 0);
      std::iota(te.begin(), te.end(), train.size());
      const CorpusFeatures features(std::move(combined), parsed, options);
      X = features.build(tr, te).test;
    } else {
      const CorpusFeatures features(std::move(target), parsed, options);
      X = features.full_matrix().rows;
    }

    std::vector<std::string> header{"sample_id", "subject_id", "label"};
    for (Eigen::Index j = 0; j < X.cols(); ++j) header.push_back("f" + std::to_string(j));
    std::string csv = io::csv_row(header);
    for (std::size_t i = 0; i < rows_of.size(); ++i) {
      std::vector<std::string> row{rows_of[i].sample_id, rows_of[i].subject_id, std::string(to_string(rows_of[i].label))};
      for (Eigen::Index j = 0; j < X.cols(); ++j) row.push_back(io::format_fixed(X(static_cast<Eigen::Index>(i), j)));
      csv += io::csv_row(row);
    }
    write_outputs(out, csv, sub);
  }
};

struct StatsCommand {
  CorpusArgs corpus;
  PidArgs pid;
  EmbedArgs embed;
  std::vector<std::string> measures{"cpidr-lite", "depid", "depid-r", "depid-r-add"};
  std::uint64_t seed = 0;
  std::string out;

  void attach(CLI::App* sub) {
    add_corpus_args(sub, corpus);
    sub->add_option("--measures", measures, "Measures to compare between groups")
        ->delimiter(',')
        ->check(CLI::IsMember({"cpidr-lite", "depid", "depid-r", "depid-r-add", "sid", "nv"}))
        ->capture_default_str();
    add_pid_args(sub, pid, false);
    add_embed_args(sub, embed);
    sub->add_option("--seed", seed, "Random seed for the SID cluster model")->capture_default_str();
    sub->add_option("--out", out, "Output CSV")->required();
  }

  void run(const CLI::App* sub, std::ostream& err) const {
    const bool need_spec = std::find(measures.begin(), measures.end(), "depid-r-add") != measures.end();
    const auto transcripts = drop_empty(load_prepared(corpus, need_spec ? &pid.specificity_mode : nullptr), err);
    const auto config = make_pid_config(pid);
    const ContentWordOptions content{embed.proper_nouns};

    std::optional<EmbeddingTable> table;
    std::optional<ClusterModel> model;
    if (std::find(measures.begin(), measures.end(), "sid") != measures.end()) {
      table = load_table(embed);
      std::vector<const Transcript*> all;
      for (const auto& t : transcripts) all.push_back(&t);
      model = fit_cluster_model(cluster_vocabulary(all, *table, content), *table, kmeans_options(embed, seed));
    }

    std::vector<Label> labels;
    for (const auto& t : transcripts) labels.push_back(t.label);
    std::string csv = "measure,ad_mean,ad_sd,ctrl_mean,ctrl_sd,p,significant\n";
    for (const auto& name : measures) {
      std::vector<double> values;
      for (const auto& t : transcripts) {
        if (name == "sid")
          values.push_back(sid_score(t, *model, *table, embed.threshold, content));
        else if (name == "nv")
          values.push_back(nv_proportion(t, content));
        else
          values.push_back(score_measure(t, parse_measure(name), config).value);
      }
      const auto g = group_summary(values, labels, name);
      csv += io::csv_row({g.measure, io::format_fixed(g.patient_mean), io::format_fixed(g.patient_sd),
                          io::format_fixed(g.control_mean), io::format_fixed(g.control_sd),
                          io::format_fixed(g.p_value), g.significant ? "*" : ""});
    }
    write_outputs(out, csv, sub);
  }
};

struct ClassifyCommand {
  CorpusArgs corpus;
  PidArgs pid;
  EmbedArgs embed;
  std::vector<std::string> features;
  std::string scope = "fold";
  ClassifierConfig config;
  std::string pooling = "pooled";
  bool no_standardize = false;
  bool no_stratify = false;
  std::string label;
  std::string out;
  std::string table;

  void attach(CLI::App* sub) {
    sub->add_option("--features", features, "Feature kinds: pid, cpidr, sid, clusters, bow, nv")
        ->delimiter(',')
        ->check(CLI::IsMember({"pid", "cpidr", "sid", "clusters", "bow", "nv"}))
        ->required();
    add_corpus_args(sub, corpus);
    add_pid_args(sub, pid, true);
    add_embed_args(sub, embed);
    sub->add_option("--cluster-scope", scope, "Fit clusters per training fold or once on the whole corpus")
        ->check(CLI::IsMember({"fold", "full"}))
        ->capture_default_str();
    sub->add_option("--alpha", config.alpha, "Elastic-net mixing (1 = lasso, 0 = ridge)")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    sub->add_option("--lambda-grid", config.lambda_grid, "Penalty strengths tried by inner CV")
        ->delimiter(',')
        ->capture_default_str();
    sub->add_option("--folds", config.folds, "Outer folds")->capture_default_str();
    sub->add_option("--repeats", config.repeats, "Repetitions with fresh fold assignments")->capture_default_str();
    sub->add_option("--inner-folds", config.inner_folds, "Folds of the lambda search")->capture_default_str();
    sub->add_option("--seed", config.seed, "Random seed")->capture_default_str();
    sub->add_option("--pooling", pooling, "Metric per repeat over pooled predictions or averaged over folds")
        ->check(CLI::IsMember({"pooled", "fold-mean"}))
        ->capture_default_str();
    sub->add_flag("--no-standardize", no_standardize, "Keep raw feature scales");
    sub->add_flag("--no-stratify", no_stratify, "Group folds by subject without balancing labels");
    sub->add_option("--tolerance", config.fit.tolerance, "Optimizer stopping tolerance")->capture_default_str();
    sub->add_option("--max-iter-fit", config.fit.max_iter, "Optimizer iteration cap")->capture_default_str();
    sub->add_option("--threads", config.threads, "Worker threads (0 = all cores)")->capture_default_str();
    sub->add_option("--label", label, "Feature label in the table row");
    sub->add_option("--out", out, "Report JSON")->required();
    sub->add_option("--table", table, "Table CSV (default: next to --out)");
  }

  std::string feature_label() const {
    if (!label.empty()) return label;
    std::vector<std::string> parts;
    for (const auto& f : features) parts.push_back(f == "pid" ? pid.measure : f);
    return join(parts, "+");
  }

  void run(const CLI::App* sub, std::ostream& err) const {
    std::vector<FeatureKind> kinds;
    bool clusters = false;
    for (const auto& f : features) {
      kinds.push_back(parse_feature_kind(f));
      clusters |= kinds.back() == FeatureKind::sid || kinds.back() == FeatureKind::clusters;
    }
    const auto measure = parse_measure(pid.measure);
    const bool need_spec =
        measure == Measure::depid_r_add && std::find(features.begin(), features.end(), "pid") != features.end();
    auto transcripts = drop_empty(load_prepared(corpus, need_spec ? &pid.specificity_mode : nullptr), err);

    std::optional<EmbeddingTable> emb;
    if (clusters) emb = load_table(embed);
    FeatureOptions options;
    options.pid_measure = measure;
    options.pid_config = make_pid_config(pid);
    options.embeddings = emb ? &*emb : nullptr;
    options.kmeans = kmeans_options(embed, config.seed);
    options.icu_threshold = embed.threshold;
    options.scope = parse_cluster_scope(scope);
    options.bow_min_frequency = embed.bow_min_frequency;
    options.content = ContentWordOptions{embed.proper_nouns};

    ClassifierConfig c = config;
    c.pooling = pooling == "pooled" ? MetricPooling::pooled : MetricPooling::fold_mean;
    c.standardize = !no_standardize;
    c.stratify = !no_stratify;
    c.threads = thread_budget(config.threads);

    const CorpusFeatures source(std::move(transcripts), kinds, options);
    auto report = evaluate(source, c);
    report.feature_names = source.feature_names();

    std::filesystem::path table_path = table;
    if (table_path.empty()) {
      table_path = out;
      table_path += ".table.csv";
    }
    write_outputs(out, report_to_json(report), sub);
    io::write_file_atomic(table_path, report_table_header() + report_table_row(report, feature_label()));
  }
};

struct CountTable {
  std::vector<std::string> ids;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> values;  // per column, aligned with ids
};

CountTable read_counts(const std::string& path) {
  const auto csv = io::read_csv(path);
  const auto c_id = csv.require_column("sentence_id", path);
  CountTable t;
  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < csv.header.size(); ++j)
    if (j != c_id) {
      cols.push_back(j);
      t.columns.push_back(csv.header[j]);
    }
  if (cols.empty()) throw SchemaError(path + ": no count columns besides sentence_id");
  t.values.resize(cols.size());
  std::set<std::string> seen;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    const auto ctx = path + " line " + std::to_string(csv.lines[r]);
    if (row.size() != csv.header.size()) throw ParseError(ctx + ": expected " + std::to_string(csv.header.size()) + " fields", csv.lines[r]);
    const auto id = io::trim(row[c_id]);
    if (!seen.insert(id).second) throw ValidationError(path + ": duplicate sentence_id '" + id + "'");
    t.ids.push_back(id);
    for (std::size_t j = 0; j < cols.size(); ++j) t.values[j].push_back(io::parse_double(row[cols[j]], ctx));
  }
  return t;
}

struct CorrelateCommand {
  std::string auto_counts;
  std::string conllu;
  std::string manual;
  std::vector<std::string> measures{"cpidr-lite", "depid", "depid-r"};
  PidArgs pid;
  CorpusArgs corpus;
  std::string out;

  void attach(CLI::App* sub) {
    auto* a = sub->add_option("--auto", auto_counts, "Automatic counts CSV: sentence_id plus one column per measure");
    auto* c = sub->add_option("--conllu", conllu, "Parsed sentences to count automatically");
    a->excludes(c);
    sub->add_option("--manual", manual, "Manual counts CSV: sentence_id plus count columns")->required();
    sub->add_option("--measures", measures, "Measures counted from --conllu")
        ->delimiter(',')
        ->check(CLI::IsMember(kMeasureNames))
        ->capture_default_str();
    sub->add_option("--tagset", pid.tagset, "Dependency label dialect")
        ->check(CLI::IsMember({"sd", "ud"}))
        ->capture_default_str();
    sub->add_option("--add-relation", pid.extra_relations, "Extra whitelisted relation labels")->delimiter(',');
    sub->add_option("--fillers", corpus.fillers, "Filled pauses removed before counting")
        ->delimiter(',')
        ->capture_default_str();
    sub->add_option("--punct-tags", corpus.punct, "POS tags counted as punctuation")
        ->delimiter(',')
        ->capture_default_str();
    sub->add_option("--out", out, "Matrix CSV (also printed)");
  }

  CountTable count_conllu() const {
    const PunctuationTags punct{{corpus.punct.begin(), corpus.punct.end()}};
    Transcript t;
    t.sample_id = conllu;
    t.sentences = load_conllu(conllu, punct);
    t = preprocess(t, lowered(corpus.fillers)).transcript;
    const auto config = make_pid_config(pid);
    CountTable table;
    for (const auto& m : measures) {
      const auto measure = parse_measure(m);
      if (measure == Measure::depid_r_add)
        throw ConfigError("depid-r-add needs specificity scores; use --auto with precomputed counts");
      table.columns.push_back(m);
      table.values.emplace_back();
      for (const auto& s : t.sentences) table.values.back().push_back(static_cast<double>(proposition_count(s, measure, config)));
    }
    for (const auto& s : t.sentences) table.ids.push_back(s.sentence_id);
    return table;
  }

  void run(const CLI::App* sub, std::ostream& os) const {
    if (auto_counts.empty() && conllu.empty()) throw ConfigError("correlate needs --auto or --conllu");
    const auto left = conllu.empty() ? read_counts(auto_counts) : count_conllu();
    const auto right = read_counts(manual);

    std::map<std::string, std::size_t> right_index;
    for (std::size_t i = 0; i < right.ids.size(); ++i) right_index[right.ids[i]] = i;
    std::set<std::string> left_ids(left.ids.begin(), left.ids.end());
    std::vector<std::string> only_left, only_right;
    for (const auto& id : left.ids)
      if (!right_index.count(id)) only_left.push_back(id);
    for (const auto& id : right.ids)
      if (!left_ids.count(id)) only_right.push_back(id);
    if (!only_left.empty() || !only_right.empty()) {
      std::string msg = "sentence ids do not match;";
      if (!only_left.empty()) msg += " automatic only: " + join(only_left, ", ") + ";";
      if (!only_right.empty()) msg += " manual only: " + join(only_right, ", ") + ";";
      msg.pop_back();
      throw ValidationError(msg);
    }

    std::vector<std::string> names = left.columns;
    std::vector<std::vector<double>> cols = left.values;
    for (std::size_t j = 0; j < right.columns.size(); ++j) {
      std::vector<double> aligned;
      for (const auto& id : left.ids) aligned.push_back(right.values[j][right_index.at(id)]);
      auto name = right.columns[j];
      if (std::find(names.begin(), names.end(), name) != names.end()) name = "manual:" + name;
      names.push_back(name);
      cols.push_back(std::move(aligned));
    }

    std::vector<std::string> header{"measure"};
    header.insert(header.end(), names.begin(), names.end());
    std::string csv = io::csv_row(header);
    for (std::size_t a = 0; a < cols.size(); ++a) {
      std::vector<std::string> row{names[a]};
      for (std::size_t b = 0; b < cols.size(); ++b) {
        try {
          row.push_back(io::format_fixed(a == b ? 1.0 : spearman(cols[a], cols[b])));
        } catch (const UndefinedCorrelationError& e) {
          throw UndefinedCorrelationError(names[a] + " vs " + names[b] + ": " + e.what());
        }
      }
      csv += io::csv_row(row);
    }
    os << csv;
    if (!out.empty()) write_outputs(out, csv, sub);
  }
};

CLI::App* add_subcommand(CLI::App& app, const std::string& name, const std::string& help) {
  auto* sub = app.add_subcommand(name, help);
  sub->add_option("--config", "Read options from a key=value file written next to an output (flags override it)");
  return sub;
}

}  // namespace

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Idea density and embedding-cluster measures for dependency-parsed transcripts", "idense"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  ScoreCommand score;
  SpecificityCommand specificity;
  FeaturesCommand features;
  StatsCommand stats;
  ClassifyCommand classify;
  CorrelateCommand correlate;
  auto* s_score = add_subcommand(app, "score", "Per-sample proposition density");
  auto* s_spec = add_subcommand(app, "specificity", "Per-sentence specificity scores");
  auto* s_feat = add_subcommand(app, "features", "Embedding-cluster, BOW and noun/verb features");
  auto* s_stats = add_subcommand(app, "stats", "Patient/control group comparison");
  auto* s_class = add_subcommand(app, "classify", "Repeated subject-grouped cross-validated classification");
  auto* s_corr = add_subcommand(app, "correlate", "Spearman correlations between proposition counts");
  score.attach(s_score);
  specificity.attach(s_spec);
  features.attach(s_feat);
  stats.attach(s_stats);
  classify.attach(s_class);
  correlate.attach(s_corr);

  std::vector<std::string> args(argv.size() > 1 ? argv.begin() + 1 : argv.end(), argv.end());
  try {
    args = expand_config(app, std::move(args));
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      app.exit(e, out, err);
      return 0;
    }
    const auto parsed = app.get_subcommands();
    const CLI::App* shown = parsed.empty() ? &app : parsed.back();
    err << "error: " << e.what() << "\n\n" << shown->help();
    return 1;
  }

  try {
    if (s_score->parsed()) score.run(s_score, err);
    else if (s_spec->parsed()) specificity.run(s_spec);
    else if (s_feat->parsed()) features.run(s_feat, err);
    else if (s_stats->parsed()) stats.run(s_stats, err);
    else if (s_class->parsed()) classify.run(s_class, err);
    else if (s_corr->parsed()) correlate.run(s_corr, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace idense::cli
