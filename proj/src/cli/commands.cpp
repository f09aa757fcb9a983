#include "lexprop/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "io_util.hpp"
#include "lexprop/error.hpp"
#include "lexprop/evaluation.hpp"
#include "text_util.hpp"

namespace lexprop {

namespace fs = std::filesystem;

namespace {

template <typename T>
void read_key(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string(what) + " path is not set");
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw ConfigError(std::string(what) + " not found: " + path);
  }
}

bool has_fixed_params(const RunConfig& c) {
  return c.params.has_value() || !c.params_file.empty();
}

void check_param_source(const RunConfig& c) {
  if (has_fixed_params(c) && c.fit) {
    throw ConfigError(
        "config has both fixed params and a fit request; give exactly one");
  }
  if (c.params && !c.params_file.empty()) {
    throw ConfigError("config has both inline params and a params_file");
  }
}

std::string out_path(const RunConfig& c, const char* name) {
  return (fs::path(c.output_dir) / name).string();
}

// Params from an inline object, or from a params file written by `optimize`
// (whose parameters sit under "params").
PropagationParams resolve_params(const RunConfig& c) {
  if (c.params) return *c.params;
  const Json j = read_json_file(c.params_file);
  return params_from_json(j.contains("params") ? j.at("params") : j);
}

SolverOptions solver_options(const RunConfig& c) {
  SolverOptions o = c.solver;
  if (!o.transition_cache.empty() && fs::path(o.transition_cache).is_relative()) {
    o.transition_cache = out_path(c, o.transition_cache.c_str());
  }
  return o;
}

struct Inputs {
  std::optional<EmbeddingStore> store;
  SeedLexicon seed;
  std::vector<CorpusText> corpus;
};

Inputs load_graph_inputs(const RunConfig& c) {
  Inputs in;
  LoadOptions opts;
  std::unordered_map<std::string, std::size_t> freq;
  if (c.frequency_floor) {
    in.corpus = load_corpus(c.corpus, c.emotions);
    freq = token_frequencies(in.corpus);
    opts.frequency_floor = c.frequency_floor;
    opts.frequencies = &freq;
  }
  in.seed = load_seed_lexicon(c.seed_lexicon, c.emotions);
  in.store.emplace(load_embeddings(c.embeddings, opts));
  return in;
}

void validate_graph_inputs(const RunConfig& c) {
  require_file(c.embeddings, "embeddings");
  require_file(c.seed_lexicon, "seed lexicon");
  if (c.frequency_floor) require_file(c.corpus, "corpus");
  if (!c.params_file.empty()) require_file(c.params_file, "params file");
  if (c.folds < 2) throw ConfigError("folds must be at least 2");
}

Json optimizer_json(const OptimizerConfig& oc, const PropagationParams& init) {
  Json j = to_json(oc);
  j["init"] = to_json(init);
  return j;
}

Json fit_summary(const FitResult& r) {
  Json j;
  j["params"] = to_json(r.params);
  j["best_mean_entropy"] = r.trace.best_mean_entropy;
  j["restarts"] = r.trace.restarts;
  j["exact_entropy"] =
      r.trace.exact_entropy ? Json(*r.trace.exact_entropy) : Json(nullptr);
  return j;
}

}  // namespace

RunConfig run_config_from_json(const Json& j) {
  static const std::set<std::string> known = {
      "embeddings",      "seed_lexicon", "corpus",       "lexicon",
      "output_dir",      "emotions",     "params",       "params_file",
      "fit",             "batch_params", "solver",       "seed",
      "folds",           "frequency_floor", "class_counts"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) {
      throw ConfigError("unknown key '" + key + "' in config");
    }
  }
  RunConfig c;
  read_key(j, "embeddings", c.embeddings);
  read_key(j, "seed_lexicon", c.seed_lexicon);
  read_key(j, "corpus", c.corpus);
  read_key(j, "lexicon", c.lexicon);
  read_key(j, "output_dir", c.output_dir);
  if (j.contains("emotions")) {
    std::vector<std::string> names;
    read_key(j, "emotions", names);
    try {
      c.emotions = EmotionSet(std::move(names));
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }
  if (j.contains("params")) c.params = params_from_json(j.at("params"));
  read_key(j, "params_file", c.params_file);
  if (j.contains("fit")) {
    const Json& f = j.at("fit");
    c.fit = optimizer_config_from_json(f);
    if (f.contains("init")) c.fit_init = params_from_json(f.at("init"));
  }
  if (j.contains("batch_params")) {
    c.batch_params = params_from_json(j.at("batch_params"));
  }
  if (j.contains("solver")) {
    const Json& s = j.at("solver");
    if (!s.is_object()) throw ConfigError("solver must be a JSON object");
    for (const auto& [key, value] : s.items()) {
      if (key != "method" && key != "tol" && key != "max_iter" &&
          key != "transition_cache") {
        throw ConfigError("unknown key '" + key + "' in solver");
      }
    }
    if (s.contains("method")) {
      std::string m;
      read_key(s, "method", m);
      c.solver.choice = parse_solver_choice(m);
    }
    read_key(s, "tol", c.solver.tol);
    read_key(s, "max_iter", c.solver.max_iter);
    read_key(s, "transition_cache", c.solver.transition_cache);
  }
  read_key(j, "seed", c.seed);
  read_key(j, "folds", c.folds);
  if (j.contains("frequency_floor") && !j.at("frequency_floor").is_null()) {
    std::size_t floor = 0;
    read_key(j, "frequency_floor", floor);
    c.frequency_floor = floor;
  }
  read_key(j, "class_counts", c.class_counts);
  if (c.class_counts.size() && c.class_counts.size() != c.emotions.size()) {
    throw ConfigError("class_counts needs one entry per emotion");
  }
  if (c.fit) c.fit->rng_seed = c.seed;
  return c;
}

RunConfig load_run_config(const std::string& path) {
  require_file(path, "config");
  RunConfig c = run_config_from_json(read_json_file(path));
  // Relative paths in the file are taken relative to the file itself.
  const fs::path base = fs::path(path).parent_path();
  for (std::string* p : {&c.embeddings, &c.seed_lexicon, &c.corpus, &c.lexicon,
                         &c.params_file, &c.output_dir}) {
    if (!p->empty() && fs::path(*p).is_relative()) {
      *p = (base / *p).lexically_normal().string();
    }
  }
  return c;
}

Json to_json(const RunConfig& c) {
  Json j;
  j["embeddings"] = c.embeddings;
  j["seed_lexicon"] = c.seed_lexicon;
  j["corpus"] = c.corpus;
  j["lexicon"] = c.lexicon;
  j["output_dir"] = c.output_dir;
  j["emotions"] = c.emotions.names();
  if (c.params) j["params"] = to_json(*c.params);
  if (!c.params_file.empty()) j["params_file"] = c.params_file;
  if (c.fit) j["fit"] = optimizer_json(*c.fit, c.fit_init);
  if (c.batch_params) j["batch_params"] = to_json(*c.batch_params);
  Json s;
  s["method"] = c.solver.choice == SolverChoice::kAuto ? "auto"
                : c.solver.choice == SolverChoice::kIterative ? "iterative"
                                                               : "closed";
  s["tol"] = c.solver.tol;
  s["max_iter"] = c.solver.max_iter;
  s["transition_cache"] = c.solver.transition_cache;
  j["solver"] = std::move(s);
  j["seed"] = c.seed;
  j["folds"] = c.folds;
  j["frequency_floor"] =
      c.frequency_floor ? Json(*c.frequency_floor) : Json(nullptr);
  j["class_counts"] = c.class_counts;
  return j;
}

void apply_dense_budget(RunConfig& config, std::size_t budget_mib) {
  const double bytes = static_cast<double>(budget_mib) * 1024.0 * 1024.0;
  const auto n = static_cast<std::size_t>(std::sqrt(bytes / sizeof(double)));
  config.solver.dense_node_threshold =
      std::min(config.solver.dense_node_threshold, n);
}

int cmd_expand(const RunConfig& config) {
  check_param_source(config);
  if (!has_fixed_params(config) && !config.fit) {
    throw ConfigError("expand needs params, a params_file or a fit request");
  }
  validate_graph_inputs(config);

  const Inputs in = load_graph_inputs(config);
  Json fit_info(nullptr);
  PropagationParams params;
  if (config.fit) {
    const FitResult r =
        fit(*in.store, in.seed, config.emotions, *config.fit, config.fit_init);
    params = r.params;
    fit_info = fit_summary(r);
  } else {
    params = resolve_params(config);
  }
  const ExpansionResult r = expand(*in.store, in.seed, config.emotions, params,
                                   solver_options(config));
  const DistributionLexicon lex = r.to_lexicon();
  write_lexicon_tsv(out_path(config, "lexicon.tsv"), config.emotions, lex);
  write_lexicon_json(out_path(config, "lexicon.json"), config.emotions, lex);

  Json side;
  side["seed"] = config.seed;
  side["num_nodes"] = r.tokens.size();
  side["num_labeled"] = static_cast<std::size_t>(
      std::count(r.labeled.begin(), r.labeled.end(), true));
  side["missing_seed_tokens"] = r.missing_seed_tokens;
  side["params"] = to_json(r.params);
  side["solve"] = r.report ? to_json(*r.report) : Json(nullptr);
  side["fit"] = std::move(fit_info);
  write_file_atomic(out_path(config, "expansion.json"), side.dump(2) + "\n");
  return 0;
}

int cmd_optimize(const RunConfig& config) {
  check_param_source(config);
  if (!config.fit) throw ConfigError("optimize needs a fit request");
  validate_graph_inputs(config);

  const Inputs in = load_graph_inputs(config);
  const FitResult r =
      fit(*in.store, in.seed, config.emotions, *config.fit, config.fit_init);

  Json j;
  j["params"] = to_json(r.params);
  j["seed"] = config.seed;
  j["optimizer"] = optimizer_json(*config.fit, config.fit_init);
  j["best_mean_entropy"] = r.trace.best_mean_entropy;
  j["restarts"] = r.trace.restarts;
  j["exact_entropy"] =
      r.trace.exact_entropy ? Json(*r.trace.exact_entropy) : Json(nullptr);
  j["num_nodes"] = in.store->size();
  write_file_atomic(out_path(config, "params.json"), j.dump(2) + "\n");
  write_file_atomic(out_path(config, "trace.csv"), trace_to_csv(r.trace));
  return 0;
}

int cmd_evaluate(const RunConfig& config) {
  check_param_source(config);
  if (!has_fixed_params(config) && !config.fit) {
    throw ConfigError("evaluate needs params, a params_file or a fit request");
  }
  validate_graph_inputs(config);
  if (config.class_counts.empty()) require_file(config.corpus, "corpus");

  Inputs in = load_graph_inputs(config);
  std::vector<std::size_t> counts = config.class_counts;
  std::string prior_source = "config";
  if (counts.empty()) {
    if (in.corpus.empty()) in.corpus = load_corpus(config.corpus, config.emotions);
    counts.assign(config.emotions.size(), 0);
    for (const auto& t : in.corpus) ++counts[t.label];
    prior_source = "corpus";
  }

  const EmbeddingStore& store = *in.store;
  const std::size_t m = config.emotions.size();
  const SolverOptions solver = solver_options(config);
  // One LP row per parameter source; the batch row needs its own params.
  std::optional<PropagationParams> lp, batch;
  Json fits = Json::object();
  if (config.fit) {
    OptimizerConfig full = *config.fit;
    full.mode = FitMode::kFull;
    OptimizerConfig batched = *config.fit;
    batched.mode = FitMode::kBatch;
    const FitResult a =
        fit(store, in.seed, config.emotions, full, config.fit_init);
    const FitResult b =
        fit(store, in.seed, config.emotions, batched, config.fit_init);
    lp = a.params;
    batch = b.params;
    fits["full"] = fit_summary(a);
    fits["batch"] = fit_summary(b);
  } else {
    lp = resolve_params(config);
    batch = config.batch_params;
  }

  std::vector<EvalReport> rows;
  const Baseline majority =
      baseline_expander(BaselineKind::kMajority, counts, m);
  for (const Baseline& b : {baseline_expander(BaselineKind::kUniform, {}, m),
                            majority,
                            baseline_expander(BaselineKind::kPrior, counts, m)}) {
    rows.push_back(cross_validate(store, in.seed, config.emotions,
                                  b.expander(), config.folds, config.seed,
                                  to_string(b.kind)));
  }
  rows.push_back(cross_validate(store, in.seed, config.emotions,
                                label_propagation_expander(*lp, solver),
                                config.folds, config.seed,
                                "label propagation"));
  rows.back().params = *lp;
  if (batch) {
    rows.push_back(cross_validate(store, in.seed, config.emotions,
                                  label_propagation_expander(*batch, solver),
                                  config.folds, config.seed,
                                  "batch label propagation"));
    rows.back().params = *batch;
  }

  Json j;
  j["emotions"] = config.emotions.names();
  j["k"] = config.folds;
  j["seed"] = config.seed;
  j["class_counts"] = counts;
  j["prior_source"] = prior_source;
  j["majority_tie"] = majority.tie;
  j["fits"] = std::move(fits);
  Json arr = Json::array();
  for (const auto& r : rows) arr.push_back(to_json(r));
  j["rows"] = std::move(arr);
  write_file_atomic(out_path(config, "eval_report.json"), j.dump(2) + "\n");
  write_file_atomic(out_path(config, "eval_report.txt"),
                    format_eval_table(rows));
  return 0;
}

int cmd_stats(const RunConfig& config) {
  require_file(config.seed_lexicon, "seed lexicon");
  require_file(config.corpus, "corpus");
  const LexiconFlags flags =
      load_lexicon_flags(config.seed_lexicon, config.emotions);
  const auto corpus = load_corpus(config.corpus, config.emotions);
  const CorpusStats s =
      corpus_lexicon_stats(corpus, flags, config.emotions.size());
  write_file_atomic(out_path(config, "stats.json"),
                    to_json(s, config.emotions).dump(2) + "\n");
  write_file_atomic(out_path(config, "stats.txt"),
                    format_stats(s, config.emotions));
  return 0;
}

int cmd_baseline(const RunConfig& config) {
  require_file(config.corpus, "corpus");
  if (config.lexicon.empty()) {
    require_file(config.seed_lexicon, "lexicon or seed lexicon");
  } else {
    require_file(config.lexicon, "lexicon");
  }
  DistributionLexicon lex;
  if (!config.lexicon.empty()) {
    LoadedLexicon loaded = read_lexicon_tsv(config.lexicon);
    if (!(loaded.emotions == config.emotions)) {
      throw ConfigError("lexicon emotions do not match the configured set");
    }
    lex = std::move(loaded.lexicon);
  } else {
    lex = to_distribution_lexicon(
        load_seed_lexicon(config.seed_lexicon, config.emotions));
  }
  const auto corpus = load_corpus(config.corpus, config.emotions);
  const std::size_t m = config.emotions.size();
  const ClassificationReport rep = classify_corpus(corpus, lex, m);

  std::string out = "index\tgold\tpredicted\thits";
  for (const auto& e : config.emotions.names()) out += '\t' + e;
  out += '\n';
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    out += std::to_string(i) + '\t' + config.emotions.name(corpus[i].label) +
           '\t' + config.emotions.name(rep.predicted[i]) + '\t' +
           std::to_string(rep.results[i].hits);
    for (double p : rep.results[i].distribution) out += '\t' + format_double(p);
    out += '\n';
  }
  write_file_atomic(out_path(config, "classification.tsv"), out);

  Json j;
  j["num_texts"] = corpus.size();
  j["correct"] = rep.correct;
  j["no_evidence"] = rep.no_evidence;
  j["averaging"] = "micro";
  j["precision"] = rep.precision;
  j["recall"] = rep.recall;
  j["f1"] = rep.f1;
  write_file_atomic(out_path(config, "classification_metrics.json"),
                    j.dump(2) + "\n");
  return 0;
}

Json error_json(const std::exception& e) {
  Json err;
  if (const auto* le = dynamic_cast<const Error*>(&e)) {
    err["kind"] = le->kind();
  } else {
    err["kind"] = "internal";
  }
  err["message"] = e.what();
  if (const auto* pe = dynamic_cast<const ParseError*>(&e)) {
    err["path"] = pe->path();
    err["line"] = pe->line();
  }
  Json j;
  j["error"] = std::move(err);
  return j;
}

}  // namespace lexprop
