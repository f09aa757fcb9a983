#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "lexprop/commands.hpp"
#include "lexprop/error.hpp"
#include "support.hpp"

using namespace lexprop;
using lexprop::testing::fixture;
using lexprop::testing::read_text;
using lexprop::testing::temp_dir;
using lexprop::testing::write_text;
namespace fs = std::filesystem;

namespace {

RunConfig mini_config(const fs::path& out) {
  RunConfig c = load_run_config(fixture("mini_config.json"));
  c.output_dir = out.string();
  return c;
}

RunConfig fixed_config(const fs::path& out) {
  RunConfig c = mini_config(out);
  c.fit.reset();
  PropagationParams p;
  p.alpha = 6.0;
  p.bias = -2.0;
  p.epsilon = 0.05;
  c.params = p;
  return c;
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char ch : s) n += ch == '\n';
  return n;
}

int run_cli(const std::string& args, const fs::path& err) {
  const std::string cmd = std::string(LEXPROP_CLI) + " " + args + " 2> \"" +
                          err.string() + "\" > /dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = load_run_config(fixture("mini_config.json"));
  CHECK(fs::path(c.embeddings).is_absolute());
  CHECK(fs::exists(c.embeddings));
  CHECK(c.seed == 7);
  CHECK(c.folds == 5);
  REQUIRE(c.fit.has_value());
  CHECK(c.fit->rng_seed == 7);
  CHECK(c.fit_init.alpha == 5.0);

  CHECK_THROWS_AS(run_config_from_json(Json::parse(R"({"embedding": "x"})")),
                  ConfigError);
  CHECK_THROWS_AS(
      run_config_from_json(Json::parse(R"({"solver": {"methd": "auto"}})")),
      ConfigError);
  CHECK_THROWS_AS(run_config_from_json(Json::parse(R"({"seed": "seven"})")),
                  ConfigError);
  CHECK_THROWS_AS(run_config_from_json(Json::parse("[1]")), ConfigError);

  // Round trip through JSON keeps the run description.
  const auto again = run_config_from_json(to_json(c));
  CHECK(to_json(again) == to_json(c));
}

TEST_CASE("conflicting parameter sources are rejected") {
  const auto dir = temp_dir("cli_conflict");
  RunConfig c = mini_config(dir);
  c.params = PropagationParams{};
  CHECK_THROWS_AS(cmd_expand(c), ConfigError);
  CHECK_THROWS_AS(cmd_evaluate(c), ConfigError);
  c.fit.reset();
  c.params_file = fixture("mini_config.json");
  CHECK_THROWS_AS(cmd_expand(c), ConfigError);
  RunConfig none = mini_config(dir);
  none.fit.reset();
  CHECK_THROWS_AS(cmd_expand(none), ConfigError);
  CHECK_THROWS_AS(cmd_optimize(none), ConfigError);
}

TEST_CASE("missing inputs fail before any output is written") {
  const auto dir = temp_dir("cli_missing");
  RunConfig c = fixed_config(dir / "out");
  c.embeddings = (dir / "nope.txt").string();
  CHECK_THROWS_AS(cmd_expand(c), ConfigError);
  CHECK_FALSE(fs::exists(dir / "out"));
  RunConfig e = fixed_config(dir / "out");
  e.corpus.clear();
  CHECK_THROWS_AS(cmd_stats(e), ConfigError);
}

TEST_CASE("expand covers the vocabulary and is reproducible") {
  const auto a = temp_dir("cli_expand_a");
  const auto b = temp_dir("cli_expand_b");
  REQUIRE(cmd_expand(fixed_config(a)) == 0);
  REQUIRE(cmd_expand(fixed_config(b)) == 0);
  const auto tsv = read_text(a / "lexicon.tsv");
  const auto side = Json::parse(read_text(a / "expansion.json"));
  CHECK(count_lines(tsv) == side["num_nodes"].get<std::size_t>() + 1);
  CHECK(side["num_nodes"] == 44);
  CHECK(side["num_labeled"].get<std::size_t>() > 0);
  CHECK_FALSE(side["missing_seed_tokens"].empty());
  for (const char* f : {"lexicon.tsv", "lexicon.json", "expansion.json"}) {
    CHECK(read_text(a / f) == read_text(b / f));
  }
}

TEST_CASE("optimize echoes the batch configuration and feeds expand") {
  const auto dir = temp_dir("cli_optimize");
  RunConfig c = mini_config(dir);
  c.fit->mode = FitMode::kBatch;
  c.fit->batch_size = 20;
  c.fit->num_batches = 4;
  c.fit->epochs_per_batch = 3;
  c.fit->learning_rate = 0.5;
  REQUIRE(cmd_optimize(c) == 0);
  const auto j = Json::parse(read_text(dir / "params.json"));
  CHECK(j["optimizer"]["mode"] == "batch");
  CHECK(j["optimizer"]["batch_size"] == 20);
  CHECK(j["optimizer"]["num_batches"] == 4);
  CHECK(j["optimizer"]["epochs_per_batch"] == 3);
  CHECK(j["optimizer"]["init"]["alpha"] == 5.0);
  CHECK(j["seed"] == 7);
  CHECK(count_lines(read_text(dir / "trace.csv")) > 1);

  RunConfig e = mini_config(dir / "expand");
  e.fit.reset();
  e.params_file = (dir / "params.json").string();
  REQUIRE(cmd_expand(e) == 0);
  const auto side = Json::parse(read_text(dir / "expand" / "expansion.json"));
  CHECK(side["params"] == j["params"]);
}

TEST_CASE("evaluate reports every method") {
  const auto dir = temp_dir("cli_evaluate");
  REQUIRE(cmd_evaluate(mini_config(dir)) == 0);
  const auto j = Json::parse(read_text(dir / "eval_report.json"));
  REQUIRE(j["rows"].size() == 5);
  CHECK(j["rows"][0]["method"] == "uniform");
  CHECK(j["rows"][0]["mean_kl"].get<double>() > 0.0);
  CHECK(j["prior_source"] == "corpus");
  CHECK(read_text(dir / "eval_report.txt").find("batch label propagation") !=
        std::string::npos);

  // Without a fit or batch params the batch row is left out.
  const auto fixed = temp_dir("cli_evaluate_fixed");
  RunConfig c = fixed_config(fixed);
  c.class_counts = {1, 1, 1, 2, 1, 1};
  REQUIRE(cmd_evaluate(c) == 0);
  const auto k = Json::parse(read_text(fixed / "eval_report.json"));
  CHECK(k["rows"].size() == 4);
  CHECK(k["prior_source"] == "config");
}

TEST_CASE("stats and baseline") {
  const auto dir = temp_dir("cli_stats");
  REQUIRE(cmd_stats(fixed_config(dir)) == 0);
  const auto s = Json::parse(read_text(dir / "stats.json"));
  const auto expect = Json::parse(read_text(fixture("expected_stats.json")));
  CHECK(s["emotion_words_per_text"] == expect["emotion_words_per_text"]);

  REQUIRE(cmd_baseline(fixed_config(dir)) == 0);
  CHECK(count_lines(read_text(dir / "classification.tsv")) == 42);
  const auto m = Json::parse(read_text(dir / "classification_metrics.json"));
  CHECK(m["num_texts"] == 41);
  CHECK(m["precision"] == m["recall"]);

  const auto empty = temp_dir("cli_baseline_empty");
  RunConfig e = fixed_config(empty);
  e.corpus = fixture("empty_corpus.tsv");
  REQUIRE(cmd_baseline(e) == 0);
  const auto tsv = read_text(empty / "classification.tsv");
  CHECK(count_lines(tsv) == 1);
  CHECK(tsv.rfind("index\tgold\tpredicted", 0) == 0);
}

TEST_CASE("error json and the dense budget") {
  const auto j = error_json(ParseError("x.tsv", 4, "bad row"));
  CHECK(j["error"]["kind"] == "parse");
  CHECK(j["error"]["line"] == 4);
  CHECK(error_json(std::runtime_error("boom"))["error"]["kind"] == "internal");

  RunConfig c;
  c.solver.dense_node_threshold = 100000;
  apply_dense_budget(c, 8);  // 8 MiB of doubles is a 1024 x 1024 matrix
  CHECK(c.solver.dense_node_threshold == 1024);
  apply_dense_budget(c, 1024);
  CHECK(c.solver.dense_node_threshold == 1024);
}

TEST_CASE("command line binary") {
  const auto dir = temp_dir("cli_binary");
  const auto err = dir / "err.txt";
  const std::string cfg = "--config " + fixture("mini_config.json");
  CHECK(run_cli("stats " + cfg + " --out " + (dir / "s").string(), err) == 0);
  CHECK(fs::exists(dir / "s" / "stats.json"));

  CHECK(run_cli("expand " + cfg + " --out " + (dir / "e").string() +
                    " --kernel euclidean",
                err) == 1);
  const auto j = Json::parse(read_text(err));
  CHECK(j["error"]["kind"] == "config");

  write_text(dir / "bad.json", R"({"embeddings": "missing.txt", "seed": 1})");
  CHECK(run_cli("expand --config " + (dir / "bad.json").string(), err) == 1);
  CHECK(Json::parse(read_text(err))["error"]["kind"] == "config");

  CHECK(run_cli("frobnicate", err) != 0);
}
