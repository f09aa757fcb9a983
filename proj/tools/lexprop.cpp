// lexprop: emotion lexicon expansion by label propagation.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "lexprop/commands.hpp"
#include "lexprop/error.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> solver;
  std::optional<std::string> kernel;
  std::optional<std::string> mode;
};

lexprop::RunConfig build_config(const Overrides& o) {
  using namespace lexprop;
  RunConfig c = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (o.seed) {
    c.seed = *o.seed;
    if (c.fit) c.fit->rng_seed = *o.seed;
  }
  if (o.out) c.output_dir = *o.out;
  if (o.solver) c.solver.choice = parse_solver_choice(*o.solver);
  if (o.kernel) {
    const Kernel k = parse_kernel(*o.kernel);
    if (c.params) c.params->kernel = k;
    if (c.batch_params) c.batch_params->kernel = k;
    c.fit_init.kernel = k;
  }
  if (o.mode) {
    if (!c.fit) {
      c.fit.emplace();
      c.fit->rng_seed = c.seed;
    }
    c.fit->mode = parse_fit_mode(*o.mode);
  }
  if (const char* mb = std::getenv("LEXPROP_DENSE_BUDGET_MB")) {
    try {
      apply_dense_budget(c, std::stoull(mb));
    } catch (const std::logic_error&) {
      throw ConfigError(std::string("LEXPROP_DENSE_BUDGET_MB is not a number: ") + mb);
    }
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Emotion lexicon expansion by label propagation"};
  app.require_subcommand(1);
  Overrides o;

  using Command = int (*)(const lexprop::RunConfig&);
  const std::pair<const char*, Command> commands[] = {
      {"expand", lexprop::cmd_expand},
      {"optimize", lexprop::cmd_optimize},
      {"evaluate", lexprop::cmd_evaluate},
      {"stats", lexprop::cmd_stats},
      {"baseline", lexprop::cmd_baseline},
  };
  const char* help[] = {
      "Expand the seed lexicon over the embedding vocabulary",
      "Fit propagation parameters by entropy minimization",
      "Cross-validate label propagation against the baselines",
      "Lexicon and corpus statistics",
      "Count-based classification of a corpus",
  };
  Command chosen = nullptr;
  for (std::size_t i = 0; i < std::size(commands); ++i) {
    CLI::App* sub = app.add_subcommand(commands[i].first, help[i]);
    sub->add_option("--config", o.config, "JSON run configuration");
    sub->add_option("--seed", o.seed, "RNG seed");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--solver", o.solver, "Solver")
        ->check(CLI::IsMember({"auto", "iterative", "closed"}));
    sub->add_option("--kernel", o.kernel, "Edge kernel")
        ->check(CLI::IsMember({"cosine", "euclidean"}));
    sub->add_option("--mode", o.mode, "Fit mode")
        ->check(CLI::IsMember({"full", "batch"}));
    sub->callback([&chosen, fn = commands[i].second] { chosen = fn; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    return chosen(build_config(o));
  } catch (const std::exception& e) {
    std::cerr << lexprop::error_json(e).dump() << '\n';
    return 1;
  }
}
