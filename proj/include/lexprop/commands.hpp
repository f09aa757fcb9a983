#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lexprop/hyperopt.hpp"
#include "lexprop/json_io.hpp"
#include "lexprop/lexicon.hpp"
#include "lexprop/propagation_graph.hpp"
#include "lexprop/propagation_solver.hpp"

namespace lexprop {

// Everything a run needs. Loaded from one JSON file; command-line flags
// override individual fields.
struct RunConfig {
  std::string embeddings;
  std::string seed_lexicon;
  std::string corpus;
  std::string lexicon;  // expanded lexicon TSV for `baseline`
  std::string output_dir = "out";
  EmotionSet emotions = EmotionSet::ekman();

  // Fixed parameters (inline or from an `optimize` params file) ...
  std::optional<PropagationParams> params;
  std::string params_file;
  // ... or a fit request. Exactly one of the two is allowed.
  std::optional<OptimizerConfig> fit;
  PropagationParams fit_init;
  // Fixed parameters for the batch row of `evaluate`.
  std::optional<PropagationParams> batch_params;

  SolverOptions solver;
  std::uint64_t seed = 0;
  std::size_t folds = 10;
  std::optional<std::size_t> frequency_floor;
  std::vector<std::size_t> class_counts;
};

RunConfig run_config_from_json(const Json& j);
RunConfig load_run_config(const std::string& path);
Json to_json(const RunConfig& c);

// Caps the dense transition threshold by a memory budget given in MiB
// (the LEXPROP_DENSE_BUDGET_MB environment variable in the CLI).
void apply_dense_budget(RunConfig& config, std::size_t budget_mib);

// Each command validates its inputs before doing any work, writes its
// artifacts under config.output_dir and returns the process exit status.
int cmd_expand(const RunConfig& config);
int cmd_optimize(const RunConfig& config);
int cmd_evaluate(const RunConfig& config);
int cmd_stats(const RunConfig& config);
int cmd_baseline(const RunConfig& config);

// Machine-readable description of a failure.
Json error_json(const std::exception& e);

}  // namespace lexprop
