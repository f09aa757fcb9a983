#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "lexprop/lexicon.hpp"
#include "lexprop/propagation_graph.hpp"
#include "lexprop/vocab_embeddings.hpp"

namespace lexprop {

enum class SolveMethod { kIterative, kClosedForm };
enum class SolverChoice { kAuto, kIterative, kClosedForm };

std::string to_string(SolveMethod m);
SolverChoice parse_solver_choice(const std::string& s);

struct SolveReport {
  SolveMethod method = SolveMethod::kIterative;
  std::size_t iterations = 0;
  // Max-abs change of Y_U on the last sweep (iterative only).
  double final_delta = 0.0;
  // Max-abs of Y_U - T_uu Y_U - T_ul Y_L at the returned solution.
  double residual = 0.0;
  bool converged = true;
  // Reciprocal condition estimate of I - T_uu (closed form only).
  double rcond = 0.0;
};

struct SolverOptions {
  SolverChoice choice = SolverChoice::kAuto;
  double tol = 1e-6;
  std::size_t max_iter = 1000;
  // kAuto uses the closed form up to this many unlabeled nodes.
  std::size_t closed_form_max_unlabeled = 2000;
  double min_rcond = 1e-12;
  std::size_t dense_node_threshold = kDefaultDenseNodeThreshold;
  // When set, dense transition matrices are reused from / saved to this file.
  std::string transition_cache;
};

struct Solution {
  LabelMatrix labels;  // vocabulary order
  SolveReport report;
};

// Clamped fixed-point sweeps Y_U <- T_uu Y_U + T_ul Y_L starting from the
// given Y. Rows are renormalized after every sweep. Stops once the max-abs
// change drops below tol; hitting max_iter returns the last iterate with
// report.converged = false.
Solution propagate_iterative(const TransitionMatrix& t, const LabelMatrix& y,
                             double tol, std::size_t max_iter);

// Solves (I - T_uu) Y_U = T_ul Y_L by LU factorization.
Solution propagate_closed_form(const TransitionMatrix& t, const LabelMatrix& y,
                               double min_rcond = 1e-12);

struct ExpansionResult {
  EmotionSet emotions = EmotionSet::ekman();
  std::vector<std::string> tokens;  // vocabulary order
  Eigen::MatrixXd distributions;
  std::vector<bool> labeled;
  PropagationParams params;  // sigma filled in when derived from the MST
  std::optional<SolveReport> report;  // empty when there is nothing to solve
  std::size_t missing_seed_tokens = 0;

  DistributionLexicon to_lexicon() const;
};

// End to end: label init, transition build, solve. Seed rows pass through
// unchanged. A euclidean kernel with sigma == 0 gets its bandwidth from
// mst_sigma.
ExpansionResult expand(const EmbeddingStore& store, const SeedLexicon& seed,
                       const EmotionSet& emotions, PropagationParams params,
                       const SolverOptions& options = {});

}  // namespace lexprop
