#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lexprop/lexicon.hpp"
#include "lexprop/propagation_graph.hpp"
#include "lexprop/vocab_embeddings.hpp"

namespace lexprop {

// -sum_ij y_ij ln y_ij over the given rows, with 0 ln 0 = 0.
double entropy(const Eigen::MatrixXd& rows);

// Gradient of the summed prediction entropy. epsilon is differentiated
// through its logit, eps = logistic(epsilon_logit).
struct ParamGradient {
  double alpha = 0.0;
  Eigen::VectorXd alpha_vector;  // empty for scalar alpha
  double bias = 0.0;
  double epsilon_logit = 0.0;

  double norm() const;
};

// Entropy of the unlabeled rows after K clamped propagation sweeps from the
// uniform initialization, as a differentiable function of the cosine-logistic
// kernel parameters. Holds the node subset it was built for, labeled nodes
// first.
class EntropyObjective {
 public:
  // Whole vocabulary.
  EntropyObjective(const EmbeddingStore& store, const LabelMatrix& labels);
  // Subgraph over `nodes` (vocabulary indices).
  EntropyObjective(const EmbeddingStore& store, const LabelMatrix& labels,
                   std::span<const std::size_t> nodes);

  struct Value {
    double entropy = 0.0;
    ParamGradient gradient;
  };

  double entropy(const PropagationParams& params, std::size_t steps) const;
  Value evaluate(const PropagationParams& params, std::size_t steps) const;

  std::size_t size() const { return num_labeled_ + num_unlabeled_; }
  std::size_t num_labeled() const { return num_labeled_; }
  std::size_t num_unlabeled() const { return num_unlabeled_; }

 private:
  struct Forward;
  Forward forward(const PropagationParams& params, std::size_t steps,
                  bool keep_history) const;
  void check(const PropagationParams& params, std::size_t steps) const;

  RowMatrix unit_;        // node order
  Eigen::MatrixXd cos_;   // unit_ * unit_^T
  Eigen::MatrixXd y_labeled_;
  std::size_t num_labeled_ = 0;
  std::size_t num_unlabeled_ = 0;
};

// Convenience wrapper over EntropyObjective for the whole vocabulary.
ParamGradient entropy_gradient(const EmbeddingStore& store,
                               const LabelMatrix& labels,
                               const PropagationParams& params,
                               std::size_t steps);

enum class FitMode { kFull, kBatch };
std::string to_string(FitMode m);
FitMode parse_fit_mode(const std::string& s);

struct OptimizerConfig {
  FitMode mode = FitMode::kFull;
  double learning_rate = 0.5;
  // Multiplicative decay: lr <- lr / (1 + decay) after every epoch (full)
  // or every batch (batch mode).
  double decay = 0.0;
  std::size_t epochs = 100;
  std::size_t unroll_steps = 10;
  std::size_t batch_size = 5000;
  std::size_t num_batches = 1000;
  std::size_t epochs_per_batch = 3;
  std::uint64_t rng_seed = 0;

  bool vector_alpha = false;
  bool train_alpha = true;
  bool train_bias = true;
  bool train_epsilon = true;

  // Full-graph fitting with vector alpha is refused above this many nodes.
  std::size_t max_full_vector_nodes = 8192;
  // Also report the entropy of the exact (closed-form) solution at the end.
  bool exact_final_entropy = false;

  void validate() const;
};

struct TraceRow {
  std::size_t epoch = 0;
  std::size_t batch = 0;  // 0 in full mode
  double entropy = 0.0;       // summed over unlabeled rows
  double mean_entropy = 0.0;  // per unlabeled row; the descent objective
  double grad_norm = 0.0;
  double alpha = 0.0;  // scalar alpha, or the mean of the vector
  double bias = 0.0;
  double epsilon = 0.0;
};

struct OptTrace {
  std::vector<TraceRow> rows;
  double best_mean_entropy = 0.0;
  std::size_t restarts = 0;
  std::optional<double> exact_entropy;
};

struct FitResult {
  PropagationParams params;
  OptTrace trace;
};

// Gradient descent on the mean per-node entropy over the whole graph.
// Returns the lowest-entropy parameters visited. A diverging run (non-finite
// values or entropy rising well above its start) restarts with half the
// learning rate, at most three times.
FitResult fit_full(const EmbeddingStore& store, const SeedLexicon& seed,
                   const EmotionSet& emotions, const OptimizerConfig& config,
                   const PropagationParams& init);

// Sizes of one batch: ceil(W * l / (l + u)) labeled, the rest unlabeled.
struct BatchShape {
  std::size_t labeled = 0;
  std::size_t unlabeled = 0;
};
BatchShape batch_shape(std::size_t batch_size, std::size_t num_labeled,
                       std::size_t num_total);

// Gradient descent on random vocabulary subsets that keep the labeled
// fraction; parameters are shared across batches. Returns the final
// parameters.
FitResult fit_batched(const EmbeddingStore& store, const SeedLexicon& seed,
                      const EmotionSet& emotions, const OptimizerConfig& config,
                      const PropagationParams& init);

// Dispatches on config.mode.
FitResult fit(const EmbeddingStore& store, const SeedLexicon& seed,
              const EmotionSet& emotions, const OptimizerConfig& config,
              const PropagationParams& init);

}  // namespace lexprop
