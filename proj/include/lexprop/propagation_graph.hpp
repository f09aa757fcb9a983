#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lexprop/vocab_embeddings.hpp"

namespace lexprop {

enum class Kernel { kCosineLogistic, kEuclideanRbf };

// How raw weights become a row-stochastic matrix. The default normalizes
// columns first and then rows; kRowOnly skips the column step (ablation).
enum class Normalization { kColumnThenRow, kRowOnly };

std::string to_string(Kernel k);
std::string to_string(Normalization n);
Kernel parse_kernel(const std::string& s);
Normalization parse_normalization(const std::string& s);

struct PropagationParams {
  Kernel kernel = Kernel::kCosineLogistic;
  // Scalar slope. Ignored when alpha_vector is set.
  double alpha = 0.0;
  // Per-dimension slopes over the Hadamard product of unit vectors.
  std::optional<Eigen::VectorXd> alpha_vector;
  double bias = 0.0;
  // Interpolation weight toward the uniform matrix, in [0, 1).
  double epsilon = 0.0;
  // RBF bandwidth (euclidean kernel only).
  double sigma = 0.0;
  Normalization normalization = Normalization::kColumnThenRow;

  bool has_vector_alpha() const { return alpha_vector.has_value(); }

  // Throws ConfigError when the fields do not fit the kernel or `dim`.
  void validate(std::size_t dim) const;
};

// Logistic function evaluated without overflow for any finite z.
double logistic(double z);

// Raw (unnormalized) edge weight between two embedding rows.
double edge_weight(std::span<const double> xi, std::span<const double> xj,
                   const PropagationParams& params);

// Row-stochastic, smoothed transition matrix over nodes ordered labeled
// first, then unlabeled, each group in vocabulary order.
//
// Dense below the node threshold. Above it, only per-node normalizers are
// kept and weight blocks are recomputed whenever the matrix is applied.
class TransitionMatrix {
 public:
  std::size_t size() const { return order_.size(); }
  std::size_t num_labeled() const { return num_labeled_; }
  std::size_t num_unlabeled() const { return size() - num_labeled_; }
  // node position -> vocabulary index
  const std::vector<std::size_t>& order() const { return order_; }
  double epsilon() const { return epsilon_; }
  bool is_dense() const { return dense_.size() > 0 || size() == 0; }

  // Throws if the matrix is streamed.
  const RowMatrix& dense() const;
  auto ll() const { return dense().topLeftCorner(num_labeled_, num_labeled_); }
  auto lu() const {
    return dense().topRightCorner(num_labeled_, num_unlabeled());
  }
  auto ul() const {
    return dense().bottomLeftCorner(num_unlabeled(), num_labeled_);
  }
  auto uu() const {
    return dense().bottomRightCorner(num_unlabeled(), num_unlabeled());
  }

  // Rows U of (T * Y) for Y given in node order (size() x m).
  Eigen::MatrixXd apply_unlabeled(const Eigen::MatrixXd& y) const;

  // Dense row, computed on demand when streamed.
  Eigen::RowVectorXd row(std::size_t node) const;

  // Builds a dense matrix directly from a row-stochastic matrix (tests,
  // cache loading).
  static TransitionMatrix from_dense(RowMatrix t, std::vector<std::size_t> order,
                                     std::size_t num_labeled, double epsilon);

 private:
  friend TransitionMatrix build_transition(const EmbeddingStore&,
                                           const PropagationParams&,
                                           const std::vector<bool>&,
                                           std::size_t);

  Eigen::MatrixXd weight_rows(std::size_t begin, std::size_t end) const;

  std::vector<std::size_t> order_;
  std::size_t num_labeled_ = 0;
  double epsilon_ = 0.0;
  RowMatrix dense_;

  // Streamed representation.
  RowMatrix nodes_;  // embedding rows in node order (unit rows for cosine)
  PropagationParams params_;
  Eigen::VectorXd col_scale_;  // 1 / column sums (or ones for kRowOnly)
  Eigen::VectorXd row_scale_;  // 1 / row sums after column scaling
  std::size_t block_rows_ = 256;
};

inline constexpr std::size_t kDefaultDenseNodeThreshold = 8192;

// Complete graph with self-edges -> normalized -> smoothed by params.epsilon.
// `labeled` is indexed by vocabulary position. Needs at least one labeled and
// one unlabeled node.
TransitionMatrix build_transition(
    const EmbeddingStore& store, const PropagationParams& params,
    const std::vector<bool>& labeled,
    std::size_t dense_node_threshold = kDefaultDenseNodeThreshold);

// epsilon * U + (1 - epsilon) * T with U the uniform matrix.
RowMatrix smooth_transition(const RowMatrix& t, double epsilon);
TransitionMatrix smooth_transition(const TransitionMatrix& t, double epsilon);

// Labeled-first node order for a mask in vocabulary order.
std::vector<std::size_t> labeled_first_order(const std::vector<bool>& labeled,
                                             std::size_t* num_labeled);

// Binary cache of a dense transition matrix. The fingerprint identifies the
// inputs it was built from; loading with a different fingerprint fails.
std::uint64_t transition_fingerprint(const EmbeddingStore& store,
                                     const PropagationParams& params,
                                     const std::vector<bool>& labeled);
void save_transition_cache(const std::string& path, const TransitionMatrix& t,
                           std::uint64_t fingerprint);
std::optional<TransitionMatrix> load_transition_cache(
    const std::string& path, std::uint64_t fingerprint);

// RBF bandwidth from the first Kruskal edge over the complete euclidean
// graph that joins two components holding different labels.
struct MstSigma {
  double sigma = 0.0;
  double d0 = 0.0;
  std::size_t edge_from = 0;
  std::size_t edge_to = 0;
};

// label_ids[i] < 0 marks an unlabeled node.
MstSigma mst_sigma(const EmbeddingStore& store, std::span<const int> label_ids);

// One id per distinct seed distribution; -1 for unlabeled rows.
std::vector<int> distinct_label_ids(const Eigen::MatrixXd& rows,
                                    const std::vector<bool>& labeled);

}  // namespace lexprop
