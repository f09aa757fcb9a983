#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace lexprop {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Ordered set of unique tokens. Index order is insertion order.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> words);

  // Appends `token`; throws InvalidArgument if it is already present.
  std::size_t add(std::string token);

  std::optional<std::size_t> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }
  const std::string& word(std::size_t i) const { return words_.at(i); }
  const std::vector<std::string>& words() const { return words_; }
  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const {
      return std::hash<std::string_view>{}(s);
    }
  };
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t, Hash, std::equal_to<>> index_;
};

// Half-open index range [begin, end).
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end > begin ? end - begin : 0; }
};

// Dense word vectors keyed by a Vocabulary. Immutable after construction;
// unit-normalized rows are computed once up front.
class EmbeddingStore {
 public:
  // Validates shape, finiteness and non-zero norm of every row.
  EmbeddingStore(Vocabulary vocab, RowMatrix vectors);

  const Vocabulary& vocab() const { return vocab_; }
  std::size_t size() const { return vocab_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(vectors_.cols()); }

  const RowMatrix& vectors() const { return vectors_; }
  const RowMatrix& unit_vectors() const { return unit_; }

  double cosine(std::size_t i, std::size_t j) const;

  // block(r, c) == cosine(rows.begin + r, cols.begin + c), bit for bit.
  Eigen::MatrixXd cosine_block(IndexRange rows, IndexRange cols) const;

  // New store holding the given rows, in the given order.
  EmbeddingStore select(std::span<const std::size_t> indices) const;

 private:
  void check_index(std::size_t i) const;

  Vocabulary vocab_;
  RowMatrix vectors_;
  RowMatrix unit_;
};

struct LoadOptions {
  // Tokens whose corpus frequency is below the floor are skipped. Requires
  // `frequencies`; tokens absent from it count as frequency 0.
  std::optional<std::size_t> frequency_floor;
  const std::unordered_map<std::string, std::size_t>* frequencies = nullptr;
  // When set, only these tokens are kept (matched after normalization).
  std::optional<std::unordered_set<std::string>> vocab_filter;
  // Optional token rewrite applied before duplicate detection and filtering.
  std::function<std::string(std::string_view)> normalize;
};

// Reads the word2vec text format: "<count> <dim>" header, then one
// "token v1 ... vd" line per word. LF and CRLF line endings are accepted.
EmbeddingStore load_embeddings(const std::string& path,
                               const LoadOptions& options = {});

}  // namespace lexprop
