#include "lexprop/vocab_embeddings.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "lexprop/error.hpp"
#include "text_util.hpp"

namespace lexprop {

Vocabulary::Vocabulary(std::vector<std::string> words) {
  for (auto& w : words) add(std::move(w));
}

std::size_t Vocabulary::add(std::string token) {
  if (index_.contains(token)) {
    throw InvalidArgument("duplicate token '" + token + "'");
  }
  const std::size_t id = words_.size();
  index_.emplace(token, id);
  words_.push_back(std::move(token));
  return id;
}

std::optional<std::size_t> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

EmbeddingStore::EmbeddingStore(Vocabulary vocab, RowMatrix vectors)
    : vocab_(std::move(vocab)), vectors_(std::move(vectors)) {
  if (static_cast<std::size_t>(vectors_.rows()) != vocab_.size()) {
    throw InvalidArgument("embedding row count does not match vocabulary");
  }
  if (vectors_.cols() == 0) throw InvalidArgument("embedding dim must be > 0");
  unit_.resize(vectors_.rows(), vectors_.cols());
  for (Eigen::Index i = 0; i < vectors_.rows(); ++i) {
    if (!vectors_.row(i).allFinite()) {
      throw InvalidArgument("non-finite component in vector for '" +
                            vocab_.word(i) + "'");
    }
    const double norm = vectors_.row(i).norm();
    if (norm == 0.0) {
      throw InvalidArgument("zero vector for '" + vocab_.word(i) + "'");
    }
    unit_.row(i) = vectors_.row(i) / norm;
  }
}

void EmbeddingStore::check_index(std::size_t i) const {
  if (i >= size()) {
    throw InvalidArgument("word index " + std::to_string(i) +
                          " out of range (size " + std::to_string(size()) +
                          ")");
  }
}

double EmbeddingStore::cosine(std::size_t i, std::size_t j) const {
  check_index(i);
  check_index(j);
  const double* a = unit_.row(i).data();
  const double* b = unit_.row(j).data();
  double dot = 0.0;
  for (std::size_t k = 0; k < dim(); ++k) dot += a[k] * b[k];
  return dot;
}

Eigen::MatrixXd EmbeddingStore::cosine_block(IndexRange rows,
                                             IndexRange cols) const {
  if (rows.size() == 0 || cols.size() == 0) {
    throw InvalidArgument("cosine_block: empty range");
  }
  if (rows.end > size() || cols.end > size()) {
    throw InvalidArgument("cosine_block: range exceeds vocabulary");
  }
  Eigen::MatrixXd block(rows.size(), cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      block(r, c) = cosine(rows.begin + r, cols.begin + c);
    }
  }
  return block;
}

EmbeddingStore EmbeddingStore::select(
    std::span<const std::size_t> indices) const {
  Vocabulary vocab;
  RowMatrix rows(indices.size(), vectors_.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    check_index(indices[r]);
    vocab.add(vocab_.word(indices[r]));
    rows.row(r) = vectors_.row(indices[r]);
  }
  return EmbeddingStore(std::move(vocab), std::move(rows));
}

EmbeddingStore load_embeddings(const std::string& path,
                               const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open embeddings file");
  if (options.frequency_floor && !options.frequencies) {
    throw ConfigError("frequency_floor requires a frequency table");
  }

  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw ParseError(path, 1, "missing header");
  strip_cr(line);
  const auto header = split_ws(line);
  std::size_t count = 0;
  std::size_t dim = 0;
  if (header.size() != 2 || !parse_size(header[0], count) ||
      !parse_size(header[1], dim) || dim == 0) {
    throw ParseError(path, 1, "malformed header, expected \"<count> <dim>\"");
  }

  Vocabulary vocab;
  std::vector<double> values;
  std::unordered_set<std::string> seen;
  std::size_t rows_read = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    const auto fields = split_ws(line);
    if (fields.empty()) continue;
    ++rows_read;
    if (fields.size() != dim + 1) {
      throw ParseError(path, lineno,
                       "expected " + std::to_string(dim) + " components, got " +
                           std::to_string(fields.size() - 1));
    }
    std::string token = options.normalize ? options.normalize(fields[0])
                                          : std::string(fields[0]);
    if (!seen.insert(token).second) {
      throw ParseError(path, lineno, "duplicate token '" + token + "'");
    }
    std::vector<double> row(dim);
    double sq = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      if (!parse_double(fields[k + 1], row[k])) {
        throw ParseError(path, lineno, "bad number '" +
                                           std::string(fields[k + 1]) + "'");
      }
      if (!std::isfinite(row[k])) {
        throw ParseError(path, lineno, "non-finite component");
      }
      sq += row[k] * row[k];
    }
    if (sq == 0.0) throw ParseError(path, lineno, "zero vector");

    if (options.vocab_filter && !options.vocab_filter->contains(token)) {
      continue;
    }
    if (options.frequency_floor) {
      auto it = options.frequencies->find(token);
      const std::size_t freq = it == options.frequencies->end() ? 0 : it->second;
      if (freq < *options.frequency_floor) continue;
    }
    vocab.add(std::move(token));
    values.insert(values.end(), row.begin(), row.end());
  }
  if (rows_read != count) {
    throw ParseError(path, 1,
                     "header announces " + std::to_string(count) +
                         " words but file has " + std::to_string(rows_read));
  }

  RowMatrix vectors =
      Eigen::Map<RowMatrix>(values.data(), static_cast<Eigen::Index>(vocab.size()),
                            static_cast<Eigen::Index>(dim));
  return EmbeddingStore(std::move(vocab), std::move(vectors));
}

}  // namespace lexprop
