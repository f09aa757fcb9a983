#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lexprop/vocab_embeddings.hpp"

namespace lexprop {

using Distribution = std::vector<double>;
using Flags = std::vector<std::uint8_t>;

// Ordered, non-empty list of unique class names. The order fixes the
// component order of every distribution in a run.
class EmotionSet {
 public:
  explicit EmotionSet(std::vector<std::string> names);

  // anger, disgust, fear, joy, sadness, surprise
  static EmotionSet ekman();

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(std::size_t k) const { return names_.at(k); }
  std::optional<std::size_t> find(std::string_view name) const;

  bool operator==(const EmotionSet& other) const {
    return names_ == other.names_;
  }

 private:
  std::vector<std::string> names_;
};

// Every token of a flag-format lexicon file, neutral ones included, in
// first-seen order. Flags are restricted to the emotion set.
struct LexiconFlags {
  std::vector<std::string> tokens;
  std::vector<Flags> flags;
};

// Rows "token<TAB>emotion<TAB>{0|1}". Emotions outside the set are ignored;
// contradictory duplicates are an error.
LexiconFlags load_lexicon_flags(const std::string& path,
                                const EmotionSet& emotions);

// Uniform mass over the positive classes.
Distribution seed_to_distribution(std::span<const std::uint8_t> flags);

struct SeedEntry {
  std::string token;
  Flags flags;  // empty when the entry was given as an explicit distribution
  Distribution distribution;
};

// The labeled set: tokens with at least one positive class.
class SeedLexicon {
 public:
  SeedLexicon() = default;
  explicit SeedLexicon(std::size_t num_classes) : num_classes_(num_classes) {}

  // Drops all-zero rows (neutral words).
  static SeedLexicon from_flags(const LexiconFlags& table,
                                std::size_t num_classes);

  void add_flags(std::string token, Flags flags);
  void add_distribution(std::string token, Distribution dist);

  const SeedEntry* find(std::string_view token) const;
  const std::vector<SeedEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t num_classes() const { return num_classes_; }

  // Copy without the listed tokens.
  SeedLexicon without(std::span<const std::string> tokens) const;
  // Copy restricted to tokens present in `vocab`, in lexicon order.
  SeedLexicon restricted_to(const Vocabulary& vocab) const;

 private:
  void insert(SeedEntry entry);

  std::size_t num_classes_ = 0;
  std::vector<SeedEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

SeedLexicon load_seed_lexicon(const std::string& path,
                              const EmotionSet& emotions);

// Writes flag entries back in the input TSV format (one row per class).
void write_seed_lexicon(const std::string& path, const SeedLexicon& seed,
                        const EmotionSet& emotions);

// (l+u) x m distributions plus the labeled mask, in vocabulary order.
struct LabelMatrix {
  Eigen::MatrixXd rows;
  std::vector<bool> labeled;

  std::size_t size() const { return labeled.size(); }
  std::size_t num_labeled() const;
  // Throws NumericalError unless every row is a distribution within `tol`.
  void check_stochastic(double tol = 1e-9) const;
};

struct LabelInit {
  LabelMatrix labels;
  std::size_t missing_seed_tokens = 0;
};

LabelInit init_label_matrix(const Vocabulary& vocab, const SeedLexicon& seed,
                            const EmotionSet& emotions);

// token -> distribution table used for output and for count classification.
struct LexiconRow {
  std::string token;
  Distribution distribution;
  bool seed = false;
};

class DistributionLexicon {
 public:
  void add(LexiconRow row);
  const LexiconRow* find(std::string_view token) const;
  const std::vector<LexiconRow>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }

 private:
  std::vector<LexiconRow> rows_;
  std::unordered_map<std::string, std::size_t> index_;
};

DistributionLexicon to_distribution_lexicon(const SeedLexicon& seed);

// "token<TAB>e1<TAB>...<TAB>em<TAB>origin" with a header row; origin is
// "seed" or "propagated".
void write_lexicon_tsv(const std::string& path, const EmotionSet& emotions,
                       const DistributionLexicon& lexicon);
void write_lexicon_json(const std::string& path, const EmotionSet& emotions,
                        const DistributionLexicon& lexicon);

struct LoadedLexicon {
  EmotionSet emotions;
  DistributionLexicon lexicon;
};
LoadedLexicon read_lexicon_tsv(const std::string& path);

}  // namespace lexprop
