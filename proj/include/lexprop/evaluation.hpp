#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lexprop/lexicon.hpp"
#include "lexprop/propagation_graph.hpp"
#include "lexprop/propagation_solver.hpp"
#include "lexprop/vocab_embeddings.hpp"

namespace lexprop {

inline constexpr double kKlFloor = 1e-12;

// KL(gold || predicted) in nats, predicted components floored at 1e-12.
double kl_divergence(std::span<const double> gold,
                     std::span<const double> predicted);

// Seeded shuffle, then round-robin fold assignment.
struct FoldPlan {
  std::size_t k = 0;
  std::uint64_t rng_seed = 0;
  std::vector<std::string> tokens;
  std::vector<std::size_t> fold;  // parallel to tokens

  std::vector<std::string> members(std::size_t f) const;
};

FoldPlan make_folds(std::vector<std::string> tokens, std::size_t k,
                    std::uint64_t rng_seed);

// What an expander sees for one fold: the graph, the training part of the
// seed, and the hidden tokens it must predict.
struct ExpansionTask {
  const EmbeddingStore& store;
  const SeedLexicon& train_seed;
  const EmotionSet& emotions;
  std::span<const std::string> targets;
};

// One predicted distribution per target, in target order.
using Expander =
    std::function<std::vector<Distribution>(const ExpansionTask& task)>;

Expander label_propagation_expander(PropagationParams params,
                                    SolverOptions options = {});

enum class BaselineKind { kUniform, kMajority, kPrior };
std::string to_string(BaselineKind k);

struct Baseline {
  BaselineKind kind = BaselineKind::kUniform;
  Distribution distribution;
  // Majority only: several classes share the top count; the first in
  // emotion order won.
  bool tie = false;

  Expander expander() const;
};

// class_counts may be empty for kUniform (num_classes is then required).
Baseline baseline_expander(BaselineKind kind,
                           std::span<const std::size_t> class_counts,
                           std::size_t num_classes = 0);

struct EvalReport {
  std::string method;
  std::size_t k = 0;
  std::uint64_t rng_seed = 0;
  std::vector<double> fold_kl;  // mean over the words of each fold
  double mean_kl = 0.0;         // mean of the fold means
  double pooled_kl = 0.0;       // mean over all held-out words
  std::size_t num_scored = 0;
  std::optional<PropagationParams> params;
};

// k-fold cross-validation over the seed tokens present in the vocabulary.
EvalReport cross_validate(const EmbeddingStore& store, const SeedLexicon& seed,
                          const EmotionSet& emotions, const Expander& expander,
                          std::size_t k, std::uint64_t rng_seed,
                          std::string method);

// Same, with the fold evaluation order given explicitly (a permutation of
// 0..k-1). Used to check order independence.
EvalReport cross_validate(const EmbeddingStore& store, const SeedLexicon& seed,
                          const EmotionSet& emotions, const Expander& expander,
                          std::size_t k, std::uint64_t rng_seed,
                          std::string method,
                          std::span<const std::size_t> fold_order);

// Fixed-width table, one row per method.
std::string format_eval_table(std::span<const EvalReport> reports);

struct CountResult {
  Distribution distribution;
  std::size_t hits = 0;
  bool no_evidence = false;
};

// Sums the lexicon distributions of the tokens found in the lexicon and
// normalizes; no hits gives the uniform distribution with no_evidence set.
CountResult count_classify(std::span<const std::string> tokens,
                           const DistributionLexicon& lexicon,
                           std::size_t num_classes);

// Index of the largest component; ties go to the lowest index.
std::size_t argmax(std::span<const double> dist);

struct CorpusText {
  std::size_t label = 0;
  std::vector<std::string> tokens;
};

// "label<TAB>text" rows, text split on whitespace.
std::vector<CorpusText> load_corpus(const std::string& path,
                                    const EmotionSet& emotions);

std::unordered_map<std::string, std::size_t> token_frequencies(
    std::span<const CorpusText> corpus);

struct ClassificationReport {
  std::vector<std::size_t> predicted;
  std::vector<CountResult> results;
  std::size_t correct = 0;
  std::size_t no_evidence = 0;
  // Single-label with every text classified: micro P = R = F1 = accuracy.
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

ClassificationReport classify_corpus(std::span<const CorpusText> corpus,
                                     const DistributionLexicon& lexicon,
                                     std::size_t num_classes);

struct TopWord {
  std::string token;
  std::size_t frequency = 0;
  Flags flags;
};

struct CorpusStats {
  std::size_t num_texts = 0;
  std::size_t num_lexicon_words = 0;
  std::vector<std::size_t> corpus_class_counts;   // texts per class
  std::vector<std::size_t> lexicon_class_counts;  // lemmas per class
  std::vector<std::size_t> labels_per_lemma;      // index = #labels, 0..m
  std::size_t lemmas_with_labels = 0;
  double average_labels_per_lemma = 0.0;
  // Emotion-word occurrences per text: buckets 0..6, last bucket "> 6".
  std::vector<std::size_t> emotion_words_per_text;
  double mean_emotion_words_per_text = 0.0;
  std::size_t texts_without_emotion_words = 0;
  std::size_t emotion_word_occurrences = 0;
  std::size_t emotion_lemmas_in_corpus = 0;
  // Occurrences divided by the number of lexicon words with >= 1 label.
  double average_emotion_word_frequency = 0.0;
  std::vector<TopWord> top_words;
};

inline constexpr std::size_t kTextHistogramCap = 6;

CorpusStats corpus_lexicon_stats(std::span<const CorpusText> corpus,
                                 const LexiconFlags& lexicon,
                                 std::size_t num_classes,
                                 std::size_t top_n = 10);

std::string format_stats(const CorpusStats& stats, const EmotionSet& emotions);

}  // namespace lexprop
