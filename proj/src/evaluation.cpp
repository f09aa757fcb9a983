#include "lexprop/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "lexprop/error.hpp"
#include "text_util.hpp"

namespace lexprop {

namespace {

void check_distribution(std::span<const double> p, const char* which) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InvalidArgument(std::string("kl_divergence: ") + which +
                            " has a negative or non-finite component");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw InvalidArgument(std::string("kl_divergence: ") + which +
                          " sums to " + format_double(sum));
  }
}

}  // namespace

double kl_divergence(std::span<const double> gold,
                     std::span<const double> predicted) {
  if (gold.size() != predicted.size()) {
    throw InvalidArgument("kl_divergence: length mismatch");
  }
  check_distribution(gold, "gold");
  check_distribution(predicted, "prediction");
  double kl = 0.0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] == 0.0) continue;
    kl += gold[i] * std::log(gold[i] / std::max(predicted[i], kKlFloor));
  }
  return std::max(kl, 0.0);
}

std::vector<std::string> FoldPlan::members(std::size_t f) const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (fold[i] == f) out.push_back(tokens[i]);
  }
  return out;
}

FoldPlan make_folds(std::vector<std::string> tokens, std::size_t k,
                    std::uint64_t rng_seed) {
  if (k == 0) throw ConfigError("fold count must be >= 1");
  if (tokens.size() < k) {
    throw ConfigError("cross-validation needs at least " + std::to_string(k) +
                      " seed tokens, got " + std::to_string(tokens.size()));
  }
  std::mt19937_64 rng(rng_seed);
  for (std::size_t i = tokens.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(tokens[i - 1], tokens[pick(rng)]);
  }
  FoldPlan plan;
  plan.k = k;
  plan.rng_seed = rng_seed;
  plan.fold.resize(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) plan.fold[i] = i % k;
  plan.tokens = std::move(tokens);
  return plan;
}

Expander label_propagation_expander(PropagationParams params,
                                    SolverOptions options) {
  return [params = std::move(params),
          options](const ExpansionTask& task) -> std::vector<Distribution> {
    const ExpansionResult r =
        expand(task.store, task.train_seed, task.emotions, params, options);
    std::vector<Distribution> out;
    out.reserve(task.targets.size());
    for (const auto& token : task.targets) {
      const auto i = task.store.vocab().find(token);
      if (!i) throw InvalidArgument("target '" + token + "' is not a node");
      const auto row = r.distributions.row(static_cast<Eigen::Index>(*i));
      out.emplace_back(row.begin(), row.end());
    }
    return out;
  };
}

std::string to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::kUniform:
      return "uniform";
    case BaselineKind::kMajority:
      return "majority";
    case BaselineKind::kPrior:
      return "prior";
  }
  return "?";
}

Expander Baseline::expander() const {
  return [dist = distribution](const ExpansionTask& task) {
    return std::vector<Distribution>(task.targets.size(), dist);
  };
}

Baseline baseline_expander(BaselineKind kind,
                           std::span<const std::size_t> class_counts,
                           std::size_t num_classes) {
  Baseline b;
  b.kind = kind;
  if (kind == BaselineKind::kUniform) {
    const std::size_t m = num_classes ? num_classes : class_counts.size();
    if (m == 0) throw InvalidArgument("uniform baseline needs a class count");
    b.distribution.assign(m, 1.0 / static_cast<double>(m));
    return b;
  }
  const std::size_t total =
      std::accumulate(class_counts.begin(), class_counts.end(), std::size_t{0});
  if (class_counts.empty() || total == 0) {
    throw InvalidArgument(to_string(kind) + " baseline needs class counts");
  }
  b.distribution.assign(class_counts.size(), 0.0);
  if (kind == BaselineKind::kMajority) {
    const auto top = std::max_element(class_counts.begin(), class_counts.end());
    b.distribution[static_cast<std::size_t>(top - class_counts.begin())] = 1.0;
    b.tie = std::count(class_counts.begin(), class_counts.end(), *top) > 1;
  } else {
    for (std::size_t k = 0; k < class_counts.size(); ++k) {
      b.distribution[k] =
          static_cast<double>(class_counts[k]) / static_cast<double>(total);
    }
  }
  return b;
}

EvalReport cross_validate(const EmbeddingStore& store, const SeedLexicon& seed,
                          const EmotionSet& emotions, const Expander& expander,
                          std::size_t k, std::uint64_t rng_seed,
                          std::string method) {
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  return cross_validate(store, seed, emotions, expander, k, rng_seed,
                        std::move(method), order);
}

EvalReport cross_validate(const EmbeddingStore& store, const SeedLexicon& seed,
                          const EmotionSet& emotions, const Expander& expander,
                          std::size_t k, std::uint64_t rng_seed,
                          std::string method,
                          std::span<const std::size_t> fold_order) {
  const SeedLexicon usable = seed.restricted_to(store.vocab());
  std::vector<std::string> tokens;
  tokens.reserve(usable.size());
  for (const auto& e : usable.entries()) tokens.push_back(e.token);
  const FoldPlan plan = make_folds(std::move(tokens), k, rng_seed);

  {
    std::vector<std::size_t> sorted(fold_order.begin(), fold_order.end());
    std::sort(sorted.begin(), sorted.end());
    bool ok = sorted.size() == k;
    for (std::size_t i = 0; ok && i < sorted.size(); ++i) ok = sorted[i] == i;
    if (!ok) throw InvalidArgument("fold order must be a permutation of 0..k-1");
  }

  EvalReport report;
  report.method = std::move(method);
  report.k = k;
  report.rng_seed = rng_seed;
  report.fold_kl.assign(k, 0.0);
  std::vector<double> fold_sum(k, 0.0);
  std::vector<std::size_t> fold_count(k, 0);
  for (std::size_t f : fold_order) {
    const auto hidden = plan.members(f);
    const SeedLexicon train = usable.without(hidden);
    std::vector<Distribution> predicted;
    try {
      predicted = expander(ExpansionTask{store, train, emotions, hidden});
    } catch (const std::exception& e) {
      throw Error("expander failed on fold " + std::to_string(f) + ": " +
                  e.what());
    }
    if (predicted.size() != hidden.size()) {
      throw Error("expander returned the wrong number of predictions on fold " +
                  std::to_string(f));
    }
    for (std::size_t i = 0; i < hidden.size(); ++i) {
      fold_sum[f] += kl_divergence(usable.find(hidden[i])->distribution,
                                   predicted[i]);
    }
    fold_count[f] = hidden.size();
  }
  // Aggregate in fold-index order so the result does not depend on the
  // evaluation order.
  double mean = 0.0;
  double pooled = 0.0;
  for (std::size_t f = 0; f < k; ++f) {
    report.fold_kl[f] = fold_sum[f] / static_cast<double>(fold_count[f]);
    mean += report.fold_kl[f];
    pooled += fold_sum[f];
    report.num_scored += fold_count[f];
  }
  report.mean_kl = mean / static_cast<double>(k);
  report.pooled_kl = pooled / static_cast<double>(report.num_scored);
  return report;
}

std::string format_eval_table(std::span<const EvalReport> reports) {
  std::size_t width = std::string("Lexicon expansion").size();
  for (const auto& r : reports) width = std::max(width, r.method.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-*s  %13s  %13s\n", static_cast<int>(width),
                "Lexicon expansion", "KL divergence", "KL (pooled)");
  out += buf;
  out += std::string(width + 30, '-') + '\n';
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof(buf), "%-*s  %13.4f  %13.4f\n",
                  static_cast<int>(width), r.method.c_str(), r.mean_kl,
                  r.pooled_kl);
    out += buf;
  }
  return out;
}

CountResult count_classify(std::span<const std::string> tokens,
                           const DistributionLexicon& lexicon,
                           std::size_t num_classes) {
  CountResult r;
  r.distribution.assign(num_classes, 0.0);
  for (const auto& t : tokens) {
    const LexiconRow* row = lexicon.find(t);
    if (!row) continue;
    if (row->distribution.size() != num_classes) {
      throw InvalidArgument("lexicon entry '" + t +
                            "' has the wrong number of classes");
    }
    ++r.hits;
    for (std::size_t k = 0; k < num_classes; ++k) {
      r.distribution[k] += row->distribution[k];
    }
  }
  const double total =
      std::accumulate(r.distribution.begin(), r.distribution.end(), 0.0);
  if (r.hits == 0 || !(total > 0.0)) {
    r.no_evidence = true;
    r.distribution.assign(num_classes, 1.0 / static_cast<double>(num_classes));
    return r;
  }
  for (double& p : r.distribution) p /= total;
  return r;
}

std::size_t argmax(std::span<const double> dist) {
  if (dist.empty()) throw InvalidArgument("argmax of an empty distribution");
  return static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) -
                                  dist.begin());
}

std::vector<CorpusText> load_corpus(const std::string& path,
                                    const EmotionSet& emotions) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open corpus file");
  std::vector<CorpusText> corpus;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError(path, lineno, "expected \"label<TAB>text\"");
    }
    const std::string_view label(line.data(), tab);
    const auto k = emotions.find(label);
    if (!k) {
      throw ParseError(path, lineno,
                       "unknown label '" + std::string(label) + "'");
    }
    CorpusText text;
    text.label = *k;
    for (auto tok : split_ws(std::string_view(line).substr(tab + 1))) {
      text.tokens.emplace_back(tok);
    }
    corpus.push_back(std::move(text));
  }
  return corpus;
}

std::unordered_map<std::string, std::size_t> token_frequencies(
    std::span<const CorpusText> corpus) {
  std::unordered_map<std::string, std::size_t> freq;
  for (const auto& text : corpus) {
    for (const auto& t : text.tokens) ++freq[t];
  }
  return freq;
}

ClassificationReport classify_corpus(std::span<const CorpusText> corpus,
                                     const DistributionLexicon& lexicon,
                                     std::size_t num_classes) {
  ClassificationReport rep;
  for (const auto& text : corpus) {
    CountResult r = count_classify(text.tokens, lexicon, num_classes);
    const std::size_t pred = argmax(r.distribution);
    rep.predicted.push_back(pred);
    if (pred == text.label) ++rep.correct;
    if (r.no_evidence) ++rep.no_evidence;
    rep.results.push_back(std::move(r));
  }
  if (!corpus.empty()) {
    rep.precision =
        static_cast<double>(rep.correct) / static_cast<double>(corpus.size());
    rep.recall = rep.precision;
    rep.f1 = rep.precision;
  }
  return rep;
}

CorpusStats corpus_lexicon_stats(std::span<const CorpusText> corpus,
                                 const LexiconFlags& lexicon,
                                 std::size_t num_classes, std::size_t top_n) {
  CorpusStats s;
  s.num_texts = corpus.size();
  s.num_lexicon_words = lexicon.tokens.size();
  s.corpus_class_counts.assign(num_classes, 0);
  s.lexicon_class_counts.assign(num_classes, 0);
  s.labels_per_lemma.assign(num_classes + 1, 0);
  s.emotion_words_per_text.assign(kTextHistogramCap + 2, 0);

  std::unordered_map<std::string, std::size_t> emotion_words;
  std::size_t total_labels = 0;
  for (std::size_t i = 0; i < lexicon.tokens.size(); ++i) {
    std::size_t labels = 0;
    for (std::size_t k = 0; k < num_classes; ++k) {
      if (lexicon.flags[i][k]) {
        ++labels;
        ++s.lexicon_class_counts[k];
      }
    }
    ++s.labels_per_lemma[labels];
    total_labels += labels;
    if (labels > 0) emotion_words.emplace(lexicon.tokens[i], i);
  }
  s.lemmas_with_labels = emotion_words.size();
  if (s.num_lexicon_words > 0) {
    s.average_labels_per_lemma = static_cast<double>(total_labels) /
                                 static_cast<double>(s.num_lexicon_words);
  }

  std::vector<std::size_t> freq(lexicon.tokens.size(), 0);
  for (const auto& text : corpus) {
    if (text.label >= num_classes) throw InvalidArgument("corpus label out of range");
    ++s.corpus_class_counts[text.label];
    std::size_t hits = 0;
    for (const auto& t : text.tokens) {
      auto it = emotion_words.find(t);
      if (it == emotion_words.end()) continue;
      ++hits;
      ++freq[it->second];
    }
    s.emotion_word_occurrences += hits;
    ++s.emotion_words_per_text[std::min(hits, kTextHistogramCap + 1)];
    if (hits == 0) ++s.texts_without_emotion_words;
  }
  if (s.num_texts > 0) {
    s.mean_emotion_words_per_text = static_cast<double>(s.emotion_word_occurrences) /
                                    static_cast<double>(s.num_texts);
  }
  if (s.lemmas_with_labels > 0) {
    s.average_emotion_word_frequency =
        static_cast<double>(s.emotion_word_occurrences) /
        static_cast<double>(s.lemmas_with_labels);
  }

  std::vector<std::size_t> used;
  for (std::size_t i = 0; i < freq.size(); ++i) {
    if (freq[i] > 0) used.push_back(i);
  }
  s.emotion_lemmas_in_corpus = used.size();
  std::stable_sort(used.begin(), used.end(), [&](std::size_t a, std::size_t b) {
    return freq[a] > freq[b];
  });
  for (std::size_t r = 0; r < std::min(top_n, used.size()); ++r) {
    const std::size_t i = used[r];
    s.top_words.push_back({lexicon.tokens[i], freq[i], lexicon.flags[i]});
  }
  return s;
}

std::string format_stats(const CorpusStats& s, const EmotionSet& emotions) {
  std::string out;
  char buf[256];
  auto line = [&](const char* fmt, auto... args) {
    std::snprintf(buf, sizeof(buf), fmt, args...);
    out += buf;
  };
  line("Lexicon class distribution (%zu words)\n", s.num_lexicon_words);
  line("%-12s %10s\n", "label", "# lemmas");
  for (std::size_t k = 0; k < emotions.size(); ++k) {
    line("%-12s %10zu\n", emotions.name(k).c_str(), s.lexicon_class_counts[k]);
  }
  line("\nCorpus class distribution (%zu texts)\n", s.num_texts);
  line("%-12s %10s\n", "label", "# texts");
  for (std::size_t k = 0; k < emotions.size(); ++k) {
    line("%-12s %10zu\n", emotions.name(k).c_str(), s.corpus_class_counts[k]);
  }
  out += "\nLabels per lexicon word\n";
  line("%-12s %10s\n", "# labels", "# lemmas");
  for (std::size_t k = 0; k < s.labels_per_lemma.size(); ++k) {
    line("%-12zu %10zu\n", k, s.labels_per_lemma[k]);
  }
  line("%-12s %10zu\n", "> 0", s.lemmas_with_labels);
  line("average labels per lemma: %.4f\n", s.average_labels_per_lemma);
  out += "\nEmotion words per text\n";
  line("%-12s %10s\n", "# lemmas", "# texts");
  for (std::size_t k = 0; k <= kTextHistogramCap; ++k) {
    line("%-12zu %10zu\n", k, s.emotion_words_per_text[k]);
  }
  line("%-12s %10zu\n", "> 6", s.emotion_words_per_text[kTextHistogramCap + 1]);
  line("mean emotion words per text: %.4f\n", s.mean_emotion_words_per_text);
  line("texts without emotion words: %zu\n", s.texts_without_emotion_words);
  line("emotion lemmas occurring in corpus: %zu\n", s.emotion_lemmas_in_corpus);
  line("average emotion word frequency: %.4f\n", s.average_emotion_word_frequency);
  out += "\nMost frequent emotion words\n";
  line("%10s  %-16s %s\n", "frequency", "lemma", "labels");
  for (const auto& w : s.top_words) {
    std::string labels;
    for (std::size_t k = 0; k < w.flags.size(); ++k) {
      if (!w.flags[k]) continue;
      if (!labels.empty()) labels += ", ";
      labels += emotions.name(k);
    }
    line("%10zu  %-16s %s\n", w.frequency, w.token.c_str(), labels.c_str());
  }
  return out;
}

}  // namespace lexprop
