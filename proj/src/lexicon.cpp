#include "lexprop/lexicon.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <unordered_set>

#include "io_util.hpp"
#include "lexprop/error.hpp"
#include "text_util.hpp"

namespace lexprop {

EmotionSet::EmotionSet(std::vector<std::string> names)
    : names_(std::move(names)) {
  if (names_.empty()) throw InvalidArgument("emotion set is empty");
  std::unordered_set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw InvalidArgument("empty emotion name");
    if (!seen.insert(n).second) {
      throw InvalidArgument("duplicate emotion '" + n + "'");
    }
  }
}

EmotionSet EmotionSet::ekman() {
  return EmotionSet({"anger", "disgust", "fear", "joy", "sadness", "surprise"});
}

std::optional<std::size_t> EmotionSet::find(std::string_view name) const {
  for (std::size_t k = 0; k < names_.size(); ++k) {
    if (names_[k] == name) return k;
  }
  return std::nullopt;
}

LexiconFlags load_lexicon_flags(const std::string& path,
                                const EmotionSet& emotions) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open lexicon file");

  LexiconFlags table;
  std::unordered_map<std::string, std::size_t> row_of;
  // -1 = not given yet, otherwise 0/1.
  std::vector<std::vector<int>> given;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_char(line, '\t');
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty()) {
      throw ParseError(path, lineno,
                       "expected \"token<TAB>emotion<TAB>flag\"");
    }
    if (fields[2] != "0" && fields[2] != "1") {
      throw ParseError(path, lineno,
                       "flag must be 0 or 1, got '" + std::string(fields[2]) +
                           "'");
    }
    const int flag = fields[2] == "1" ? 1 : 0;
    std::string token(fields[0]);
    auto it = row_of.find(token);
    if (it == row_of.end()) {
      it = row_of.emplace(token, table.tokens.size()).first;
      table.tokens.push_back(token);
      table.flags.emplace_back(emotions.size(), 0);
      given.emplace_back(emotions.size(), -1);
    }
    const auto k = emotions.find(fields[1]);
    if (!k) continue;
    int& prev = given[it->second][*k];
    if (prev != -1 && prev != flag) {
      throw ParseError(path, lineno,
                       "conflicting flags for (" + token + ", " +
                           std::string(fields[1]) + ")");
    }
    prev = flag;
    table.flags[it->second][*k] = static_cast<std::uint8_t>(flag);
  }
  return table;
}

Distribution seed_to_distribution(std::span<const std::uint8_t> flags) {
  const auto positives =
      static_cast<std::size_t>(std::count_if(flags.begin(), flags.end(),
                                             [](auto f) { return f != 0; }));
  if (positives == 0) {
    throw InvalidArgument("seed_to_distribution: no positive flag");
  }
  Distribution d(flags.size(), 0.0);
  const double mass = 1.0 / static_cast<double>(positives);
  for (std::size_t k = 0; k < flags.size(); ++k) {
    if (flags[k] != 0) d[k] = mass;
  }
  return d;
}

SeedLexicon SeedLexicon::from_flags(const LexiconFlags& table,
                                    std::size_t num_classes) {
  SeedLexicon seed(num_classes);
  for (std::size_t i = 0; i < table.tokens.size(); ++i) {
    const auto& f = table.flags[i];
    if (std::none_of(f.begin(), f.end(), [](auto x) { return x != 0; })) {
      continue;
    }
    seed.add_flags(table.tokens[i], f);
  }
  return seed;
}

void SeedLexicon::insert(SeedEntry entry) {
  if (num_classes_ == 0) num_classes_ = entry.distribution.size();
  if (entry.distribution.size() != num_classes_) {
    throw InvalidArgument("seed entry '" + entry.token +
                          "' has wrong number of classes");
  }
  if (index_.contains(entry.token)) {
    throw InvalidArgument("duplicate seed token '" + entry.token + "'");
  }
  index_.emplace(entry.token, entries_.size());
  entries_.push_back(std::move(entry));
}

void SeedLexicon::add_flags(std::string token, Flags flags) {
  Distribution dist = seed_to_distribution(flags);
  insert({std::move(token), std::move(flags), std::move(dist)});
}

void SeedLexicon::add_distribution(std::string token, Distribution dist) {
  double sum = 0.0;
  for (double p : dist) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw InvalidArgument("seed distribution for '" + token +
                            "' has a negative or non-finite component");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw InvalidArgument("seed distribution for '" + token +
                          "' does not sum to 1");
  }
  insert({std::move(token), {}, std::move(dist)});
}

const SeedEntry* SeedLexicon::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? nullptr : &entries_[it->second];
}

SeedLexicon SeedLexicon::without(std::span<const std::string> tokens) const {
  std::unordered_set<std::string> drop(tokens.begin(), tokens.end());
  SeedLexicon out(num_classes_);
  for (const auto& e : entries_) {
    if (!drop.contains(e.token)) out.insert(e);
  }
  return out;
}

SeedLexicon SeedLexicon::restricted_to(const Vocabulary& vocab) const {
  SeedLexicon out(num_classes_);
  for (const auto& e : entries_) {
    if (vocab.contains(e.token)) out.insert(e);
  }
  return out;
}

SeedLexicon load_seed_lexicon(const std::string& path,
                              const EmotionSet& emotions) {
  return SeedLexicon::from_flags(load_lexicon_flags(path, emotions),
                                 emotions.size());
}

void write_seed_lexicon(const std::string& path, const SeedLexicon& seed,
                        const EmotionSet& emotions) {
  std::string out;
  for (const auto& e : seed.entries()) {
    if (e.flags.empty()) {
      throw InvalidArgument("write_seed_lexicon: '" + e.token +
                            "' has no flags");
    }
    for (std::size_t k = 0; k < emotions.size(); ++k) {
      out += e.token + '\t' + emotions.name(k) + '\t' +
             (e.flags[k] ? '1' : '0') + '\n';
    }
  }
  write_file_atomic(path, out);
}

std::size_t LabelMatrix::num_labeled() const {
  return static_cast<std::size_t>(
      std::count(labeled.begin(), labeled.end(), true));
}

void LabelMatrix::check_stochastic(double tol) const {
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    if ((rows.row(i).array() < 0.0).any()) {
      throw NumericalError("label row " + std::to_string(i) +
                           " has a negative component");
    }
    const double s = rows.row(i).sum();
    if (!(std::abs(s - 1.0) <= tol)) {
      throw NumericalError("label row " + std::to_string(i) + " sums to " +
                           format_double(s));
    }
  }
}

LabelInit init_label_matrix(const Vocabulary& vocab, const SeedLexicon& seed,
                            const EmotionSet& emotions) {
  const std::size_t n = vocab.size();
  const std::size_t m = emotions.size();
  if (!seed.empty() && seed.num_classes() != m) {
    throw InvalidArgument("seed lexicon class count does not match emotions");
  }
  LabelInit init;
  init.labels.rows =
      Eigen::MatrixXd::Constant(n, m, 1.0 / static_cast<double>(m));
  init.labels.labeled.assign(n, false);
  for (const auto& e : seed.entries()) {
    const auto i = vocab.find(e.token);
    if (!i) {
      ++init.missing_seed_tokens;
      continue;
    }
    for (std::size_t k = 0; k < m; ++k) {
      init.labels.rows(*i, k) = e.distribution[k];
    }
    init.labels.labeled[*i] = true;
  }
  return init;
}

void DistributionLexicon::add(LexiconRow row) {
  if (index_.contains(row.token)) {
    throw InvalidArgument("duplicate lexicon token '" + row.token + "'");
  }
  index_.emplace(row.token, rows_.size());
  rows_.push_back(std::move(row));
}

const LexiconRow* DistributionLexicon::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? nullptr : &rows_[it->second];
}

DistributionLexicon to_distribution_lexicon(const SeedLexicon& seed) {
  DistributionLexicon lex;
  for (const auto& e : seed.entries()) {
    lex.add({e.token, e.distribution, true});
  }
  return lex;
}

void write_lexicon_tsv(const std::string& path, const EmotionSet& emotions,
                       const DistributionLexicon& lexicon) {
  std::string out = "token";
  for (const auto& n : emotions.names()) out += '\t' + n;
  out += "\torigin\n";
  for (const auto& row : lexicon.rows()) {
    out += row.token;
    for (double p : row.distribution) out += '\t' + format_double(p);
    out += row.seed ? "\tseed\n" : "\tpropagated\n";
  }
  write_file_atomic(path, out);
}

void write_lexicon_json(const std::string& path, const EmotionSet& emotions,
                        const DistributionLexicon& lexicon) {
  nlohmann::ordered_json j;
  j["emotions"] = emotions.names();
  auto& entries = j["entries"] = nlohmann::ordered_json::array();
  for (const auto& row : lexicon.rows()) {
    nlohmann::ordered_json e;
    e["token"] = row.token;
    e["distribution"] = row.distribution;
    e["origin"] = row.seed ? "seed" : "propagated";
    entries.push_back(std::move(e));
  }
  write_file_atomic(path, j.dump(2) + "\n");
}

LoadedLexicon read_lexicon_tsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open lexicon file");
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path, 1, "missing header");
  strip_cr(line);
  auto header = split_char(line, '\t');
  const bool has_origin = !header.empty() && header.back() == "origin";
  if (header.size() < (has_origin ? 3u : 2u) || header[0] != "token") {
    throw ParseError(path, 1, "header must be \"token<TAB>e1...<TAB>em\"");
  }
  std::vector<std::string> names(header.begin() + 1,
                                 header.end() - (has_origin ? 1 : 0));
  LoadedLexicon out{EmotionSet(std::move(names)), {}};
  const std::size_t m = out.emotions.size();

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_char(line, '\t');
    if (fields.size() != header.size()) {
      throw ParseError(path, lineno, "wrong number of columns");
    }
    LexiconRow row{std::string(fields[0]), Distribution(m), false};
    for (std::size_t k = 0; k < m; ++k) {
      if (!parse_double(fields[k + 1], row.distribution[k])) {
        throw ParseError(path, lineno, "bad probability '" +
                                           std::string(fields[k + 1]) + "'");
      }
    }
    if (has_origin) row.seed = fields.back() == "seed";
    try {
      out.lexicon.add(std::move(row));
    } catch (const InvalidArgument& e) {
      throw ParseError(path, lineno, e.what());
    }
  }
  return out;
}

}  // namespace lexprop
