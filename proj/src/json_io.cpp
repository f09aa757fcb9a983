#include "lexprop/json_io.hpp"

#include <fstream>
#include <set>

#include "lexprop/error.hpp"
#include "text_util.hpp"

namespace lexprop {

namespace {

void reject_unknown(const Json& j, const std::set<std::string>& known,
                    const char* what) {
  if (!j.is_object()) {
    throw ConfigError(std::string(what) + " must be a JSON object");
  }
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) {
      throw ConfigError(std::string("unknown key '") + key + "' in " + what);
    }
  }
}

template <typename T>
void read(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

Json to_json(const PropagationParams& p) {
  Json j;
  j["kernel"] = to_string(p.kernel);
  if (p.alpha_vector) {
    j["alpha"] = std::vector<double>(p.alpha_vector->begin(),
                                     p.alpha_vector->end());
  } else {
    j["alpha"] = p.alpha;
  }
  j["bias"] = p.bias;
  j["epsilon"] = p.epsilon;
  j["sigma"] = p.sigma;
  j["normalization"] = to_string(p.normalization);
  return j;
}

PropagationParams params_from_json(const Json& j) {
  reject_unknown(j, {"kernel", "alpha", "bias", "epsilon", "sigma",
                     "normalization"},
                 "params");
  PropagationParams p;
  if (j.contains("kernel")) p.kernel = parse_kernel(j.at("kernel").get<std::string>());
  if (j.contains("alpha")) {
    const auto& a = j.at("alpha");
    if (a.is_array()) {
      const auto v = a.get<std::vector<double>>();
      p.alpha_vector = Eigen::Map<const Eigen::VectorXd>(
          v.data(), static_cast<Eigen::Index>(v.size()));
    } else if (a.is_number()) {
      p.alpha = a.get<double>();
    } else {
      throw ConfigError("alpha must be a number or an array of numbers");
    }
  }
  read(j, "bias", p.bias);
  read(j, "epsilon", p.epsilon);
  read(j, "sigma", p.sigma);
  if (j.contains("normalization")) {
    p.normalization =
        parse_normalization(j.at("normalization").get<std::string>());
  }
  return p;
}

Json to_json(const SolveReport& r) {
  Json j;
  j["method"] = to_string(r.method);
  j["iterations"] = r.iterations;
  j["final_delta"] = r.final_delta;
  j["residual"] = r.residual;
  j["converged"] = r.converged;
  j["rcond"] = r.rcond;
  return j;
}

Json to_json(const OptimizerConfig& c) {
  Json j;
  j["mode"] = to_string(c.mode);
  j["learning_rate"] = c.learning_rate;
  j["decay"] = c.decay;
  j["epochs"] = c.epochs;
  j["unroll_steps"] = c.unroll_steps;
  j["batch_size"] = c.batch_size;
  j["num_batches"] = c.num_batches;
  j["epochs_per_batch"] = c.epochs_per_batch;
  j["rng_seed"] = c.rng_seed;
  j["vector_alpha"] = c.vector_alpha;
  j["train_alpha"] = c.train_alpha;
  j["train_bias"] = c.train_bias;
  j["train_epsilon"] = c.train_epsilon;
  j["exact_final_entropy"] = c.exact_final_entropy;
  return j;
}

OptimizerConfig optimizer_config_from_json(const Json& j) {
  reject_unknown(j, {"mode", "learning_rate", "decay", "epochs", "unroll_steps",
                     "batch_size", "num_batches", "epochs_per_batch",
                     "rng_seed", "vector_alpha", "train_alpha", "train_bias",
                     "train_epsilon", "exact_final_entropy", "init"},
                 "fit");
  OptimizerConfig c;
  if (j.contains("mode")) c.mode = parse_fit_mode(j.at("mode").get<std::string>());
  read(j, "learning_rate", c.learning_rate);
  read(j, "decay", c.decay);
  read(j, "epochs", c.epochs);
  read(j, "unroll_steps", c.unroll_steps);
  read(j, "batch_size", c.batch_size);
  read(j, "num_batches", c.num_batches);
  read(j, "epochs_per_batch", c.epochs_per_batch);
  read(j, "rng_seed", c.rng_seed);
  read(j, "vector_alpha", c.vector_alpha);
  read(j, "train_alpha", c.train_alpha);
  read(j, "train_bias", c.train_bias);
  read(j, "train_epsilon", c.train_epsilon);
  read(j, "exact_final_entropy", c.exact_final_entropy);
  return c;
}

Json to_json(const EvalReport& r) {
  Json j;
  j["method"] = r.method;
  j["k"] = r.k;
  j["rng_seed"] = r.rng_seed;
  j["mean_kl"] = r.mean_kl;
  j["pooled_kl"] = r.pooled_kl;
  j["num_scored"] = r.num_scored;
  j["fold_kl"] = r.fold_kl;
  j["params"] = r.params ? to_json(*r.params) : Json(nullptr);
  return j;
}

Json to_json(const CorpusStats& s, const EmotionSet& emotions) {
  Json j;
  j["emotions"] = emotions.names();
  j["num_texts"] = s.num_texts;
  j["num_lexicon_words"] = s.num_lexicon_words;
  j["corpus_class_counts"] = s.corpus_class_counts;
  j["lexicon_class_counts"] = s.lexicon_class_counts;
  j["labels_per_lemma"] = s.labels_per_lemma;
  j["lemmas_with_labels"] = s.lemmas_with_labels;
  j["average_labels_per_lemma"] = s.average_labels_per_lemma;
  j["emotion_words_per_text"] = s.emotion_words_per_text;
  j["mean_emotion_words_per_text"] = s.mean_emotion_words_per_text;
  j["texts_without_emotion_words"] = s.texts_without_emotion_words;
  j["emotion_word_occurrences"] = s.emotion_word_occurrences;
  j["emotion_lemmas_in_corpus"] = s.emotion_lemmas_in_corpus;
  j["average_emotion_word_frequency"] = s.average_emotion_word_frequency;
  Json top = Json::array();
  for (const auto& w : s.top_words) {
    Json e;
    e["token"] = w.token;
    e["frequency"] = w.frequency;
    std::vector<std::string> labels;
    for (std::size_t k = 0; k < w.flags.size(); ++k) {
      if (w.flags[k]) labels.push_back(emotions.name(k));
    }
    e["labels"] = labels;
    top.push_back(std::move(e));
  }
  j["top_words"] = std::move(top);
  return j;
}

std::string trace_to_csv(const OptTrace& trace) {
  std::string out =
      "epoch,batch,entropy,mean_entropy,grad_norm,alpha,bias,epsilon\n";
  for (const auto& r : trace.rows) {
    out += std::to_string(r.epoch) + ',' + std::to_string(r.batch) + ',' +
           format_double(r.entropy) + ',' + format_double(r.mean_entropy) +
           ',' + format_double(r.grad_norm) + ',' + format_double(r.alpha) +
           ',' + format_double(r.bias) + ',' + format_double(r.epsilon) + '\n';
  }
  return out;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path, 0, e.what());
  }
}

}  // namespace lexprop
