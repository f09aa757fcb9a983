#include "lexprop/hyperopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "lexprop/error.hpp"
#include "lexprop/propagation_solver.hpp"

namespace lexprop {

double entropy(const Eigen::MatrixXd& rows) {
  double h = 0.0;
  for (Eigen::Index j = 0; j < rows.cols(); ++j) {
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      const double y = rows(i, j);
      if (y < 0.0) {
        throw InvalidArgument("entropy: negative component at row " +
                              std::to_string(i));
      }
      if (y > 0.0) h -= y * std::log(y);
    }
  }
  return h;
}

double ParamGradient::norm() const {
  double sq = alpha * alpha + bias * bias + epsilon_logit * epsilon_logit;
  if (alpha_vector.size() > 0) sq += alpha_vector.squaredNorm();
  return std::sqrt(sq);
}

namespace {

double logit(double p) { return std::log(p) - std::log1p(-p); }

}  // namespace

EntropyObjective::EntropyObjective(const EmbeddingStore& store,
                                   const LabelMatrix& labels)
    : EntropyObjective(store, labels, [&] {
        std::vector<std::size_t> all(store.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        return all;
      }()) {}

EntropyObjective::EntropyObjective(const EmbeddingStore& store,
                                   const LabelMatrix& labels,
                                   std::span<const std::size_t> nodes) {
  if (labels.size() != store.size()) {
    throw InvalidArgument("label matrix does not match embedding store");
  }
  std::vector<std::size_t> order;
  order.reserve(nodes.size());
  for (std::size_t v : nodes) {
    if (v >= store.size()) throw InvalidArgument("node index out of range");
    if (labels.labeled[v]) order.push_back(v);
  }
  num_labeled_ = order.size();
  for (std::size_t v : nodes) {
    if (!labels.labeled[v]) order.push_back(v);
  }
  num_unlabeled_ = order.size() - num_labeled_;
  if (num_labeled_ == 0 || num_unlabeled_ == 0) {
    throw InvalidArgument(
        "entropy objective needs labeled and unlabeled nodes");
  }

  const auto n = static_cast<Eigen::Index>(order.size());
  unit_.resize(n, static_cast<Eigen::Index>(store.dim()));
  y_labeled_.resize(static_cast<Eigen::Index>(num_labeled_),
                    labels.rows.cols());
  for (Eigen::Index p = 0; p < n; ++p) {
    const auto v = static_cast<Eigen::Index>(order[static_cast<std::size_t>(p)]);
    unit_.row(p) = store.unit_vectors().row(v);
    if (p < static_cast<Eigen::Index>(num_labeled_)) {
      y_labeled_.row(p) = labels.rows.row(v);
    }
  }
  cos_.noalias() = unit_ * unit_.transpose();
}

struct EntropyObjective::Forward {
  Eigen::MatrixXd w;        // raw weights
  Eigen::MatrixXd w_slope;  // logistic'(z)
  Eigen::MatrixXd tbar;     // row-stochastic, unsmoothed
  Eigen::VectorXd col_sums;
  Eigen::VectorXd row_sums;
  std::vector<Eigen::MatrixXd> history;  // Y_U before each sweep
  Eigen::MatrixXd y_final;
  double entropy = 0.0;
};

void EntropyObjective::check(const PropagationParams& params,
                             std::size_t steps) const {
  if (params.kernel != Kernel::kCosineLogistic) {
    throw ConfigError(
        "entropy optimization supports the cosine-logistic kernel only");
  }
  params.validate(static_cast<std::size_t>(unit_.cols()));
  if (steps == 0) throw ConfigError("unroll steps must be >= 1");
}

EntropyObjective::Forward EntropyObjective::forward(
    const PropagationParams& params, std::size_t steps,
    bool keep_history) const {
  const auto n = static_cast<Eigen::Index>(size());
  const auto l = static_cast<Eigen::Index>(num_labeled_);
  const auto u = static_cast<Eigen::Index>(num_unlabeled_);
  const auto m = y_labeled_.cols();
  Forward f;

  Eigen::MatrixXd z;
  if (params.alpha_vector) {
    z.noalias() = (unit_ * params.alpha_vector->asDiagonal()) * unit_.transpose();
  } else {
    z = params.alpha * cos_;
  }
  z.array() += params.bias;
  f.w = z.unaryExpr([](double v) { return logistic(v); });
  f.w_slope =
      f.w.cwiseProduct(z.unaryExpr([](double v) { return logistic(-v); }));

  if (params.normalization == Normalization::kColumnThenRow) {
    f.col_sums = f.w.colwise().sum().transpose();
    f.tbar = f.w * f.col_sums.cwiseInverse().asDiagonal();
  } else {
    f.tbar = f.w;
  }
  f.row_sums = f.tbar.rowwise().sum();
  if (!f.row_sums.allFinite() || (f.row_sums.array() <= 0.0).any() ||
      (f.col_sums.size() > 0 && (f.col_sums.array() <= 0.0).any())) {
    throw NumericalError("entropy objective: weights underflowed to zero");
  }
  f.tbar = f.row_sums.cwiseInverse().asDiagonal() * f.tbar;

  const double eps = params.epsilon;
  const double uni = eps / static_cast<double>(n);
  const auto tb_ul = f.tbar.bottomLeftCorner(u, l);
  const auto tb_uu = f.tbar.bottomRightCorner(u, u);
  // The uniform part of the smoothed rows adds eps/n * (column sums of Y).
  const Eigen::RowVectorXd labeled_mass = y_labeled_.colwise().sum();
  const Eigen::MatrixXd from_labeled = (1.0 - eps) * (tb_ul * y_labeled_);

  Eigen::MatrixXd y = Eigen::MatrixXd::Constant(u, m, 1.0 / static_cast<double>(m));
  if (keep_history) f.history.reserve(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    if (keep_history) f.history.push_back(y);
    const Eigen::RowVectorXd mass = labeled_mass + y.colwise().sum();
    Eigen::MatrixXd next = from_labeled + (1.0 - eps) * (tb_uu * y);
    next.rowwise() += uni * mass;
    y = std::move(next);
  }
  f.y_final = std::move(y);
  f.entropy = lexprop::entropy(f.y_final);
  return f;
}

double EntropyObjective::entropy(const PropagationParams& params,
                                 std::size_t steps) const {
  check(params, steps);
  return forward(params, steps, false).entropy;
}

EntropyObjective::Value EntropyObjective::evaluate(
    const PropagationParams& params, std::size_t steps) const {
  check(params, steps);
  Forward f = forward(params, steps, true);
  const auto n = static_cast<Eigen::Index>(size());
  const auto l = static_cast<Eigen::Index>(num_labeled_);
  const auto u = static_cast<Eigen::Index>(num_unlabeled_);
  const double eps = params.epsilon;
  const double uni = eps / static_cast<double>(n);

  // dH/dY_U at the last iterate.
  Eigen::MatrixXd g = f.y_final.unaryExpr([](double y) {
    return -(std::log(std::max(y, std::numeric_limits<double>::min())) + 1.0);
  });

  // Gradient w.r.t. the unlabeled rows of the smoothed matrix.
  Eigen::MatrixXd g_smooth = Eigen::MatrixXd::Zero(u, n);
  const auto tb_uu = f.tbar.bottomRightCorner(u, u);
  for (std::size_t s = f.history.size(); s-- > 0;) {
    g_smooth.leftCols(l).noalias() += g * y_labeled_.transpose();
    g_smooth.rightCols(u).noalias() += g * f.history[s].transpose();
    if (s == 0) break;
    Eigen::MatrixXd back = (1.0 - eps) * (tb_uu.transpose() * g);
    back.rowwise() += uni * g.colwise().sum();
    g = std::move(back);
  }

  Value out;
  out.entropy = f.entropy;
  const auto tbar_u = f.tbar.bottomRows(u);
  const double d_eps =
      g_smooth.sum() / static_cast<double>(n) - g_smooth.cwiseProduct(tbar_u).sum();
  out.gradient.epsilon_logit = d_eps * eps * (1.0 - eps);

  // Row normalization.
  Eigen::MatrixXd g_t = (1.0 - eps) * g_smooth;
  const Eigen::VectorXd inner = g_t.cwiseProduct(tbar_u).rowwise().sum();
  g_t.colwise() -= inner;
  g_t = f.row_sums.tail(u).cwiseInverse().asDiagonal() * g_t;

  // Column normalization; labeled rows of the gradient start at zero.
  Eigen::MatrixXd g_w = Eigen::MatrixXd::Zero(n, n);
  if (params.normalization == Normalization::kColumnThenRow) {
    // T_ij = tbar_ij * r_i is the column-normalized matrix.
    const Eigen::MatrixXd t_u = f.row_sums.tail(u).asDiagonal() * tbar_u;
    const Eigen::RowVectorXd q = g_t.cwiseProduct(t_u).colwise().sum();
    g_w.bottomRows(u) = g_t;
    g_w.rowwise() -= q;
    g_w = g_w * f.col_sums.cwiseInverse().asDiagonal();
  } else {
    g_w.bottomRows(u) = g_t;
  }

  const Eigen::MatrixXd g_z = g_w.cwiseProduct(f.w_slope);
  out.gradient.bias = g_z.sum();
  if (params.alpha_vector) {
    const RowMatrix proj = g_z * unit_;
    out.gradient.alpha_vector =
        unit_.cwiseProduct(proj).colwise().sum().transpose();
  } else {
    out.gradient.alpha = g_z.cwiseProduct(cos_).sum();
  }
  return out;
}

ParamGradient entropy_gradient(const EmbeddingStore& store,
                               const LabelMatrix& labels,
                               const PropagationParams& params,
                               std::size_t steps) {
  return EntropyObjective(store, labels).evaluate(params, steps).gradient;
}

std::string to_string(FitMode m) {
  return m == FitMode::kFull ? "full" : "batch";
}

FitMode parse_fit_mode(const std::string& s) {
  if (s == "full") return FitMode::kFull;
  if (s == "batch") return FitMode::kBatch;
  throw ConfigError("unknown optimization mode '" + s + "'");
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be > 0");
  }
  if (!(decay >= 0.0) || !std::isfinite(decay)) {
    throw ConfigError("decay must be >= 0");
  }
  if (epochs == 0) throw ConfigError("epochs must be >= 1");
  if (unroll_steps == 0) throw ConfigError("unroll_steps must be >= 1");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (num_batches == 0) throw ConfigError("num_batches must be >= 1");
  if (epochs_per_batch == 0) throw ConfigError("epochs_per_batch must be >= 1");
  if (!train_alpha && !train_bias && !train_epsilon) {
    throw ConfigError("no trainable parameter selected");
  }
}

namespace {

struct Prepared {
  LabelMatrix labels;
  PropagationParams params;
};

Prepared prepare(const EmbeddingStore& store, const SeedLexicon& seed,
                 const EmotionSet& emotions, const OptimizerConfig& config,
                 const PropagationParams& init) {
  config.validate();
  Prepared p{init_label_matrix(store.vocab(), seed, emotions).labels, init};
  if (p.params.kernel != Kernel::kCosineLogistic) {
    throw ConfigError(
        "entropy optimization supports the cosine-logistic kernel only");
  }
  if (config.vector_alpha && !p.params.alpha_vector) {
    p.params.alpha_vector =
        Eigen::VectorXd::Constant(static_cast<Eigen::Index>(store.dim()),
                                  p.params.alpha);
  }
  if (!config.vector_alpha) p.params.alpha_vector.reset();
  if (config.train_epsilon &&
      !(p.params.epsilon > 0.0 && p.params.epsilon < 1.0)) {
    throw ConfigError(
        "training epsilon needs an initial value strictly inside (0, 1)");
  }
  p.params.validate(store.dim());
  return p;
}

bool finite(const ParamGradient& g) {
  return std::isfinite(g.alpha) && std::isfinite(g.bias) &&
         std::isfinite(g.epsilon_logit) &&
         (g.alpha_vector.size() == 0 || g.alpha_vector.allFinite());
}

// One descent step on the mean entropy (gradient scaled by 1/u).
void step(PropagationParams& p, const ParamGradient& g, double rate,
          const OptimizerConfig& config) {
  if (config.train_alpha) {
    if (p.alpha_vector) {
      *p.alpha_vector -= rate * g.alpha_vector;
    } else {
      p.alpha -= rate * g.alpha;
    }
  }
  if (config.train_bias) p.bias -= rate * g.bias;
  if (config.train_epsilon) {
    p.epsilon = logistic(logit(p.epsilon) - rate * g.epsilon_logit);
    // Keep epsilon inside the open interval the reparameterization needs.
    p.epsilon = std::clamp(p.epsilon, 1e-12, 1.0 - 1e-12);
  }
}

TraceRow make_row(std::size_t epoch, std::size_t batch, double h,
                  std::size_t u, const ParamGradient& g,
                  const PropagationParams& p) {
  TraceRow r;
  r.epoch = epoch;
  r.batch = batch;
  r.entropy = h;
  r.mean_entropy = h / static_cast<double>(u);
  r.grad_norm = g.norm() / static_cast<double>(u);
  r.alpha = p.alpha_vector ? p.alpha_vector->mean() : p.alpha;
  r.bias = p.bias;
  r.epsilon = p.epsilon;
  return r;
}

constexpr int kMaxRestarts = 3;

void add_exact_entropy(const EmbeddingStore& store, const SeedLexicon& seed,
                       const EmotionSet& emotions, FitResult& result) {
  SolverOptions opts;
  opts.choice = SolverChoice::kClosedForm;
  const ExpansionResult ex = expand(store, seed, emotions, result.params, opts);
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(store.size()), ex.distributions.cols());
  Eigen::Index u = 0;
  for (std::size_t i = 0; i < ex.labeled.size(); ++i) {
    if (!ex.labeled[i]) rows.row(u++) = ex.distributions.row(static_cast<Eigen::Index>(i));
  }
  result.trace.exact_entropy = entropy(Eigen::MatrixXd(rows.topRows(u)));
}

}  // namespace

FitResult fit_full(const EmbeddingStore& store, const SeedLexicon& seed,
                   const EmotionSet& emotions, const OptimizerConfig& config,
                   const PropagationParams& init) {
  Prepared prep = prepare(store, seed, emotions, config, init);
  if (prep.params.alpha_vector && store.size() > config.max_full_vector_nodes) {
    throw ConfigError("full-graph fitting with vector alpha is limited to " +
                      std::to_string(config.max_full_vector_nodes) +
                      " nodes; use batch mode");
  }
  const EntropyObjective objective(store, prep.labels);
  const double u = static_cast<double>(objective.num_unlabeled());

  double rate0 = config.learning_rate;
  for (int attempt = 0;; ++attempt) {
    FitResult result;
    result.trace.restarts = static_cast<std::size_t>(attempt);
    PropagationParams p = prep.params;
    double rate = rate0;
    double start = 0.0;
    double best = std::numeric_limits<double>::infinity();
    bool diverged = false;
    for (std::size_t epoch = 1; epoch <= config.epochs + 1; ++epoch) {
      EntropyObjective::Value v;
      try {
        v = objective.evaluate(p, config.unroll_steps);
      } catch (const NumericalError&) {
        diverged = true;
        break;
      }
      const double mean = v.entropy / u;
      if (!std::isfinite(mean) || !finite(v.gradient)) {
        diverged = true;
        break;
      }
      if (epoch == 1) start = mean;
      if (mean > start * 1.1 + 1e-12) {
        diverged = true;
        break;
      }
      if (mean < best) {
        best = mean;
        result.params = p;
      }
      // The extra pass only scores the parameters left by the last step.
      if (epoch > config.epochs) break;
      result.trace.rows.push_back(
          make_row(epoch, 0, v.entropy, objective.num_unlabeled(), v.gradient, p));
      step(p, v.gradient, rate / u, config);
      rate /= 1.0 + config.decay;
    }
    if (!diverged) {
      result.trace.best_mean_entropy = best;
      if (config.exact_final_entropy) {
        add_exact_entropy(store, seed, emotions, result);
      }
      return result;
    }
    if (attempt == kMaxRestarts) {
      throw NumericalError(
          "entropy optimization diverged after halving the learning rate " +
          std::to_string(kMaxRestarts) + " times");
    }
    rate0 /= 2.0;
  }
}

BatchShape batch_shape(std::size_t batch_size, std::size_t num_labeled,
                       std::size_t num_total) {
  if (num_total == 0) return {};
  BatchShape s;
  s.labeled = (batch_size * num_labeled + num_total - 1) / num_total;
  s.labeled = std::min(s.labeled, batch_size);
  s.unlabeled = batch_size - s.labeled;
  return s;
}

namespace {

// First k entries of a partial Fisher-Yates shuffle, restored to index order.
std::vector<std::size_t> sample(std::vector<std::size_t>& pool, std::size_t k,
                                std::mt19937_64& rng) {
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  std::vector<std::size_t> out(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

FitResult fit_batched(const EmbeddingStore& store, const SeedLexicon& seed,
                      const EmotionSet& emotions, const OptimizerConfig& config,
                      const PropagationParams& init) {
  Prepared prep = prepare(store, seed, emotions, config, init);
  if (config.batch_size >= store.size()) {
    throw ConfigError("batch_size (" + std::to_string(config.batch_size) +
                      ") must be smaller than the vocabulary (" +
                      std::to_string(store.size()) + ")");
  }
  std::vector<std::size_t> labeled_pool;
  std::vector<std::size_t> unlabeled_pool;
  for (std::size_t i = 0; i < store.size(); ++i) {
    (prep.labels.labeled[i] ? labeled_pool : unlabeled_pool).push_back(i);
  }
  const BatchShape shape =
      batch_shape(config.batch_size, labeled_pool.size(), store.size());
  if (shape.labeled == 0 || shape.unlabeled == 0 ||
      shape.labeled > labeled_pool.size() ||
      shape.unlabeled > unlabeled_pool.size()) {
    throw ConfigError("a batch of " + std::to_string(config.batch_size) +
                      " cannot hold both labeled and unlabeled nodes (" +
                      std::to_string(shape.labeled) + " labeled, " +
                      std::to_string(shape.unlabeled) + " unlabeled)");
  }

  double rate0 = config.learning_rate;
  for (int attempt = 0;; ++attempt) {
    std::mt19937_64 rng(config.rng_seed);
    std::vector<std::size_t> lpool = labeled_pool;
    std::vector<std::size_t> upool = unlabeled_pool;
    FitResult result;
    result.trace.restarts = static_cast<std::size_t>(attempt);
    PropagationParams p = prep.params;
    double rate = rate0;
    bool diverged = false;
    std::size_t epoch = 0;
    for (std::size_t b = 1; b <= config.num_batches && !diverged; ++b) {
      std::vector<std::size_t> nodes = sample(lpool, shape.labeled, rng);
      const auto un = sample(upool, shape.unlabeled, rng);
      nodes.insert(nodes.end(), un.begin(), un.end());
      const EntropyObjective objective(store, prep.labels, nodes);
      const double u = static_cast<double>(objective.num_unlabeled());
      for (std::size_t e = 0; e < config.epochs_per_batch; ++e) {
        ++epoch;
        EntropyObjective::Value v;
        try {
          v = objective.evaluate(p, config.unroll_steps);
        } catch (const NumericalError&) {
          diverged = true;
          break;
        }
        if (!std::isfinite(v.entropy) || !finite(v.gradient)) {
          diverged = true;
          break;
        }
        result.trace.rows.push_back(make_row(epoch, b, v.entropy,
                                             objective.num_unlabeled(),
                                             v.gradient, p));
        step(p, v.gradient, rate / u, config);
      }
      rate /= 1.0 + config.decay;
    }
    if (!diverged) {
      result.params = p;
      result.trace.best_mean_entropy =
          result.trace.rows.empty() ? 0.0 : result.trace.rows.back().mean_entropy;
      if (config.exact_final_entropy) {
        add_exact_entropy(store, seed, emotions, result);
      }
      return result;
    }
    if (attempt == kMaxRestarts) {
      throw NumericalError(
          "batch optimization diverged after halving the learning rate " +
          std::to_string(kMaxRestarts) + " times");
    }
    rate0 /= 2.0;
  }
}

FitResult fit(const EmbeddingStore& store, const SeedLexicon& seed,
              const EmotionSet& emotions, const OptimizerConfig& config,
              const PropagationParams& init) {
  return config.mode == FitMode::kFull
             ? fit_full(store, seed, emotions, config, init)
             : fit_batched(store, seed, emotions, config, init);
}

}  // namespace lexprop
