#include "lexprop/propagation_solver.hpp"

#include <cmath>

#include "lexprop/error.hpp"

namespace lexprop {

std::string to_string(SolveMethod m) {
  return m == SolveMethod::kIterative ? "iterative" : "closed-form";
}

SolverChoice parse_solver_choice(const std::string& s) {
  if (s == "auto") return SolverChoice::kAuto;
  if (s == "iterative") return SolverChoice::kIterative;
  if (s == "closed" || s == "closed-form") return SolverChoice::kClosedForm;
  throw ConfigError("unknown solver '" + s + "'");
}

namespace {

// Y in node order, checking that the mask agrees with the matrix partition.
Eigen::MatrixXd to_node_order(const TransitionMatrix& t, const LabelMatrix& y) {
  if (y.size() != t.size()) {
    throw InvalidArgument("label matrix size does not match transition matrix");
  }
  const auto& order = t.order();
  Eigen::MatrixXd out(y.rows.rows(), y.rows.cols());
  for (std::size_t p = 0; p < order.size(); ++p) {
    if (y.labeled[order[p]] != (p < t.num_labeled())) {
      throw InvalidArgument(
          "labeled mask does not match the transition matrix partition");
    }
    out.row(static_cast<Eigen::Index>(p)) =
        y.rows.row(static_cast<Eigen::Index>(order[p]));
  }
  return out;
}

void write_unlabeled_back(const TransitionMatrix& t, const Eigen::MatrixXd& yu,
                          LabelMatrix& y) {
  const auto& order = t.order();
  for (std::size_t p = t.num_labeled(); p < order.size(); ++p) {
    y.rows.row(static_cast<Eigen::Index>(order[p])) =
        yu.row(static_cast<Eigen::Index>(p - t.num_labeled()));
  }
}

double residual(const TransitionMatrix& t, const Eigen::MatrixXd& ynode) {
  const auto u = static_cast<Eigen::Index>(t.num_unlabeled());
  if (u == 0) return 0.0;
  return (ynode.bottomRows(u) - t.apply_unlabeled(ynode)).cwiseAbs().maxCoeff();
}

void check_preconditions(const TransitionMatrix& t, const LabelMatrix& y) {
  if (t.num_labeled() == 0) {
    throw InvalidArgument("propagation needs at least one labeled node");
  }
  if (y.rows.cols() == 0) throw InvalidArgument("label matrix has no classes");
}

}  // namespace

Solution propagate_iterative(const TransitionMatrix& t, const LabelMatrix& y,
                             double tol, std::size_t max_iter) {
  check_preconditions(t, y);
  if (!(tol > 0.0)) throw InvalidArgument("tolerance must be > 0");
  if (max_iter == 0) throw InvalidArgument("max_iter must be >= 1");
  Eigen::MatrixXd ynode = to_node_order(t, y);
  const auto u = static_cast<Eigen::Index>(t.num_unlabeled());

  SolveReport report;
  report.method = SolveMethod::kIterative;
  report.converged = false;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    Eigen::MatrixXd next = t.apply_unlabeled(ynode);
    const Eigen::VectorXd sums = next.rowwise().sum();
    next = sums.cwiseInverse().asDiagonal() * next;
    report.final_delta =
        u == 0 ? 0.0 : (next - ynode.bottomRows(u)).cwiseAbs().maxCoeff();
    ynode.bottomRows(u) = next;
    report.iterations = it;
    if (!std::isfinite(report.final_delta)) {
      throw NumericalError("iterative propagation produced non-finite values");
    }
    if (report.final_delta < tol) {
      report.converged = true;
      break;
    }
  }
  report.residual = residual(t, ynode);

  Solution out{y, report};
  write_unlabeled_back(t, ynode.bottomRows(u), out.labels);
  return out;
}

Solution propagate_closed_form(const TransitionMatrix& t, const LabelMatrix& y,
                               double min_rcond) {
  check_preconditions(t, y);
  Eigen::MatrixXd ynode = to_node_order(t, y);
  const auto l = static_cast<Eigen::Index>(t.num_labeled());
  const auto u = static_cast<Eigen::Index>(t.num_unlabeled());

  SolveReport report;
  report.method = SolveMethod::kClosedForm;
  report.iterations = 0;
  if (u > 0) {
    Eigen::MatrixXd a = -Eigen::MatrixXd(t.uu());
    a.diagonal().array() += 1.0;
    const Eigen::MatrixXd rhs = t.ul() * ynode.topRows(l);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    report.rcond = lu.rcond();
    if (!(report.rcond >= min_rcond)) {
      throw NumericalError(
          "closed-form system I - T_uu is singular or ill-conditioned "
          "(rcond " +
          std::to_string(report.rcond) +
          "); some unlabeled nodes carry no probability toward labeled "
          "ones, use epsilon > 0");
    }
    // Round-off can leave components a few ulps below zero.
    ynode.bottomRows(u) = lu.solve(rhs).cwiseMax(0.0);
  }
  report.residual = residual(t, ynode);

  Solution out{y, report};
  write_unlabeled_back(t, ynode.bottomRows(u), out.labels);
  return out;
}

DistributionLexicon ExpansionResult::to_lexicon() const {
  DistributionLexicon lex;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto r = distributions.row(static_cast<Eigen::Index>(i));
    lex.add({tokens[i], Distribution(r.begin(), r.end()), labeled[i]});
  }
  return lex;
}

ExpansionResult expand(const EmbeddingStore& store, const SeedLexicon& seed,
                       const EmotionSet& emotions, PropagationParams params,
                       const SolverOptions& options) {
  LabelInit init = init_label_matrix(store.vocab(), seed, emotions);
  if (init.labels.num_labeled() == 0) {
    throw InvalidArgument("no seed token occurs in the embedding vocabulary");
  }
  if (params.kernel == Kernel::kEuclideanRbf && params.sigma == 0.0) {
    const auto ids = distinct_label_ids(init.labels.rows, init.labels.labeled);
    params.sigma = mst_sigma(store, ids).sigma;
  }

  ExpansionResult result;
  result.emotions = emotions;
  result.tokens = store.vocab().words();
  result.labeled = init.labels.labeled;
  result.missing_seed_tokens = init.missing_seed_tokens;
  result.params = params;

  const std::size_t u = store.size() - init.labels.num_labeled();
  if (u == 0) {
    params.validate(store.dim());
    result.distributions = init.labels.rows;
    return result;
  }

  std::optional<TransitionMatrix> cached;
  std::uint64_t fingerprint = 0;
  if (!options.transition_cache.empty()) {
    fingerprint = transition_fingerprint(store, params, init.labels.labeled);
    cached = load_transition_cache(options.transition_cache, fingerprint);
  }
  const TransitionMatrix t =
      cached ? std::move(*cached)
             : build_transition(store, params, init.labels.labeled,
                                options.dense_node_threshold);
  if (!cached && !options.transition_cache.empty() && t.is_dense()) {
    save_transition_cache(options.transition_cache, t, fingerprint);
  }
  bool closed = false;
  switch (options.choice) {
    case SolverChoice::kClosedForm:
      closed = true;
      break;
    case SolverChoice::kIterative:
      break;
    case SolverChoice::kAuto:
      closed = t.is_dense() && u <= options.closed_form_max_unlabeled;
      break;
  }
  Solution sol = closed ? propagate_closed_form(t, init.labels, options.min_rcond)
                        : propagate_iterative(t, init.labels, options.tol,
                                              options.max_iter);
  result.distributions = std::move(sol.labels.rows);
  result.report = sol.report;
  return result;
}

}  // namespace lexprop
