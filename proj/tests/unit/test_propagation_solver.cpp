#include <doctest.h>

#include <random>

#include "lexprop/error.hpp"
#include "lexprop/propagation_solver.hpp"
#include "support.hpp"

using namespace lexprop;
using lexprop::testing::make_store;
using lexprop::testing::random_matrix;

namespace {

// One labeled node, one unlabeled; T_ul = T_uu = 0.5.
TransitionMatrix two_node() {
  RowMatrix t(2, 2);
  t << 0.5, 0.5, 0.5, 0.5;
  return TransitionMatrix::from_dense(t, {0, 1}, 1, 0.0);
}

LabelMatrix two_node_labels() {
  LabelMatrix y;
  y.rows.resize(2, 2);
  y.rows << 1, 0, 0.5, 0.5;
  y.labeled = {true, false};
  return y;
}

double max_abs(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("two-node geometric series") {
  const auto it = propagate_iterative(two_node(), two_node_labels(), 1e-12, 1000);
  CHECK(it.report.converged);
  CHECK(it.labels.rows(1, 0) == doctest::Approx(1.0).epsilon(1e-11));
  CHECK(it.labels.rows(1, 1) == doctest::Approx(0.0).epsilon(1e-11));

  const auto cf = propagate_closed_form(two_node(), two_node_labels());
  CHECK(cf.labels.rows(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cf.labels.rows(1, 1) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(cf.report.method == SolveMethod::kClosedForm);
  CHECK(cf.report.rcond > 0.0);
}

TEST_CASE("iterate already at the fixed point stops after one sweep") {
  auto y = two_node_labels();
  y.rows.row(1) << 1, 0;
  const auto s = propagate_iterative(two_node(), y, 1e-9, 100);
  CHECK(s.report.iterations == 1);
  CHECK(s.report.final_delta < 1e-9);
  CHECK(s.report.converged);
}

TEST_CASE("iteration budget exhaustion is reported, not thrown") {
  const auto s = propagate_iterative(two_node(), two_node_labels(), 1e-15, 3);
  CHECK_FALSE(s.report.converged);
  CHECK(s.report.iterations == 3);
  CHECK_THROWS_AS(propagate_iterative(two_node(), two_node_labels(), 0.0, 3),
                  InvalidArgument);
}

TEST_CASE("near-uniform smoothing pulls unlabeled rows to the labeled mean") {
  std::mt19937_64 rng(1);
  const auto store = make_store(random_matrix(6, 3, rng));
  PropagationParams p;
  p.alpha = 3.0;
  p.epsilon = 1.0 - 1e-12;
  std::vector<bool> mask{true, false, true, false, false, false};
  const auto t = build_transition(store, p, mask);
  LabelMatrix y;
  y.rows = Eigen::MatrixXd::Constant(6, 3, 1.0 / 3.0);
  y.rows.row(0) << 1, 0, 0;
  y.rows.row(2) << 0, 0.5, 0.5;
  y.labeled = mask;
  const auto s = propagate_closed_form(t, y);
  for (Eigen::Index i : {1, 3, 4, 5}) {
    CHECK(s.labels.rows(i, 0) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(s.labels.rows(i, 1) == doctest::Approx(0.25).epsilon(1e-9));
  }
}

TEST_CASE("closed form equals iterative on random instances") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const auto store = make_store(random_matrix(20, 4, rng));
    std::vector<bool> mask(20, false);
    for (int i = 0; i < 20; i += 4) mask[static_cast<std::size_t>(i)] = true;
    PropagationParams p;
    p.alpha = 5.0;
    p.bias = -1.0;
    p.epsilon = 0.01;
    const auto t = build_transition(store, p, mask);
    LabelMatrix y;
    y.rows = Eigen::MatrixXd::Constant(20, 6, 1.0 / 6.0);
    std::uniform_int_distribution<int> cls(0, 5);
    for (int i = 0; i < 20; i += 4) {
      y.rows.row(i).setZero();
      y.rows(i, cls(rng)) = 1.0;
    }
    y.labeled = mask;
    const auto a = propagate_closed_form(t, y);
    const auto b = propagate_iterative(t, y, 1e-14, 100000);
    CHECK(b.report.converged);
    CHECK(max_abs(a.labels.rows, b.labels.rows) < 1e-8);
    CHECK((a.labels.rows.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-8);
    CHECK(a.report.residual < 1e-10);
    // Labeled rows are untouched.
    CHECK(a.labels.rows.row(0) == y.rows.row(0));
  }
}

TEST_CASE("closed form rejects a singular system") {
  // Unlabeled nodes 1 and 2 only reach each other.
  RowMatrix t(3, 3);
  t << 1, 0, 0, 0, 0.5, 0.5, 0, 0.5, 0.5;
  const auto tm = TransitionMatrix::from_dense(t, {0, 1, 2}, 1, 0.0);
  LabelMatrix y;
  y.rows = Eigen::MatrixXd::Constant(3, 2, 0.5);
  y.rows.row(0) << 1, 0;
  y.labeled = {true, false, false};
  CHECK_THROWS_AS(propagate_closed_form(tm, y), NumericalError);
}

TEST_CASE("expansion separates two clusters") {
  // One joy seed with five close synonyms; one anger seed in a far cluster.
  RowMatrix x(12, 3);
  x << 1, 0.02, 0, 1, 0.05, 0.01, 0.98, -0.03, 0.02, 1, 0, 0.04, 0.97, 0.01, -0.02,
      1.01, 0.03, 0.03,  //
      -1, 0.02, 0.1, -1, 0.05, 0.11, -0.98, -0.03, 0.12, -1, 0, 0.14, -0.97, 0.01,
      0.08, -1.01, 0.03, 0.13;
  const auto store = make_store(x);
  SeedLexicon seed(6);
  seed.add_flags("w0", {0, 0, 0, 1, 0, 0});
  seed.add_flags("w6", {1, 0, 0, 0, 0, 0});
  PropagationParams p;
  p.alpha = 10.0;
  p.epsilon = 0.01;
  const auto r = expand(store, seed, EmotionSet::ekman(), p);
  REQUIRE(r.report.has_value());
  for (Eigen::Index i = 1; i < 6; ++i) {
    Eigen::Index k;
    r.distributions.row(i).maxCoeff(&k);
    CHECK(k == 3);
  }
  for (Eigen::Index i = 7; i < 12; ++i) {
    Eigen::Index k;
    r.distributions.row(i).maxCoeff(&k);
    CHECK(k == 0);
  }
  CHECK(r.to_lexicon().size() == 12);
}

TEST_CASE("every node labeled: seed rows pass through") {
  RowMatrix x(2, 2);
  x << 1, 0, 0, 1;
  SeedLexicon seed(2);
  seed.add_flags("w0", {1, 0});
  seed.add_flags("w1", {1, 1});
  const auto r = expand(make_store(x), seed, EmotionSet({"a", "b"}), PropagationParams{});
  CHECK_FALSE(r.report.has_value());
  CHECK(r.distributions(1, 0) == 0.5);
}

TEST_CASE("identical embeddings give the labeled average") {
  RowMatrix x = RowMatrix::Constant(5, 3, 0.4);
  SeedLexicon seed(3);
  seed.add_flags("w0", {1, 0, 0});
  seed.add_flags("w3", {0, 1, 1});
  PropagationParams p;
  p.alpha = 2.0;
  const auto r = expand(make_store(x), seed, EmotionSet({"a", "b", "c"}), p);
  for (Eigen::Index i : {1, 2, 4}) {
    CHECK(r.distributions(i, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.distributions(i, 1) == doctest::Approx(0.25).epsilon(1e-12));
  }
}

TEST_CASE("solver choice and errors") {
  std::mt19937_64 rng(6);
  const auto store = make_store(random_matrix(8, 3, rng));
  SeedLexicon seed(2);
  seed.add_flags("w1", {1, 0});
  seed.add_flags("w4", {0, 1});
  PropagationParams p;
  p.alpha = 1.0;
  p.epsilon = 0.1;
  SolverOptions o;
  CHECK(expand(store, seed, EmotionSet({"a", "b"}), p, o).report->method ==
        SolveMethod::kClosedForm);
  o.choice = SolverChoice::kIterative;
  CHECK(expand(store, seed, EmotionSet({"a", "b"}), p, o).report->method ==
        SolveMethod::kIterative);
  o.choice = SolverChoice::kAuto;
  o.closed_form_max_unlabeled = 3;
  CHECK(expand(store, seed, EmotionSet({"a", "b"}), p, o).report->method ==
        SolveMethod::kIterative);
  CHECK(parse_solver_choice("closed") == SolverChoice::kClosedForm);
  CHECK_THROWS_AS(parse_solver_choice("magic"), ConfigError);

  SeedLexicon elsewhere(2);
  elsewhere.add_flags("nope", {1, 0});
  CHECK_THROWS_AS(expand(store, elsewhere, EmotionSet({"a", "b"}), p),
                  InvalidArgument);
}

TEST_CASE("euclidean kernel derives sigma from the MST") {
  RowMatrix x(4, 2);
  x << 1, 0, 2, 0, 1, 5, 1.5, 0;
  SeedLexicon seed(2);
  seed.add_flags("w0", {1, 0});
  seed.add_flags("w1", {0, 1});
  PropagationParams p;
  p.kernel = Kernel::kEuclideanRbf;
  p.epsilon = 0.01;
  const auto r = expand(make_store(x), seed, EmotionSet({"a", "b"}), p);
  // w3 joins w0 and w1 first (0.5 each); the second 0.5 edge is d0.
  CHECK(r.params.sigma == doctest::Approx(0.5 / 3.0));
}

TEST_CASE("transition cache is reused") {
  std::mt19937_64 rng(12);
  const auto store = make_store(random_matrix(10, 3, rng));
  SeedLexicon seed(2);
  seed.add_flags("w1", {1, 0});
  seed.add_flags("w4", {0, 1});
  PropagationParams p;
  p.alpha = 1.0;
  p.epsilon = 0.1;
  SolverOptions o;
  o.transition_cache =
      (lexprop::testing::temp_dir("solver_cache") / "t.bin").string();
  const auto a = expand(store, seed, EmotionSet({"a", "b"}), p, o);
  CHECK(std::filesystem::exists(o.transition_cache));
  const auto b = expand(store, seed, EmotionSet({"a", "b"}), p, o);
  CHECK(a.distributions == b.distributions);
}
