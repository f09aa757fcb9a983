#include "lexprop/propagation_graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>

#include "lexprop/error.hpp"
#include "text_util.hpp"

namespace lexprop {

std::string to_string(Kernel k) {
  return k == Kernel::kCosineLogistic ? "cosine" : "euclidean";
}

std::string to_string(Normalization n) {
  return n == Normalization::kColumnThenRow ? "column-row" : "row";
}

Kernel parse_kernel(const std::string& s) {
  if (s == "cosine" || s == "cosine-logistic") return Kernel::kCosineLogistic;
  if (s == "euclidean" || s == "euclidean-rbf") return Kernel::kEuclideanRbf;
  throw ConfigError("unknown kernel '" + s + "'");
}

Normalization parse_normalization(const std::string& s) {
  if (s == "column-row") return Normalization::kColumnThenRow;
  if (s == "row") return Normalization::kRowOnly;
  throw ConfigError("unknown normalization '" + s + "'");
}

void PropagationParams::validate(std::size_t dim) const {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw ConfigError("epsilon must be in [0, 1), got " +
                      format_double(epsilon));
  }
  if (kernel == Kernel::kCosineLogistic) {
    if (!std::isfinite(alpha) || !std::isfinite(bias)) {
      throw ConfigError("alpha and bias must be finite");
    }
    if (alpha_vector) {
      if (static_cast<std::size_t>(alpha_vector->size()) != dim) {
        throw ConfigError("alpha vector has " +
                          std::to_string(alpha_vector->size()) +
                          " components, embeddings have " +
                          std::to_string(dim));
      }
      if (!alpha_vector->allFinite()) {
        throw ConfigError("alpha vector must be finite");
      }
    }
  } else {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw ConfigError("euclidean kernel requires sigma > 0");
    }
  }
}

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double edge_weight(std::span<const double> xi, std::span<const double> xj,
                   const PropagationParams& params) {
  if (xi.size() != xj.size()) {
    throw InvalidArgument("edge_weight: dimension mismatch");
  }
  const std::size_t d = xi.size();
  double w = 0.0;
  if (params.kernel == Kernel::kEuclideanRbf) {
    double sq = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = xi[k] - xj[k];
      sq += diff * diff;
    }
    w = std::exp(-sq / (params.sigma * params.sigma));
  } else {
    double ni = 0.0;
    double nj = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      ni += xi[k] * xi[k];
      nj += xj[k] * xj[k];
    }
    ni = std::sqrt(ni);
    nj = std::sqrt(nj);
    if (ni == 0.0 || nj == 0.0) {
      throw InvalidArgument("edge_weight: zero vector");
    }
    double z = 0.0;
    if (params.alpha_vector) {
      const auto& a = *params.alpha_vector;
      if (static_cast<std::size_t>(a.size()) != d) {
        throw InvalidArgument("edge_weight: alpha vector size mismatch");
      }
      for (std::size_t k = 0; k < d; ++k) {
        z += a[static_cast<Eigen::Index>(k)] * ((xi[k] / ni) * (xj[k] / nj));
      }
    } else {
      double dot = 0.0;
      for (std::size_t k = 0; k < d; ++k) dot += (xi[k] / ni) * (xj[k] / nj);
      z = params.alpha * dot;
    }
    w = logistic(z + params.bias);
  }
  if (!std::isfinite(w)) throw NumericalError("edge_weight: non-finite weight");
  return w;
}

std::vector<std::size_t> labeled_first_order(const std::vector<bool>& labeled,
                                             std::size_t* num_labeled) {
  std::vector<std::size_t> order;
  order.reserve(labeled.size());
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    if (labeled[i]) order.push_back(i);
  }
  if (num_labeled) *num_labeled = order.size();
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    if (!labeled[i]) order.push_back(i);
  }
  return order;
}

const RowMatrix& TransitionMatrix::dense() const {
  if (!is_dense()) {
    throw InvalidArgument(
        "transition matrix is streamed; dense access is unavailable");
  }
  return dense_;
}

Eigen::MatrixXd TransitionMatrix::weight_rows(std::size_t begin,
                                              std::size_t end) const {
  const auto rows = nodes_.middleRows(static_cast<Eigen::Index>(begin),
                                      static_cast<Eigen::Index>(end - begin));
  const auto n = nodes_.rows();
  Eigen::MatrixXd w(rows.rows(), n);
  if (params_.kernel == Kernel::kEuclideanRbf) {
    const double inv = 1.0 / (params_.sigma * params_.sigma);
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        w(i, j) = std::exp(-(rows.row(i) - nodes_.row(j)).squaredNorm() * inv);
      }
    }
    return w;
  }
  if (params_.alpha_vector) {
    w.noalias() =
        (rows * params_.alpha_vector->asDiagonal()) * nodes_.transpose();
  } else {
    w.noalias() = rows * nodes_.transpose();
    w *= params_.alpha;
  }
  w = w.unaryExpr([b = params_.bias](double z) { return logistic(z + b); });
  return w;
}

namespace {

void check_positive(const Eigen::VectorXd& sums, const char* what) {
  for (Eigen::Index i = 0; i < sums.size(); ++i) {
    if (!(sums[i] > 0.0) || !std::isfinite(sums[i])) {
      throw NumericalError(std::string("degenerate transition matrix: ") +
                           what + " " + std::to_string(i) +
                           " has zero or non-finite mass (weights "
                           "underflowed; try smaller |alpha|, a larger "
                           "sigma, or smoothing)");
    }
  }
}

}  // namespace

TransitionMatrix build_transition(const EmbeddingStore& store,
                                  const PropagationParams& params,
                                  const std::vector<bool>& labeled,
                                  std::size_t dense_node_threshold) {
  params.validate(store.dim());
  if (labeled.size() != store.size()) {
    throw InvalidArgument("labeled mask size does not match vocabulary");
  }
  TransitionMatrix t;
  t.order_ = labeled_first_order(labeled, &t.num_labeled_);
  if (t.num_labeled_ == 0) {
    throw InvalidArgument("propagation needs at least one labeled node");
  }
  if (t.num_unlabeled() == 0) {
    throw InvalidArgument("propagation needs at least one unlabeled node");
  }
  t.params_ = params;
  t.epsilon_ = params.epsilon;
  const RowMatrix& source = params.kernel == Kernel::kCosineLogistic
                                ? store.unit_vectors()
                                : store.vectors();
  const std::size_t n = t.order_.size();
  t.nodes_.resize(static_cast<Eigen::Index>(n), source.cols());
  for (std::size_t p = 0; p < n; ++p) {
    t.nodes_.row(static_cast<Eigen::Index>(p)) =
        source.row(static_cast<Eigen::Index>(t.order_[p]));
  }

  if (n <= dense_node_threshold) {
    Eigen::MatrixXd w = t.weight_rows(0, n);
    if (params.normalization == Normalization::kColumnThenRow) {
      const Eigen::VectorXd col = w.colwise().sum().transpose();
      check_positive(col, "column");
      w = w * col.cwiseInverse().asDiagonal();
    }
    const Eigen::VectorXd row = w.rowwise().sum();
    check_positive(row, "row");
    w = row.cwiseInverse().asDiagonal() * w;
    t.dense_ = smooth_transition(RowMatrix(w), params.epsilon);
    t.nodes_.resize(0, 0);
    return t;
  }

  const Eigen::Index nn = static_cast<Eigen::Index>(n);
  t.col_scale_ = Eigen::VectorXd::Ones(nn);
  if (params.normalization == Normalization::kColumnThenRow) {
    Eigen::VectorXd col = Eigen::VectorXd::Zero(nn);
    for (std::size_t b = 0; b < n; b += t.block_rows_) {
      const std::size_t e = std::min(n, b + t.block_rows_);
      col += t.weight_rows(b, e).colwise().sum().transpose();
    }
    check_positive(col, "column");
    t.col_scale_ = col.cwiseInverse();
  }
  t.row_scale_.resize(nn);
  for (std::size_t b = 0; b < n; b += t.block_rows_) {
    const std::size_t e = std::min(n, b + t.block_rows_);
    t.row_scale_.segment(static_cast<Eigen::Index>(b),
                         static_cast<Eigen::Index>(e - b)) =
        t.weight_rows(b, e) * t.col_scale_;
  }
  check_positive(t.row_scale_, "row");
  t.row_scale_ = t.row_scale_.cwiseInverse();
  return t;
}

Eigen::MatrixXd TransitionMatrix::apply_unlabeled(
    const Eigen::MatrixXd& y) const {
  if (static_cast<std::size_t>(y.rows()) != size()) {
    throw InvalidArgument("apply_unlabeled: row count mismatch");
  }
  if (is_dense()) {
    return dense_.bottomRows(static_cast<Eigen::Index>(num_unlabeled())) * y;
  }
  const std::size_t n = size();
  Eigen::MatrixXd out(num_unlabeled(), y.cols());
  const Eigen::RowVectorXd uniform_part =
      (epsilon_ / static_cast<double>(n)) * y.colwise().sum();
  for (std::size_t b = num_labeled_; b < n; b += block_rows_) {
    const std::size_t e = std::min(n, b + block_rows_);
    const auto len = static_cast<Eigen::Index>(e - b);
    Eigen::MatrixXd blk = weight_rows(b, e) * col_scale_.asDiagonal();
    blk = row_scale_.segment(static_cast<Eigen::Index>(b), len).asDiagonal() *
          blk;
    out.middleRows(static_cast<Eigen::Index>(b - num_labeled_), len) =
        ((1.0 - epsilon_) * (blk * y)).rowwise() + uniform_part;
  }
  return out;
}

Eigen::RowVectorXd TransitionMatrix::row(std::size_t node) const {
  if (node >= size()) throw InvalidArgument("row: node out of range");
  if (is_dense()) return dense_.row(static_cast<Eigen::Index>(node));
  Eigen::RowVectorXd r = weight_rows(node, node + 1).row(0);
  r = r.cwiseProduct(col_scale_.transpose()) *
      row_scale_[static_cast<Eigen::Index>(node)];
  return (1.0 - epsilon_) * r.array() + epsilon_ / static_cast<double>(size());
}

TransitionMatrix TransitionMatrix::from_dense(RowMatrix t,
                                              std::vector<std::size_t> order,
                                              std::size_t num_labeled,
                                              double epsilon) {
  if (t.rows() != t.cols() ||
      static_cast<std::size_t>(t.rows()) != order.size()) {
    throw InvalidArgument("from_dense: shape does not match order");
  }
  if (num_labeled > order.size()) {
    throw InvalidArgument("from_dense: num_labeled exceeds size");
  }
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    if ((t.row(i).array() < 0.0).any() ||
        std::abs(t.row(i).sum() - 1.0) > 1e-9) {
      throw InvalidArgument("from_dense: row " + std::to_string(i) +
                            " is not stochastic");
    }
  }
  TransitionMatrix m;
  m.dense_ = std::move(t);
  m.order_ = std::move(order);
  m.num_labeled_ = num_labeled;
  m.epsilon_ = epsilon;
  return m;
}

RowMatrix smooth_transition(const RowMatrix& t, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw InvalidArgument("smoothing epsilon must be in [0, 1)");
  }
  if (epsilon == 0.0) return t;
  const double u = epsilon / static_cast<double>(t.cols());
  return ((1.0 - epsilon) * t.array() + u).matrix();
}

TransitionMatrix smooth_transition(const TransitionMatrix& t, double epsilon) {
  // Smoothing a smoothed matrix composes: 1 - e' = (1 - e)(1 - epsilon).
  RowMatrix s = smooth_transition(t.dense(), epsilon);
  const double combined = 1.0 - (1.0 - t.epsilon()) * (1.0 - epsilon);
  return TransitionMatrix::from_dense(std::move(s), t.order(), t.num_labeled(),
                                      combined);
}

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv(std::uint64_t& h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

template <typename T>
void fnv_value(std::uint64_t& h, const T& v) {
  fnv(h, &v, sizeof(T));
}

constexpr char kCacheMagic[4] = {'L', 'X', 'P', 'T'};
constexpr std::uint32_t kCacheVersion = 1;

}  // namespace

std::uint64_t transition_fingerprint(const EmbeddingStore& store,
                                     const PropagationParams& params,
                                     const std::vector<bool>& labeled) {
  std::uint64_t h = kFnvOffset;
  fnv_value(h, static_cast<int>(params.kernel));
  fnv_value(h, static_cast<int>(params.normalization));
  fnv_value(h, params.alpha);
  if (params.alpha_vector) {
    fnv(h, params.alpha_vector->data(),
        sizeof(double) * static_cast<std::size_t>(params.alpha_vector->size()));
  }
  fnv_value(h, params.bias);
  fnv_value(h, params.epsilon);
  fnv_value(h, params.sigma);
  fnv_value(h, store.size());
  fnv_value(h, store.dim());
  for (const auto& w : store.vocab().words()) {
    fnv(h, w.data(), w.size());
    fnv_value(h, '\0');
  }
  fnv(h, store.vectors().data(),
      sizeof(double) * static_cast<std::size_t>(store.vectors().size()));
  for (bool b : labeled) fnv_value(h, static_cast<char>(b));
  return h;
}

void save_transition_cache(const std::string& path, const TransitionMatrix& t,
                           std::uint64_t fingerprint) {
  const RowMatrix& d = t.dense();
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp);
    const std::uint64_t n = t.size();
    const std::uint64_t l = t.num_labeled();
    const double eps = t.epsilon();
    out.write(kCacheMagic, sizeof(kCacheMagic));
    out.write(reinterpret_cast<const char*>(&kCacheVersion),
              sizeof(kCacheVersion));
    out.write(reinterpret_cast<const char*>(&fingerprint), sizeof(fingerprint));
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(&l), sizeof(l));
    out.write(reinterpret_cast<const char*>(&eps), sizeof(eps));
    for (std::size_t idx : t.order()) {
      const std::uint64_t v = idx;
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
    out.write(reinterpret_cast<const char*>(d.data()),
              static_cast<std::streamsize>(sizeof(double) * d.size()));
    if (!out.flush()) throw Error("write failed for " + tmp);
  }
  std::rename(tmp.c_str(), path.c_str());
}

std::optional<TransitionMatrix> load_transition_cache(
    const std::string& path, std::uint64_t fingerprint) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[4];
  std::uint32_t version = 0;
  std::uint64_t stored = 0, n = 0, l = 0;
  double eps = 0.0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&stored), sizeof(stored));
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  in.read(reinterpret_cast<char*>(&l), sizeof(l));
  in.read(reinterpret_cast<char*>(&eps), sizeof(eps));
  if (!in || std::memcmp(magic, kCacheMagic, sizeof(magic)) != 0 ||
      version != kCacheVersion) {
    throw ParseError(path, 0, "not a transition cache file");
  }
  if (stored != fingerprint) return std::nullopt;
  std::vector<std::size_t> order(n);
  for (auto& idx : order) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    idx = v;
  }
  RowMatrix d(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  in.read(reinterpret_cast<char*>(d.data()),
          static_cast<std::streamsize>(sizeof(double) * d.size()));
  if (!in) throw ParseError(path, 0, "truncated transition cache");
  return TransitionMatrix::from_dense(std::move(d), std::move(order), l, eps);
}

MstSigma mst_sigma(const EmbeddingStore& store,
                   std::span<const int> label_ids) {
  const std::size_t n = store.size();
  if (label_ids.size() != n) {
    throw InvalidArgument("mst_sigma: label id count does not match store");
  }
  {
    std::vector<int> distinct;
    for (int id : label_ids) {
      if (id >= 0) distinct.push_back(id);
    }
    std::sort(distinct.begin(), distinct.end());
    if (std::unique(distinct.begin(), distinct.end()) - distinct.begin() < 2) {
      throw InvalidArgument(
          "mst_sigma needs labeled nodes carrying at least two distinct "
          "labels");
    }
  }

  struct Edge {
    double dist;
    std::uint32_t i;
    std::uint32_t j;
  };
  std::vector<Edge> edges;
  edges.reserve(n * (n - 1) / 2);
  const RowMatrix& x = store.vectors();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      edges.push_back({(x.row(static_cast<Eigen::Index>(i)) -
                        x.row(static_cast<Eigen::Index>(j)))
                           .norm(),
                       static_cast<std::uint32_t>(i),
                       static_cast<std::uint32_t>(j)});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });

  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  // Label carried by each root; -1 when its component has no labeled node.
  std::vector<int> label(label_ids.begin(), label_ids.end());
  for (auto& v : label) v = std::max(v, -1);
  auto find = [&](std::size_t v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  };

  for (const auto& e : edges) {
    const std::size_t a = find(e.i);
    const std::size_t b = find(e.j);
    if (a == b) continue;
    if (label[a] >= 0 && label[b] >= 0 && label[a] != label[b]) {
      if (!(e.dist > 0.0)) {
        throw NumericalError(
            "mst_sigma: differently-labeled points coincide (d0 = 0)");
      }
      return {e.dist / 3.0, e.dist, e.i, e.j};
    }
    parent[b] = a;
    if (label[a] < 0) label[a] = label[b];
  }
  throw NumericalError("mst_sigma: no edge joins differently-labeled points");
}

std::vector<int> distinct_label_ids(const Eigen::MatrixXd& rows,
                                    const std::vector<bool>& labeled) {
  std::map<std::vector<double>, int> ids;
  std::vector<int> out(labeled.size(), -1);
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    if (!labeled[i]) continue;
    std::vector<double> key(static_cast<std::size_t>(rows.cols()));
    for (Eigen::Index k = 0; k < rows.cols(); ++k) {
      key[static_cast<std::size_t>(k)] = rows(static_cast<Eigen::Index>(i), k);
    }
    auto [it, inserted] = ids.try_emplace(key, static_cast<int>(ids.size()));
    out[i] = it->second;
  }
  return out;
}

}  // namespace lexprop
