#pragma once

// Helpers shared by the unit tests and the acceptance suite.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "lexprop/lexicon.hpp"
#include "lexprop/vocab_embeddings.hpp"

namespace lexprop::testing {

inline std::string fixture(const std::string& name) {
  return std::string(LEXPROP_FIXTURE_DIR) + "/" + name;
}

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
  namespace fs = std::filesystem;
  const fs::path p = fs::temp_directory_path() / ("lexprop_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Store with tokens w0..w{n-1}.
inline EmbeddingStore make_store(const RowMatrix& x) {
  Vocabulary v;
  for (Eigen::Index i = 0; i < x.rows(); ++i) v.add("w" + std::to_string(i));
  return EmbeddingStore(std::move(v), x);
}

inline RowMatrix random_matrix(std::size_t n, std::size_t d,
                               std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  RowMatrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  return x;
}

// Two Gaussian clusters around +c and -c along a random direction.
struct TwoClusters {
  RowMatrix x;
  std::vector<int> cluster;  // 0 or 1 per row
};

inline TwoClusters two_clusters(std::size_t n, std::size_t d, double separation,
                                double noise, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd dir(static_cast<Eigen::Index>(d));
  for (auto& v : dir) v = g(rng);
  dir.normalize();
  TwoClusters out;
  out.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  out.cluster.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % 2);
    out.cluster[i] = c;
    const double sign = c == 0 ? 1.0 : -1.0;
    for (std::size_t k = 0; k < d; ++k) {
      out.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          sign * separation * dir[static_cast<Eigen::Index>(k)] + noise * g(rng);
    }
  }
  return out;
}

// Seeds every `stride`-th member of each cluster with its one-hot label.
inline SeedLexicon cluster_seed(const TwoClusters& tc, std::size_t stride,
                                std::size_t num_classes, std::size_t class0,
                                std::size_t class1) {
  SeedLexicon seed(num_classes);
  std::size_t seen[2] = {0, 0};
  for (std::size_t i = 0; i < tc.cluster.size(); ++i) {
    const int c = tc.cluster[i];
    if (seen[c]++ % stride != 0) continue;
    Flags f(num_classes, 0);
    f[c == 0 ? class0 : class1] = 1;
    seed.add_flags("w" + std::to_string(i), f);
  }
  return seed;
}

}  // namespace lexprop::testing
