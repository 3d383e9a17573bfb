#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "idense/error.hpp"
#include "idense/random.hpp"

namespace idense {

/// Pretrained word vectors, stored row-major in one contiguous buffer.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(int dimension = 50, bool casefold = true) : dim_(dimension), casefold_(casefold) {}

  /// Adds a word; returns false (and keeps the existing vector) when it is already present.
  bool insert(std::string_view word, const Eigen::Ref<const Eigen::VectorXd>& vector);

  std::optional<Eigen::Index> find(std::string_view word) const;
  Eigen::Map<const Eigen::VectorXd> row(Eigen::Index i) const {
    return {data_.data() + i * dim_, dim_};
  }
  /// Vector of `word`, if present.
  std::optional<Eigen::VectorXd> lookup(std::string_view word) const;

  int dimension() const { return dim_; }
  bool casefold() const { return casefold_; }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  std::size_t duplicates() const { return duplicates_; }
  void count_duplicate() { ++duplicates_; }

 private:
  std::string key(std::string_view word) const;

  int dim_;
  bool casefold_;
  std::vector<double> data_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, Eigen::Index> index_;
  std::size_t duplicates_ = 0;
};

/// Reads `word v1 ... v_dim` lines. A leading "count dim" header line is skipped. Duplicate
/// words keep their first vector.
EmbeddingTable load_embeddings(const std::filesystem::path& path, int expected_dim = 50, bool casefold = true);
EmbeddingTable parse_embeddings(std::string_view text, int expected_dim = 50, bool casefold = true,
                                std::string_view context = "embeddings");

/// Centroids plus per-cluster distance statistics.
template <typename Scalar>
struct BasicClusterModel {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix centroids;  // k x dim
  Vector mu;         // mean distance of members to their centroid
  Vector sigma;      // population sd of those distances
  std::uint64_t seed = 0;
  std::vector<std::string> training_vocab;

  Eigen::Index k() const { return centroids.rows(); }
  Eigen::Index dimension() const { return centroids.cols(); }
};

using ClusterModel = BasicClusterModel<double>;

template <typename Scalar>
struct NearestCentroid {
  Eigen::Index cluster = 0;
  Scalar distance = 0;  // Euclidean
};

/// Nearest centroid by Euclidean distance; ties go to the lowest index.
template <typename Scalar, typename Derived>
NearestCentroid<Scalar> nearest_centroid(const Eigen::MatrixBase<Derived>& point,
                                         const typename BasicClusterModel<Scalar>::Matrix& centroids) {
  NearestCentroid<Scalar> best{0, std::numeric_limits<Scalar>::infinity()};
  Scalar best_sq = std::numeric_limits<Scalar>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const Scalar sq = (centroids.row(c).transpose() - point).squaredNorm();
    if (sq < best_sq) {
      best_sq = sq;
      best.cluster = c;
    }
  }
  best.distance = std::sqrt(best_sq);
  return best;
}

template <typename Scalar>
struct KMeansResult {
  BasicClusterModel<Scalar> model;
  std::vector<Eigen::Index> assignment;
  Scalar sse = 0;
  /// Within-cluster SSE after every assignment step, one list per restart.
  std::vector<std::vector<Scalar>> sse_history;
};

struct KMeansOptions {
  int k = 10;
  std::uint64_t seed = 0;
  int max_iter = 300;
  int restarts = 10;
};

namespace detail {

template <typename Scalar, typename Derived>
Scalar assign_points(const Eigen::MatrixBase<Derived>& points,
                     const typename BasicClusterModel<Scalar>::Matrix& centroids,
                     std::vector<Eigen::Index>& assignment) {
  Scalar sse = 0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const auto nc = nearest_centroid<Scalar>(points.row(i).transpose(), centroids);
    assignment[static_cast<std::size_t>(i)] = nc.cluster;
    sse += nc.distance * nc.distance;
  }
  return sse;
}

template <typename Scalar, typename Derived>
typename BasicClusterModel<Scalar>::Matrix kmeans_plus_plus(const Eigen::MatrixBase<Derived>& points, int k,
                                                            Rng& rng) {
  const Eigen::Index n = points.rows();
  typename BasicClusterModel<Scalar>::Matrix centroids(k, points.cols());
  centroids.row(0) = points.row(static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(n))));
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> d2(n);
  for (Eigen::Index i = 0; i < n; ++i) d2(i) = (points.row(i) - centroids.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    const Scalar total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0) {
      Scalar target = static_cast<Scalar>(rng.uniform()) * total;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= d2(i);
        if (target < 0 && d2(i) > 0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(n)));
    }
    centroids.row(c) = points.row(pick);
    for (Eigen::Index i = 0; i < n; ++i) d2(i) = std::min(d2(i), (points.row(i) - centroids.row(c)).squaredNorm());
  }
  return centroids;
}

}  // namespace detail

/// Lloyd's algorithm from k-means++ seeding; the best of `restarts` runs by SSE is kept.
/// Rows of `points` are observations. An emptied cluster is re-seeded at the point farthest
/// from its previous centroid. Deterministic given the seed.
template <typename Derived>
KMeansResult<typename Derived::Scalar> kmeans(const Eigen::MatrixBase<Derived>& points, const KMeansOptions& options) {
  using Scalar = typename Derived::Scalar;
  using Matrix = typename BasicClusterModel<Scalar>::Matrix;
  const Eigen::Index n = points.rows();
  const int k = options.k;
  if (k < 1) throw ValidationError("kmeans: k must be at least 1");
  if (n < k)
    throw ValidationError("kmeans: " + std::to_string(n) + " vectors is fewer than k = " + std::to_string(k));
  if (!points.allFinite()) throw ValidationError("kmeans: non-finite vector component");

  KMeansResult<Scalar> best;
  best.sse = std::numeric_limits<Scalar>::infinity();
  const int restarts = std::max(1, options.restarts);
  for (int run = 0; run < restarts; ++run) {
    Rng rng(derive_seed(options.seed, SeedStream::kmeans_restart, static_cast<std::uint64_t>(run)));
    Matrix centroids = detail::kmeans_plus_plus<Scalar>(points, k, rng);
    std::vector<Eigen::Index> assignment(static_cast<std::size_t>(n), 0);
    std::vector<Scalar> history{detail::assign_points<Scalar>(points, centroids, assignment)};

    for (int iter = 0; iter < options.max_iter; ++iter) {
      Matrix sums = Matrix::Zero(k, points.cols());
      std::vector<Eigen::Index> sizes(static_cast<std::size_t>(k), 0);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto c = assignment[static_cast<std::size_t>(i)];
        sums.row(c) += points.row(i);
        ++sizes[static_cast<std::size_t>(c)];
      }
      std::vector<bool> taken(static_cast<std::size_t>(n), false);
      for (int c = 0; c < k; ++c) {
        if (sizes[static_cast<std::size_t>(c)] > 0) {
          centroids.row(c) = sums.row(c) / static_cast<Scalar>(sizes[static_cast<std::size_t>(c)]);
          continue;
        }
        Eigen::Index far = -1;
        Scalar far_d = -1;
        for (Eigen::Index i = 0; i < n; ++i) {
          if (taken[static_cast<std::size_t>(i)]) continue;
          const Scalar d = (points.row(i) - centroids.row(c)).squaredNorm();
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        if (far >= 0) {
          taken[static_cast<std::size_t>(far)] = true;
          centroids.row(c) = points.row(far);
        }
      }
      auto previous = assignment;
      history.push_back(detail::assign_points<Scalar>(points, centroids, assignment));
      if (assignment == previous) break;
    }

    const Scalar sse = history.back();
    best.sse_history.push_back(history);
    if (sse < best.sse) {
      best.sse = sse;
      best.model.centroids = centroids;
      best.assignment = assignment;
    }
  }
  best.model.seed = options.seed;
  best.model.mu = BasicClusterModel<Scalar>::Vector::Zero(k);
  best.model.sigma = BasicClusterModel<Scalar>::Vector::Zero(k);
  return best;
}

/// Fills mu and sigma: mean and population sd of member distances to their nearest centroid.
/// Empty clusters get mu = sigma = 0.
template <typename Scalar, typename Derived>
void fit_cluster_stats(BasicClusterModel<Scalar>& model, const Eigen::MatrixBase<Derived>& points) {
  const auto k = model.k();
  std::vector<std::vector<Scalar>> dist(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const auto nc = nearest_centroid<Scalar>(points.row(i).transpose(), model.centroids);
    dist[static_cast<std::size_t>(nc.cluster)].push_back(nc.distance);
  }
  model.mu = BasicClusterModel<Scalar>::Vector::Zero(k);
  model.sigma = BasicClusterModel<Scalar>::Vector::Zero(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto& d = dist[static_cast<std::size_t>(c)];
    if (d.empty()) continue;
    Scalar sum = 0;
    for (Scalar x : d) sum += x;
    const Scalar m = sum / static_cast<Scalar>(d.size());
    Scalar ss = 0;
    for (Scalar x : d) ss += (x - m) * (x - m);
    model.mu(c) = m;
    model.sigma(c) = std::sqrt(ss / static_cast<Scalar>(d.size()));
  }
}

template <typename Scalar>
struct ScaledDistance {
  Eigen::Index cluster = 0;
  Scalar distance = 0;
  Scalar scaled = 0;
};

/// z-score of the distance to the nearest centroid: (d - mu) / sigma. With sigma = 0 the
/// result is 0 when d equals mu and +infinity otherwise.
template <typename Scalar, typename Derived>
ScaledDistance<Scalar> scaled_distance(const Eigen::MatrixBase<Derived>& vector,
                                       const BasicClusterModel<Scalar>& model) {
  if (vector.size() != model.dimension())
    throw ValidationError("scaled_distance: vector has dimension " + std::to_string(vector.size()) +
                          ", model has " + std::to_string(model.dimension()));
  const auto nc = nearest_centroid<Scalar>(vector, model.centroids);
  ScaledDistance<Scalar> out{nc.cluster, nc.distance, 0};
  const Scalar mu = model.mu(nc.cluster);
  const Scalar sigma = model.sigma(nc.cluster);
  if (sigma == 0)
    out.scaled = nc.distance == mu ? Scalar(0) : std::numeric_limits<Scalar>::infinity();
  else
    out.scaled = (nc.distance - mu) / sigma;
  return out;
}

/// Clusters the vectors of `words` (one row per in-vocabulary word type) and fits the
/// distance statistics. Words missing from the table are skipped.
ClusterModel fit_cluster_model(const std::vector<std::string>& words, const EmbeddingTable& table,
                               const KMeansOptions& options);

inline constexpr int kClusterModelFormatVersion = 1;

std::string cluster_model_to_json(const ClusterModel& model);
ClusterModel cluster_model_from_json(std::string_view text);
void save_cluster_model(const ClusterModel& model, const std::filesystem::path& path);
ClusterModel load_cluster_model(const std::filesystem::path& path);

}  // namespace idense
