#pragma once

#include "rtt/dkf.hpp"
#include "rtt/linalg.hpp"

#include <algorithm>
#include <compare>
#include <queue>
#include <vector>

namespace rtt {

/// Undirected edge stored with a < b.
struct Edge {
  int a = 0;
  int b = 0;
  Edge() = default;
  Edge(int i, int j) : a(std::min(i, j)), b(std::max(i, j)) {}
  auto operator<=>(const Edge&) const = default;
};

/// Communication graph on n nodes. Self-loops never appear in the edge list;
/// they live on the diagonal of the consensus weight matrix.
class Topology {
 public:
  Topology() = default;
  explicit Topology(int n, std::vector<Edge> edges = {}) : n_(n), edges_(std::move(edges)) {
    if (n < 0) throw std::invalid_argument("node count must be non-negative");
    for (const Edge& e : edges_) {
      if (e.a == e.b) throw std::invalid_argument("self-loops are not edges");
      if (e.a < 0 || e.b >= n) throw std::invalid_argument("edge endpoint out of range");
    }
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
  }

  static Topology line(int n) {
    std::vector<Edge> e;
    for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
    return Topology(n, std::move(e));
  }

  static Topology complete(int n) {
    std::vector<Edge> e;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
    return Topology(n, std::move(e));
  }

  int size() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t edge_count() const { return edges_.size(); }

  bool has_edge(int i, int j) const {
    if (i == j) return false;
    return std::binary_search(edges_.begin(), edges_.end(), Edge(i, j));
  }

  std::vector<int> degrees() const {
    std::vector<int> d(static_cast<std::size_t>(n_), 0);
    for (const Edge& e : edges_) {
      ++d[static_cast<std::size_t>(e.a)];
      ++d[static_cast<std::size_t>(e.b)];
    }
    return d;
  }

  std::vector<int> neighbors(int i) const {
    std::vector<int> out;
    for (const Edge& e : edges_) {
      if (e.a == i) out.push_back(e.b);
      if (e.b == i) out.push_back(e.a);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  Mat adjacency() const {
    Mat a = Mat::Zero(n_, n_);
    for (const Edge& e : edges_) a(e.a, e.b) = a(e.b, e.a) = 1.0;
    return a;
  }

  Topology with_edge(Edge e) const {
    auto edges = edges_;
    edges.push_back(e);
    return Topology(n_, std::move(edges));
  }

  bool operator==(const Topology&) const = default;

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
};

/// Communication graph together with its symmetric doubly stochastic consensus weights.
struct Configuration {
  Topology topology;
  Mat weights;
};

inline bool is_connected_bfs(const Topology& t) {
  const int n = t.size();
  if (n <= 1) return true;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (const Edge& e : t.edges()) {
    adj[static_cast<std::size_t>(e.a)].push_back(e.b);
    adj[static_cast<std::size_t>(e.b)].push_back(e.a);
  }
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!frontier.empty()) {
    const int i = frontier.front();
    frontier.pop();
    for (int j : adj[static_cast<std::size_t>(i)]) {
      if (!seen[static_cast<std::size_t>(j)]) {
        seen[static_cast<std::size_t>(j)] = 1;
        ++reached;
        frontier.push(j);
      }
    }
  }
  return reached == n;
}

inline void check_symmetric_doubly_stochastic(const Mat& w, double tol = 1e-8) {
  check_doubly_stochastic(w, tol);
  if ((w - w.transpose()).cwiseAbs().maxCoeff() > tol)
    throw std::invalid_argument("weight matrix is not symmetric");
}

/// Eigenvalues of the weights restricted to the complement of the all-ones vector.
inline Vec disagreement_spectrum(const Mat& w) {
  const auto n = w.rows();
  const Mat centered = symmetrized(w) - Mat::Constant(n, n, 1.0 / static_cast<double>(n));
  Eigen::SelfAdjointEigenSolver<Mat> es(centered, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

/// Largest eigenvalue on the disagreement subspace; below 1 iff the support is connected.
inline double second_eigenvalue(const Mat& w) {
  if (w.rows() <= 1) return 0.0;
  return disagreement_spectrum(w).maxCoeff();
}

/// Second-largest eigenvalue magnitude, the asymptotic consensus contraction rate.
inline double second_eigenvalue_magnitude(const Mat& w) {
  if (w.rows() <= 1) return 0.0;
  return disagreement_spectrum(w).cwiseAbs().maxCoeff();
}

/// LMI test (1/n) 11^T + (1 - mu) I - A >= 0 on a doubly stochastic A.
inline bool is_connected_spectral(const Mat& weights, double mu) {
  check_symmetric_doubly_stochastic(weights);
  const auto n = weights.rows();
  const Mat lmi = Mat::Constant(n, n, 1.0 / static_cast<double>(n)) + (1.0 - mu) * Mat::Identity(n, n) - weights;
  return min_eigenvalue(lmi) >= -1e-9;
}

inline bool is_connected_spectral(const Configuration& c, double mu) { return is_connected_spectral(c.weights, mu); }

/// Squared Frobenius distance between adjacency matrices: twice the number of toggled edges.
inline double frobenius_edge_distance(const Topology& t1, const Topology& t2) {
  if (t1.size() != t2.size()) throw std::invalid_argument("topologies have different node counts");
  std::vector<Edge> diff;
  std::set_symmetric_difference(t1.edges().begin(), t1.edges().end(), t2.edges().begin(), t2.edges().end(),
                                std::back_inserter(diff));
  return 2.0 * static_cast<double>(diff.size());
}

/// Metropolis-Hastings weights; on a disconnected graph each component gets its own block.
inline Mat metropolis_matrix(const Topology& t) {
  const int n = t.size();
  const auto deg = t.degrees();
  Mat w = Mat::Zero(n, n);
  for (const Edge& e : t.edges()) {
    const int d = std::max(deg[static_cast<std::size_t>(e.a)], deg[static_cast<std::size_t>(e.b)]);
    w(e.a, e.b) = w(e.b, e.a) = 1.0 / (1.0 + d);
  }
  for (int i = 0; i < n; ++i) w(i, i) = 1.0 - (w.row(i).sum());
  return w;
}

inline Configuration metropolis_weights(const Topology& t) {
  if (!is_connected_bfs(t)) throw std::invalid_argument("Metropolis weights need a connected topology");
  return Configuration{t, metropolis_matrix(t)};
}

/// Checks every invariant of a finalized configuration.
inline void validate_configuration(const Configuration& c, double mu, double tol = 1e-9) {
  const int n = c.topology.size();
  if (c.weights.rows() != n || c.weights.cols() != n) throw std::invalid_argument("weight matrix has wrong shape");
  check_symmetric_doubly_stochastic(c.weights, tol);
  for (int i = 0; i < n; ++i) {
    if (!(c.weights(i, i) > 0.0)) throw std::invalid_argument("weight matrix needs a positive diagonal");
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double a = c.weights(i, j);
      if (a < -tol) throw std::invalid_argument("negative consensus weight");
      if ((a > 0.0) != c.topology.has_edge(i, j))
        throw std::invalid_argument("weight support does not match the topology");
    }
  }
  if (!is_connected_spectral(c.weights, mu)) throw std::invalid_argument("configuration fails the connectivity LMI");
}

enum class BudgetMode { add_only, toggle };

/// A candidate topology and the edges toggled to reach it from the base.
struct TopologyCandidate {
  Topology topology;
  std::vector<Edge> modified;
};

/// Every connected topology reachable from `base` by changing at most
/// `max_edits` edges, ordered lexicographically by the set of changed edges.
inline std::vector<TopologyCandidate> enumerate_candidates(const Topology& base, int max_edits, BudgetMode mode) {
  if (max_edits < 0) throw std::invalid_argument("edit budget must be non-negative");
  const int n = base.size();
  std::vector<Edge> pool;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (mode == BudgetMode::toggle || !base.has_edge(i, j)) pool.emplace_back(i, j);

  std::vector<std::vector<Edge>> modified_sets;
  std::vector<Edge> current;
  auto recurse = [&](auto&& self, std::size_t start) -> void {
    modified_sets.push_back(current);
    if (static_cast<int>(current.size()) == max_edits) return;
    for (std::size_t k = start; k < pool.size(); ++k) {
      current.push_back(pool[k]);
      self(self, k + 1);
      current.pop_back();
    }
  };
  recurse(recurse, 0);
  std::sort(modified_sets.begin(), modified_sets.end());

  std::vector<TopologyCandidate> out;
  for (auto& mod : modified_sets) {
    std::vector<Edge> edges;
    std::set_symmetric_difference(base.edges().begin(), base.edges().end(), mod.begin(), mod.end(),
                                  std::back_inserter(edges));
    Topology t(n, std::move(edges));
    if (is_connected_bfs(t)) out.push_back({std::move(t), std::move(mod)});
  }
  return out;
}

inline std::vector<Topology> enumerate_topologies(const Topology& base, int max_edits, BudgetMode mode) {
  std::vector<Topology> out;
  for (auto& c : enumerate_candidates(base, max_edits, mode)) out.push_back(std::move(c.topology));
  return out;
}

}  // namespace rtt
