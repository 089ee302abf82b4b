#include "mazo/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "mazo/errors.hpp"
#include "mazo/rng.hpp"

namespace mazo {

std::vector<std::vector<int>> Graph::adjacency() const {
  std::vector<std::set<int>> nbr(n);
  for (const auto& [a, b] : edges) {
    if (a < 0 || a >= n || b < 0 || b >= n)
      throw DimensionMismatch("edge endpoint out of range");
    if (a == b) continue;
    nbr[a].insert(b);
    nbr[b].insert(a);
  }
  std::vector<std::vector<int>> out(n);
  for (int i = 0; i < n; ++i) out[i].assign(nbr[i].begin(), nbr[i].end());
  return out;
}

Graph complete_graph(int n) {
  Graph g{n, {}};
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) g.edges.emplace_back(i, j);
  return g;
}

Graph ring_graph(int n) {
  Graph g{n, {}};
  if (n == 2) {
    g.edges.emplace_back(0, 1);
    return g;
  }
  for (int i = 0; i < n; ++i) g.edges.emplace_back(i, (i + 1) % n);
  return g;
}

Graph path_graph(int n) {
  Graph g{n, {}};
  for (int i = 0; i + 1 < n; ++i) g.edges.emplace_back(i, i + 1);
  return g;
}

Graph star_graph(int n) {
  Graph g{n, {}};
  for (int i = 1; i < n; ++i) g.edges.emplace_back(0, i);
  return g;
}

bool is_connected(const Graph& g) {
  if (g.n <= 0) return false;
  if (g.n == 1) return true;
  const auto adj = g.adjacency();
  std::vector<char> seen(g.n, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int count = 1;
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    for (int w : adj[v]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        q.push(w);
      }
    }
  }
  return count == g.n;
}

Graph erdos_renyi_connected(int n, double p, std::uint64_t seed,
                            int max_attempts) {
  if (n <= 0 || p <= 0.0 || p > 1.0)
    throw ConfigError("erdos_renyi_connected: need n > 0 and p in (0, 1]");
  SplitMix64 gen(mix64(seed ^ 0xe7037ed1a0b428dbULL));
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    Graph g{n, {}};
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (gen.uniform01_halfopen() < p) g.edges.emplace_back(i, j);
    if (is_connected(g)) return g;
  }
  throw DisconnectedGraph(
      "erdos_renyi_connected: no connected sample within attempt budget");
}

Graph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open graph file: " + path);
  Graph g;
  if (!(in >> g.n) || g.n <= 0)
    throw ConfigError("graph file must start with a positive node count");
  int a, b;
  while (in >> a >> b) g.edges.emplace_back(a, b);
  return g;
}

void save_graph(const Graph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write graph file: " + path);
  out << g.n << "\n";
  for (const auto& [a, b] : g.edges) out << a << " " << b << "\n";
}

Eigen::MatrixXi shortest_path_distances(const Graph& g) {
  const auto adj = g.adjacency();
  const int n = g.n;
  Eigen::MatrixXi dist = Eigen::MatrixXi::Constant(n, n, -1);
  for (int s = 0; s < n; ++s) {
    dist(s, s) = 0;
    std::queue<int> q;
    q.push(s);
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      for (int w : adj[v]) {
        if (dist(s, w) < 0) {
          dist(s, w) = dist(s, v) + 1;
          q.push(w);
        }
      }
    }
  }
  if ((dist.array() < 0).any())
    throw DisconnectedGraph("shortest_path_distances: graph is disconnected");
  return dist;
}

Eigen::MatrixXd metropolis_weights(const Graph& g) {
  if (!is_connected(g))
    throw DisconnectedGraph("metropolis_weights: graph is disconnected");
  const auto adj = g.adjacency();
  const int n = g.n;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j : adj[i]) {
      const auto deg_max =
          static_cast<double>(std::max(adj[i].size(), adj[j].size()));
      w(i, j) = 1.0 / (1.0 + deg_max);
    }
    w(i, i) = 1.0 - w.row(i).sum();
  }
  return w;
}

double spectral_gap(const Eigen::MatrixXd& w) {
  const auto n = w.rows();
  if (n != w.cols()) throw DimensionMismatch("spectral_gap: W must be square");
  if (n > 512)
    throw ConfigError("spectral_gap: dense eigensolve supports n <= 512");
  Eigen::MatrixXd m =
      w - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  const double rho = es.eigenvalues().cwiseAbs().maxCoeff();
  // An exact-arithmetic 1 can round to 1 - O(eps); genuine connected graphs
  // sit far below this cutoff.
  if (rho >= 1.0 - 1e-12)
    throw NotContractive("spectral_gap: ||W - J/n|| >= 1 (W invalid or graph "
                         "disconnected)");
  return rho;
}

ConnectivityMetrics connectivity_metrics(const Eigen::MatrixXi& distances,
                                         const std::vector<int>& dims) {
  const auto n = distances.rows();
  if (distances.cols() != n)
    throw DimensionMismatch("connectivity_metrics: distance matrix not square");
  if (static_cast<Eigen::Index>(dims.size()) != n)
    throw DimensionMismatch("connectivity_metrics: dims size mismatch");
  double sum_sq = 0.0, sum_sq_weighted = 0.0;
  long long d_total = 0;
  for (int k : dims) d_total += k;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double b2 = static_cast<double>(distances(i, j)) *
                        static_cast<double>(distances(i, j));
      sum_sq += b2;
      sum_sq_weighted += b2 * static_cast<double>(dims[i]);
    }
  }
  ConnectivityMetrics out;
  const double nn = static_cast<double>(n);
  out.b_bar = std::sqrt(sum_sq / (nn * nn));
  out.frak_b_bar =
      std::sqrt(sum_sq_weighted / (nn * static_cast<double>(d_total)));
  return out;
}

NetworkTopology build_topology(const Graph& g, std::vector<int> dims) {
  if (static_cast<int>(dims.size()) != g.n)
    throw DimensionMismatch("build_topology: dims size must equal node count");
  NetworkTopology topo;
  topo.n = g.n;
  topo.graph = g;
  topo.neighbors = g.adjacency();
  topo.distances = shortest_path_distances(g);
  topo.weights = metropolis_weights(g);
  topo.rho = spectral_gap(topo.weights);
  topo.diameter = topo.distances.maxCoeff();
  topo.dims = std::move(dims);
  const auto metrics = connectivity_metrics(topo.distances, topo.dims);
  topo.b_bar = metrics.b_bar;
  topo.frak_b_bar = metrics.frak_b_bar;
  return topo;
}

namespace {

void require(bool cond, const char* invariant) {
  if (!cond)
    throw std::runtime_error(std::string("topology invariant violated: ") +
                             invariant);
}

}  // namespace

void validate_topology(const NetworkTopology& topo) {
  const int n = topo.n;
  const auto& w = topo.weights;
  const auto& b = topo.distances;
  require(w.rows() == n && w.cols() == n, "W is n x n");
  require(b.rows() == n && b.cols() == n, "distances are n x n");
  require(static_cast<int>(topo.dims.size()) == n, "dims has length n");

  constexpr double tol = 1e-12;
  for (int i = 0; i < n; ++i) {
    require(b(i, i) == 0, "b_ii = 0");
    require(w(i, i) > 0.0, "W_ii > 0");
    require(std::abs(w.row(i).sum() - 1.0) <= tol, "row sums of W equal 1");
    require(std::abs(w.col(i).sum() - 1.0) <= tol, "column sums of W equal 1");
    for (int j = 0; j < n; ++j) {
      require(b(i, j) >= 0, "distances nonnegative (graph connected)");
      require(b(i, j) == b(j, i), "b_ij = b_ji");
      require(std::abs(w(i, j) - w(j, i)) <= tol, "W symmetric");
    }
  }
  // Off-edge entries of W vanish.
  for (int i = 0; i < n; ++i) {
    std::set<int> nbr(topo.neighbors[i].begin(), topo.neighbors[i].end());
    for (int j = 0; j < n; ++j) {
      if (i != j && !nbr.count(j))
        require(w(i, j) == 0.0, "W_ij = 0 off the edge set");
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        require(b(i, j) <= b(i, k) + b(k, j), "triangle inequality");
  require(topo.rho < 1.0, "rho < 1");
}

}  // namespace mazo
