#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace mazo {

// Undirected simple graph given as an edge list over nodes 0..n-1.
struct Graph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;

  // Sorted neighbor lists, self-loops and duplicates removed.
  std::vector<std::vector<int>> adjacency() const;
};

Graph complete_graph(int n);
Graph ring_graph(int n);
Graph path_graph(int n);
Graph star_graph(int n);  // node 0 is the hub
// Rejection-samples G(n, p) until connected; throws DisconnectedGraph after
// the attempt budget is exhausted.
Graph erdos_renyi_connected(int n, double p, std::uint64_t seed,
                            int max_attempts = 10000);

bool is_connected(const Graph& g);

// Plain-text format: first line "n", then one "i j" edge per line (0-based).
Graph load_graph(const std::string& path);
void save_graph(const Graph& g, const std::string& path);

// All-pairs BFS hop distances. Throws DisconnectedGraph if any pair is
// unreachable.
Eigen::MatrixXi shortest_path_distances(const Graph& g);

// Metropolis-Hastings mixing matrix:
//   W_ij = 1 / (1 + max(deg_i, deg_j)) on edges,
//   W_ii = 1 - sum_j W_ij, zero elsewhere.
// Symmetric, doubly stochastic, positive diagonal.
Eigen::MatrixXd metropolis_weights(const Graph& g);

// Operator 2-norm of W - (1/n) 1 1^T. Throws NotContractive if >= 1.
double spectral_gap(const Eigen::MatrixXd& w);

struct ConnectivityMetrics {
  double b_bar = 0.0;       // sqrt( sum_{ij} b_ij^2 / n^2 )
  double frak_b_bar = 0.0;  // sqrt( sum_{ij} b_ij^2 d_i / (n d) )
};

ConnectivityMetrics connectivity_metrics(const Eigen::MatrixXi& distances,
                                         const std::vector<int>& dims);

// Immutable communication-layer bundle shared read-only across trial workers.
struct NetworkTopology {
  int n = 0;
  Graph graph;
  std::vector<std::vector<int>> neighbors;
  Eigen::MatrixXi distances;
  Eigen::MatrixXd weights;
  double rho = 0.0;
  int diameter = 0;
  std::vector<int> dims;
  double b_bar = 0.0;
  double frak_b_bar = 0.0;
};

NetworkTopology build_topology(const Graph& g, std::vector<int> dims);

// Re-checks every structural invariant (symmetry, stochasticity to 1e-12,
// metric axioms, rho < 1); throws naming the violated invariant.
void validate_topology(const NetworkTopology& topo);

}  // namespace mazo
