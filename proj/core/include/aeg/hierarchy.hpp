#pragma once

#include "aeg/scene_graph.hpp"

#include <Eigen/Core>

#include <map>
#include <span>
#include <string>
#include <vector>

namespace aeg::hierarchy {

/// Symmetric 0/1 adjacency with zero diagonal over `node_ids` (in order).
struct AdjacencyMatrix {
  std::vector<NodeId> node_ids;
  Eigen::MatrixXd entries;

  std::size_t size() const { return node_ids.size(); }
};

inline constexpr double kDefaultTau = 2.0;

/// G[i][j] = 1 iff the closest-vertex distance of boxes i and j is < tau.
/// Throws Error{MixedRooms} when the nodes do not share a room label.
AdjacencyMatrix room_adjacency(const std::vector<const SceneNode*>& nodes, double tau = kDefaultTau);

/// Symmetric normalized Laplacian I - D^-1/2 G D^-1/2. Rows of isolated
/// (degree-0) nodes are left zero, so every connected component, isolated
/// nodes included, contributes exactly one zero eigenvalue.
Eigen::MatrixXd normalized_laplacian(const Eigen::MatrixXd& adjacency);

struct Spectrum {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // columns match eigenvalues
};

/// Throws Error{NonConvergent} if the eigensolver fails or a residual
/// exceeds 1e-8.
Spectrum laplacian_spectrum(const Eigen::MatrixXd& laplacian);

/// Number of clusters k in [1, n-1] maximizing |lambda_{k+1} - lambda_k| over
/// ascending eigenvalues; ties break to the smallest k. Throws TooFewNodes
/// when fewer than two eigenvalues are given.
int eigengap_k(std::span<const double> ascending_eigenvalues);

struct KMeansOptions {
  std::uint64_t seed = 0;
  int max_iterations = 100;
  int restarts = 10;
};

/// k-means++ seeded Lloyd iterations; the restart with the lowest inertia
/// wins. Rows of `points` are samples.
std::vector<int> kmeans(const Eigen::MatrixXd& points, int k, const KMeansOptions& options = {});

struct Clustering {
  std::vector<int> labels;  // aligned with AdjacencyMatrix::node_ids
  int k = 0;
  Eigen::VectorXd eigenvalues;
};

/// Spectral clustering with eigengap model selection. Labels are renumbered
/// by first appearance so the output is independent of k-means label order.
Clustering spectral_cluster(const AdjacencyMatrix& adjacency, const KMeansOptions& options = {});

/// Frame with the maximum summed pixel count over `members` (ties to the
/// smallest frame id).
FrameId area_keyframe(const SceneGraph& graph, const std::vector<NodeId>& members);

/// Per room: adjacency, spectral clustering, areas with keyframes. Area ids
/// are `<room>/areaNN`.
Hierarchy build_hierarchy(const SceneGraph& graph, double tau = kDefaultTau);

}  // namespace aeg::hierarchy
