#include "aeg/hierarchy.hpp"

#include "aeg/error.hpp"
#include "aeg/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

namespace aeg::hierarchy {

AdjacencyMatrix room_adjacency(const std::vector<const SceneNode*>& nodes, double tau) {
  if (!(tau > 0.0)) throw Error(ErrorCode::InvalidInput, "tau must be > 0");
  AdjacencyMatrix adj;
  const auto n = static_cast<Eigen::Index>(nodes.size());
  adj.entries = Eigen::MatrixXd::Zero(n, n);
  for (const SceneNode* node : nodes) {
    if (node->instance.room != nodes.front()->instance.room) {
      throw Error(ErrorCode::MixedRooms, "nodes '" + nodes.front()->id() + "' and '" + node->id() +
                                             "' are in different rooms");
    }
    adj.node_ids.push_back(node->id());
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto& a = nodes[static_cast<std::size_t>(i)]->instance.box;
      const auto& b = nodes[static_cast<std::size_t>(j)]->instance.box;
      if (geometry::closest_vertex_distance(a, b) < tau) {
        adj.entries(i, j) = 1.0;
        adj.entries(j, i) = 1.0;
      }
    }
  }
  return adj;
}

Eigen::MatrixXd normalized_laplacian(const Eigen::MatrixXd& adjacency) {
  const Eigen::Index n = adjacency.rows();
  const Eigen::VectorXd degree = adjacency.rowwise().sum();
  Eigen::VectorXd inv_sqrt = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (degree(i) > 0.0) inv_sqrt(i) = 1.0 / std::sqrt(degree(i));
  }
  Eigen::MatrixXd laplacian = -(inv_sqrt.asDiagonal() * adjacency * inv_sqrt.asDiagonal());
  for (Eigen::Index i = 0; i < n; ++i) laplacian(i, i) = degree(i) > 0.0 ? 1.0 : 0.0;
  return laplacian;
}

Spectrum laplacian_spectrum(const Eigen::MatrixXd& laplacian) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::NonConvergent, "eigensolver did not converge");
  }
  Spectrum spectrum{solver.eigenvalues(), solver.eigenvectors()};
  const double residual =
      (laplacian * spectrum.eigenvectors - spectrum.eigenvectors * spectrum.eigenvalues.asDiagonal())
          .cwiseAbs()
          .maxCoeff();
  if (laplacian.size() > 0 && residual > 1e-8) {
    throw Error(ErrorCode::NonConvergent, "eigen decomposition residual " + std::to_string(residual) +
                                              " exceeds 1e-8");
  }
  return spectrum;
}

int eigengap_k(std::span<const double> eigenvalues) {
  if (eigenvalues.size() < 2) {
    throw Error(ErrorCode::TooFewNodes, "eigengap needs at least two eigenvalues");
  }
  int best_k = 1;
  double best_gap = -1.0;
  for (std::size_t k = 1; k < eigenvalues.size(); ++k) {
    const double gap = std::abs(eigenvalues[k] - eigenvalues[k - 1]);
    if (gap > best_gap) {
      best_gap = gap;
      best_k = static_cast<int>(k);
    }
  }
  return best_k;
}

namespace {

double uniform01(std::mt19937_64& rng) {
  // 53 random mantissa bits; std::generate_canonical is implementation-defined.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Eigen::MatrixXd plus_plus_init(const Eigen::MatrixXd& points, int k, std::mt19937_64& rng) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd centers(k, points.cols());
  centers.row(0) = points.row(static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(n))));
  Eigen::VectorXd dist2 = (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = dist2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double target = uniform01(rng) * total;
      for (pick = 0; pick < n - 1; ++pick) {
        target -= dist2(pick);
        if (target < 0.0) break;
      }
    } else {
      pick = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(n)));
    }
    centers.row(c) = points.row(pick);
    dist2 = dist2.cwiseMin((points.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }
  return centers;
}

}  // namespace

std::vector<int> kmeans(const Eigen::MatrixXd& points, int k, const KMeansOptions& options) {
  const Eigen::Index n = points.rows();
  if (k < 1 || k > n) throw Error(ErrorCode::InvalidInput, "k-means needs 1 <= k <= n");
  auto rng = seeded_rng(options.seed, "kmeans");

  std::vector<int> best_labels(static_cast<std::size_t>(n), 0);
  double best_inertia = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < std::max(1, options.restarts); ++restart) {
    Eigen::MatrixXd centers = plus_plus_init(points, k, rng);
    std::vector<int> labels(static_cast<std::size_t>(n), -1);
    double inertia = 0.0;
    for (int iter = 0; iter < options.max_iterations; ++iter) {
      bool changed = false;
      inertia = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index nearest = 0;
        const double d = (centers.rowwise() - points.row(i)).rowwise().squaredNorm().minCoeff(&nearest);
        inertia += d;
        if (labels[static_cast<std::size_t>(i)] != static_cast<int>(nearest)) {
          labels[static_cast<std::size_t>(i)] = static_cast<int>(nearest);
          changed = true;
        }
      }
      if (!changed) break;
      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
      Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
      for (Eigen::Index i = 0; i < n; ++i) {
        sums.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
        counts(labels[static_cast<std::size_t>(i)]) += 1.0;
      }
      for (int c = 0; c < k; ++c) {
        // An emptied cluster keeps its previous center.
        if (counts(c) > 0.0) centers.row(c) = sums.row(c) / counts(c);
      }
    }
    if (inertia < best_inertia - 1e-12) {
      best_inertia = inertia;
      best_labels = labels;
    }
  }
  return best_labels;
}

namespace {

std::vector<int> renumber_by_first_appearance(const std::vector<int>& labels) {
  std::map<int, int> remap;
  std::vector<int> out;
  out.reserve(labels.size());
  for (int l : labels) {
    auto [it, inserted] = remap.try_emplace(l, static_cast<int>(remap.size()));
    out.push_back(it->second);
  }
  return out;
}

}  // namespace

Clustering spectral_cluster(const AdjacencyMatrix& adjacency, const KMeansOptions& options) {
  const auto n = static_cast<Eigen::Index>(adjacency.size());
  Clustering result;
  if (n == 0) return result;
  if (n == 1) {
    result.labels = {0};
    result.k = 1;
    result.eigenvalues = Eigen::VectorXd::Zero(1);
    return result;
  }

  const Spectrum spectrum = laplacian_spectrum(normalized_laplacian(adjacency.entries));
  result.eigenvalues = spectrum.eigenvalues;

  if ((adjacency.entries.array() == 0.0).all()) {
    // Every node isolated: each one is its own area.
    result.k = static_cast<int>(n);
    result.labels.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) result.labels[static_cast<std::size_t>(i)] = static_cast<int>(i);
    return result;
  }

  const std::vector<double> ev(spectrum.eigenvalues.data(), spectrum.eigenvalues.data() + n);
  const int k = eigengap_k(ev);
  result.k = k;
  if (k == 1) {
    result.labels.assign(static_cast<std::size_t>(n), 0);
    return result;
  }

  Eigen::MatrixXd embedding = spectrum.eigenvectors.leftCols(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = embedding.row(i).norm();
    if (norm > 0.0) embedding.row(i) /= norm;
  }
  result.labels = renumber_by_first_appearance(kmeans(embedding, k, options));
  // k-means may leave a cluster empty; report the clusters actually used.
  result.k = *std::max_element(result.labels.begin(), result.labels.end()) + 1;
  return result;
}

FrameId area_keyframe(const SceneGraph& graph, const std::vector<NodeId>& members) {
  std::map<FrameId, std::int64_t> sums;
  for (const NodeId& id : members) {
    for (const auto& [frame, count] : graph.at(id).instance.pixel_counts) sums[frame] += count;
  }
  FrameId best;
  std::int64_t best_sum = -1;
  for (const auto& [frame, sum] : sums) {
    if (sum > best_sum) {
      best_sum = sum;
      best = frame;
    }
  }
  if (best_sum <= 0) {
    throw Error(ErrorCode::NoVisibleFrame, "area members are not visible in any frame");
  }
  return best;
}

Hierarchy build_hierarchy(const SceneGraph& graph, double tau) {
  Hierarchy hierarchy;
  for (const std::string& room : graph.rooms()) {
    if (room.empty()) throw Error(ErrorCode::InvalidInput, "node without a room label");
    std::vector<const SceneNode*> nodes;
    for (const NodeId& id : graph.room_members(room)) nodes.push_back(&graph.at(id));

    const Clustering clustering = spectral_cluster(room_adjacency(nodes, tau));
    std::vector<Area> areas(static_cast<std::size_t>(clustering.k));
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      areas[static_cast<std::size_t>(clustering.labels[i])].member_ids.push_back(nodes[i]->id());
    }
    auto& out = hierarchy.rooms[room];
    for (std::size_t a = 0; a < areas.size(); ++a) {
      Area& area = areas[a];
      char suffix[32];
      std::snprintf(suffix, sizeof(suffix), "/area%02zu", a);
      area.id = room + suffix;
      area.room = room;
      area.keyframe = area_keyframe(graph, area.member_ids);
      out.push_back(std::move(area));
    }
  }
  return hierarchy;
}

}  // namespace aeg::hierarchy
