#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qmra/errors.hpp"
#include "qmra/so3.hpp"

namespace qmra {

/// One directed relative-rotation measurement: rel maps frame i to frame j,
/// i.e. ideally rel = R_j * R_i^T.
struct Edge {
  int i = 0;
  int j = 0;
  Eigen::Matrix3d rel = Eigen::Matrix3d::Identity();
};

/// Camera graph: nodes 0..n-1, directed measurements, optional ground truth.
///
/// Both directions of an observed pair are stored; when both are present
/// they are transpose-consistent. Immutable after construction by
/// convention: all operations below return new graphs.
struct CameraGraph {
  int n = 0;
  std::vector<Edge> edges;
  std::vector<Eigen::Matrix3d> ground_truth;  // empty when unknown

  bool has_ground_truth() const { return !ground_truth.empty(); }

  /// Checks node ids, duplicate ordered pairs, minimum degree and
  /// transpose consistency. Throws UsageError on violation.
  void validate() const {
    if (n < 1) throw UsageError("CameraGraph: node count must be >= 1");
    if (!ground_truth.empty() &&
        static_cast<int>(ground_truth.size()) != n) {
      throw ContractError("CameraGraph: ground_truth size != n");
    }
    std::set<std::pair<int, int>> seen;
    std::vector<int> degree(n, 0);
    std::map<std::pair<int, int>, const Eigen::Matrix3d*> by_pair;
    for (const auto& e : edges) {
      if (e.i < 0 || e.i >= n || e.j < 0 || e.j >= n) {
        throw UsageError("CameraGraph: edge references invalid node id");
      }
      if (e.i == e.j) throw UsageError("CameraGraph: self-loop edge");
      if (!seen.insert({e.i, e.j}).second) {
        throw UsageError("CameraGraph: duplicate ordered pair");
      }
      by_pair[{e.i, e.j}] = &e.rel;
      degree[e.i]++;
      degree[e.j]++;
    }
    if (n > 1) {
      for (int v = 0; v < n; ++v) {
        if (degree[v] == 0) {
          throw ConnectivityError("CameraGraph: node " + std::to_string(v) +
                                  " has degree 0");
        }
      }
    }
    for (const auto& [key, rel] : by_pair) {
      auto rev = by_pair.find({key.second, key.first});
      if (rev != by_pair.end() &&
          (*rel - rev->second->transpose()).norm() > 1e-9) {
        throw UsageError("CameraGraph: edge pair is not transpose-consistent");
      }
    }
  }

  /// Undirected adjacency lists with the measurement oriented i -> j.
  std::vector<std::vector<std::pair<int, Eigen::Matrix3d>>> adjacency() const {
    std::vector<std::vector<std::pair<int, Eigen::Matrix3d>>> adj(n);
    std::set<std::pair<int, int>> covered;
    for (const auto& e : edges) {
      if (covered.insert({e.i, e.j}).second) {
        adj[e.i].push_back({e.j, e.rel});
      }
      if (covered.insert({e.j, e.i}).second) {
        adj[e.j].push_back({e.i, e.rel.transpose()});
      }
    }
    return adj;
  }

  bool is_connected() const {
    if (n == 0) return false;
    const auto adj = adjacency();
    std::vector<char> seen(n, 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    int count = 1;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (const auto& [w, rel] : adj[u]) {
        if (!seen[w]) {
          seen[w] = 1;
          ++count;
          q.push(w);
        }
      }
    }
    return count == n;
  }
};

/// Multiplicative measurement noise: level sigma (radians) and RNG seed.
struct NoiseSpec {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

/// Per-iteration solver telemetry.
struct IterationRecord {
  int iter = 0;
  double residual = 0.0;      // mean squared chordal residual
  double best_energy = 0.0;   // lowest sampled subproblem energy
  double energy_gap = 0.0;    // two lowest distinct energies
  double delta = 0.0;         // current box radius
  double update_norm = 0.0;   // ||R(v_j) - R(v_{j-1})||_F, 0 when rejected
};

/// Output of any full solve.
struct EstimationResult {
  std::vector<Eigen::Matrix3d> rotations;
  std::vector<Eigen::Vector3d> tangents;
  double residual = 0.0;        // mean squared chordal residual over edges
  double residual_angle = 0.0;  // mean geodesic residual angle over edges
  double angle_error = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  std::vector<IterationRecord> trace;
  int projection_failures = 0;  // nodes that needed a fallback (direct path)
};

/// Random absolute rotations: axis uniform on the sphere, angle uniform
/// in [0, pi), mapped through the exponential.
inline std::vector<Eigen::Matrix3d> generate_ground_truth(int n,
                                                          std::uint64_t seed) {
  if (n < 2) throw UsageError("generate_ground_truth: need n >= 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, M_PI);
  std::vector<Eigen::Matrix3d> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) {
    Eigen::Vector3d axis(gauss(rng), gauss(rng), gauss(rng));
    while (axis.norm() < 1e-12) {
      axis = Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
    }
    axis.normalize();
    out.push_back(exp_map(angle(rng) * axis));
  }
  return out;
}

/// Undirected topology request: empty list means the complete graph.
using Topology = std::vector<std::pair<int, int>>;

/// Exact relative measurements rel(i,j) = R_j R_i^T. Each requested pair is
/// stored in both directions so the cost matrix stays symmetric.
inline CameraGraph build_relative_measurements(
    const std::vector<Eigen::Matrix3d>& gt, const Topology& topology = {}) {
  if (gt.empty()) throw UsageError("build_relative_measurements: empty input");
  const int n = static_cast<int>(gt.size());
  CameraGraph g;
  g.n = n;
  g.ground_truth = gt;

  std::set<std::pair<int, int>> pairs;
  if (topology.empty()) {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) pairs.insert({i, j});
    }
  } else {
    for (auto [i, j] : topology) {
      if (i < 0 || i >= n || j < 0 || j >= n || i == j) {
        throw UsageError("build_relative_measurements: invalid pair");
      }
      pairs.insert({std::min(i, j), std::max(i, j)});
    }
  }
  for (auto [i, j] : pairs) {
    const Eigen::Matrix3d rel = gt[j] * gt[i].transpose();
    g.edges.push_back({i, j, rel});
    g.edges.push_back({j, i, rel.transpose()});
  }
  if (!g.is_connected()) {
    throw ConnectivityError("build_relative_measurements: topology is not connected");
  }
  return g;
}

/// Left-multiplies each undirected measurement by exp(sigma * v) with
/// v uniform on [0,1]^3; the reverse direction is kept as the transpose.
inline CameraGraph corrupt_with_noise(const CameraGraph& g,
                                      const NoiseSpec& spec) {
  if (spec.sigma < 0.0) throw UsageError("corrupt_with_noise: sigma < 0");
  if (g.edges.empty()) throw UsageError("corrupt_with_noise: no measurements");
  if (spec.sigma == 0.0) return g;

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  CameraGraph out = g;
  std::map<std::pair<int, int>, Eigen::Matrix3d> noisy;
  for (auto& e : out.edges) {
    auto rev = noisy.find({e.j, e.i});
    if (rev != noisy.end()) {
      e.rel = rev->second.transpose();
      continue;
    }
    const Eigen::Vector3d v(unit(rng), unit(rng), unit(rng));
    e.rel = exp_map(spec.sigma * v) * e.rel;
    noisy[{e.i, e.j}] = e.rel;
  }
  return out;
}

/// Keeps a random connected subset of undirected edges (both directions of
/// a kept edge survive); every node keeps degree >= 1.
inline CameraGraph sparsify(const CameraGraph& g, double keep_ratio,
                            std::uint64_t seed) {
  if (!(keep_ratio > 0.0) || keep_ratio > 1.0) {
    throw UsageError("sparsify: keep_ratio must be in (0, 1]");
  }
  if (keep_ratio == 1.0) return g;

  std::map<std::pair<int, int>, Eigen::Matrix3d> undirected;
  for (const auto& e : g.edges) {
    const std::pair<int, int> key{std::min(e.i, e.j), std::max(e.i, e.j)};
    if (undirected.count(key)) continue;
    undirected[key] = (e.i < e.j) ? e.rel : Eigen::Matrix3d(e.rel.transpose());
  }
  const int total = static_cast<int>(undirected.size());
  const int target = static_cast<int>(std::llround(keep_ratio * total));
  if (target < g.n - 1) {
    throw ConnectivityError(
        "sparsify: keep_ratio " + std::to_string(keep_ratio) +
        " cannot keep " + std::to_string(g.n) + " nodes connected");
  }

  std::vector<std::pair<int, int>> keys;
  keys.reserve(total);
  for (const auto& [key, rel] : undirected) keys.push_back(key);
  std::mt19937_64 rng(seed);
  std::shuffle(keys.begin(), keys.end(), rng);

  // Union-find spanning forest over the shuffled order, then fill the quota.
  std::vector<int> parent(g.n);
  for (int v = 0; v < g.n; ++v) parent[v] = v;
  auto find = [&](int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };

  std::set<std::pair<int, int>> kept;
  for (const auto& key : keys) {
    const int a = find(key.first), b = find(key.second);
    if (a != b) {
      parent[a] = b;
      kept.insert(key);
    }
  }
  int components = 0;
  for (int v = 0; v < g.n; ++v) components += (find(v) == v);
  if (components != 1) {
    throw ConnectivityError("sparsify: input graph is disconnected");
  }
  for (const auto& key : keys) {
    if (static_cast<int>(kept.size()) >= target) break;
    kept.insert(key);
  }

  CameraGraph out;
  out.n = g.n;
  out.ground_truth = g.ground_truth;
  for (const auto& key : kept) {
    const Eigen::Matrix3d& rel = undirected.at(key);
    out.edges.push_back({key.first, key.second, rel});
    out.edges.push_back({key.second, key.first, rel.transpose()});
  }
  return out;
}

/// Spanning-tree initial tangents: breadth-first tree from node 0 with
/// R_0 = I and R_j = rel(i,j) R_i along tree edges.
inline std::vector<Eigen::Vector3d> mst_initialization(const CameraGraph& g) {
  if (!g.is_connected()) {
    throw ConnectivityError("mst_initialization: graph is disconnected");
  }
  const auto adj = g.adjacency();
  std::vector<std::optional<Eigen::Matrix3d>> rot(g.n);
  rot[0] = Eigen::Matrix3d::Identity();
  std::queue<int> q;
  q.push(0);
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (const auto& [w, rel] : adj[u]) {
      if (!rot[w]) {
        rot[w] = rel * (*rot[u]);
        q.push(w);
      }
    }
  }
  std::vector<Eigen::Vector3d> tangents(g.n);
  for (int v = 0; v < g.n; ++v) tangents[v] = log_map(*rot[v]);
  return tangents;
}

/// Mean over stored directed measurements of ||rel R_i - R_j||_F^2.
inline double residual_avg(const CameraGraph& g,
                           const std::vector<Eigen::Matrix3d>& rotations) {
  if (static_cast<int>(rotations.size()) != g.n) {
    throw ContractError("residual_avg: rotation count != n");
  }
  if (g.edges.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& e : g.edges) {
    sum += (e.rel * rotations[e.i] - rotations[e.j]).squaredNorm();
  }
  return sum / static_cast<double>(g.edges.size());
}

/// Mean geodesic angle of the per-edge residual rotation rel R_i R_j^T.
/// This is the convention in which solver accuracies are usually reported.
inline double residual_angle_avg(
    const CameraGraph& g, const std::vector<Eigen::Matrix3d>& rotations) {
  if (static_cast<int>(rotations.size()) != g.n) {
    throw ContractError("residual_angle_avg: rotation count != n");
  }
  if (g.edges.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& e : g.edges) {
    sum += geodesic_angle(e.rel * rotations[e.i], rotations[e.j]);
  }
  return sum / static_cast<double>(g.edges.size());
}

/// Mean geodesic angle to ground truth after fitting the best global gauge
/// rotation C = argmin sum ||R_i C - R_i_gt||_F^2. The objective is
/// invariant under a common right factor (a world-frame change), so that is
/// the side the alignment must absorb.
inline double angle_error(const std::vector<Eigen::Matrix3d>& est,
                          const std::vector<Eigen::Matrix3d>& gt) {
  if (est.size() != gt.size() || est.empty()) {
    throw ContractError("angle_error: size mismatch");
  }
  Eigen::Matrix3d accum = Eigen::Matrix3d::Zero();
  for (std::size_t k = 0; k < est.size(); ++k) {
    accum += est[k].transpose() * gt[k];
  }
  const Eigen::Matrix3d gauge = project_to_so3(accum);
  double sum = 0.0;
  for (std::size_t k = 0; k < est.size(); ++k) {
    sum += geodesic_angle(est[k] * gauge, gt[k]);
  }
  return sum / static_cast<double>(est.size());
}

}  // namespace qmra
