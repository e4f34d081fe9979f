#include "qmra/graph.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

#include <gtest/gtest.h>

#include "qmra/graph_io.hpp"

using namespace qmra;

namespace {

CameraGraph noisy_complete(int n, double sigma, std::uint64_t seed) {
  const auto gt = generate_ground_truth(n, seed);
  return corrupt_with_noise(build_relative_measurements(gt), {sigma, seed});
}

}  // namespace

TEST(GenerateGroundTruth, DeterministicForFixedSeed) {
  const auto a = generate_ground_truth(4, 99);
  const auto b = generate_ground_truth(4, 99);
  for (int i = 0; i < 4; ++i) {
    EXPECT_TRUE(a[i].isApprox(b[i], 0.0));
  }
}

TEST(GenerateGroundTruth, OutputsAreRotations) {
  for (const auto& r : generate_ground_truth(10, 7)) {
    EXPECT_TRUE(is_rotation(r, 1e-10));
  }
}

TEST(GenerateGroundTruth, RejectsTinyGraphs) {
  EXPECT_THROW(generate_ground_truth(1, 0), UsageError);
}

TEST(BuildRelative, IdentityPair) {
  const std::vector<Eigen::Matrix3d> gt(2, Eigen::Matrix3d::Identity());
  const CameraGraph g = build_relative_measurements(gt);
  for (const auto& e : g.edges) {
    EXPECT_TRUE(e.rel.isApprox(Eigen::Matrix3d::Identity(), 0.0));
  }
}

TEST(BuildRelative, MatchesDefinition) {
  const Eigen::Matrix3d r = exp_map(Eigen::Vector3d(0.3, -0.2, 0.9));
  const CameraGraph g =
      build_relative_measurements({Eigen::Matrix3d::Identity(), r});
  for (const auto& e : g.edges) {
    if (e.i == 0) {
      EXPECT_TRUE(e.rel.isApprox(r, 1e-15));
    } else {
      EXPECT_TRUE(e.rel.isApprox(r.transpose(), 1e-15));
    }
  }
}

TEST(BuildRelative, ForwardBackwardComposeToIdentity) {
  const auto gt = generate_ground_truth(6, 3);
  const CameraGraph g = build_relative_measurements(gt);
  std::map<std::pair<int, int>, Eigen::Matrix3d> rel;
  for (const auto& e : g.edges) rel[{e.i, e.j}] = e.rel;
  for (const auto& [key, r] : rel) {
    const auto& back = rel.at({key.second, key.first});
    EXPECT_LT((r * back - Eigen::Matrix3d::Identity()).norm(), 1e-12);
  }
}

TEST(BuildRelative, RejectsDisconnectedTopology) {
  const auto gt = generate_ground_truth(4, 1);
  EXPECT_THROW(build_relative_measurements(gt, {{0, 1}, {2, 3}}),
               ConnectivityError);
}

TEST(CorruptWithNoise, SigmaZeroLeavesGraphUnchanged) {
  const CameraGraph g =
      build_relative_measurements(generate_ground_truth(5, 2));
  const CameraGraph noisy = corrupt_with_noise(g, {0.0, 123});
  ASSERT_EQ(noisy.edges.size(), g.edges.size());
  for (std::size_t k = 0; k < g.edges.size(); ++k) {
    EXPECT_TRUE(noisy.edges[k].rel.isApprox(g.edges[k].rel, 0.0));
  }
}

TEST(CorruptWithNoise, MeasurementsStayOnManifold) {
  const CameraGraph noisy = noisy_complete(6, 0.8, 5);
  noisy.validate();
  for (const auto& e : noisy.edges) {
    EXPECT_TRUE(is_rotation(e.rel, 1e-9));
  }
}

TEST(CorruptWithNoise, GroundTruthResidualGrowsWithSigma) {
  // Monte-Carlo oracle: 20 seeds, residual of the true rotations on the
  // corrupted graph must be monotone across the sigma grid on average.
  const double grid[4] = {M_PI / 10, M_PI / 5, M_PI / 3, M_PI / 2};
  double mean[4] = {0, 0, 0, 0};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto gt = generate_ground_truth(8, seed);
    const CameraGraph clean = build_relative_measurements(gt);
    for (int s = 0; s < 4; ++s) {
      mean[s] += residual_avg(corrupt_with_noise(clean, {grid[s], seed}), gt);
    }
  }
  for (int s = 1; s < 4; ++s) {
    EXPECT_GT(mean[s], mean[s - 1]);
  }
}

TEST(Sparsify, KeepRatioOneIsIdentity) {
  const CameraGraph g = noisy_complete(6, 0.3, 1);
  const CameraGraph out = sparsify(g, 1.0, 11);
  EXPECT_EQ(out.edges.size(), g.edges.size());
}

TEST(Sparsify, KeepsConnectivityAndDegree) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const CameraGraph g = noisy_complete(10, 0.3, seed);
    const CameraGraph out = sparsify(g, 0.4, seed);
    out.validate();
    EXPECT_TRUE(out.is_connected());
  }
}

TEST(Sparsify, HalfOfCompleteTenNodes) {
  const CameraGraph g = noisy_complete(10, 0.2, 3);
  const CameraGraph out = sparsify(g, 0.5, 7);
  // 45 undirected edges * 0.5, up to rounding; both directions stored
  EXPECT_EQ(out.edges.size(), 2u * 23u);
  EXPECT_TRUE(out.is_connected());
}

TEST(Sparsify, ImpossibleRatioThrows) {
  const CameraGraph g = noisy_complete(10, 0.2, 3);
  EXPECT_THROW(sparsify(g, 0.05, 1), ConnectivityError);
  EXPECT_THROW(sparsify(g, 0.0, 1), UsageError);
}

TEST(Sparsify, PreservesTransposeConsistency) {
  const CameraGraph out = sparsify(noisy_complete(8, 0.5, 9), 0.5, 13);
  std::map<std::pair<int, int>, Eigen::Matrix3d> rel;
  for (const auto& e : out.edges) rel[{e.i, e.j}] = e.rel;
  for (const auto& [key, r] : rel) {
    ASSERT_TRUE(rel.count({key.second, key.first}));
    EXPECT_LT((r - rel.at({key.second, key.first}).transpose()).norm(), 1e-12);
  }
}

TEST(MstInitialization, ExactChainReproducesTruth) {
  const auto gt = generate_ground_truth(3, 21);
  const CameraGraph g = build_relative_measurements(gt, {{0, 1}, {1, 2}});
  const auto tangents = mst_initialization(g);
  std::vector<Eigen::Matrix3d> rot;
  for (const auto& t : tangents) rot.push_back(exp_map(t));
  EXPECT_LT(residual_avg(g, rot), 1e-12);
}

TEST(MstInitialization, ExactCompleteGraphReproducesTruth) {
  const auto gt = generate_ground_truth(8, 22);
  const CameraGraph g = build_relative_measurements(gt);
  const auto tangents = mst_initialization(g);
  std::vector<Eigen::Matrix3d> rot;
  for (const auto& t : tangents) rot.push_back(exp_map(t));
  EXPECT_LT(residual_avg(g, rot), 1e-12);
}

TEST(MstInitialization, BeatsIdentityInitOnNoisyGraphs) {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const CameraGraph g = noisy_complete(20, M_PI / 10, seed);
    const auto tangents = mst_initialization(g);
    std::vector<Eigen::Matrix3d> rot;
    for (const auto& t : tangents) rot.push_back(exp_map(t));
    const std::vector<Eigen::Matrix3d> identity(g.n,
                                                Eigen::Matrix3d::Identity());
    if (residual_avg(g, rot) <= residual_avg(g, identity)) ++wins;
  }
  EXPECT_GE(wins, 14);  // >= 70% of 20 seeds
}

TEST(ResidualAvg, GroundTruthOnCleanGraphIsZero) {
  const auto gt = generate_ground_truth(7, 2);
  EXPECT_LT(residual_avg(build_relative_measurements(gt), gt), 1e-12);
}

TEST(ResidualAvg, HalfTurnSingleEdge) {
  CameraGraph g;
  g.n = 2;
  g.edges.push_back({0, 1, exp_map(Eigen::Vector3d(M_PI, 0, 0))});
  const std::vector<Eigen::Matrix3d> rot(2, Eigen::Matrix3d::Identity());
  EXPECT_NEAR(residual_avg(g, rot), 8.0, 1e-12);
}

TEST(ResidualAvg, InvariantUnderEdgeOrder) {
  CameraGraph g = noisy_complete(6, 0.4, 8);
  const auto gt = g.ground_truth;
  const double before = residual_avg(g, gt);
  std::mt19937_64 rng(0);
  std::shuffle(g.edges.begin(), g.edges.end(), rng);
  EXPECT_DOUBLE_EQ(residual_avg(g, gt), before);
}

TEST(AngleError, ZeroForExactEstimate) {
  const auto gt = generate_ground_truth(5, 4);
  EXPECT_NEAR(angle_error(gt, gt), 0.0, 1e-12);
}

TEST(AngleError, GaugeInvariant) {
  // a common world-frame rotation leaves the measurements (and so the
  // metric) unchanged
  const auto gt = generate_ground_truth(6, 14);
  const Eigen::Matrix3d gauge = exp_map(Eigen::Vector3d(0.4, 1.0, -0.3));
  std::vector<Eigen::Matrix3d> shifted;
  for (const auto& r : gt) shifted.push_back(r * gauge);
  EXPECT_LE(angle_error(shifted, gt), 1e-9);
}

TEST(AngleError, SingleNodeAlignsExactly) {
  const Eigen::Matrix3d r = exp_map(Eigen::Vector3d(1.0, 0.2, 0.1));
  EXPECT_LE(angle_error({r}, {Eigen::Matrix3d::Identity()}), 1e-9);
}

TEST(GraphIo, RoundTripIsBitExact) {
  const CameraGraph g = noisy_complete(5, 0.6, 77);
  const std::string path = ::testing::TempDir() + "qmra_roundtrip.json";
  save_graph(g, path);
  const CameraGraph back = load_graph(path);
  ASSERT_EQ(back.n, g.n);
  ASSERT_EQ(back.edges.size(), g.edges.size());
  for (std::size_t k = 0; k < g.edges.size(); ++k) {
    EXPECT_EQ(back.edges[k].i, g.edges[k].i);
    EXPECT_EQ(back.edges[k].j, g.edges[k].j);
    EXPECT_TRUE(back.edges[k].rel.isApprox(g.edges[k].rel, 0.0));
  }
  ASSERT_TRUE(back.has_ground_truth());
  for (int i = 0; i < g.n; ++i) {
    EXPECT_TRUE(back.ground_truth[i].isApprox(g.ground_truth[i], 0.0));
  }
  back.validate();
  std::remove(path.c_str());
}

TEST(GraphIo, MissingEdgesFieldIsParseError) {
  const std::string path = ::testing::TempDir() + "qmra_bad_graph.json";
  {
    std::ofstream out(path);
    out << "{\"n\": 3}\n";
  }
  EXPECT_THROW(load_graph(path), ParseError);
  std::remove(path.c_str());
}

TEST(GraphIo, MalformedJsonIsParseError) {
  const std::string path = ::testing::TempDir() + "qmra_malformed.json";
  {
    std::ofstream out(path);
    out << "{\"n\": 3, \"edges\": [\n";
  }
  EXPECT_THROW(load_graph(path), ParseError);
  std::remove(path.c_str());
}

TEST(GraphIo, MissingFileIsIoError) {
  EXPECT_THROW(load_graph("/nonexistent/qmra.json"), IoError);
}
