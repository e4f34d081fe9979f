#include "qmra/so3.hpp"

#include <random>

#include <gtest/gtest.h>

using namespace qmra;

namespace {

// Independent oracle: truncated matrix-exponential power series.
Eigen::Matrix3d exp_series(const Eigen::Vector3d& v, int terms = 20) {
  const Eigen::Matrix3d s = hat(v);
  Eigen::Matrix3d sum = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d term = Eigen::Matrix3d::Identity();
  for (int k = 1; k <= terms; ++k) {
    term = (term * s / static_cast<double>(k)).eval();
    sum += term;
  }
  return sum;
}

// Independent oracle: central finite differences of exp_map.
ExpJacobian jacobian_fd(const Eigen::Vector3d& v, double step = 1e-6) {
  ExpJacobian j;
  for (int k = 0; k < 3; ++k) {
    Eigen::Vector3d hi = v, lo = v;
    hi(k) += step;
    lo(k) -= step;
    j.row(k) = (vec(exp_map(hi)) - vec(exp_map(lo))).transpose() / (2.0 * step);
  }
  return j;
}

Eigen::Vector3d random_tangent(std::mt19937_64& rng, double max_norm = M_PI) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> mag(0.0, max_norm);
  Eigen::Vector3d axis(gauss(rng), gauss(rng), gauss(rng));
  axis.normalize();
  return mag(rng) * axis;
}

}  // namespace

TEST(Hat, ZeroTangentGivesZeroMatrix) {
  EXPECT_TRUE(hat(Eigen::Vector3d::Zero()).isZero(0.0));
}

TEST(Hat, MatchesComponentPattern) {
  Eigen::Matrix3d expected;
  expected << 0, -3, 2, 3, 0, -1, -2, 1, 0;
  EXPECT_TRUE(hat(Eigen::Vector3d(1, 2, 3)).isApprox(expected, 0.0));
}

TEST(Hat, IsAntisymmetric) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Matrix3d s = hat(random_tangent(rng));
    EXPECT_LT((s + s.transpose()).norm(), 1e-15);
  }
}

TEST(ExpMap, ZeroGivesIdentity) {
  EXPECT_TRUE(exp_map(Eigen::Vector3d::Zero())
                  .isApprox(Eigen::Matrix3d::Identity(), 1e-15));
}

TEST(ExpMap, HalfTurnAboutX) {
  const Eigen::Matrix3d r = exp_map(Eigen::Vector3d(M_PI, 0, 0));
  EXPECT_TRUE(r.isApprox(Eigen::Vector3d(1, -1, -1).asDiagonal().toDenseMatrix(),
                         1e-12));
}

TEST(ExpMap, MatchesPowerSeriesOracle) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::Vector3d v = random_tangent(rng);
    v *= 0.7 / v.norm();
    EXPECT_LT((exp_map(v) - exp_series(v)).norm(), 1e-10);
  }
}

TEST(ExpMap, ProducesRotationsAndInverts) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Vector3d v = random_tangent(rng);
    const Eigen::Matrix3d r = exp_map(v);
    EXPECT_TRUE(is_rotation(r, 1e-10));
    EXPECT_LT((r * exp_map(-v) - Eigen::Matrix3d::Identity()).norm(), 1e-10);
  }
}

TEST(ExpMap, ContinuousAcrossSeriesSwitch) {
  // eps small enough that the genuine rotation difference is ~3e-15; any
  // jump between the series and exact branches would dominate it.
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::Vector3d dir = random_tangent(rng);
    dir.normalize();
    const Eigen::Matrix3d below = exp_map((1e-6 - 1e-15) * dir);
    const Eigen::Matrix3d above = exp_map((1e-6 + 1e-15) * dir);
    EXPECT_LT((below - above).norm(), 1e-12);
  }
}

TEST(ExpJacobian, AtZeroGivesGenerators) {
  const ExpJacobian j = exp_jacobian(Eigen::Vector3d::Zero());
  for (int k = 0; k < 3; ++k) {
    EXPECT_LT(
        (j.row(k).transpose() - vec(hat(Eigen::Vector3d::Unit(k)))).norm(),
        1e-14);
  }
}

TEST(ExpJacobian, MatchesFiniteDifferences) {
  std::mt19937_64 rng(123);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Vector3d v = random_tangent(rng);
    const ExpJacobian analytic = exp_jacobian(v);
    const ExpJacobian fd = jacobian_fd(v);
    const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
    worst = std::max(worst, (analytic - fd).cwiseAbs().maxCoeff() / scale);
  }
  EXPECT_LE(worst, 1e-5);
}

TEST(ExpJacobian, ShapeIsThreeByNine) {
  const ExpJacobian j = exp_jacobian(Eigen::Vector3d(0.1, -0.2, 0.3));
  EXPECT_EQ(j.rows(), 3);
  EXPECT_EQ(j.cols(), 9);
}

TEST(GeodesicAngle, IdentityPairIsZero) {
  EXPECT_DOUBLE_EQ(
      geodesic_angle(Eigen::Matrix3d::Identity(), Eigen::Matrix3d::Identity()),
      0.0);
}

TEST(GeodesicAngle, QuarterTurn) {
  const Eigen::Matrix3d r = exp_map(Eigen::Vector3d(M_PI / 2, 0, 0));
  EXPECT_NEAR(geodesic_angle(Eigen::Matrix3d::Identity(), r), M_PI / 2, 1e-12);
}

TEST(GeodesicAngle, Symmetric) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Matrix3d a = exp_map(random_tangent(rng));
    const Eigen::Matrix3d b = exp_map(random_tangent(rng));
    EXPECT_NEAR(geodesic_angle(a, b), geodesic_angle(b, a), 1e-13);
  }
}

TEST(ProjectToSo3, RotationIsFixedPoint) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Matrix3d r = exp_map(random_tangent(rng));
    EXPECT_LT((project_to_so3(r) - r).norm(), 1e-12);
  }
}

TEST(ProjectToSo3, RemovesScaling) {
  const Eigen::Matrix3d p = project_to_so3(1.5 * Eigen::Matrix3d::Identity());
  EXPECT_TRUE(p.isApprox(Eigen::Matrix3d::Identity(), 1e-12));
}

TEST(ProjectToSo3, PerturbedRotationProjectsOntoManifold) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Matrix3d noisy = exp_map(random_tangent(rng));
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) noisy(i, j) += 0.05 * gauss(rng);
    }
    EXPECT_TRUE(is_rotation(project_to_so3(noisy), 1e-10));
  }
}

TEST(ProjectToSo3, RejectsRankDeficientInput) {
  EXPECT_THROW(project_to_so3(Eigen::Matrix3d::Zero()), DegenerateInputError);
  Eigen::Matrix3d rank2 = Eigen::Matrix3d::Zero();
  rank2(0, 0) = 1.0;
  rank2(1, 1) = 1.0;
  EXPECT_THROW(project_to_so3(rank2), DegenerateInputError);
}

TEST(LogMap, InvertsExpMap) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Vector3d v = random_tangent(rng, 0.98 * M_PI);
    EXPECT_LT((log_map(exp_map(v)) - v).norm(), 1e-9);
  }
}
