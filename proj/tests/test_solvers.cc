#include "qmra/solvers.hpp"

#include <random>

#include <gtest/gtest.h>

using namespace qmra;

namespace {

BinaryQubo random_instance(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  BinaryQubo q;
  q.q_tilde = Eigen::MatrixXd::Zero(dim, dim);
  q.c_tilde = Eigen::VectorXd::Zero(dim);
  for (int i = 0; i < dim; ++i) {
    q.c_tilde(i) = gauss(rng);
    for (int j = i; j < dim; ++j) {
      const double v = gauss(rng);
      q.q_tilde(i, j) = v / 2.0;
      q.q_tilde(j, i) = v / 2.0;
    }
  }
  return q;
}

// Ising instance with zero fields, mapped to QUBO form; its spectrum is
// invariant under flipping every bit.
BinaryQubo flip_symmetric_instance(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd coupling = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = i + 1; j < dim; ++j) {
      coupling(i, j) = coupling(j, i) = gauss(rng);
    }
  }
  BinaryQubo q;
  q.q_tilde = 2.0 * coupling;  // sums to 4 J_ij per unordered pair
  q.c_tilde = -2.0 * coupling.rowwise().sum();
  return q;
}

std::vector<std::uint8_t> flipped(const std::vector<std::uint8_t>& bits) {
  std::vector<std::uint8_t> out(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) out[i] = 1 - bits[i];
  return out;
}

}  // namespace

TEST(Energy, AllZerosIsZero) {
  const BinaryQubo q = random_instance(10, 1);
  EXPECT_DOUBLE_EQ(energy(q, std::vector<std::uint8_t>(10, 0)), 0.0);
}

TEST(Energy, SingleBitPicksDiagonalPlusLinear) {
  const BinaryQubo q = random_instance(8, 2);
  for (int i = 0; i < 8; ++i) {
    std::vector<std::uint8_t> bits(8, 0);
    bits[i] = 1;
    EXPECT_NEAR(energy(q, bits), q.q_tilde(i, i) + q.c_tilde(i), 1e-14);
  }
}

TEST(Energy, MatchesFoldedQuadraticForm) {
  const BinaryQubo q = random_instance(12, 3);
  const Eigen::MatrixXd folded = fold_linear(q);
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::uint8_t> bits(12);
    Eigen::VectorXd x(12);
    for (int i = 0; i < 12; ++i) {
      bits[i] = rng() & 1u;
      x(i) = bits[i];
    }
    EXPECT_NEAR(energy(q, bits), x.dot(folded * x), 1e-10);
  }
}

TEST(Exhaustive, OneBitGroundState) {
  BinaryQubo q;
  q.q_tilde = Eigen::MatrixXd::Constant(1, 1, -1.0);
  q.c_tilde = Eigen::VectorXd::Zero(1);
  const SampleSet set = solve_exhaustive(q);
  ASSERT_EQ(set.samples.size(), 2u);
  EXPECT_EQ(set.best().bits, std::vector<std::uint8_t>{1});
  EXPECT_DOUBLE_EQ(set.best().energy, -1.0);
}

TEST(Exhaustive, MatchesBruteForceScan) {
  const BinaryQubo q = random_instance(10, 7);
  const SampleSet set = solve_exhaustive(q);
  double ground = std::numeric_limits<double>::infinity();
  for (unsigned state = 0; state < (1u << 10); ++state) {
    std::vector<std::uint8_t> bits(10);
    for (int i = 0; i < 10; ++i) bits[i] = (state >> i) & 1u;
    ground = std::min(ground, energy(q, bits));
  }
  EXPECT_NEAR(set.best().energy, ground, 1e-10);
  EXPECT_EQ(set.samples.size(), 1u << 10);
}

TEST(Exhaustive, DominatesSimulatedAnnealing) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const BinaryQubo q = random_instance(12, 100 + seed);
    const SampleSet exact = solve_exhaustive(q);
    SaConfig cfg;
    cfg.reads = 20;
    cfg.seed = seed;
    const SampleSet sa = solve_simulated_annealing(q, cfg);
    for (const auto& s : sa.samples) {
      EXPECT_GE(s.energy, exact.best().energy - 1e-9);
    }
  }
}

TEST(Exhaustive, FlipSymmetricSpectrum) {
  const BinaryQubo q = flip_symmetric_instance(10, 8);
  const SampleSet set = solve_exhaustive(q);
  std::map<std::vector<std::uint8_t>, double> table;
  for (const auto& s : set.samples) table[s.bits] = s.energy;
  for (const auto& [bits, e] : table) {
    EXPECT_NEAR(e, table.at(flipped(bits)), 1e-9);
  }
}

TEST(Exhaustive, CapacityCapIsEnforced) {
  BinaryQubo q;
  q.q_tilde = Eigen::MatrixXd::Zero(25, 25);
  q.c_tilde = Eigen::VectorXd::Zero(25);
  try {
    solve_exhaustive(q);
    FAIL() << "expected CapacityError";
  } catch (const CapacityError& err) {
    EXPECT_NE(std::string(err.what()).find("24"), std::string::npos);
  }
}

TEST(Exhaustive, SpectrumIsSortedWithValidatedEnergies) {
  const BinaryQubo q = random_instance(11, 9);
  const SampleSet set = solve_exhaustive(q);
  for (std::size_t k = 1; k < set.samples.size(); ++k) {
    EXPECT_LE(set.samples[k - 1].energy, set.samples[k].energy);
  }
  for (std::size_t k = 0; k < set.samples.size(); k += 97) {
    EXPECT_DOUBLE_EQ(set.samples[k].energy, energy(q, set.samples[k].bits));
  }
}

TEST(SimulatedAnnealing, DeterministicForFixedSeed) {
  const BinaryQubo q = random_instance(14, 11);
  SaConfig cfg;
  cfg.reads = 25;
  cfg.seed = 42;
  const SampleSet a = solve_simulated_annealing(q, cfg);
  const SampleSet b = solve_simulated_annealing(q, cfg);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t k = 0; k < a.samples.size(); ++k) {
    EXPECT_EQ(a.samples[k].bits, b.samples[k].bits);
    EXPECT_DOUBLE_EQ(a.samples[k].energy, b.samples[k].energy);
    EXPECT_EQ(a.samples[k].multiplicity, b.samples[k].multiplicity);
  }
}

TEST(SimulatedAnnealing, FrozenScheduleOnlyDescends) {
  // beta_end -> infinity limit: with a huge beta everywhere, every accepted
  // move is downhill, so per-sweep energies never increase.
  const BinaryQubo q = random_instance(16, 12);
  SaConfig cfg;
  cfg.reads = 5;
  cfg.sweeps = 50;
  cfg.beta_start = 1e8;
  cfg.beta_end = 1e9;
  cfg.seed = 3;
  std::map<int, double> last;
  bool violated = false;
  cfg.observer = [&](int read, int sweep, double e) {
    if (sweep > 0 && e > last[read] + 1e-9) violated = true;
    last[read] = e;
  };
  solve_simulated_annealing(q, cfg);
  EXPECT_FALSE(violated);
}

TEST(SimulatedAnnealing, FindsGroundStateOnSmallInstances) {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const BinaryQubo q = random_instance(12, 200 + seed);
    const double ground = solve_exhaustive(q).best().energy;
    SaConfig cfg;
    cfg.seed = seed;
    const SampleSet sa = solve_simulated_annealing(q, cfg);
    if (std::abs(sa.best().energy - ground) < 1e-9) ++hits;
  }
  EXPECT_GE(hits, 9);
}

TEST(SimulatedAnnealing, EnergiesRevalidatedOnIngest) {
  const BinaryQubo q = random_instance(10, 13);
  SaConfig cfg;
  cfg.reads = 30;
  cfg.seed = 5;
  const SampleSet set = solve_simulated_annealing(q, cfg);
  long reads = 0;
  for (const auto& s : set.samples) {
    EXPECT_DOUBLE_EQ(s.energy, energy(q, s.bits));
    EXPECT_GE(s.multiplicity, 1);
    reads += s.multiplicity;
  }
  EXPECT_EQ(reads, 30);
}

TEST(SimulatedAnnealing, RejectsBadConfig) {
  const BinaryQubo q = random_instance(4, 14);
  SaConfig cfg;
  cfg.beta_start = 2.0;
  cfg.beta_end = 1.0;
  EXPECT_THROW(solve_simulated_annealing(q, cfg), UsageError);
  cfg = SaConfig{};
  cfg.reads = 0;
  EXPECT_THROW(solve_simulated_annealing(q, cfg), UsageError);
}

TEST(SampleSet, EnergyGapUsesDistinctEnergies) {
  BinaryQubo q;
  q.q_tilde = Eigen::MatrixXd::Zero(2, 2);
  q.c_tilde = Eigen::VectorXd::Zero(2);
  q.c_tilde << 1.0, 1.0;  // states 00:0, 01:1, 10:1, 11:2
  const SampleSet set = solve_exhaustive(q);
  EXPECT_NEAR(set.energy_gap(), 1.0, 1e-12);
}
