#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <queue>
#include <random>
#include <utility>
#include <vector>

#include "qmra/errors.hpp"
#include "qmra/qubo.hpp"

namespace qmra {

struct Sample {
  std::vector<std::uint8_t> bits;
  double energy = 0.0;
  long multiplicity = 1;
};

/// Samples sorted ascending by energy; energies are recomputed from the
/// bits on ingest, so they always match energy(qubo, bits) exactly.
struct SampleSet {
  std::vector<Sample> samples;

  const Sample& best() const {
    if (samples.empty()) throw BackendError("SampleSet: empty");
    return samples.front();
  }

  /// Difference between the two lowest distinct energies; 0 when there is
  /// only one distinct energy.
  double energy_gap() const {
    if (samples.empty()) return 0.0;
    const double e0 = samples.front().energy;
    for (const auto& s : samples) {
      if (s.energy > e0) return s.energy - e0;
    }
    return 0.0;
  }

  long total_reads() const {
    long total = 0;
    for (const auto& s : samples) total += s.multiplicity;
    return total;
  }
};

/// Objective value of a bitstring: q^T q_tilde q + c_tilde^T q.
inline double energy(const BinaryQubo& qubo,
                     const std::vector<std::uint8_t>& bits) {
  if (static_cast<int>(bits.size()) != qubo.dim()) {
    throw ContractError("energy: bit count != qubo dimension");
  }
  std::vector<int> set;
  for (int i = 0; i < qubo.dim(); ++i) {
    if (bits[i]) set.push_back(i);
  }
  double e = 0.0;
  for (int a : set) {
    e += qubo.c_tilde(a);
    for (int b : set) e += qubo.q_tilde(a, b);
  }
  return e;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed * 0x2545f4914f6cdd1dULL + stream + 1);
}

}  // namespace detail

/// Builds a SampleSet from raw (bits, count) reads: recomputes energies,
/// merges duplicates, sorts ascending by (energy, bits).
inline SampleSet ingest_samples(
    const BinaryQubo& qubo,
    std::vector<std::pair<std::vector<std::uint8_t>, long>> raw) {
  std::sort(raw.begin(), raw.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  SampleSet out;
  for (auto& [bits, count] : raw) {
    if (!out.samples.empty() && out.samples.back().bits == bits) {
      out.samples.back().multiplicity += count;
    } else {
      Sample s;
      s.energy = energy(qubo, bits);
      s.bits = std::move(bits);
      s.multiplicity = count;
      out.samples.push_back(std::move(s));
    }
  }
  std::stable_sort(out.samples.begin(), out.samples.end(),
                   [](const Sample& a, const Sample& b) {
                     if (a.energy != b.energy) return a.energy < b.energy;
                     return a.bits < b.bits;
                   });
  return out;
}

inline constexpr int kExhaustiveBitCap = 24;
inline constexpr int kExhaustiveSpectrumCap = 1 << 16;

/// Enumerates every state by Gray code and returns the lowest 2^16 of the
/// spectrum. Ground state is exact. Hard-capped at 24 bits.
inline SampleSet solve_exhaustive(const BinaryQubo& qubo) {
  const int dim = qubo.dim();
  if (dim < 1) throw UsageError("solve_exhaustive: empty problem");
  if (dim > kExhaustiveBitCap) {
    throw CapacityError("solve_exhaustive: " + std::to_string(dim) +
                        " bits exceeds the 24-bit exhaustive cap");
  }

  // local fields: psi[i] = sum_{j != i} q_tilde(i, j) q_j
  std::vector<double> psi(dim, 0.0);
  std::vector<std::uint8_t> state(dim, 0);
  double e = 0.0;

  // max-heap of (energy, gray state) keeping the lowest spectrum slice
  using Entry = std::pair<double, std::uint32_t>;
  std::priority_queue<Entry> lowest;
  lowest.push({0.0, 0});

  const std::uint64_t count = 1ULL << dim;
  for (std::uint64_t k = 1; k < count; ++k) {
    const int bit = __builtin_ctzll(k);  // Gray-code successor flips this bit
    const double before = state[bit] ? 1.0 : 0.0;
    const double de = (1.0 - 2.0 * before) *
                      (qubo.c_tilde(bit) + qubo.q_tilde(bit, bit) + 2.0 * psi[bit]);
    state[bit] ^= 1;
    e += de;
    const double sign = state[bit] ? 1.0 : -1.0;
    for (int i = 0; i < dim; ++i) {
      psi[i] += sign * qubo.q_tilde(i, bit);
    }
    psi[bit] -= sign * qubo.q_tilde(bit, bit);

    const std::uint32_t gray =
        static_cast<std::uint32_t>(k ^ (k >> 1));
    if (static_cast<int>(lowest.size()) < kExhaustiveSpectrumCap) {
      lowest.push({e, gray});
    } else if (e < lowest.top().first) {
      lowest.pop();
      lowest.push({e, gray});
    }
  }

  std::vector<std::pair<std::vector<std::uint8_t>, long>> raw;
  raw.reserve(lowest.size());
  while (!lowest.empty()) {
    const auto [unused_energy, gray] = lowest.top();
    lowest.pop();
    std::vector<std::uint8_t> bits(dim, 0);
    for (int i = 0; i < dim; ++i) bits[i] = (gray >> i) & 1u;
    raw.emplace_back(std::move(bits), 1);
  }
  return ingest_samples(qubo, std::move(raw));
}

/// Metropolis single-flip annealer configuration. Defaults are pinned:
/// 100 reads of 200 full sweeps each, geometric inverse-temperature ramp.
/// The schedule is dimensionless: acceptance uses delta-E normalized by the
/// instance's largest single-flip energy bound, so the same beta range
/// freezes problems of any coupling scale.
struct SaConfig {
  int reads = 100;
  int sweeps = 200;
  double beta_start = 0.1;
  double beta_end = 10.0;
  std::uint64_t seed = 0;
  /// Optional per-sweep hook (read index, sweep index, current energy).
  std::function<void(int, int, double)> observer;

  void validate() const {
    if (reads < 1) throw UsageError("SaConfig: reads >= 1");
    if (sweeps < 1) throw UsageError("SaConfig: sweeps >= 1");
    if (!(beta_end > beta_start) || !(beta_start > 0.0)) {
      throw UsageError("SaConfig: need beta_end > beta_start > 0");
    }
  }
};

/// Simulated annealing: per read, random init and `sweeps` full passes of
/// single-flip Metropolis with an O(1) incremental energy delta per
/// attempted flip. Deterministic for a fixed seed.
inline SampleSet solve_simulated_annealing(const BinaryQubo& qubo,
                                           const SaConfig& cfg) {
  cfg.validate();
  const int dim = qubo.dim();
  if (dim < 1) throw UsageError("solve_simulated_annealing: empty problem");

  // row-major symmetrized copy of the couplings for cache-friendly updates
  std::vector<double> rows(static_cast<std::size_t>(dim) * dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      rows[static_cast<std::size_t>(i) * dim + j] =
          (qubo.q_tilde(i, j) + qubo.q_tilde(j, i)) / 2.0;
    }
  }

  const double ratio =
      cfg.sweeps > 1
          ? std::pow(cfg.beta_end / cfg.beta_start,
                     1.0 / static_cast<double>(cfg.sweeps - 1))
          : 1.0;

  // typical single-flip |delta E| (median over variables of an RMS bound);
  // puts the beta schedule in dimensionless units so contracted
  // (tiny-scale) subproblems freeze just like O(1)-scale instances
  std::vector<double> flip_rms(dim);
  for (int i = 0; i < dim; ++i) {
    const double* row = &rows[static_cast<std::size_t>(i) * dim];
    double sq = qubo.c_tilde(i) * qubo.c_tilde(i) + row[i] * row[i];
    for (int j = 0; j < dim; ++j) {
      if (j != i) sq += 4.0 * row[j] * row[j];
    }
    flip_rms[i] = std::sqrt(sq);
  }
  std::nth_element(flip_rms.begin(), flip_rms.begin() + dim / 2,
                   flip_rms.end());
  const double flip_scale = flip_rms[dim / 2];
  const double inv_scale = flip_scale > 0.0 ? 1.0 / flip_scale : 1.0;

  std::vector<std::pair<std::vector<std::uint8_t>, long>> raw;
  raw.reserve(cfg.reads);

  std::vector<std::uint8_t> state(dim);
  std::vector<double> psi(dim);

  for (int read = 0; read < cfg.reads; ++read) {
    std::mt19937_64 rng(detail::mix_seed(cfg.seed, read));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    for (int i = 0; i < dim; ++i) state[i] = (rng() >> 40) & 1u;
    std::fill(psi.begin(), psi.end(), 0.0);
    for (int i = 0; i < dim; ++i) {
      if (!state[i]) continue;
      const double* row = &rows[static_cast<std::size_t>(i) * dim];
      for (int j = 0; j < dim; ++j) psi[j] += row[j];
      psi[i] -= row[i];
    }
    // psi[j] = sum_{set i != j} W_ij, so summing it over set bits covers
    // both orders of every off-diagonal pair exactly once each.
    double e = 0.0;
    for (int i = 0; i < dim; ++i) {
      if (state[i]) e += qubo.c_tilde(i) + rows[std::size_t(i) * dim + i] + psi[i];
    }

    double beta = cfg.beta_start;
    for (int sweep = 0; sweep < cfg.sweeps; ++sweep) {
      for (int i = 0; i < dim; ++i) {
        const double de =
            (1.0 - 2.0 * state[i]) *
            (qubo.c_tilde(i) + rows[std::size_t(i) * dim + i] + 2.0 * psi[i]);
        bool accept = de <= 0.0;
        if (!accept) {
          const double bde = beta * de * inv_scale;
          if (bde < 44.0) accept = unit(rng) < std::exp(-bde);
        }
        if (accept) {
          state[i] ^= 1;
          e += de;
          const double sign = state[i] ? 1.0 : -1.0;
          const double* row = &rows[static_cast<std::size_t>(i) * dim];
          for (int j = 0; j < dim; ++j) psi[j] += sign * row[j];
          psi[i] -= sign * row[i];
        }
      }
      if (cfg.observer) cfg.observer(read, sweep, e);
      beta *= ratio;
    }
    raw.emplace_back(state, 1);
  }
  return ingest_samples(qubo, std::move(raw));
}

/// Backend abstraction used by the solve loop and benchmarks; the seed lets
/// callers decorrelate successive invocations deterministically.
using Sampler =
    std::function<SampleSet(const BinaryQubo&, std::uint64_t seed)>;

inline Sampler make_sa_sampler(SaConfig base) {
  return [base](const BinaryQubo& qubo, std::uint64_t seed) {
    SaConfig cfg = base;
    cfg.seed = detail::mix_seed(base.seed, seed);
    return solve_simulated_annealing(qubo, cfg);
  };
}

inline Sampler make_exhaustive_sampler() {
  return [](const BinaryQubo& qubo, std::uint64_t) {
    return solve_exhaustive(qubo);
  };
}

}  // namespace qmra
