#pragma once

#include <algorithm>
#include <cmath>
#include <iostream>
#include <vector>

#include <Eigen/Dense>

#include "qmra/errors.hpp"
#include "qmra/solvers.hpp"

namespace qmra {

/// Outcome of the energy-weighted bitwise vote.
struct RefinementResult {
  std::vector<std::uint8_t> bits;  // bit j is 1 iff scores[j] > 0
  Eigen::VectorXd scores;          // signed vote accumulator, entries in [-1, 1]
  std::vector<double> weights;     // Boltzmann weight per voter, sums to 1
  double refined_energy = 0.0;
};

/// Affine min-max map of the energies onto [0, 1]; a constant spectrum maps
/// to all zeros.
inline std::vector<double> calibrate_energies(
    const std::vector<double>& energies) {
  if (energies.empty()) throw UsageError("calibrate_energies: empty input");
  const auto [lo, hi] = std::minmax_element(energies.begin(), energies.end());
  const double span = *hi - *lo;
  std::vector<double> out(energies.size(), 0.0);
  if (span <= 0.0) return out;
  for (std::size_t i = 0; i < energies.size(); ++i) {
    out[i] = (energies[i] - *lo) / span;
  }
  return out;
}

/// Boltzmann-weighted bitwise majority vote over the k lowest-energy reads.
/// Multiplicities expand: a sample observed c times casts c votes. Weights
/// use the calibrated energies, w_i = exp(-beta E_i) / Z. Tied scores
/// resolve to bit 0.
inline RefinementResult refine(const BinaryQubo& qubo, const SampleSet& set,
                               double beta, long k) {
  if (!(beta > 0.0)) throw UsageError("refine: beta must be > 0");
  if (set.samples.empty()) throw UsageError("refine: empty sample set");
  if (k < 1) throw UsageError("refine: k must be >= 1");
  const long total = set.total_reads();
  if (k > total) {
    std::cerr << "refine: k=" << k << " exceeds " << total
              << " reads; clamping\n";
    k = total;
  }

  // expand by multiplicity in ascending-energy order and keep the k lowest
  std::vector<const Sample*> voters;
  voters.reserve(k);
  for (const auto& s : set.samples) {
    for (long c = 0; c < s.multiplicity && static_cast<long>(voters.size()) < k;
         ++c) {
      voters.push_back(&s);
    }
    if (static_cast<long>(voters.size()) >= k) break;
  }

  std::vector<double> energies(voters.size());
  for (std::size_t i = 0; i < voters.size(); ++i) {
    energies[i] = voters[i]->energy;
  }
  const std::vector<double> calibrated = calibrate_energies(energies);

  RefinementResult result;
  result.weights.resize(voters.size());
  double z = 0.0;
  for (std::size_t i = 0; i < voters.size(); ++i) {
    result.weights[i] = std::exp(-beta * calibrated[i]);
    z += result.weights[i];
  }
  for (double& w : result.weights) w /= z;

  const int dim = qubo.dim();
  result.scores = Eigen::VectorXd::Zero(dim);
  for (std::size_t i = 0; i < voters.size(); ++i) {
    for (int j = 0; j < dim; ++j) {
      result.scores(j) +=
          voters[i]->bits[j] ? result.weights[i] : -result.weights[i];
    }
  }
  result.bits.resize(dim);
  for (int j = 0; j < dim; ++j) result.bits[j] = result.scores(j) > 0.0;
  result.refined_energy = energy(qubo, result.bits);
  return result;
}

struct RefinementBenchmarkRow {
  long k = 0;
  double improve_freq = 0.0;  // fraction of trials with refined < best raw
  double mean_delta = 0.0;    // mean of (best raw energy - refined energy)
};

/// Repeatedly samples the QUBO and measures how the vote moves the energy
/// relative to the best raw read, for every K in the grid.
inline std::vector<RefinementBenchmarkRow> refinement_benchmark(
    const BinaryQubo& qubo, const Sampler& sampler, double beta,
    const std::vector<long>& k_grid, int trials, std::uint64_t seed = 0) {
  if (trials < 1) throw UsageError("refinement_benchmark: trials >= 1");
  std::vector<RefinementBenchmarkRow> rows(k_grid.size());
  for (std::size_t ki = 0; ki < k_grid.size(); ++ki) rows[ki].k = k_grid[ki];

  for (int trial = 0; trial < trials; ++trial) {
    const SampleSet set = sampler(qubo, detail::mix_seed(seed, trial));
    const double best_raw = set.best().energy;
    for (std::size_t ki = 0; ki < k_grid.size(); ++ki) {
      const RefinementResult r = refine(qubo, set, beta, k_grid[ki]);
      rows[ki].improve_freq += (r.refined_energy < best_raw) ? 1.0 : 0.0;
      rows[ki].mean_delta += best_raw - r.refined_energy;
    }
  }
  for (auto& row : rows) {
    row.improve_freq /= trials;
    row.mean_delta /= trials;
  }
  return rows;
}

}  // namespace qmra
