#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qmra/errors.hpp"
#include "qmra/graph.hpp"
#include "qmra/qubo.hpp"
#include "qmra/refine.hpp"
#include "qmra/solvers.hpp"

namespace qmra {

enum class InitScheme { kIdentity, kMst, kExplicit };

/// Shared configuration of the iterative QUBO solver and the damped
/// continuous baseline. Defaults follow the pinned experimental setup:
/// delta0 = pi/30, m = 3, kappa = delta0/10, tau = 2, alpha = 0.5.
struct SolveConfig {
  int maxiter = 100;
  double delta0 = M_PI / 30.0;
  double kappa = 0.0;  // 0 means delta0 / 10
  double tau = 2.0;
  int m = 3;
  double epsilon = 1e-8;
  double alpha = 0.5;
  InitScheme init = InitScheme::kIdentity;
  std::vector<Eigen::Vector3d> init_tangents;  // used when init == kExplicit
  bool refine = false;
  long refine_topk = 30;
  double refine_beta = 2.0;
  std::uint64_t seed = 0;
  // Radius below which further steps are numerically nil; the loop stops
  // early instead of burning the remaining iterations.
  double delta_floor = 1e-12;

  void validate() const {
    if (maxiter < 1) throw UsageError("SolveConfig: maxiter >= 1");
    if (!(delta0 > 0.0)) throw UsageError("SolveConfig: delta0 > 0");
    if (!(tau > 1.0)) throw UsageError("SolveConfig: tau > 1");
    if (m < 1) throw UsageError("SolveConfig: m >= 1");
    if (epsilon < 0.0) throw UsageError("SolveConfig: epsilon >= 0");
    if (alpha < 0.0) throw UsageError("SolveConfig: alpha >= 0");
    if (refine_topk < 1) throw UsageError("SolveConfig: refine_topk >= 1");
  }
};

namespace detail {

inline std::vector<Eigen::Vector3d> initial_tangents(const CameraGraph& g,
                                                     const SolveConfig& cfg) {
  switch (cfg.init) {
    case InitScheme::kIdentity:
      return std::vector<Eigen::Vector3d>(g.n, Eigen::Vector3d::Zero());
    case InitScheme::kMst:
      return mst_initialization(g);
    case InitScheme::kExplicit:
      if (static_cast<int>(cfg.init_tangents.size()) != g.n) {
        throw ContractError("SolveConfig: explicit init needs n tangents");
      }
      return cfg.init_tangents;
  }
  throw UsageError("SolveConfig: unknown init scheme");
}

inline std::vector<Eigen::Matrix3d> to_rotations(
    const std::vector<Eigen::Vector3d>& tangents) {
  std::vector<Eigen::Matrix3d> out(tangents.size());
  for (std::size_t i = 0; i < tangents.size(); ++i) {
    out[i] = exp_map(tangents[i]);
  }
  return out;
}

inline double stacked_distance(const std::vector<Eigen::Matrix3d>& a,
                               const std::vector<Eigen::Matrix3d>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += (a[i] - b[i]).squaredNorm();
  }
  return std::sqrt(sum);
}

inline void finish_result(const CameraGraph& g, EstimationResult& result) {
  result.rotations = to_rotations(result.tangents);
  result.residual = residual_avg(g, result.rotations);
  result.residual_angle = residual_angle_avg(g, result.rotations);
  if (g.has_ground_truth()) {
    result.angle_error = angle_error(result.rotations, g.ground_truth);
  }
  result.iterations = static_cast<int>(result.trace.size());
}

}  // namespace detail

/// Iterative synchronization: linearize around the current tangents, encode
/// the box-constrained increment on m bits per dimension, sample the QUBO,
/// and apply the decoded step only when it does not increase the residual.
/// A rejected or sub-threshold update contracts the search radius by tau.
inline EstimationResult solve_iterative(const CameraGraph& g,
                                        const Sampler& sampler,
                                        const SolveConfig& cfg) {
  cfg.validate();
  if (!g.is_connected()) {
    throw ConnectivityError("solve_iterative: graph is disconnected");
  }
  const CostMatrixQ cost = build_cost_matrix(g);

  std::vector<Eigen::Vector3d> tangents = detail::initial_tangents(g, cfg);
  std::vector<Eigen::Matrix3d> rotations = detail::to_rotations(tangents);
  double residual = residual_avg(g, rotations);

  double delta = cfg.delta0;
  double kappa = cfg.kappa > 0.0 ? cfg.kappa : cfg.delta0 / 10.0;

  EstimationResult result;
  for (int iter = 1; iter <= cfg.maxiter; ++iter) {
    const LinearizedSubproblem sub = linearize(cost, tangents, cfg.alpha, delta);
    const BinaryQubo qubo = binarize(sub, cfg.m);

    SampleSet set;
    try {
      set = sampler(qubo, detail::mix_seed(cfg.seed, iter));
    } catch (const CapacityError& err) {
      throw CapacityError("iteration " + std::to_string(iter) + ": " +
                          err.what());
    } catch (const BackendError& err) {
      throw BackendError("iteration " + std::to_string(iter) + ": " +
                         err.what());
    }

    const Sample& raw_best = set.best();
    std::vector<std::uint8_t> bits = raw_best.bits;
    double best_energy = raw_best.energy;
    if (cfg.refine) {
      const RefinementResult refined =
          refine(qubo, set, cfg.refine_beta, cfg.refine_topk);
      if (refined.refined_energy < best_energy) {
        bits = refined.bits;
        best_energy = refined.refined_energy;
      }
    }

    const Eigen::VectorXd dv = decode_bits(bits, cfg.m, delta);
    std::vector<Eigen::Vector3d> trial = tangents;
    for (int i = 0; i < g.n; ++i) trial[i] += dv.segment<3>(3 * i);
    const std::vector<Eigen::Matrix3d> trial_rot = detail::to_rotations(trial);
    const double trial_residual = residual_avg(g, trial_rot);
    if (!std::isfinite(trial_residual)) {
      throw NumericError("solve_iterative: non-finite residual at iteration " +
                         std::to_string(iter));
    }

    double update_norm = 0.0;
    if (trial_residual <= residual) {
      update_norm = detail::stacked_distance(trial_rot, rotations);
      tangents = std::move(trial);
      rotations = trial_rot;
      residual = trial_residual;
    }

    result.trace.push_back({iter, residual, best_energy, set.energy_gap(),
                            delta, update_norm});

    if (residual < cfg.epsilon) break;
    if (update_norm < kappa) {
      delta /= cfg.tau;
      kappa /= cfg.tau;
    }
    if (delta < cfg.delta_floor) break;
  }

  result.tangents = std::move(tangents);
  detail::finish_result(g, result);
  return result;
}

/// One damped step of the continuous subproblem: solves
/// (2 q_hat + lambda I) dv = -c_hat. Unclamped; throws NumericError when the
/// system cannot be solved reliably at this lambda.
inline Eigen::VectorXd damped_step(const LinearizedSubproblem& sub,
                                   double lambda) {
  if (lambda < 0.0) throw UsageError("damped_step: lambda >= 0");
  Eigen::MatrixXd a = 2.0 * sub.q_hat;
  a.diagonal().array() += lambda;
  const Eigen::VectorXd x = a.ldlt().solve(-sub.c_hat);
  if (!x.allFinite() ||
      (a * x + sub.c_hat).norm() > 1e-8 * (sub.c_hat.norm() + 1.0)) {
    throw NumericError("damped_step: linear solve failed at lambda=" +
                       std::to_string(lambda));
  }
  return x;
}

/// Damped continuous solve of one subproblem with the componentwise box
/// clamp. lambda doubles whenever the trial step increases the objective
/// and halves on the first decrease; at most max_trials attempts. Returns a
/// zero step when no improvement exists (caller treats that as a stall).
inline Eigen::VectorXd solve_subproblem_continuous(
    const LinearizedSubproblem& sub, double& lambda,
    const std::function<double(const Eigen::VectorXd&)>& objective,
    double current_objective, int max_trials = 20) {
  int solver_failures = 0;
  for (int trial = 0; trial < max_trials; ++trial) {
    Eigen::VectorXd dv;
    try {
      dv = damped_step(sub, lambda);
    } catch (const NumericError&) {
      // indefinite or singular system: grow lambda fast until it turns PD
      ++solver_failures;
      lambda = std::max(10.0 * lambda, 1e-8);
      continue;
    }
    dv = dv.cwiseMax(-sub.delta).cwiseMin(sub.delta);
    if (objective(dv) < current_objective) {
      lambda /= 2.0;
      return dv;
    }
    lambda *= 2.0;
  }
  if (solver_failures == max_trials) {
    throw NumericError("solve_subproblem_continuous: persistent solve failure");
  }
  return Eigen::VectorXd::Zero(sub.c_hat.size());
}

/// Damped-least-squares baseline: same outer linearization as the iterative
/// solver, continuous inner steps instead of sampling.
inline EstimationResult solve_lm(const CameraGraph& g,
                                 const SolveConfig& cfg) {
  cfg.validate();
  if (!g.is_connected()) {
    throw ConnectivityError("solve_lm: graph is disconnected");
  }
  const CostMatrixQ cost = build_cost_matrix(g);

  std::vector<Eigen::Vector3d> tangents = detail::initial_tangents(g, cfg);
  std::vector<Eigen::Matrix3d> rotations = detail::to_rotations(tangents);
  double residual = residual_avg(g, rotations);
  double lambda = 1e-4;

  EstimationResult result;
  int stalls = 0;
  for (int iter = 1; iter <= cfg.maxiter; ++iter) {
    const LinearizedSubproblem sub =
        linearize(cost, tangents, cfg.alpha, cfg.delta0);
    const auto objective = [&](const Eigen::VectorXd& dv) {
      std::vector<Eigen::Matrix3d> rot(g.n);
      for (int i = 0; i < g.n; ++i) {
        rot[i] = exp_map(tangents[i] + dv.segment<3>(3 * i));
      }
      return residual_avg(g, rot);
    };
    const Eigen::VectorXd dv =
        solve_subproblem_continuous(sub, lambda, objective, residual);

    double update_norm = 0.0;
    const bool moved = dv.squaredNorm() > 0.0;
    if (moved) {
      std::vector<Eigen::Vector3d> next = tangents;
      for (int i = 0; i < g.n; ++i) next[i] += dv.segment<3>(3 * i);
      const std::vector<Eigen::Matrix3d> next_rot = detail::to_rotations(next);
      update_norm = detail::stacked_distance(next_rot, rotations);
      tangents = std::move(next);
      rotations = next_rot;
      residual = residual_avg(g, rotations);
      stalls = 0;
    } else {
      ++stalls;  // lambda kept growing inside the damping loop; retry
    }
    result.trace.push_back({iter, residual, 0.0, 0.0, cfg.delta0, update_norm});
    if (residual < cfg.epsilon) break;
    if (!moved && (stalls >= 3 || lambda > 1e12)) break;
  }

  result.tangents = std::move(tangents);
  detail::finish_result(g, result);
  return result;
}

/// Single-shot pipeline over the binary basis encoding: sample once, decode
/// by basis summation, project each block onto the manifold for metric
/// evaluation. Nodes whose decoded block is rank deficient are counted in
/// projection_failures and fall back to the identity.
inline EstimationResult solve_direct(const CameraGraph& g,
                                     const Sampler& sampler,
                                     std::uint64_t seed = 0) {
  g.validate();
  const BinaryQubo qubo = build_direct_qubo(g);
  const SampleSet set = sampler(qubo, seed);
  const Sample& best = set.best();

  const std::vector<Eigen::Matrix3d> raw = decode_direct(best.bits, g.n);
  EstimationResult result;
  result.tangents.resize(g.n);
  std::vector<Eigen::Matrix3d> projected(g.n);
  for (int i = 0; i < g.n; ++i) {
    try {
      projected[i] = project_to_so3(raw[i]);
    } catch (const DegenerateInputError&) {
      ++result.projection_failures;
      projected[i] = Eigen::Matrix3d::Identity();
    }
    result.tangents[i] = log_map(projected[i]);
  }
  result.trace.push_back(
      {1, 0.0, best.energy, set.energy_gap(), 0.0, 0.0});
  result.trace.back().residual = residual_avg(g, projected);
  detail::finish_result(g, result);
  return result;
}

}  // namespace qmra
