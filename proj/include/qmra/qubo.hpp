#pragma once

#include <cstdint>
#include <tuple>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "qmra/errors.hpp"
#include "qmra/graph.hpp"
#include "qmra/so3.hpp"

namespace qmra {

/// 9N x 9N quadratic cost of the synchronization objective: block (i,j) is
/// -2 (I_3 kron rel_ij^T) for stored edges, -2 I_9 on the diagonal, zero for
/// absent pairs. On-manifold, R^T Q R equals the chordal objective up to a
/// constant that depends only on the graph.
struct CostMatrixQ {
  Eigen::MatrixXd q;
  int n = 0;
};

/// Continuous quadratic model of one iteration over tangent increments:
/// minimize dv^T q_hat dv + c_hat^T dv subject to ||dv||_inf <= delta.
struct LinearizedSubproblem {
  Eigen::MatrixXd q_hat;
  Eigen::VectorXd c_hat;
  double delta = 0.0;
  double alpha = 0.0;
  int n = 0;
};

/// Binary quadratic program over bits: minimize q^T q_tilde q + c_tilde^T q.
/// offset carries the constant dropped by the encoding so continuous and
/// binary energies can be reconciled exactly.
struct BinaryQubo {
  Eigen::MatrixXd q_tilde;
  Eigen::VectorXd c_tilde;
  int n = 0;       // camera count
  int m = 0;       // bits per tangent dimension; 0 for basis-encoded QUBOs
  double delta = 0.0;
  double offset = 0.0;

  int dim() const { return static_cast<int>(q_tilde.rows()); }
};

/// Spin form: energy(sigma) = sum h_i sigma_i + sum_{i<j} J_ij sigma_i sigma_j
/// + offset, with sigma_i = 1 - 2 q_i.
struct IsingModel {
  Eigen::VectorXd h;
  std::vector<std::tuple<int, int, double>> j;  // upper-triangular couplings
  double offset = 0.0;
};

inline long logical_qubit_count(int n, int m) {
  if (n < 1 || m < 1) throw UsageError("logical_qubit_count: n, m >= 1");
  return 3L * n * m;
}

inline CostMatrixQ build_cost_matrix(const CameraGraph& g) {
  g.validate();
  const int n = g.n;
  CostMatrixQ cost;
  cost.n = n;
  cost.q = Eigen::MatrixXd::Zero(9 * n, 9 * n);

  auto put_block = [&](int i, int j, const Eigen::Matrix3d& rel_t) {
    // I_3 kron rel^T = blockdiag(rel^T, rel^T, rel^T)
    for (int b = 0; b < 3; ++b) {
      cost.q.block<3, 3>(9 * i + 3 * b, 9 * j + 3 * b) = -2.0 * rel_t;
    }
  };
  for (int i = 0; i < n; ++i) {
    put_block(i, i, Eigen::Matrix3d::Identity());
  }
  for (const auto& e : g.edges) {
    put_block(e.i, e.j, e.rel.transpose());
  }
  return cost;
}

/// Stacked column-major vectorization of the current rotations.
inline Eigen::VectorXd stack_rotations(
    const std::vector<Eigen::Vector3d>& tangents) {
  Eigen::VectorXd r(9 * tangents.size());
  for (std::size_t i = 0; i < tangents.size(); ++i) {
    r.segment<9>(9 * i) = vec(exp_map(tangents[i]));
  }
  return r;
}

/// First-order model around the current tangents with the orthogonality
/// penalty folded in:
///   q_hat = G (Q + alpha N I) G^T,  c_hat = 2 G (Q + alpha N I) R,
/// where G is the block-diagonal exponential Jacobian. q_hat is
/// re-symmetrized to absorb floating-point drift.
inline LinearizedSubproblem linearize(
    const CostMatrixQ& cost, const std::vector<Eigen::Vector3d>& tangents,
    double alpha, double delta) {
  if (alpha < 0.0) throw UsageError("linearize: alpha must be >= 0");
  if (!(delta > 0.0)) throw UsageError("linearize: delta must be > 0");
  const int n = cost.n;
  if (static_cast<int>(tangents.size()) != n) {
    throw ContractError("linearize: tangent count != cost matrix nodes");
  }

  Eigen::MatrixXd penalized = cost.q;
  penalized.diagonal().array() += alpha * n;

  std::vector<ExpJacobian> jac(n);
  for (int i = 0; i < n; ++i) jac[i] = exp_jacobian(tangents[i]);
  const Eigen::VectorXd r = stack_rotations(tangents);

  LinearizedSubproblem sub;
  sub.n = n;
  sub.alpha = alpha;
  sub.delta = delta;
  sub.q_hat.resize(3 * n, 3 * n);
  sub.c_hat.resize(3 * n);

  const Eigen::VectorXd pr = penalized * r;
  for (int i = 0; i < n; ++i) {
    sub.c_hat.segment<3>(3 * i) = 2.0 * jac[i] * pr.segment<9>(9 * i);
    for (int j = 0; j < n; ++j) {
      sub.q_hat.block<3, 3>(3 * i, 3 * j) =
          jac[i] * penalized.block<9, 9>(9 * i, 9 * j) * jac[j].transpose();
    }
  }
  sub.q_hat = ((sub.q_hat + sub.q_hat.transpose()) / 2.0).eval();
  return sub;
}

/// Per-bit step sizes of the fixed-point encoding, least significant first.
inline Eigen::VectorXd bit_weights(int m, double delta) {
  const double s = static_cast<double>((1u << m) - 1u);
  Eigen::VectorXd w(m);
  for (int l = 0; l < m; ++l) {
    w(l) = 2.0 * delta / s * static_cast<double>(1u << l);
  }
  return w;
}

/// Fixed-point decoding: component i of the increment is
/// -delta + (2 delta / (2^m - 1)) sum_l 2^l bits[i*m + l].
inline Eigen::VectorXd decode_bits(const std::vector<std::uint8_t>& bits,
                                   int m, double delta) {
  if (m < 1 || bits.size() % m != 0) {
    throw ContractError("decode_bits: bit count is not a multiple of m");
  }
  const Eigen::VectorXd w = bit_weights(m, delta);
  const int dims = static_cast<int>(bits.size()) / m;
  Eigen::VectorXd dv = Eigen::VectorXd::Constant(dims, -delta);
  for (int i = 0; i < dims; ++i) {
    for (int l = 0; l < m; ++l) {
      if (bits[i * m + l]) dv(i) += w(l);
    }
  }
  return dv;
}

/// Binary encoding of the box-constrained subproblem:
///   q_tilde = D^T q_hat D,
///   c_tilde = D^T (c_hat - 2 delta q_hat 1),
/// with the dropped constant delta^2 1^T q_hat 1 - delta c_hat^T 1 kept in
/// offset, so bit energies reconcile exactly with the continuous model.
inline BinaryQubo binarize(const LinearizedSubproblem& sub, int m) {
  if (m < 1 || m > 16) throw UsageError("binarize: need 1 <= m <= 16");
  const int dims = 3 * sub.n;
  const Eigen::VectorXd w = bit_weights(m, sub.delta);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(dims);

  BinaryQubo q;
  q.n = sub.n;
  q.m = m;
  q.delta = sub.delta;
  q.q_tilde.resize(dims * m, dims * m);
  q.c_tilde.resize(dims * m);

  const Eigen::VectorXd shifted = sub.c_hat - 2.0 * sub.delta * sub.q_hat * ones;
  for (int i = 0; i < dims; ++i) {
    for (int l = 0; l < m; ++l) {
      q.c_tilde(i * m + l) = w(l) * shifted(i);
      for (int jd = 0; jd < dims; ++jd) {
        for (int lp = 0; lp < m; ++lp) {
          q.q_tilde(i * m + l, jd * m + lp) = w(l) * w(lp) * sub.q_hat(i, jd);
        }
      }
    }
  }
  q.offset = sub.delta * sub.delta * ones.dot(sub.q_hat * ones) -
             sub.delta * sub.c_hat.dot(ones);
  return q;
}

/// Folds the linear term onto the diagonal (valid because bits are
/// idempotent): Q' = q_tilde + diag(c_tilde).
inline Eigen::MatrixXd fold_linear(const BinaryQubo& q) {
  Eigen::MatrixXd out = q.q_tilde;
  out.diagonal() += q.c_tilde;
  return out;
}

/// Spin form of a pure-quadratic binary objective under sigma = 1 - 2 q.
inline IsingModel to_ising(const Eigen::MatrixXd& qp) {
  const int dim = static_cast<int>(qp.rows());
  IsingModel ising;
  ising.h = Eigen::VectorXd::Zero(dim);
  double total = 0.0;
  for (int i = 0; i < dim; ++i) {
    double row = 0.0;
    for (int j = 0; j < dim; ++j) {
      row += qp(i, j);
      if (j > i) {
        const double coupling = (qp(i, j) + qp(j, i)) / 4.0;
        if (coupling != 0.0) ising.j.emplace_back(i, j, coupling);
      }
    }
    ising.h(i) = -(row + qp.col(i).sum()) / 4.0;
    total += row;
  }
  ising.offset = (total + qp.trace()) / 4.0;
  return ising;
}

/// Evaluates the spin-form energy of a bitstring.
inline double ising_energy(const IsingModel& ising,
                           const std::vector<std::uint8_t>& bits) {
  double e = ising.offset;
  for (int i = 0; i < ising.h.size(); ++i) {
    e += ising.h(i) * (1.0 - 2.0 * bits[i]);
  }
  for (const auto& [i, j, v] : ising.j) {
    e += v * (1.0 - 2.0 * bits[i]) * (1.0 - 2.0 * bits[j]);
  }
  return e;
}

/// The 70-column binary basis for direct (single-shot) rotation encoding:
/// scaled copies of +-I and the six symmetric/antisymmetric generators.
inline const Eigen::Matrix<double, 9, 70>& direct_basis() {
  static const Eigen::Matrix<double, 9, 70> basis = [] {
    std::vector<Eigen::Matrix3d> gens;
    gens.push_back(Eigen::Matrix3d::Identity());
    gens.push_back(-Eigen::Matrix3d::Identity());
    const Eigen::Matrix3d skew[3] = {hat(Eigen::Vector3d::UnitX()),
                                     hat(Eigen::Vector3d::UnitY()),
                                     hat(Eigen::Vector3d::UnitZ())};
    for (const auto& s : skew) {
      gens.push_back(s);
      gens.push_back(-s);
    }
    for (const auto& s : skew) {
      // symmetric counterpart: same off-diagonal support, both signs positive
      const Eigen::Matrix3d sym = s.cwiseAbs();
      gens.push_back(sym);
      gens.push_back(-sym);
    }
    const double weights[5] = {0.5, 0.2, 0.1, 0.1, 0.05};
    Eigen::Matrix<double, 9, 70> b;
    int col = 0;
    for (double w : weights) {
      for (const auto& c : gens) {
        b.col(col++) = vec(w * c);
      }
    }
    return b;
  }();
  return basis;
}

/// Single-shot QUBO over 70 bits per node: rotations are approximated as
/// binary-activated sums of basis matrices and plugged straight into the
/// cost matrix. No linear term; the result needs projection before any
/// metric makes sense.
inline BinaryQubo build_direct_qubo(const CameraGraph& g) {
  const CostMatrixQ cost = build_cost_matrix(g);
  const auto& basis = direct_basis();
  const int n = g.n;
  constexpr int kBasisSize = 70;

  BinaryQubo q;
  q.n = n;
  q.m = 0;
  q.delta = 0.0;
  q.offset = 0.0;
  q.q_tilde = Eigen::MatrixXd::Zero(kBasisSize * n, kBasisSize * n);
  q.c_tilde = Eigen::VectorXd::Zero(kBasisSize * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      q.q_tilde.block<kBasisSize, kBasisSize>(kBasisSize * i, kBasisSize * j) =
          basis.transpose() * cost.q.block<9, 9>(9 * i, 9 * j) * basis;
    }
  }
  return q;
}

/// Raw per-node matrices from a direct-encoding bitstring (pre-projection).
inline std::vector<Eigen::Matrix3d> decode_direct(
    const std::vector<std::uint8_t>& bits, int n) {
  constexpr int kBasisSize = 70;
  if (static_cast<int>(bits.size()) != kBasisSize * n) {
    throw ContractError("decode_direct: bit count != 70 n");
  }
  const auto& basis = direct_basis();
  std::vector<Eigen::Matrix3d> out(n, Eigen::Matrix3d::Zero());
  for (int i = 0; i < n; ++i) {
    Eigen::Matrix<double, 9, 1> v = Eigen::Matrix<double, 9, 1>::Zero();
    for (int l = 0; l < kBasisSize; ++l) {
      if (bits[kBasisSize * i + l]) v += basis.col(l);
    }
    out[i] = unvec(v);
  }
  return out;
}

struct SparsityStats {
  double nonzero_fraction = 0.0;
  int bandwidth = 0;
  std::vector<int> degree_histogram;  // index = per-row nonzero count
};

/// Counts couplings with |value| > 1e-12 in the coupling matrix.
inline SparsityStats coupling_sparsity_stats(const BinaryQubo& q) {
  constexpr double kTol = 1e-12;
  const int dim = q.dim();
  SparsityStats stats;
  stats.degree_histogram.assign(dim + 1, 0);
  long nonzeros = 0;
  for (int i = 0; i < dim; ++i) {
    int degree = 0;
    for (int j = 0; j < dim; ++j) {
      if (std::abs(q.q_tilde(i, j)) > kTol) {
        ++degree;
        ++nonzeros;
        stats.bandwidth = std::max(stats.bandwidth, std::abs(i - j));
      }
    }
    stats.degree_histogram[degree]++;
  }
  stats.nonzero_fraction =
      static_cast<double>(nonzeros) / (static_cast<double>(dim) * dim);
  return stats;
}

/// Export format shared by files and the remote-solver wire protocol:
/// quadratic couplings are listed once per unordered pair with the summed
/// coefficient, so energy = sum v q_i q_j + linear . q + offset.
inline nlohmann::json qubo_to_json(const BinaryQubo& q) {
  nlohmann::json doc;
  const int dim = q.dim();
  doc["dim"] = dim;
  nlohmann::json quad = nlohmann::json::array();
  for (int i = 0; i < dim; ++i) {
    for (int j = i; j < dim; ++j) {
      const double v =
          (i == j) ? q.q_tilde(i, i) : q.q_tilde(i, j) + q.q_tilde(j, i);
      if (v != 0.0) quad.push_back({i, j, v});
    }
  }
  doc["quadratic"] = std::move(quad);
  doc["linear"] = std::vector<double>(q.c_tilde.data(),
                                      q.c_tilde.data() + q.c_tilde.size());
  doc["offset"] = q.offset;
  return doc;
}

inline BinaryQubo qubo_from_json(const nlohmann::json& doc) {
  if (!doc.contains("dim") || !doc["dim"].is_number_integer()) {
    throw ParseError("qubo file: missing integer field 'dim'");
  }
  const int dim = doc["dim"].get<int>();
  BinaryQubo q;
  q.q_tilde = Eigen::MatrixXd::Zero(dim, dim);
  q.c_tilde = Eigen::VectorXd::Zero(dim);
  if (doc.contains("quadratic")) {
    for (const auto& entry : doc["quadratic"]) {
      if (!entry.is_array() || entry.size() != 3) {
        throw ParseError("qubo file: quadratic entries must be [i, j, value]");
      }
      const int i = entry[0].get<int>();
      const int j = entry[1].get<int>();
      const double v = entry[2].get<double>();
      if (i < 0 || j < 0 || i >= dim || j >= dim) {
        throw ParseError("qubo file: quadratic index out of range");
      }
      if (i == j) {
        q.q_tilde(i, i) += v;
      } else {
        q.q_tilde(i, j) += v / 2.0;
        q.q_tilde(j, i) += v / 2.0;
      }
    }
  }
  if (doc.contains("linear")) {
    const auto& lin = doc["linear"];
    if (!lin.is_array() || static_cast<int>(lin.size()) != dim) {
      throw ParseError("qubo file: 'linear' must hold dim values");
    }
    for (int i = 0; i < dim; ++i) q.c_tilde(i) = lin[i].get<double>();
  }
  if (doc.contains("offset")) q.offset = doc["offset"].get<double>();
  return q;
}

}  // namespace qmra
