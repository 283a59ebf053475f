#pragma once

#include <utility>

#include "subfuse/dataset.hpp"
#include "subfuse/penalty.hpp"
#include "subfuse/types.hpp"

namespace subfuse {

// Dense index for the ordered pairs (i, j), i < j, of {0..n-1}.
struct PairIndex {
  Index n = 0;

  explicit PairIndex(Index n_ = 0) : n(n_) {}
  Index count() const { return n * (n - 1) / 2; }
  Index flat(Index i, Index j) const {
    // i < j assumed
    return (2 * n - i - 1) * i / 2 + (j - i - 1);
  }
  std::pair<Index, Index> pair(Index k) const;
};

// Reusable per-(dataset, vartheta) structures: the Q_Z projector and a
// factorization of M = X'Q_Z X + vartheta A'A. A is never materialized:
// A'A = n I_np - (1_n (x) I_p)(1_n (x) I_p)' and A'v is a pairwise loop.
class AdmmWorkspace {
 public:
  AdmmWorkspace(const Dataset& d, double vartheta);

  double vartheta() const { return vartheta_; }
  const PairIndex& pair_index() const { return pairs_; }

  // Q_Z v = v - Z(Z'Z)^-1 Z'v applied to an n-vector.
  Vector qz_apply(const Vector& v) const;

  // Solves M vec(beta') = vec(rhs') with subject-major ordering;
  // rhs and the result are n x p with row i = block i.
  Matrix m_solve(const Matrix& rhs) const;

  // A' applied to a pairwise (npairs x p) matrix, returned as n x p.
  Matrix at_apply(const Matrix& pairwise) const;

  // A beta: row k(i,j) = beta_i - beta_j.
  Matrix a_apply(const Matrix& beta) const;

  // Exact least squares of v on Z.
  Vector z_solve(const Vector& v) const;

  const Matrix& Z() const { return Z_; }
  const Matrix& X() const { return X_; }

 private:
  Index n_, p_, q_;
  double vartheta_;
  PairIndex pairs_;
  Matrix Z_, X_;
  Eigen::LLT<Matrix> ztz_llt_;
  Eigen::LLT<Matrix> m_llt_;
};

// Iterate of Algorithm-style ADMM: row i of beta is beta_i, row k(i,j) of
// delta/upsilon is the pair block.
struct AdmmState {
  Vector eta;       // q
  Matrix beta;      // n x p
  Matrix delta;     // npairs x p
  Matrix upsilon;   // npairs x p
  Index iter = 0;
  double primal_norm = 0.0;
  double dual_norm = 0.0;
  bool converged = false;
};

AdmmWorkspace build_workspace(const Dataset& d, double vartheta);

// beta solving (X'Q_Z X + vartheta A'A) beta = X'Q_Z y + vartheta A'(delta - upsilon/vartheta).
Matrix update_beta(const AdmmWorkspace& ws, const Dataset& d, const AdmmState& state);

// eta = (Z'Z)^-1 Z'(y - X beta)
Vector update_eta(const AdmmWorkspace& ws, const Dataset& d, const Matrix& beta_new);

// delta_ij = prox(beta_i - beta_j + upsilon_ij/vartheta)
Matrix update_delta(const AdmmState& state, const PenaltySpec& spec, double vartheta);

// upsilon_ij += vartheta (beta_i - beta_j - delta_ij)
Matrix update_upsilon(const AdmmState& state, const Matrix& delta_new, double vartheta);

// Norms of r = A beta - delta and s = vartheta A'(delta - delta_prev).
std::pair<double, double> residuals(const Matrix& prev_delta, const AdmmState& state,
                                    const AdmmWorkspace& ws);

// Iterates beta -> eta -> delta -> upsilon until both residual norms fall
// below tol or max_iter is reached; the returned state carries diagnostics
// and the converged flag either way.
AdmmState solve(const AdmmWorkspace& ws, const Dataset& d, const PenaltySpec& spec,
                AdmmState init, double tol, Index max_iter);

// Scaled default stopping threshold: 1e-5 * sqrt(npairs * p).
double default_tol(Index n, Index p);

}  // namespace subfuse
