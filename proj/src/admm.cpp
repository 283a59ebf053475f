#include "subfuse/admm.hpp"

#include <cmath>

namespace subfuse {

std::pair<Index, Index> PairIndex::pair(Index k) const {
  Index i = 0;
  Index row_len = n - 1;
  while (k >= row_len) {
    k -= row_len;
    ++i;
    --row_len;
  }
  return {i, i + 1 + k};
}

AdmmWorkspace::AdmmWorkspace(const Dataset& d, double vartheta)
    : n_(d.n), p_(d.p), q_(d.q), vartheta_(vartheta), pairs_(d.n), Z_(d.Z), X_(d.X) {
  if (vartheta <= 0.0)
    throw NegativeArgumentError("build_workspace: vartheta must be positive");
  Matrix ztz = Z_.transpose() * Z_;
  ztz_llt_.compute(ztz);
  if (ztz_llt_.info() != Eigen::Success)
    throw SingularZError("build_workspace: Z'Z factorization failed");

  // Dense Q_Z, then M block (i,k) = (Q_Z)_{ik} x_i x_k' + vartheta (A'A) block.
  Matrix qz = Matrix::Identity(n_, n_) - Z_ * ztz_llt_.solve(Z_.transpose());
  const Index np = n_ * p_;
  Matrix m = Matrix::Zero(np, np);
  for (Index i = 0; i < n_; ++i)
    for (Index k = 0; k < n_; ++k)
      m.block(i * p_, k * p_, p_, p_) +=
          qz(i, k) * (X_.row(i).transpose() * X_.row(k));
  // A'A = n I - (1_n (x) I_p)(1_n (x) I_p)'
  m.diagonal().array() += vartheta_ * double(n_);
  for (Index i = 0; i < n_; ++i)
    for (Index k = 0; k < n_; ++k)
      m.block(i * p_, k * p_, p_, p_) -= vartheta_ * Matrix::Identity(p_, p_);
  m_llt_.compute(m);
  if (m_llt_.info() != Eigen::Success)
    throw SingularSystemError("build_workspace: M factorization failed");
}

Vector AdmmWorkspace::qz_apply(const Vector& v) const {
  return v - Z_ * ztz_llt_.solve(Z_.transpose() * v);
}

Matrix AdmmWorkspace::m_solve(const Matrix& rhs) const {
  Vector b(n_ * p_);
  for (Index i = 0; i < n_; ++i) b.segment(i * p_, p_) = rhs.row(i);
  Vector w = m_llt_.solve(b);
  Matrix out(n_, p_);
  for (Index i = 0; i < n_; ++i) out.row(i) = w.segment(i * p_, p_);
  return out;
}

Matrix AdmmWorkspace::at_apply(const Matrix& pairwise) const {
  Matrix out = Matrix::Zero(n_, p_);
  Index k = 0;
  for (Index i = 0; i < n_; ++i)
    for (Index j = i + 1; j < n_; ++j, ++k) {
      out.row(i) += pairwise.row(k);
      out.row(j) -= pairwise.row(k);
    }
  return out;
}

Matrix AdmmWorkspace::a_apply(const Matrix& beta) const {
  Matrix out(pairs_.count(), p_);
  Index k = 0;
  for (Index i = 0; i < n_; ++i)
    for (Index j = i + 1; j < n_; ++j, ++k)
      out.row(k) = beta.row(i) - beta.row(j);
  return out;
}

Vector AdmmWorkspace::z_solve(const Vector& v) const {
  return ztz_llt_.solve(Z_.transpose() * v);
}

AdmmWorkspace build_workspace(const Dataset& d, double vartheta) {
  return AdmmWorkspace(d, vartheta);
}

Matrix update_beta(const AdmmWorkspace& ws, const Dataset& d, const AdmmState& state) {
  const double vt = ws.vartheta();
  Matrix adj = state.delta - state.upsilon / vt;  // delta - upsilon/vartheta
  Matrix rhs = vt * ws.at_apply(adj);
  Vector qzy = ws.qz_apply(d.y);
  for (Index i = 0; i < d.n; ++i) rhs.row(i) += qzy[i] * d.X.row(i);
  return ws.m_solve(rhs);
}

Vector update_eta(const AdmmWorkspace& ws, const Dataset& d, const Matrix& beta_new) {
  Vector xb = (d.X.array() * beta_new.array()).rowwise().sum();
  return ws.z_solve(d.y - xb);
}

Matrix update_delta(const AdmmState& state, const PenaltySpec& spec, double vartheta) {
  check_compatible(spec, vartheta);
  const Index n = state.beta.rows();
  const Index p = state.beta.cols();
  Matrix out(n * (n - 1) / 2, p);
  Index k = 0;
  Vector zeta(p);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j, ++k) {
      zeta = (state.beta.row(i) - state.beta.row(j)).transpose() +
             state.upsilon.row(k).transpose() / vartheta;
      out.row(k) = prox(zeta, spec, vartheta);
    }
  return out;
}

Matrix update_upsilon(const AdmmState& state, const Matrix& delta_new, double vartheta) {
  const Index n = state.beta.rows();
  Matrix out = state.upsilon;
  Index k = 0;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j, ++k)
      out.row(k) += vartheta * (state.beta.row(i) - state.beta.row(j) - delta_new.row(k));
  return out;
}

std::pair<double, double> residuals(const Matrix& prev_delta, const AdmmState& state,
                                    const AdmmWorkspace& ws) {
  double primal = (ws.a_apply(state.beta) - state.delta).norm();
  double dual = ws.vartheta() * ws.at_apply(state.delta - prev_delta).norm();
  return {primal, dual};
}

namespace {

// Scaling factor c with prox(zeta) = c * zeta; identical branch structure
// to prox() but avoids the per-pair vector allocations in the hot loop.
double prox_scale(double norm, const PenaltySpec& spec, double vartheta) {
  const double lam = spec.lambda, gam = spec.gamma;
  if (norm == 0.0 || lam == 0.0) return 1.0;
  auto soft = [norm](double t) { return norm <= t ? 0.0 : 1.0 - t / norm; };
  switch (spec.kind) {
    case PenaltyKind::lasso:
      return soft(lam / vartheta);
    case PenaltyKind::mcp:
      if (norm <= gam * lam)
        return soft(lam / vartheta) / (1.0 - 1.0 / (gam * vartheta));
      return 1.0;
    case PenaltyKind::scad:
      if (norm <= lam + lam / vartheta) return soft(lam / vartheta);
      if (norm <= gam * lam)
        return soft(gam * lam / ((gam - 1.0) * vartheta)) /
               (1.0 - 1.0 / ((gam - 1.0) * vartheta));
      return 1.0;
  }
  return 1.0;
}

}  // namespace

AdmmState solve(const AdmmWorkspace& ws, const Dataset& d, const PenaltySpec& spec,
                AdmmState init, double tol, Index max_iter) {
  check_compatible(spec, ws.vartheta());
  if (tol <= 0.0) throw NegativeArgumentError("solve: tol must be positive");
  const double vt = ws.vartheta();
  const Index n = d.n, p = d.p;
  AdmmState state = std::move(init);
  state.converged = false;

  // One fused pass per iteration over the pair blocks; everything below is
  // mathematically the beta -> delta -> upsilon cycle of the step functions,
  // restructured to avoid per-pair temporaries.
  const Vector qzy = ws.qz_apply(d.y);
  Matrix xqzy(n, p);
  for (Index i = 0; i < n; ++i) xqzy.row(i) = qzy[i] * d.X.row(i);
  Matrix rhs(n, p), delta_new(state.delta.rows(), p), dual_acc(n, p);
  Vector zeta(p);
  for (Index m = 0; m < max_iter; ++m) {
    // rhs = X'Q_Z y + vartheta A'(delta - upsilon/vartheta)
    rhs = xqzy;
    {
      Index k = 0;
      for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j, ++k)
          for (Index c = 0; c < p; ++c) {
            const double v = vt * state.delta(k, c) - state.upsilon(k, c);
            rhs(i, c) += v;
            rhs(j, c) -= v;
          }
    }
    state.beta = ws.m_solve(rhs);

    double primal2 = 0.0;
    dual_acc.setZero();
    Index k = 0;
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j, ++k) {
        double znorm2 = 0.0;
        for (Index c = 0; c < p; ++c) {
          zeta[c] = state.beta(i, c) - state.beta(j, c) +
                    state.upsilon(k, c) / vt;
          znorm2 += zeta[c] * zeta[c];
        }
        const double scale = prox_scale(std::sqrt(znorm2), spec, vt);
        for (Index c = 0; c < p; ++c) {
          const double dn = scale * zeta[c];
          const double diff = state.beta(i, c) - state.beta(j, c);
          const double r = diff - dn;  // primal residual entry
          primal2 += r * r;
          state.upsilon(k, c) += vt * r;
          const double step = dn - state.delta(k, c);
          dual_acc(i, c) += step;
          dual_acc(j, c) -= step;
          delta_new(k, c) = dn;
        }
      }
    state.delta.swap(delta_new);
    state.iter = m + 1;
    state.primal_norm = std::sqrt(primal2);
    state.dual_norm = vt * dual_acc.norm();
    if (state.primal_norm < tol && state.dual_norm < tol) {
      state.converged = true;
      break;
    }
  }
  state.eta = update_eta(ws, d, state.beta);
  return state;
}

double default_tol(Index n, Index p) {
  return 1e-5 * std::sqrt(double(n * (n - 1) / 2 * p));
}

}  // namespace subfuse
