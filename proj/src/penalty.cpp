#include "subfuse/penalty.hpp"

#include <cmath>

namespace subfuse {

void check_compatible(const PenaltySpec& spec, double vartheta) {
  if (spec.lambda < 0.0)
    throw NegativeArgumentError("penalty: lambda must be nonnegative");
  if (vartheta <= 0.0)
    throw NegativeArgumentError("penalty: vartheta must be positive");
  if (spec.kind == PenaltyKind::mcp && !(spec.gamma > 1.0 / vartheta))
    throw IncompatibleGammaError("MCP requires gamma > 1/vartheta");
  if (spec.kind == PenaltyKind::scad && !(spec.gamma > 1.0 / vartheta + 1.0))
    throw IncompatibleGammaError("SCAD requires gamma > 1/vartheta + 1");
}

double penalty_value(const PenaltySpec& spec, double t) {
  if (t < 0.0) throw NegativeArgumentError("penalty_value: t < 0");
  const double lam = spec.lambda, gam = spec.gamma;
  switch (spec.kind) {
    case PenaltyKind::lasso:
      return lam * t;
    case PenaltyKind::mcp:
      if (lam == 0.0) return 0.0;
      if (t <= gam * lam) return lam * t - t * t / (2.0 * gam);
      return gam * lam * lam / 2.0;
    case PenaltyKind::scad:
      if (lam == 0.0) return 0.0;
      if (t <= lam) return lam * t;
      if (t <= gam * lam)
        return (2.0 * gam * lam * t - t * t - lam * lam) / (2.0 * (gam - 1.0));
      return lam * lam * (gam + 1.0) / 2.0;
  }
  return 0.0;
}

Vector group_soft_threshold(const Vector& z, double t) {
  const double norm = z.norm();
  if (norm <= t) return Vector::Zero(z.size());
  return (1.0 - t / norm) * z;
}

Vector prox(const Vector& zeta, const PenaltySpec& spec, double vartheta) {
  check_compatible(spec, vartheta);
  const double lam = spec.lambda, gam = spec.gamma;
  const double norm = zeta.norm();
  if (norm == 0.0 || lam == 0.0) return zeta;
  switch (spec.kind) {
    case PenaltyKind::lasso:
      return group_soft_threshold(zeta, lam / vartheta);
    case PenaltyKind::mcp:
      if (norm <= gam * lam)
        return group_soft_threshold(zeta, lam / vartheta) /
               (1.0 - 1.0 / (gam * vartheta));
      return zeta;
    case PenaltyKind::scad:
      if (norm <= lam + lam / vartheta)
        return group_soft_threshold(zeta, lam / vartheta);
      if (norm <= gam * lam)
        return group_soft_threshold(zeta, gam * lam / ((gam - 1.0) * vartheta)) /
               (1.0 - 1.0 / ((gam - 1.0) * vartheta));
      return zeta;
  }
  return zeta;
}

double objective(const Dataset& d, const Vector& eta, const Matrix& beta,
                 const PenaltySpec& spec) {
  if (eta.size() != d.q || beta.rows() != d.n || beta.cols() != d.p)
    throw ShapeMismatchError("objective: estimate shapes do not match dataset");
  Vector resid = d.y - d.Z * eta - (d.X.array() * beta.array()).rowwise().sum().matrix();
  double value = 0.5 * resid.squaredNorm();
  for (Index i = 0; i < d.n; ++i)
    for (Index j = i + 1; j < d.n; ++j)
      value += penalty_value(spec, (beta.row(i) - beta.row(j)).norm());
  return value;
}

}  // namespace subfuse
