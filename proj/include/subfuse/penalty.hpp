#pragma once

#include "subfuse/dataset.hpp"
#include "subfuse/types.hpp"

namespace subfuse {

enum class PenaltyKind { lasso, mcp, scad };

struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::mcp;
  double lambda = 0.0;
  double gamma = 3.0;  // ignored for lasso
};

// Range of gamma the closed-form prox needs for the given ADMM parameter:
// MCP needs gamma > 1/vartheta, SCAD needs gamma > 1/vartheta + 1.
void check_compatible(const PenaltySpec& spec, double vartheta);

// p_gamma(t, lambda), closed form of the penalty integrals.
double penalty_value(const PenaltySpec& spec, double t);

// (1 - t/||z||)_+ z
Vector group_soft_threshold(const Vector& z, double t);

// argmin_delta (vartheta/2)||zeta - delta||^2 + p_gamma(||delta||, lambda).
Vector prox(const Vector& zeta, const PenaltySpec& spec, double vartheta);

// Q_n(eta, beta) = 1/2 SSE + sum_{i<j} p_gamma(||beta_i - beta_j||, lambda)
double objective(const Dataset& d, const Vector& eta, const Matrix& beta,
                 const PenaltySpec& spec);

}  // namespace subfuse
