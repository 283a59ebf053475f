#pragma once

#include <utility>
#include <vector>

#include "subfuse/dataset.hpp"
#include "subfuse/subgroup.hpp"
#include "subfuse/types.hpp"

namespace subfuse {

// Group-expanded designs: W_tilde is the n x K membership indicator,
// X_tilde expands X by estimated group, U = (Z, X_tilde).
struct GroupDesign {
  Matrix W_tilde;  // n x K
  Matrix X_tilde;  // n x Kp
  Matrix U;        // n x (q + Kp)
  Index K = 0, p = 0, q = 0, n = 0;
};

GroupDesign build_group_design(const Dataset& d, const Partition& part);

enum class SdTarget { eta, alpha };

struct Interval {
  double lower = 0.0, upper = 0.0;
};

struct InferenceReport {
  double sigma2_hat = 0.0;
  Vector asd_eta;               // q
  Vector asd_alpha;             // Kp
  std::vector<Interval> ci_eta;
  std::vector<Interval> ci_alpha;
  double level = 0.95;
  double f_stat = 0.0;
  std::pair<Index, Index> dof{0, 0};
  double p_value = 1.0;
  bool f_test_available = false;
};

// (n - q - Kp)^-1 * SSE
double sigma2_hat(const Dataset& d, const Vector& eta_hat, const Matrix& beta_hat,
                  Index K_hat);

// sigma * sqrt(a' S^-1 a) with S the Schur complement of the requested block
// of U'U.
double asymptotic_sd(const GroupDesign& gd, double sigma2, const Vector& a,
                     SdTarget target);

std::vector<Interval> confidence_intervals(const Vector& point_estimates,
                                           const Vector& asds, double level);

// F = (L alpha)'(sigma2 L Sigma_n^-1 L')^-1 (L alpha) / p with
// Sigma_n = X_tilde'X_tilde - X_tilde'Z (Z'Z)^-1 Z'X_tilde,
// dof (p, n - pK - q - 1).
struct FTestResult {
  double f = 0.0;
  std::pair<Index, Index> dof{0, 0};
  double p_value = 1.0;
};
FTestResult f_test(const GroupDesign& gd, const Matrix& alpha_hat, double sigma2,
                   const Matrix& L);

// Between-group contrast [I_p, -I_p, 0, ...] over alpha blocks.
Matrix default_contrast(Index K, Index p);

// P(F_{d1,d2} <= x) via the regularized incomplete beta function.
double f_cdf(double x, double d1, double d2);

// Inverse standard-normal quantile.
double normal_quantile(double prob);

// Full report for a selected model.
InferenceReport infer(const Dataset& d, const SubgroupResult& sel, double level = 0.95);

}  // namespace subfuse
