#pragma once

#include <vector>

#include "subfuse/dataset.hpp"
#include "subfuse/types.hpp"

namespace subfuse {

struct Partition {
  std::vector<std::vector<int>> blocks;  // disjoint, exhaustive, nonempty
  Index K_hat() const { return Index(blocks.size()); }
};

struct SubgroupResult {
  Partition partition;
  Matrix alpha_hat;   // K_hat x p, row k = mean of beta rows in block k
  Vector eta_hat;
  double lambda_selected = 0.0;
  double bic = 0.0;
};

// Connected components of the graph with an edge (i,j) whenever
// ||delta_ij|| <= eps_fuse. Blocks are listed by smallest member.
Partition extract_groups(const Matrix& beta_hat, const Matrix& delta_hat,
                         double eps_fuse);

// Same partition rule driven by ||beta_i - beta_j|| instead of delta.
Partition extract_groups_beta(const Matrix& beta_hat, double eps_fuse);

// Scale-aware default threshold: 1e-3 * max(1, median ||beta_i||).
double default_eps_fuse(const Matrix& beta_hat);

Matrix group_estimates(const Matrix& beta_hat, const Partition& part);

// log(SSE/n) + C_n (log n / n)(K_hat p + q); C_n = log(np+q), or 1 in
// classic mode. Returns -inf on a perfect fit.
double modified_bic(const Dataset& d, const Vector& eta_hat, const Matrix& beta_hat,
                    Index K_hat, bool classic = false);

// BIC of the groupwise-projected fit: beta rows are replaced by their block
// means before the SSE, so the error term is consistent with the K_hat p
// parameters being counted. (Raw beta rows inside a loosely chained block
// can fit far more than K_hat p parameters' worth of noise.)
double partition_bic(const Dataset& d, const Vector& eta_hat, const Matrix& beta_hat,
                     const Partition& part, bool classic = false);

struct FusionPath;  // path.hpp

// Converged path point with minimal BIC; ties resolve to the larger lambda.
SubgroupResult select_model(const FusionPath& path);

}  // namespace subfuse
