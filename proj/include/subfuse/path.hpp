#pragma once

#include <iosfwd>
#include <vector>

#include "subfuse/admm.hpp"
#include "subfuse/dataset.hpp"
#include "subfuse/penalty.hpp"
#include "subfuse/subgroup.hpp"
#include "subfuse/types.hpp"

namespace subfuse {

enum class GridSpacing { log, linear };

struct PathConfig {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  Index grid_size = 100;
  GridSpacing grid_spacing = GridSpacing::log;
  PenaltyKind kind = PenaltyKind::mcp;
  double gamma = 3.0;
  double vartheta = 1.0;
  double tol = 0.0;          // <= 0 means the scaled default
  Index max_iter = 5000;
  double eps_fuse = 0.0;     // <= 0 means the scale-aware default
  bool beta_rule = false;    // partition from beta distances instead of delta
  bool classic_bic = false;
};

struct PathPoint {
  double lambda = 0.0;
  Vector eta_hat;
  Matrix beta_hat;
  Index K_hat = 0;
  Partition partition;
  double bic = 0.0;
  Index iterations = 0;
  bool converged = false;
  double primal_norm = 0.0;
  double dual_norm = 0.0;
};

struct FusionPath {
  std::vector<PathPoint> points;  // lambda strictly increasing
};

// Ridge-fusion pilot fit, ranking into K* = floor(sqrt(n)) balanced bins
// and a bin-constrained least squares refit; delta0 = pairwise differences,
// upsilon0 = 0.
AdmmState ridge_initialize(const Dataset& d, double lambda_star = 1e-3);

Vector make_lambda_grid(const PathConfig& cfg);

// Warm-started sweep from lambda_min upward; unconverged points stay on the
// path flagged.
FusionPath compute_path(const Dataset& d, const PathConfig& cfg);

// Doubling search for a lambda forcing full fusion (K_hat = 1), starting at
// `start` and capping at start * 2^10.
double find_full_fusion_lambda(const Dataset& d, const PathConfig& cfg,
                               double start = 1.0);

// Long-format CSV: lambda,subject,coordinate,beta_value.
void export_fusiongram_csv(const FusionPath& path, std::ostream& out);

// {"points":[{"lambda":f,"k_hat":i,"bic":f,"converged":b,"iterations":i}]}
void export_path_summary_json(const FusionPath& path, std::ostream& out);

}  // namespace subfuse
