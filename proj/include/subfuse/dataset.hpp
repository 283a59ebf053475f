#pragma once

#include <utility>
#include <vector>

#include "subfuse/types.hpp"

namespace subfuse {

// Response y, nuisance design Z (column 1 is the intercept) and treatment
// design X. Immutable after construction; shared read-only by the solver.
struct Dataset {
  Vector y;   // n
  Matrix Z;   // n x q, first column all ones
  Matrix X;   // n x p
  Index n = 0, p = 0, q = 0;
};

// Column means/scales for the (q-1) non-intercept Z columns followed by the
// p X columns. Scaling targets squared column norm n, not unit variance.
struct StandardizationInfo {
  Vector column_means;
  Vector column_scales;
};

// Simulation ground truth.
struct TrueModel {
  std::vector<std::vector<int>> partition;  // K blocks over 0..n-1
  Matrix alpha;                             // K x p
  Vector eta;                               // q
  double sigma = 0.0;
};

// Assembles a dataset, inserting an intercept column if Z lacks one.
Dataset make_dataset(Vector y, Matrix Z, Matrix X);

// Checks finiteness, shapes, the intercept column and full column rank of Z.
Dataset validate_dataset(const Dataset& raw);

// Centers and rescales every non-intercept column to mean 0 and squared
// norm n. Throws ZeroVarianceColumnError on constant columns.
std::pair<Dataset, StandardizationInfo> standardize(const Dataset& d);

// Maps estimates from the standardized scale back to the original scale.
// The intercept absorbs the centering offsets; for K > 1 the X-centering
// offset uses the equal-weight mean of the alpha rows (exact when K = 1).
std::pair<Vector, Matrix> unstandardize(const Vector& eta_hat,
                                        const Matrix& alpha_hat,
                                        const StandardizationInfo& info);

}  // namespace subfuse
